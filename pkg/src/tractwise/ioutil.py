"""Deterministic artifact serialization: canonical JSON, atomic file writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


def canonical_json(obj) -> str:
    """Stable human-readable JSON: sorted keys, two-space indent, newline EOF."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_digest(obj) -> str:
    """Short hash identifying the effective configuration of a run."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def atomic_write_text(path, text: str) -> None:
    """Write via a same-directory temp file and rename, so readers never see
    a partial artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
