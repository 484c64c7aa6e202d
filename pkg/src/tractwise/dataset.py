"""Loading, null normalization, and tract-keyed joining of raw census/CDC tables.

The pipeline is: ``load_table`` (column selection) -> ``normalize_nulls`` ->
``join_and_clean`` (inner join on the 11-digit tract key, whole-row drop of
anything incomplete, with every drop accounted for by reason).  All steps are
pure and deterministic: the same inputs always produce byte-identical output.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DuplicateKeyError,
    EmptyJoinError,
    MissingColumnError,
    NameCollisionError,
)

# Canonical representation of "no value" after null normalization.
NULL_MARKER = ""

# Null spellings common in census/CDC exports.  Matching is whitespace-trimmed
# and case-insensitive; the set is configurable everywhere it is used.
DEFAULT_NULL_TOKENS = frozenset({"", "NA", "N/A", "NAN", "-", "(X)", "NULL", "."})

TRACT_KEY_WIDTH = 11

_SNAKE_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_CAMEL_BOUNDARY = re.compile(r"([a-z0-9])([A-Z])")
_ACRONYM_BOUNDARY = re.compile(r"([A-Z]+)([A-Z][a-z])")
_NON_ALNUM = re.compile(r"[^0-9a-zA-Z]+")

ROLES = ("key", "feature", "target", "ignored")
KINDS = ("percent", "currency", "count", "categorical-code")

# Discard reasons, in the order they are checked within a row.
REASON_INVALID_KEY = "invalid_key"
REASON_NULL = "null_value"
REASON_UNPARSEABLE = "unparseable_numeric"
REASON_RANGE = "range_violation"
REASON_NON_MATCHING = "non_matching"


def standardize_name(source: str) -> str:
    """Rewrite a raw column name as lowercase snake_case.

    CamelCase boundaries become underscores, runs of non-alphanumerics
    collapse to a single ``_``, and a leading digit is prefixed with ``c_``.
    Idempotent: applying it to its own output changes nothing.
    """
    if not source:
        raise ConfigError("column name must be non-empty")
    s = _ACRONYM_BOUNDARY.sub(r"\1_\2", source)
    s = _CAMEL_BOUNDARY.sub(r"\1_\2", s)
    s = _NON_ALNUM.sub("_", s).strip("_").lower()
    if not s:
        raise ConfigError(f"column name {source!r} has no usable characters")
    if s[0].isdigit():
        s = "c_" + s
    return s


@dataclass(frozen=True)
class ColumnSpec:
    """Declares one column to import: its source name, standard name, and role."""

    source_name: str
    standard_name: str = ""
    role: str = "feature"
    kind: str = "count"
    group: str | None = None  # free-form feature grouping tag (e.g. "socioeconomic")

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"unknown role {self.role!r}", column=self.source_name)
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}", column=self.source_name)
        if not self.standard_name:
            object.__setattr__(self, "standard_name", standardize_name(self.source_name))
        if not _SNAKE_RE.match(self.standard_name):
            raise ConfigError(
                f"standard name {self.standard_name!r} is not lowercase snake_case",
                column=self.source_name,
            )


@dataclass
class RawTable:
    """One loaded table: selected columns only, cells still raw strings."""

    name: str
    header: list[str]  # original source names, in spec order
    rows: list[list[str]]
    specs: list[ColumnSpec] = field(default_factory=list)
    source_rows: int = 0

    @property
    def standard_names(self) -> list[str]:
        return [s.standard_name for s in self.specs]

    def key_index(self) -> int:
        idx = [i for i, s in enumerate(self.specs) if s.role == "key"]
        if len(idx) != 1:
            raise ConfigError(
                f"table {self.name!r} must declare exactly one key column, found {len(idx)}"
            )
        return idx[0]


def load_table(path, specs: list[ColumnSpec], name: str | None = None) -> RawTable:
    """Read a CSV file keeping only the declared columns, preserving row order.

    Leading lines starting with ``#`` (the toolkit's own artifact stamp) are
    skipped.  Rows shorter than the rightmost selected column are padded with
    the null marker; the padded cells are then dropped as nulls during
    ``join_and_clean``.
    """
    active = [s for s in specs if s.role != "ignored"]
    seen: dict[str, str] = {}
    for s in active:
        if s.standard_name in seen:
            raise NameCollisionError(
                f"columns {seen[s.standard_name]!r} and {s.source_name!r} both "
                f"standardize to {s.standard_name!r}",
                table=name or str(path),
            )
        seen[s.standard_name] = s.source_name

    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}", path=str(path)) from None
    with fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if row and row[0].startswith("#"):
                continue
            header = row
            break
        if header is None:
            raise ConfigError(f"{path}: empty file, expected a CSV header row")
        positions = {h: i for i, h in enumerate(header)}
        indices = []
        for s in active:
            if s.source_name not in positions:
                raise MissingColumnError(
                    f"declared column {s.source_name!r} not present in {path}",
                    table=name or str(path),
                    column=s.source_name,
                )
            indices.append(positions[s.source_name])
        rows = []
        n_source = 0
        for row in reader:
            n_source += 1
            rows.append([row[i] if i < len(row) else NULL_MARKER for i in indices])

    return RawTable(
        name=name or str(path),
        header=[s.source_name for s in active],
        rows=rows,
        specs=active,
        source_rows=n_source,
    )


def normalize_nulls(table: RawTable, null_tokens=DEFAULT_NULL_TOKENS) -> RawTable:
    """Replace every cell matching a null token with the canonical empty marker.

    Matching trims whitespace and ignores case; all other cells pass through
    unchanged.  Idempotent because the marker itself is a null token.
    """
    canon = {t.strip().upper() for t in null_tokens} | {NULL_MARKER}
    rows = [
        [NULL_MARKER if cell.strip().upper() in canon else cell for cell in row]
        for row in table.rows
    ]
    return replace(table, rows=rows)


def normalize_tract_key(raw: str) -> str | None:
    """Canonicalize a tract key to 11 decimal digits, or None if impossible.

    Numeric exports drop leading zeros and may add a float ``.0`` suffix;
    both are repaired.  Anything that is not at most 11 digits after repair
    is invalid.
    """
    s = raw.strip()
    if s.endswith(".0"):
        s = s[: -2]
    if not s.isdigit() or len(s) > TRACT_KEY_WIDTH:
        return None
    return s.zfill(TRACT_KEY_WIDTH)


@dataclass
class CleanDataset:
    """Joined, fully numeric tract matrix: no missing or non-finite entries."""

    keys: list[str]
    feature_names: list[str]
    target_names: list[str]
    values: np.ndarray  # shape (len(keys), len(feature_names) + len(target_names))
    key_name: str = "tract"
    discarded_rows: int = 0
    discard_reasons: dict[str, int] = field(default_factory=dict)
    column_groups: dict[str, str] = field(default_factory=dict)

    @property
    def column_names(self) -> list[str]:
        return self.feature_names + self.target_names

    @property
    def n_rows(self) -> int:
        return len(self.keys)

    def column(self, name: str) -> np.ndarray:
        try:
            i = self.column_names.index(name)
        except ValueError:
            raise MissingColumnError(f"no column named {name!r}", column=name) from None
        return self.values[:, i]

    def matrix(self, names: list[str]) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])

    def columns_in_group(self, group: str) -> list[str]:
        return [n for n in self.feature_names if self.column_groups.get(n) == group]

    def to_csv(self) -> str:
        """Serialize as CSV, key column first.  Floats use repr round-tripping."""
        out = [",".join([self.key_name] + self.column_names)]
        for i, key in enumerate(self.keys):
            out.append(",".join([key] + [repr(v) for v in self.values[i].tolist()]))
        return "\n".join(out) + "\n"


@dataclass
class CleaningReport:
    """Accounting for one join run: source_rows == kept + sum(discard_reasons)."""

    source_rows: int
    kept: int
    discard_reasons: dict[str, int]
    per_table: dict[str, dict[str, int]]

    def to_json(self) -> dict:
        return {
            "source_rows": self.source_rows,
            "kept": self.kept,
            "discard_reasons": dict(sorted(self.discard_reasons.items())),
            "per_table": self.per_table,
        }


def _parse_cell(cell: str, kind: str) -> tuple[float, str | None]:
    """Parse one cell; returns (value, discard_reason_or_None)."""
    if cell == NULL_MARKER:
        return math.nan, REASON_NULL
    try:
        v = float(cell.replace(",", "").replace("$", "").strip())
    except ValueError:
        return math.nan, REASON_UNPARSEABLE
    if not math.isfinite(v):
        return math.nan, REASON_UNPARSEABLE
    if kind == "percent" and not 0.0 <= v <= 100.0:
        return v, REASON_RANGE
    return v, None


def join_and_clean(tables: list[RawTable]) -> tuple[CleanDataset, CleaningReport]:
    """Inner-join tables on the tract key and drop every incomplete row.

    Each distinct tract key across all tables is accounted for exactly once:
    it either survives into the result or is charged to the first discard
    reason encountered (cells are checked in table order, then spec order;
    keys invalid in any table are charged per source row).  The surviving key
    set is the intersection of the per-table valid key sets, so the result is
    independent of table order.
    """
    if not tables:
        raise ConfigError("join_and_clean needs at least one table")

    feature_names: list[str] = []
    target_names: list[str] = []
    column_groups: dict[str, str] = {}
    claimed: dict[str, str] = {}
    for t in tables:
        for s in t.specs:
            if s.role == "key":
                continue
            if s.standard_name in claimed:
                raise NameCollisionError(
                    f"column {s.standard_name!r} appears in both "
                    f"{claimed[s.standard_name]!r} and {t.name!r}",
                    column=s.standard_name,
                )
            claimed[s.standard_name] = t.name
            if s.role == "feature":
                feature_names.append(s.standard_name)
                if s.group:
                    column_groups[s.standard_name] = s.group
            elif s.role == "target":
                target_names.append(s.standard_name)

    reasons: dict[str, int] = {}
    first_failure: dict[str, str] = {}  # key -> reason, first table/cell that failed
    n_invalid_key_rows = 0
    per_table: dict[str, dict[str, int]] = {}
    valid_key_sets: list[set[str]] = []
    table_values: list[dict[str, list[float]]] = []
    all_keys: set[str] = set()

    for t in tables:
        key_idx = t.key_index()
        value_specs = [(i, s) for i, s in enumerate(t.specs) if s.role in ("feature", "target")]
        seen_keys: set[str] = set()
        valid: dict[str, list[float]] = {}
        n_bad_keys = 0
        for row in t.rows:
            key = normalize_tract_key(row[key_idx])
            if key is None:
                n_bad_keys += 1
                n_invalid_key_rows += 1
                continue
            if key in seen_keys:
                raise DuplicateKeyError(
                    f"tract {key} appears more than once in table {t.name!r}",
                    table=t.name,
                    key=key,
                )
            seen_keys.add(key)
            parsed = []
            reason = None
            for i, s in value_specs:
                v, r = _parse_cell(row[i], s.kind)
                if r is not None:
                    reason = r
                    break
                parsed.append(v)
            if reason is not None:
                first_failure.setdefault(key, reason)
            else:
                valid[key] = parsed
        per_table[t.name] = {
            "source_rows": t.source_rows,
            "invalid_keys": n_bad_keys,
            "valid_rows": len(valid),
        }
        valid_key_sets.append(set(valid))
        table_values.append(valid)
        all_keys |= seen_keys

    kept_keys = set.intersection(*valid_key_sets)
    for key in all_keys - kept_keys:
        reason = first_failure.get(key, REASON_NON_MATCHING)
        reasons[reason] = reasons.get(reason, 0) + 1
    if n_invalid_key_rows:
        reasons[REASON_INVALID_KEY] = n_invalid_key_rows

    if not kept_keys:
        raise EmptyJoinError(
            "no tract survives the join and cleaning",
            discard_reasons=reasons,
        )

    keys = sorted(kept_keys)
    # Per-table columns in (feature, target) declaration order, restitched into
    # features-first column order.
    rows_by_key = []
    for key in keys:
        row: dict[str, float] = {}
        for t, values in zip(tables, table_values):
            names = [s.standard_name for s in t.specs if s.role in ("feature", "target")]
            for n, v in zip(names, values[key]):
                row[n] = v
        rows_by_key.append([row[n] for n in feature_names + target_names])

    values = np.asarray(rows_by_key, dtype=np.float64).reshape(len(keys), -1)
    key_name = tables[0].specs[tables[0].key_index()].standard_name

    discarded = sum(reasons.values())
    dataset = CleanDataset(
        keys=keys,
        feature_names=feature_names,
        target_names=target_names,
        values=values,
        key_name=key_name,
        discarded_rows=discarded,
        discard_reasons=dict(reasons),
        column_groups=column_groups,
    )
    report = CleaningReport(
        source_rows=len(all_keys) + n_invalid_key_rows,
        kept=len(keys),
        discard_reasons=dict(reasons),
        per_table=per_table,
    )
    return dataset, report
