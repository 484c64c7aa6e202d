"""Shared test oracles and data builders.

The oracles here are deliberately independent of the package internals:
the split oracle enumerates every (feature, midpoint) candidate and scores
it straight from the variance definitions with numpy means; the router
walks exported JSON documents, not fitted objects.
"""

from __future__ import annotations

import numpy as np
import pytest


def brute_force_best_split(X, y, min_leaf=1, weighted=False):
    """Exhaustive split search: every feature, every midpoint between
    consecutive distinct sorted values, loss from first principles.

    Returns (j, t, loss) or None.  Ties keep the first minimum in
    (feature, threshold) scan order, matching the documented rule.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    best = None
    for j in range(d):
        vals = np.unique(X[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            t = (a + b) / 2.0
            left = X[:, j] < t
            yl = y[left]
            yr = y[~left]
            if yl.size < min_leaf or yr.size < min_leaf:
                continue
            vl = float(np.mean((yl - np.mean(yl)) ** 2))
            vr = float(np.mean((yr - np.mean(yr)) ** 2))
            if weighted:
                loss = (yl.size * vl + yr.size * vr) / n
            else:
                loss = vl + vr
            if best is None or loss < best[2]:
                best = (j, t, loss)
    return best


def route_tree_json(node: dict, row) -> dict:
    """Walk an exported tree document to the leaf node for one row."""
    while node["rule"] is not None:
        if row[node["rule"]["j"]] < node["rule"]["t"]:
            node = node["left"]
        else:
            node = node["right"]
    return node


def piecewise_noise_data(n: int, seed: int, noise: float = 0.7):
    """Piecewise-constant signal in two of three features, plus noise."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, 3))
    signal = 3.0 * (X[:, 0] > 0.33) + 2.0 * (X[:, 0] > 0.66) + 1.5 * (X[:, 1] > 0.5)
    y = signal + rng.normal(0.0, noise, n)
    return X, y


@pytest.fixture(scope="session")
def fixtures_dir():
    import tractwise
    from pathlib import Path

    return Path(tractwise.__file__).parent / "fixtures"
