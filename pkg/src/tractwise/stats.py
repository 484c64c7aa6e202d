"""Exploratory statistics: correlations, top-k feature ranking, group contrasts.

Pearson coefficients are computed with a two-pass algorithm (means first,
then centered products) so the values are numerically stable references.
Zero-variance columns never leak NaN into downstream math: they raise, or in
matrix form are flagged and their entries marked undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CleanDataset
from .errors import ConfigError, DegenerateDataError, EmptyGroupError


def _is_constant(v: np.ndarray) -> bool:
    # The honest zero-variance test: sum-of-squares of deviations can be a
    # tiny positive number for a constant column whose mean is not exactly
    # representable.
    return bool(np.all(v == v.flat[0]))


def pearson(x, y) -> float:
    """Two-pass Pearson correlation coefficient, clamped to [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigError("pearson needs two equal-length vectors")
    if x.size < 2:
        raise ConfigError("pearson needs at least 2 observations")
    if _is_constant(x) or _is_constant(y):
        raise DegenerateDataError("zero-variance input to pearson")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


@dataclass
class CorrelationMatrix:
    """Symmetric Pearson matrix over named columns.

    Entries touching a degenerate (zero-variance) column are NaN and the
    column appears in ``degenerate``; everything else lies in [-1, 1] with an
    exact unit diagonal.
    """

    names: list[str]
    r: np.ndarray
    degenerate: list[str]

    def get(self, a: str, b: str) -> float:
        return float(self.r[self.names.index(a), self.names.index(b)])

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.names)]
        for i, n in enumerate(self.names):
            cells = ["" if np.isnan(v) else repr(float(v)) for v in self.r[i]]
            lines.append(",".join([n] + cells))
        return "\n".join(lines) + "\n"


def corr_matrix(data: CleanDataset, columns: list[str]) -> CorrelationMatrix:
    """Pairwise Pearson over the listed columns of a cleaned dataset."""
    if data.n_rows < 2:
        raise ConfigError("correlation needs at least 2 rows")
    cols = [data.column(n) for n in columns]  # raises on unknown names
    centered = []
    degenerate = []
    for name, c in zip(columns, cols):
        if _is_constant(c):
            degenerate.append(name)
            centered.append(None)
        else:
            d = c - c.mean()
            centered.append((d, float(d @ d)))
    k = len(columns)
    r = np.full((k, k), np.nan)
    for i in range(k):
        if centered[i] is None:
            continue
        r[i, i] = 1.0
        di, ssi = centered[i]
        for j in range(i + 1, k):
            if centered[j] is None:
                continue
            dj, ssj = centered[j]
            # Same arithmetic as pearson(), so entries match it bit for bit.
            v = float(di @ dj) / np.sqrt(ssi * ssj)
            r[i, j] = r[j, i] = float(min(1.0, max(-1.0, v)))
    return CorrelationMatrix(names=list(columns), r=r, degenerate=degenerate)


def top_k_correlated(data: CleanDataset, candidates: list[str], target: str, k: int) -> list[str]:
    """The k candidates most |r|-correlated with the target, strongest first.

    Ties break by name ascending.  Degenerate candidates are skipped; if that
    leaves fewer than k usable candidates, it is an error rather than a short
    answer.
    """
    if k > len(candidates):
        raise ConfigError(f"k={k} exceeds the {len(candidates)} candidates")
    t = data.column(target)
    if _is_constant(t):
        raise DegenerateDataError(f"target column {target!r} has zero variance")
    scored = []
    for name in candidates:
        try:
            scored.append((-abs(pearson(data.column(name), t)), name))
        except DegenerateDataError:
            continue
    if len(scored) < k:
        raise DegenerateDataError(
            f"only {len(scored)} non-degenerate candidates for k={k}"
        )
    scored.sort()
    return [name for _, name in scored[:k]]


@dataclass
class GroupComparison:
    """Outcome statistics for the high/low split of a grouping column.

    Rows with group value strictly above the threshold are "high"; equality
    lands in "low".  Standard deviations are population (1/n) normalized.
    """

    group_labels: tuple[str, str]  # ("high", "low")
    counts: tuple[int, int]
    means: tuple[float, float]
    std_devs: tuple[float, float]
    mean_difference: float  # high - low
    group_column: str = ""
    threshold: float = 0.0
    outcome: str = ""

    def to_json(self) -> dict:
        return {
            "group_column": self.group_column,
            "threshold": self.threshold,
            "outcome": self.outcome,
            "groups": [
                {
                    "label": lab,
                    "count": int(c),
                    "mean": float(m),
                    "std_dev": float(s),
                }
                for lab, c, m, s in zip(
                    self.group_labels, self.counts, self.means, self.std_devs
                )
            ],
            "mean_difference": float(self.mean_difference),
        }


def threshold_groups(
    data: CleanDataset, group_col: str, threshold: float, outcome: str
) -> GroupComparison:
    """Compare the outcome between rows above and at-or-below a threshold."""
    g = data.column(group_col)
    y = data.column(outcome)
    high = g > threshold
    n_high = int(high.sum())
    n_low = int(y.size - n_high)
    if n_high == 0 or n_low == 0:
        raise EmptyGroupError(
            f"threshold {threshold} leaves an empty group for {group_col!r}",
            high=n_high,
            low=n_low,
        )
    yh, yl = y[high], y[~high]
    mh, ml = float(yh.mean()), float(yl.mean())
    return GroupComparison(
        group_labels=("high", "low"),
        counts=(n_high, n_low),
        means=(mh, ml),
        std_devs=(float(yh.std()), float(yl.std())),
        mean_difference=mh - ml,
        group_column=group_col,
        threshold=float(threshold),
        outcome=outcome,
    )


def categorical_group_summary(
    data: CleanDataset, labels: list[str], outcome: str
) -> dict[str, dict[str, float]]:
    """Per-label outcome summaries for an externally supplied row labeling.

    Used for regional comparisons: the caller maps each tract key to a label
    (for example via a state-prefix-to-region file) and passes the labels
    aligned with the dataset rows.
    """
    if len(labels) != data.n_rows:
        raise ConfigError("labels must align with dataset rows")
    y = data.column(outcome)
    out: dict[str, dict[str, float]] = {}
    for label in sorted(set(labels)):
        mask = np.asarray([l == label for l in labels])
        vals = y[mask]
        out[label] = {
            "count": int(vals.size),
            "mean": float(vals.mean()),
            "std_dev": float(vals.std()),
        }
    return out
