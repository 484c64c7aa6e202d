"""Regenerate the bundled fixture tables under src/tractwise/fixtures/.

The tiny set exercises the cleaning bookkeeping with hand-placed defects and
frozen discard counts; the synth set is a 121-tract sample with planted
structure (worse health indicators drive worse outcomes) so every CLI path
has offline data worth modeling.  Deterministic: rerunning changes nothing.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1] / "src" / "tractwise" / "fixtures"

STATES = ["01", "06", "17", "36"]  # South, West, Midwest, Northeast


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def make_tiny() -> None:
    base = ROOT / "tiny"
    keys = [f"010010201{i:02d}" for i in range(6)]  # A..F
    a, b, c, d, e, f = keys
    write_csv(
        base / "socio.csv",
        ["TractFIPS", "MedianIncome", "PctPoverty"],
        [
            [a, "52000", "12.5"],
            [b, "31000", "28.0"],
            [c, "45000", "N/A"],  # null -> dropped
            [d, "60000", "9.1"],
            [e, "38000", "19.4"],
        ],
    )
    write_csv(
        base / "education.csv",
        ["TractFIPS", "PctHSGrad"],
        [
            [a, "85.0"],
            [b, "60.0"],
            [c, "72.3"],
            [d, "91.2"],
            [f, "77.7"],  # F matches nothing else -> non_matching; E absent here
        ],
    )
    write_csv(
        base / "health.csv",
        ["TractFIPS", "BadPhysicalHealth", "BadMentalHealth", "PctSmoking"],
        [
            [a, "8.0", "10.1", "14.2"],
            [b, "18.0", "16.3", "27.5"],
            [c, "11.5", "12.0", "18.8"],
            [d, "7.2", "9.4", "135"],  # percent out of range -> dropped
            [e, "14.9", "13.7", "22.1"],
        ],
    )


def _clip(v, lo=0.5, hi=99.5):
    return float(np.clip(v, lo, hi))


def make_synth() -> None:
    base = ROOT / "synth"
    rng = np.random.default_rng(20170601)
    n = 121
    keys = []
    for i in range(n):
        state = STATES[i % len(STATES)]
        keys.append(f"{state}{rng.integers(1, 200):03d}{rng.integers(0, 999_999):06d}")
    keys = sorted(set(keys))
    assert len(keys) == n, "key collision; adjust the seed"

    burden = rng.uniform(0.0, 1.0, n)  # latent tract-level health burden

    income = 30000 + 62000 * (1 - burden) + rng.normal(0, 4500, n)
    poverty = np.clip(4 + 26 * burden + rng.normal(0, 2.5, n), 0.5, 99.5)
    unemployed = np.clip(2.5 + 10 * burden + rng.normal(0, 1.2, n), 0.2, 99.5)
    hs_grad = np.clip(96 - 32 * burden + rng.normal(0, 3.0, n), 1, 99.5)
    college = np.clip(45 - 28 * burden + rng.normal(0, 4.0, n), 1, 99.5)

    smoking = np.clip(9 + 21 * burden + rng.normal(0, 1.8, n), 0.5, 99.5)
    sleep_dep = np.clip(24 + 16 * burden + rng.normal(0, 2.0, n), 0.5, 99.5)
    no_checkup = np.clip(18 + 22 * burden + rng.normal(0, 2.4, n), 0.5, 99.5)
    no_screening = np.clip(14 + 19 * burden + rng.normal(0, 2.2, n), 0.5, 99.5)
    inactive = np.clip(17 + 26 * burden + rng.normal(0, 2.6, n), 0.5, 99.5)

    # Outcomes are driven by the indicators themselves, more tightly than by
    # the socioeconomic columns.
    bad_physical = np.clip(
        1.5 + 0.45 * smoking + 0.25 * inactive + rng.normal(0, 0.9, n), 0.5, 99.5
    )
    bad_mental = np.clip(
        2.0 + 0.35 * sleep_dep + 0.30 * smoking + rng.normal(0, 1.0, n), 0.5, 99.5
    )

    socio_rows = []
    for i, key in enumerate(keys):
        med = f"{income[i]:.0f}"
        if i in (7, 33):  # two tracts never reported income
            med = "N/A" if i == 7 else "(X)"
        socio_rows.append(
            # numeric-export style key (leading zeros lost) to exercise repair
            [key.lstrip("0"), med, f"{poverty[i]:.1f}", f"{unemployed[i]:.1f}"]
        )
    write_csv(
        base / "socio.csv",
        ["GEOID", "Median Household Income", "Pct Below Poverty", "Pct Unemployed"],
        socio_rows,
    )

    edu_rows = [
        [key, f"{hs_grad[i]:.1f}", f"{college[i]:.1f}"]
        for i, key in enumerate(keys)
        if i != 60  # one tract missing from the education source
    ]
    write_csv(base / "education.csv", ["GEOID", "PctHSGrad", "PctCollegeGrad"], edu_rows)

    health_rows = [
        [
            key,
            f"{bad_physical[i]:.1f}",
            f"{bad_mental[i]:.1f}",
            f"{smoking[i]:.1f}",
            f"{sleep_dep[i]:.1f}",
            f"{no_checkup[i]:.1f}",
            f"{no_screening[i]:.1f}",
            f"{inactive[i]:.1f}",
        ]
        for i, key in enumerate(keys)
    ]
    write_csv(
        base / "health.csv",
        [
            "GEOID",
            "BadPhysicalHealthPct",
            "BadMentalHealthPct",
            "PctSmoking",
            "PctSleepDeprived",
            "PctNoCheckup",
            "PctNoScreening",
            "PctInactive",
        ],
        health_rows,
    )


if __name__ == "__main__":
    make_tiny()
    make_synth()
