"""Minimal deterministic SVG charts: no plotting dependency, stable bytes.

Every emitter assembles plain strings with fixed-precision coordinates, so a
chart is byte-identical across runs and platforms given the same data.  The
run's provenance (seed, config digest) is embedded in an SVG ``<metadata>``
element by the CLI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 20, 34, 48

TRAIN_COLOR = "#2457a8"  # blue: training curves
TEST_COLOR = "#c03030"  # red: testing curves
POINT_COLOR = "#33557a"
BAR_A = "#2457a8"
BAR_B = "#d08a2e"


def _esc(s: str) -> str:
    return (
        str(s)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _label(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        return [lo]
    span = hi - lo
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


@dataclass
class _Frame:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def px(self, x: float) -> float:
        span = self.x_hi - self.x_lo or 1.0
        return MARGIN_L + (x - self.x_lo) / span * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        span = self.y_hi - self.y_lo or 1.0
        return HEIGHT - MARGIN_B - (y - self.y_lo) / span * (HEIGHT - MARGIN_T - MARGIN_B)


def _pad_range(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = abs(lo) * 0.05 + 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _frame_for(x, y) -> _Frame:
    return _Frame(*_pad_range(float(np.min(x)), float(np.max(x))),
                  *_pad_range(float(np.min(y)), float(np.max(y))))


def _axes(frame: _Frame, title: str, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#888" stroke-width="1"/>',
        f'<text x="{WIDTH // 2}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{_esc(x_label)}</text>',
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT // 2})">{_esc(y_label)}</text>',
    ]
    for t in _nice_ticks(frame.x_lo, frame.x_hi):
        x = frame.px(t)
        parts.append(
            f'<line x1="{_num(x)}" y1="{HEIGHT - MARGIN_B}" x2="{_num(x)}" '
            f'y2="{HEIGHT - MARGIN_B + 4}" stroke="#888"/>'
        )
        parts.append(
            f'<text x="{_num(x)}" y="{HEIGHT - MARGIN_B + 16}" text-anchor="middle" '
            f'font-size="10">{_label(t)}</text>'
        )
    for t in _nice_ticks(frame.y_lo, frame.y_hi):
        y = frame.py(t)
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{_num(y)}" x2="{MARGIN_L}" y2="{_num(y)}" stroke="#888"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 7}" y="{_num(y + 3)}" text-anchor="end" '
            f'font-size="10">{_label(t)}</text>'
        )
    return parts


def _document(body: list[str], metadata: dict | None) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
    ]
    if metadata:
        head.append(
            "<metadata>"
            + _esc(json.dumps(metadata, sort_keys=True, separators=(",", ":")))
            + "</metadata>"
        )
    head.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _diverging_color(r: float) -> str:
    """-1 maps to blue, 0 to white, +1 to red."""
    if math.isnan(r):
        return "#bbbbbb"
    r = min(1.0, max(-1.0, r))
    if r < 0:
        f = -r
        rgb = (int(255 + (33 - 255) * f), int(255 + (102 - 255) * f), int(255 + (172 - 255) * f))
    else:
        rgb = (int(255 + (178 - 255) * r), int(255 + (24 - 255) * r), int(255 + (43 - 255) * r))
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def heatmap_svg(names: list[str], matrix, title="Correlation heatmap", metadata=None) -> str:
    """Correlation grid with a diverging blue/white/red scale; NaN cells gray."""
    m = np.asarray(matrix, dtype=np.float64)
    k = len(names)
    side = min(WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B)
    cell = side / max(k, 1)
    body = [
        f'<text x="{WIDTH // 2}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>'
    ]
    for i in range(k):
        for j in range(k):
            x = MARGIN_L + j * cell
            y = MARGIN_T + i * cell
            v = float(m[i, j])
            label = "" if math.isnan(v) else f"{v:.2f}"
            body.append(
                f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(cell)}" height="{_num(cell)}" '
                f'fill="{_diverging_color(v)}" stroke="#ffffff" stroke-width="0.5">'
                f"<title>{_esc(names[i])} vs {_esc(names[j])}: {label or 'undefined'}</title></rect>"
            )
            if k <= 12 and label:
                body.append(
                    f'<text x="{_num(x + cell / 2)}" y="{_num(y + cell / 2 + 3)}" '
                    f'text-anchor="middle" font-size="9">{label}</text>'
                )
    for i, name in enumerate(names):
        y = MARGIN_T + i * cell + cell / 2
        body.append(
            f'<text x="{MARGIN_L - 6}" y="{_num(y + 3)}" text-anchor="end" font-size="9">{_esc(name)}</text>'
        )
        x = MARGIN_L + i * cell + cell / 2
        body.append(
            f'<text x="{_num(x)}" y="{_num(MARGIN_T + side + 12)}" text-anchor="middle" '
            f'font-size="9">{_esc(name)}</text>'
        )
    return _document(body, metadata)


def scatter_svg(
    x,
    y,
    curve_x=None,
    curve_y=None,
    title="Scatter",
    x_label="x",
    y_label="y",
    metadata=None,
) -> str:
    """Scatter of (x, y) with an optional overlaid fitted curve."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ys = y if curve_y is None else np.concatenate([y, np.asarray(curve_y)])
    frame = _frame_for(x, ys)
    body = _axes(frame, title, x_label, y_label)
    for xi, yi in zip(x, y):
        body.append(
            f'<circle cx="{_num(frame.px(xi))}" cy="{_num(frame.py(yi))}" r="2.2" '
            f'fill="{POINT_COLOR}" fill-opacity="0.55"/>'
        )
    if curve_x is not None:
        pts = " ".join(
            f"{_num(frame.px(cx))},{_num(frame.py(cy))}" for cx, cy in zip(curve_x, curve_y)
        )
        body.append(f'<polyline points="{pts}" fill="none" stroke="{TEST_COLOR}" stroke-width="2"/>')
    return _document(body, metadata)


def _shared_bins(values: list[np.ndarray], bins: int) -> np.ndarray:
    lo = min(float(v.min()) for v in values)
    hi = max(float(v.max()) for v in values)
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def dual_histogram_svg(
    values_a,
    values_b,
    label_a="high",
    label_b="low",
    bins=16,
    title="Group comparison",
    x_label="value",
    metadata=None,
) -> str:
    """Two histograms over shared bins, drawn as paired bars."""
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    edges = _shared_bins([a, b], bins)
    ca, _ = np.histogram(a, bins=edges)
    cb, _ = np.histogram(b, bins=edges)
    top = max(1, int(max(ca.max(), cb.max())))
    frame = _Frame(edges[0], edges[-1], 0.0, top * 1.05)
    body = _axes(frame, title, x_label, "count")
    for i in range(bins):
        w = (frame.px(edges[i + 1]) - frame.px(edges[i])) / 2 - 1
        for shift, c, color in ((0, ca[i], BAR_A), (1, cb[i], BAR_B)):
            if c == 0:
                continue
            x0 = frame.px(edges[i]) + shift * (w + 1)
            y0 = frame.py(float(c))
            body.append(
                f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(max(w, 1.0))}" '
                f'height="{_num(frame.py(0) - y0)}" fill="{color}" fill-opacity="0.8"/>'
            )
    body.append(
        f'<rect x="{WIDTH - 180}" y="{MARGIN_T + 8}" width="10" height="10" fill="{BAR_A}"/>'
        f'<text x="{WIDTH - 165}" y="{MARGIN_T + 17}" font-size="11">{_esc(label_a)}</text>'
        f'<rect x="{WIDTH - 180}" y="{MARGIN_T + 24}" width="10" height="10" fill="{BAR_B}"/>'
        f'<text x="{WIDTH - 165}" y="{MARGIN_T + 33}" font-size="11">{_esc(label_b)}</text>'
    )
    return _document(body, metadata)


def histogram_svg(values, bins=10, title="Histogram", x_label="value", metadata=None) -> str:
    v = np.asarray(values, dtype=np.float64)
    edges = _shared_bins([v], bins)
    counts, _ = np.histogram(v, bins=edges)
    top = max(1, int(counts.max()))
    frame = _Frame(edges[0], edges[-1], 0.0, top * 1.05)
    body = _axes(frame, title, x_label, "count")
    for i in range(bins):
        if counts[i] == 0:
            continue
        x0 = frame.px(edges[i]) + 0.5
        x1 = frame.px(edges[i + 1]) - 0.5
        y0 = frame.py(float(counts[i]))
        body.append(
            f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(x1 - x0)}" '
            f'height="{_num(frame.py(0) - y0)}" fill="{BAR_A}" fill-opacity="0.85"/>'
        )
    return _document(body, metadata)


def line_chart_svg(
    x,
    series: list[tuple[str, list[float], str]],
    title="Curves",
    x_label="x",
    y_label="y",
    metadata=None,
) -> str:
    """Overlaid polylines with a legend; series = [(label, values, color), ...]."""
    x = np.asarray(x, dtype=np.float64)
    all_y = np.concatenate([np.asarray(v, dtype=np.float64) for _, v, _ in series])
    frame = _Frame(*_pad_range(float(x.min()), float(x.max())),
                   *_pad_range(float(all_y.min()), float(all_y.max())))
    body = _axes(frame, title, x_label, y_label)
    for si, (label, values, color) in enumerate(series):
        pts = " ".join(
            f"{_num(frame.px(xi))},{_num(frame.py(float(yi)))}" for xi, yi in zip(x, values)
        )
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for xi, yi in zip(x, values):
            body.append(
                f'<circle cx="{_num(frame.px(xi))}" cy="{_num(frame.py(float(yi)))}" r="2.4" fill="{color}"/>'
            )
        ly = MARGIN_T + 10 + 16 * si
        body.append(
            f'<line x1="{WIDTH - 180}" y1="{ly}" x2="{WIDTH - 160}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{WIDTH - 154}" y="{ly + 4}" font-size="11">{_esc(label)}</text>'
        )
    return _document(body, metadata)
