"""Minimal static SVG line charts (no plotting library, no display server)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 400
MARGIN = dict(left=70, right=150, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")
MAX_POINTS = 1500


def _thin(x: np.ndarray, ys: list[np.ndarray]):
    """Downsample to about MAX_POINTS, keeping both sides of every jump in value."""
    if len(x) <= MAX_POINTS:
        return x, ys
    keep = [np.linspace(0, len(x) - 1, MAX_POINTS).astype(int)]
    for y in ys:
        changes = np.flatnonzero(np.diff(y) != 0)
        if len(changes) < MAX_POINTS // 10:
            keep += [changes, changes + 1]
    idx = np.unique(np.concatenate(keep))
    return x[idx], [y[idx] for y in ys]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def line_chart(path, x, series: dict, title: str, xlabel: str, ylabel: str,
               logy: bool = False, step: bool = False) -> Path:
    """Write a multi-series line chart to ``path``.

    With ``logy`` the values are plotted as log10 and non-positive samples are
    clipped to the smallest positive value present.
    """
    x = np.asarray(x, dtype=float)
    labels = list(series)
    ys = [np.asarray(series[k], dtype=float) for k in labels]
    if logy:
        positive = np.concatenate([y[y > 0] for y in ys])
        tiny = positive.min() if positive.size else 1e-16
        ys = [np.log10(np.maximum(y, tiny)) for y in ys]
    x, ys = _thin(x, ys)

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    x0, x1 = float(x.min()), float(x.max())
    y0 = float(min(y.min() for y in ys))
    y1 = float(max(y.max() for y in ys))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2 - MARGIN["right"] / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.1f}" y1="{MARGIN["top"]}" x2="{X:.1f}" y2="{MARGIN["top"] + ph}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{X:.1f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        label = f"1e{t:g}" if logy else f"{t:g}"
        out.append(f'<line x1="{MARGIN["left"]}" y1="{Y:.1f}" x2="{MARGIN["left"] + pw}" y2="{Y:.1f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{Y + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {MARGIN["top"] + ph / 2:.1f}) rotate(-90)" text-anchor="middle">'
               f'{escape(ylabel)}</text>')
    for i, (label, y) in enumerate(zip(labels, ys)):
        color = PALETTE[i % len(PALETTE)]
        if step:
            pts = []
            for j in range(len(x)):
                if j:
                    pts.append(f"{sx(x[j]):.2f},{sy(y[j - 1]):.2f}")
                pts.append(f"{sx(x[j]):.2f},{sy(y[j]):.2f}")
        else:
            pts = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
