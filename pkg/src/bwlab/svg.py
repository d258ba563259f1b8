"""Minimal static SVG rendering for line and scatter plots.

Just enough to drop quick-look figures next to CLI outputs without a
plotting dependency. Output is deterministic for identical inputs.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 480
_ML, _MR, _MT, _MB = 72, 20, 36, 52


def _bounds(vals):
    lo = float(np.min(vals))
    hi = float(np.max(vals))
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, n=5):
    raw = np.linspace(lo, hi, n)
    return [float(f"{v:.4g}") for v in raw]


class _Canvas:
    def __init__(self, title, xlabel, ylabel, xlo, xhi, ylo, yhi):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
        ]
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self._frame(title, xlabel, ylabel)

    def px(self, x):
        return _ML + (x - self.xlo) / (self.xhi - self.xlo) * (_W - _ML - _MR)

    def py(self, y):
        return _H - _MB - (y - self.ylo) / (self.yhi - self.ylo) * (_H - _MT - _MB)

    def _frame(self, title, xlabel, ylabel):
        self.parts.append(
            f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
            f'height="{_H - _MT - _MB}" fill="none" stroke="#444"/>')
        self.parts.append(
            f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>')
        self.parts.append(
            f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>')
        self.parts.append(
            f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{ylabel}</text>')
        for tx in _ticks(self.xlo, self.xhi):
            px = self.px(tx)
            self.parts.append(
                f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" '
                f'y2="{_H - _MB + 5}" stroke="#444"/>')
            self.parts.append(
                f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{tx:g}</text>')
        for ty in _ticks(self.ylo, self.yhi):
            py = self.py(ty)
            self.parts.append(
                f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" '
                f'stroke="#444"/>')
            self.parts.append(
                f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{ty:g}</text>')

    def polyline(self, x, y, color):
        pts = " ".join(f"{self.px(a):.2f},{self.py(b):.2f}" for a, b in zip(x, y))
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.2"/>')

    def dots(self, x, y, color):
        for a, b in zip(x, y):
            self.parts.append(
                f'<circle cx="{self.px(a):.2f}" cy="{self.py(b):.2f}" r="2.2" '
                f'fill="{color}" fill-opacity="0.7"/>')

    def legend(self, labels):
        for i, (label, color) in enumerate(labels):
            y = _MT + 16 + 16 * i
            self.parts.append(
                f'<line x1="{_W - _MR - 120}" y1="{y}" x2="{_W - _MR - 96}" '
                f'y2="{y}" stroke="{color}" stroke-width="2"/>')
            self.parts.append(
                f'<text x="{_W - _MR - 90}" y="{y + 4}" font-family="sans-serif" '
                f'font-size="11">{label}</text>')

    def save(self, path):
        self.parts.append("</svg>")
        Path(path).write_text("\n".join(self.parts) + "\n")


def line_plot(path: str | Path, series, title: str = "", xlabel: str = "",
              ylabel: str = "") -> None:
    """Render labeled (x, y) series as polylines.

    series: iterable of (label, x, y) with array-likes x and y.
    """
    series = [(str(lbl), np.asarray(x, float), np.asarray(y, float))
              for lbl, x, y in series]
    if not series:
        raise ValueError("need at least one series")
    xlo, xhi = _bounds(np.concatenate([x for _, x, _ in series]))
    ylo, yhi = _bounds(np.concatenate([y for _, _, y in series]))
    cv = _Canvas(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    labels = []
    for i, (lbl, x, y) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        cv.polyline(x, y, color)
        if lbl:
            labels.append((lbl, color))
    if len(labels) > 1:
        cv.legend(labels)
    cv.save(path)


def scatter_plot(path: str | Path, x, y, title: str = "", xlabel: str = "",
                 ylabel: str = "", diagonal: bool = False) -> None:
    """Render one scatter set; diagonal=True adds the y = x reference line."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size == 0 or x.shape != y.shape:
        raise ValueError("x and y must be equal-length nonempty arrays")
    xlo, xhi = _bounds(np.concatenate([x, y]) if diagonal else x)
    ylo, yhi = (xlo, xhi) if diagonal else _bounds(y)
    cv = _Canvas(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    if diagonal:
        cv.polyline([xlo, xhi], [xlo, xhi], "#999999")
    cv.dots(x, y, _COLORS[0])
    cv.save(path)
