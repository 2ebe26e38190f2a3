"""Minimal deterministic SVG 1.1 emission (no external plotting dependency).

Output is a pure function of the data: fixed canvas geometry, fixed decimal
formatting, no timestamps or random ids, so identical inputs give identical
bytes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["svg_scatter", "svg_heatmap"]

_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
    'width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
)


def _fmt(x):
    return f"{x:.2f}".rstrip("0").rstrip(".")


def svg_scatter(x, y, size=480, margin=48, title=""):
    """Scatter of integer-valued points (x right, y up), square canvas."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    span = max(float(x.max() - x.min()), float(y.max() - y.min()), 1.0)
    inner = size - 2 * margin
    scale = inner / span

    def sx(v):
        return margin + (v - x.min()) * scale

    def sy(v):
        return size - margin - (v - y.min()) * scale

    parts = [_HEADER.format(w=size, h=size)]
    parts.append(f'<rect width="{size}" height="{size}" fill="white"/>\n')
    parts.append(
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" '
        'fill="none" stroke="black" stroke-width="1"/>\n'
    )
    if title:
        parts.append(
            f'<text x="{size // 2}" y="{margin // 2}" text-anchor="middle" '
            f'font-family="monospace" font-size="12">{title}</text>\n'
        )
    for xi, yi in zip(x, y):
        parts.append(
            f'<circle cx="{_fmt(sx(xi))}" cy="{_fmt(sy(yi))}" r="2" '
            'fill="black" fill-opacity="0.6"/>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def svg_heatmap(M, size=480, margin=8, title=""):
    """Grayscale matrix raster: larger values darker, row 0 on top."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be a square matrix")
    n = M.shape[0]
    vmax = float(M.max())
    if vmax <= 0:
        vmax = 1.0
    cell = (size - 2 * margin) / n
    parts = [_HEADER.format(w=size, h=size)]
    parts.append(f'<rect width="{size}" height="{size}" fill="white"/>\n')
    if title:
        parts.append(
            f'<text x="{size // 2}" y="{margin + 4}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{title}</text>\n'
        )
    for i in range(n):
        for j in range(n):
            v = M[i, j]
            if v <= 0:
                continue
            level = int(round(255 * (1.0 - min(v / vmax, 1.0))))
            parts.append(
                f'<rect x="{_fmt(margin + j * cell)}" y="{_fmt(margin + i * cell)}" '
                f'width="{_fmt(cell)}" height="{_fmt(cell)}" '
                f'fill="rgb({level},{level},{level})"/>\n'
            )
    parts.append("</svg>\n")
    return "".join(parts)
