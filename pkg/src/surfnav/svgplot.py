"""Minimal deterministic SVG line charts.

Self-contained writer with no plotting dependency: identical inputs give
byte-identical files, which keeps re-runs of a manifest reproducible down
to the plot artifacts.
"""

from __future__ import annotations

import math

__all__ = ["line_chart"]

WIDTH = 760
HEIGHT = 480
MARGIN_LEFT = 76
MARGIN_RIGHT = 18
MARGIN_TOP = 40
MARGIN_BOTTOM = 52

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
]


def _nice_ticks(lo, hi, target=6):
    """Tick positions covering [lo, hi] on a 1-2-5 grid."""
    if not hi > lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target - 1, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * magnitude
    for mult in (1.0, 2.0, 5.0):
        if span / (mult * magnitude) <= target:
            step = mult * magnitude
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(value) < 1e-9 * step else value)
        value += step
    return ticks


def _data_range(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        pad = 1.0 if hi == 0.0 else abs(hi) * 0.1
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(path, x, series, labels=(), title="", xlabel="", ylabel="",
               guides=()):
    """Write a multi-series line chart as a standalone SVG file.

    ``series`` is a list of y-sequences, each as long as ``x``; ``guides``
    lists horizontal dashed reference lines as (value, label) pairs.
    Non-finite points are skipped.  Legend entries come from ``labels``
    and are omitted when there are more labels than palette colors.
    """
    x = [float(v) for v in x]
    series = [[float(v) for v in ys] for ys in series]
    x_lo, x_hi = _data_range(x)
    all_y = [v for ys in series for v in ys] + [g[0] for g in guides]
    y_lo, y_hi = _data_range(all_y)

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(value):
        return MARGIN_LEFT + (value - x_lo) / (x_hi - x_lo) * plot_w

    def sy(value):
        return MARGIN_TOP + (y_hi - value) / (y_hi - y_lo) * plot_h

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}"'
        f' height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    parts.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}"'
        f' height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>'
    )
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle"'
            f' font-family="sans-serif" font-size="15">{title}</text>'
        )

    for tick in _nice_ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{MARGIN_TOP + plot_h}" x2="{px:.2f}"'
            f' y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{MARGIN_TOP + plot_h + 20}"'
            f' text-anchor="middle" font-family="sans-serif"'
            f' font-size="11">{tick:g}</text>'
        )
    for tick in _nice_ticks(y_lo, y_hi):
        py = sy(tick)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{py:.2f}" x2="{MARGIN_LEFT}"'
            f' y2="{py:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 9}" y="{py + 4:.2f}" text-anchor="end"'
            f' font-family="sans-serif" font-size="11">{tick:g}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 14}"'
            f' text-anchor="middle" font-family="sans-serif"'
            f' font-size="13">{xlabel}</text>'
        )
    if ylabel:
        cy = MARGIN_TOP + plot_h / 2
        parts.append(
            f'<text x="20" y="{cy:.1f}" text-anchor="middle"'
            f' font-family="sans-serif" font-size="13"'
            f' transform="rotate(-90 20 {cy:.1f})">{ylabel}</text>'
        )

    for value, label in guides:
        py = sy(value)
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{py:.2f}"'
            f' x2="{MARGIN_LEFT + plot_w}" y2="{py:.2f}" stroke="#555555"'
            f' stroke-dasharray="6,4" stroke-width="1"/>'
        )
        if label:
            parts.append(
                f'<text x="{MARGIN_LEFT + plot_w - 6}" y="{py - 5:.2f}"'
                f' text-anchor="end" font-family="sans-serif" font-size="11"'
                f' fill="#555555">{label}</text>'
            )

    for index, ys in enumerate(series):
        color = PALETTE[index % len(PALETTE)]
        points = []
        for xv, yv in zip(x, ys):
            if math.isfinite(yv):
                points.append(f"{sx(xv):.2f},{sy(yv):.2f}")
        if len(points) >= 2:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.2"'
                f' points="{" ".join(points)}"/>'
            )

    if labels and len(labels) <= len(PALETTE):
        for index, label in enumerate(labels):
            ly = MARGIN_TOP + 16 + 16 * index
            lx = MARGIN_LEFT + plot_w - 130
            color = PALETTE[index % len(PALETTE)]
            parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}"'
                f' stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif"'
                f' font-size="11">{label}</text>'
            )

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
