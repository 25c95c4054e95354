"""Minimal static SVG rendering of error curves (no plotting dependency).

Log-log axes: x is 1/sigma^2, y is the error bound.  Bound curves are solid
polylines, Monte Carlo estimates are circle markers.  CSV is the canonical
output; this rendering is cosmetic, so the y range is clipped to a bounded
number of decades below the largest plotted value.
"""

from __future__ import annotations

import math

import numpy as np

_WIDTH, _HEIGHT = 760, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 55
_MAX_DECADES_DOWN = 16.0

_PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
]


def _ticks(lo: float, hi: float) -> list[int]:
    start = math.ceil(lo - 1e-9)
    stop = math.floor(hi + 1e-9)
    step = max(1, (stop - start) // 8)
    return list(range(start, stop + 1, step))


def render_curves(curves, title: str = "error probability vs 1/sigma^2") -> str:
    """SVG text for a list of :class:`~compclass.montecarlo.ErrorCurve`."""
    if not curves:
        raise ValueError("nothing to plot")
    log10e = math.log10(math.e)

    x_all = []
    y_all = []
    for curve in curves:
        x_all.append(-np.log10(curve.sigma2))  # log10(1/sigma2)
        y_all.append(curve.log_bound * log10e)
    x_lo = min(float(x.min()) for x in x_all)
    x_hi = max(float(x.max()) for x in x_all)
    y_hi = max(float(y.max()) for y in y_all)
    y_hi = min(y_hi, 0.5)
    y_lo = max(min(float(y.min()) for y in y_all), y_hi - _MAX_DECADES_DOWN)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_lo = y_hi - 1.0

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(v):
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_MARGIN_L}" y="24" font-family="sans-serif" font-size="15">{title}</text>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
    ]

    for tick in _ticks(x_lo, x_hi):
        x = sx(tick)
        if not _MARGIN_L - 1 <= x <= _WIDTH - _MARGIN_R + 1:
            continue
        parts.append(
            f'<line x1="{x:.1f}" y1="{_MARGIN_T}" x2="{x:.1f}" y2="{_MARGIN_T + plot_h}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_MARGIN_T + plot_h + 18}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">1e{tick}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        y = sy(tick)
        if not _MARGIN_T - 1 <= y <= _MARGIN_T + plot_h + 1:
            continue
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.1f}" x2="{_MARGIN_L + plot_w}" y2="{y:.1f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{y + 4:.1f}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">1e{tick}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 14}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">1/sigma^2</text>'
    )
    parts.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.1f}" font-family="sans-serif" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.1f})">'
        f'error probability</text>'
    )

    for index, curve in enumerate(curves):
        color = _PALETTE[index % len(_PALETTE)]
        x = -np.log10(curve.sigma2)
        y = curve.log_bound * log10e
        visible = y >= y_lo - 1e-12
        points = " ".join(
            f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x[visible], y[visible])
        )
        if points:
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )
        mc = curve.mc_estimate
        for k in range(len(mc)):
            if np.isfinite(mc[k]) and mc[k] > 0:
                yv = math.log10(mc[k])
                if yv < y_lo:
                    continue
                parts.append(
                    f'<circle cx="{sx(x[k]):.2f}" cy="{sy(yv):.2f}" r="3" fill="none" '
                    f'stroke="{color}" stroke-width="1.3"/>'
                )
        legend_y = _MARGIN_T + 14 + 18 * index
        legend_x = _WIDTH - _MARGIN_R + 12
        parts.append(
            f'<line x1="{legend_x}" y1="{legend_y}" x2="{legend_x + 22}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(
            f'<text x="{legend_x + 28}" y="{legend_y + 4}" font-family="sans-serif" '
            f'font-size="12">M = {curve.m} (bound; circles: MC)</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
