"""Minimal deterministic SVG charts (line plots and paired bars).

Output depends only on the input numbers: fixed viewbox, fixed palette,
coordinates printed with a fixed number of decimals.
"""
from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _c(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.4g}"


def _span(values) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _frame(title, xlabel, ylabel, x_lo, x_hi, y_lo, y_hi) -> list[str]:
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        frac = k / 4
        yv = y_lo + frac * (y_hi - y_lo)
        py = TOP + ph - frac * ph
        out.append(f'<line x1="{LEFT - 4}" y1="{_c(py)}" x2="{LEFT}" y2="{_c(py)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_c(py + 4)}" text-anchor="end">{_label(yv)}</text>')
        if x_lo is not None:
            xv = x_lo + frac * (x_hi - x_lo)
            px = LEFT + frac * pw
            out.append(f'<line x1="{_c(px)}" y1="{TOP + ph}" x2="{_c(px)}" y2="{TOP + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{_c(px)}" y="{TOP + ph + 18}" text-anchor="middle">{_label(xv)}</text>')
    return out


def _legend(names) -> list[str]:
    out = []
    for k, name in enumerate(names):
        y = TOP + 14 + 16 * k
        x = WIDTH - RIGHT - 150
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<rect x="{x}" y="{y - 9}" width="12" height="10" fill="{color}"/>')
        out.append(f'<text x="{x + 18}" y="{y}">{escape(name)}</text>')
    return out


def line_chart(series: dict[str, tuple[list, list]], title: str, xlabel: str, ylabel: str) -> str:
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    if x_lo == x_hi:
        x_hi = x_lo + 1
    y_lo, y_hi = _span(ys_all)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    out = _frame(title, xlabel, ylabel, x_lo, x_hi, y_lo, y_hi)
    for k, (name, (xs, ys)) in enumerate(series.items()):
        pts = " ".join(
            f"{_c(LEFT + (x - x_lo) / (x_hi - x_lo) * pw)},{_c(TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph)}"
            for x, y in zip(xs, ys)
            if math.isfinite(y)
        )
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{PALETTE[k % len(PALETTE)]}" stroke-width="2"/>'
        )
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(categories: list[str], groups: dict[str, list[float]], title: str, ylabel: str) -> str:
    """Grouped bars: one cluster per category, one bar per group."""
    vals = [v for g in groups.values() for v in g]
    y_lo, y_hi = _span([0.0, *vals])
    y_lo = min(y_lo, 0.0)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    out = _frame(title, "UAV", ylabel, None, None, y_lo, y_hi)
    n_cat, n_grp = max(len(categories), 1), max(len(groups), 1)
    slot = pw / n_cat
    bar = slot * 0.8 / n_grp

    def py(v):
        return TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    for c, cat in enumerate(categories):
        x0 = LEFT + c * slot + slot * 0.1
        for g, (name, values) in enumerate(groups.items()):
            v = values[c]
            if not math.isfinite(v):
                continue
            top, base = py(max(v, 0.0)), py(min(v, 0.0))
            out.append(
                f'<rect x="{_c(x0 + g * bar)}" y="{_c(top)}" width="{_c(bar)}" '
                f'height="{_c(base - top)}" fill="{PALETTE[g % len(PALETTE)]}"/>'
            )
        out.append(
            f'<text x="{_c(LEFT + (c + 0.5) * slot)}" y="{TOP + ph + 18}" '
            f'text-anchor="middle">{escape(cat)}</text>'
        )
    out += _legend(groups)
    out.append("</svg>")
    return "\n".join(out) + "\n"
