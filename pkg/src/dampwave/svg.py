"""Minimal self-contained SVG line charts (log or linear axes)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
           "#8c564b", "#e377c2", "#7f7f7f")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        return [float(k) for k in range(a, b + 1) if lo - 1e-9 <= k <= hi + 1e-9]
    return list(np.linspace(lo, hi, 5))


def _label(v, log):
    return f"1e{int(v)}" if log else f"{v:.3g}"


def line_chart(series: dict, path, title: str = "", xlabel: str = "", ylabel: str = "",
               logx: bool = True, logy: bool = True):
    """Write ``{name: (x, y)}`` as an SVG line chart to ``path``.

    Non-positive values are dropped on log axes; empty series are skipped.
    """
    cleaned = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        if keep.any():
            cleaned[name] = (np.log10(x[keep]) if logx else x[keep],
                             np.log10(y[keep]) if logy else y[keep])
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">'
             f'{escape(title)}</text>']
    if cleaned:
        xs = np.concatenate([v[0] for v in cleaned.values()])
        ys = np.concatenate([v[1] for v in cleaned.values()])
        x0, x1 = xs.min(), xs.max()
        y0, y1 = ys.min(), ys.max()
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

        def px(v):
            return LEFT + (v - x0) / (x1 - x0) * pw

        def py(v):
            return TOP + (1 - (v - y0) / (y1 - y0)) * ph

        parts.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" '
                     'fill="none" stroke="black"/>')
        for v in _ticks(x0, x1, logx):
            parts.append(f'<line x1="{px(v):.1f}" y1="{TOP + ph}" x2="{px(v):.1f}" '
                         f'y2="{TOP + ph + 4}" stroke="black"/>')
            parts.append(f'<text x="{px(v):.1f}" y="{TOP + ph + 16}" text-anchor="middle">'
                         f'{_label(v, logx)}</text>')
        for v in _ticks(y0, y1, logy):
            parts.append(f'<line x1="{LEFT - 4}" y1="{py(v):.1f}" x2="{LEFT}" '
                         f'y2="{py(v):.1f}" stroke="black"/>')
            parts.append(f'<text x="{LEFT - 6}" y="{py(v) + 4:.1f}" text-anchor="end">'
                         f'{_label(v, logy)}</text>')
        for i, (name, (x, y)) in enumerate(cleaned.items()):
            color = _COLORS[i % len(_COLORS)]
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                         'stroke-width="1.5"/>')
            ly = TOP + 14 * (i + 1)
            parts.append(f'<line x1="{W - RIGHT + 10}" y1="{ly - 4}" x2="{W - RIGHT + 30}" '
                         f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{W - RIGHT + 34}" y="{ly}">{escape(name)}</text>')
    parts.append(f'<text x="{LEFT + (W - LEFT - RIGHT) / 2}" y="{H - 10}" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="15" y="{TOP + (H - TOP - BOTTOM) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 15 {TOP + (H - TOP - BOTTOM) / 2})">'
                 f'{escape(ylabel)}</text>')
    parts.append("</svg>\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
