"""Self-contained SVG semilog plot of W(t)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50


def semilog_svg(series, title="W(t)", xlabel="t", ylabel="log10 W(t)"):
    """
    Render one or more ``(label, t, W)`` series as log10(W) against t.

    Non-positive W values are dropped.
    """
    pts = []
    for label, ts, ws in series:
        pts.append((label, [(float(t), math.log10(w)) for t, w in zip(ts, ws) if w > 0]))
    xs = [p[0] for _, s in pts for p in s] or [0.0, 1.0]
    ys = [p[1] for _, s in pts for p in s] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']

    ystep = max(1, math.ceil((y1 - y0) / 10))
    for y in range(int(y0), int(y1) + 1, ystep):
        out.append(f'<line x1="{LEFT}" y1="{sy(y):.2f}" x2="{LEFT + pw}" y2="{sy(y):.2f}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{sy(y) + 4:.2f}" text-anchor="end">{y}</text>')
    for k in range(6):
        x = x0 + k * (x1 - x0) / 5
        out.append(f'<text x="{sx(x):.2f}" y="{TOP + ph + 18}" text-anchor="middle">{x:.0f}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>')

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]
    for k, (label, s) in enumerate(pts):
        color = colors[k % len(colors)]
        if s:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        ly = TOP + 16 + 16 * k
        out.append(f'<line x1="{LEFT + pw - 110}" y1="{ly - 4}" x2="{LEFT + pw - 90}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 85}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
