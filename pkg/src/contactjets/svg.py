"""A minimal SVG writer for log-log decay curves."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 320
MARGIN = 50


def _ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def decay_plot(table, title: str = "", slope=None) -> str:
    """Plot ``max_ratio`` against ``radius`` on log-log axes; zero ratios are dropped."""
    pts = [(math.log10(r), math.log10(q)) for r, q in table
           if isinstance(q, (int, float)) and r > 0 and 0 < q < math.inf]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
             f'viewBox="0 0 {WIDTH} {HEIGHT}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="13" '
             f'font-family="sans-serif">{escape(title)}</text>']
    if not pts:
        parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
                     'font-family="sans-serif">all ratios vanish</text></svg>')
        return "\n".join(parts) + "\n"
    xs, ys = zip(*pts)
    x0, x1 = math.floor(min(xs)), math.ceil(max(xs))
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)

    def sx(v):
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    parts.append(f'<g stroke="#999" stroke-width="1"><line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" '
                 f'x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}"/><line x1="{MARGIN}" y1="{MARGIN}" '
                 f'x2="{MARGIN}" y2="{HEIGHT - MARGIN}"/></g>')
    for t in _ticks(x0, x1):
        parts.append(f'<text x="{sx(t):.1f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" font-size="10" '
                     f'font-family="sans-serif">1e{t}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<text x="{MARGIN - 6}" y="{sy(t) + 3:.1f}" text-anchor="end" font-size="10" '
                     f'font-family="sans-serif">1e{t}</text>')
    path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in sorted(pts))
    parts.append(f'<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{path}"/>')
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="#1f5fa8"/>')
    parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="11" '
                 'font-family="sans-serif">radius</text>')
    if isinstance(slope, (int, float)) and math.isfinite(slope):
        parts.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN - 8}" text-anchor="end" font-size="12" '
                     f'font-family="sans-serif">fitted slope {slope:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
