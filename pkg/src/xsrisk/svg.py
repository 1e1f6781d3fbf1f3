"""Minimal SVG 1.1 line charts for bound curves (no plotting dependency)."""

import math
from xml.sax.saxutils import escape

from .tables import METHOD_ORDER, REFERENCE_ORDER

WIDTH, HEIGHT = 800, 600
MARGIN = {"left": 80, "right": 170, "top": 40, "bottom": 60}
COLORS = {
    "renyi": "#1f77b4",
    "js": "#d62728",
    "sibson": "#2ca02c",
    "mi": "#000000",
    "lautum": "#9467bd",
    "true_excess": "#7f7f7f",
}


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def render(curve, title=""):
    """SVG text for a BoundCurve: one polyline per method, dashed references."""
    alphas = [float(a) for a in curve.alphas]
    methods = [m for m in METHOD_ORDER if m in curve.curves]
    refs = [r for r in REFERENCE_ORDER if r in curve.references and math.isfinite(curve.references[r])]
    finite = [float(v) for m in methods for v in curve.curves[m] if math.isfinite(v)]
    finite += [float(curve.references[r]) for r in refs]
    ymax = max(finite, default=1.0)
    yticks = _nice_ticks(0.0, ymax if ymax > 0 else 1.0)
    y_hi = yticks[-1] if yticks[-1] > 0 else 1.0
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def sx(a):
        return x0 + (a - 0.0) / 1.0 * (x1 - x0)

    def sy(v):
        return y0 - v / y_hi * (y0 - y1)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        out.append(f'<line x1="{sx(t):.2f}" y1="{y0}" x2="{sx(t):.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{y0 + 20}" text-anchor="middle" font-size="12">{t:g}</text>')
    for t in yticks:
        out.append(f'<line x1="{x0 - 5}" y1="{sy(t):.2f}" x2="{x0}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{sy(t) + 4:.2f}" text-anchor="end" font-size="12">{t:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">alpha</text>')

    for m in methods:
        # +inf values break the polyline into separate segments
        segment = []
        segments = []
        for a, v in zip(alphas, curve.curves[m]):
            if math.isfinite(v):
                segment.append(f"{sx(a):.2f},{sy(float(v)):.2f}")
            elif segment:
                segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{COLORS[m]}" stroke-width="2" points="{" ".join(seg)}"/>')
    for r in refs:
        y = sy(float(curve.references[r]))
        out.append(
            f'<line x1="{x0}" y1="{y:.2f}" x2="{x1}" y2="{y:.2f}" stroke="{COLORS[r]}" '
            f'stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
    for i, name in enumerate(methods + refs):
        ly = MARGIN["top"] + 20 + 22 * i
        dash = ' stroke-dasharray="6,4"' if name in refs else ""
        out.append(
            f'<line x1="{x1 + 15}" y1="{ly}" x2="{x1 + 45}" y2="{ly}" stroke="{COLORS[name]}" stroke-width="2"{dash}/>'
        )
        out.append(f'<text x="{x1 + 52}" y="{ly + 4}" font-size="13">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
