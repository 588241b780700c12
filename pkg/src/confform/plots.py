"""Minimal SVG line plots of boundary-length curves."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .atlas import AtlasRow, BoundaryCurve

WIDTH, HEIGHT, MARGIN = 480, 320, 48


def _points(curve, quantity: str):
    if isinstance(curve, BoundaryCurve):
        pts = [(c, L) for c, L in curve.samples]
        if quantity == "L_hat":
            pts = [(c, c * L) for c, L in pts]
        return pts
    rows = [r for r in curve if isinstance(r, AtlasRow) and r.converged]
    attr = {"L": "L", "L_hat": "L_hat", "A": "A", "A_hat": "A_hat"}[quantity]
    return sorted((r.c, getattr(r, attr)) for r in rows)


def emit_plot(curve, path, quantity: str = "L", title: str = "") -> Path:
    """Write an SVG polyline of quantity against c.

    A horizontal zero line is drawn whenever the plotted values change sign.
    """
    pts = _points(curve, quantity)
    if len(pts) < 2:
        raise ValueError("a plot needs at least two samples")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    label = {"L": "L", "L_hat": "L̂", "A": "A", "A_hat": "Â"}[quantity]
    poly = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in pts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line class="axis" x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text class="xlabel" x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">c</text>',
        f'<text class="ylabel" x="14" y="{HEIGHT / 2}" text-anchor="middle">{escape(label)}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10">{x0:.4g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="20" text-anchor="middle">{escape(title)}</text>')
    if min(ys) < 0 < max(ys):
        parts.append(f'<line class="zero" x1="{MARGIN}" y1="{sy(0.0):.3f}" x2="{WIDTH - MARGIN}" '
                     f'y2="{sy(0.0):.3f}" stroke="gray" stroke-dasharray="4,3"/>')
    parts.append(f'<polyline class="curve" fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def polyline_points(path) -> list[tuple[float, float]]:
    """Read back the data polyline of an SVG written by emit_plot (SVG y grows downward)."""
    import xml.etree.ElementTree as ET

    root = ET.parse(path).getroot()
    for el in root.iter():
        if el.tag.endswith("polyline"):
            return [tuple(float(v) for v in p.split(",")) for p in el.get("points").split()]
    raise ValueError("no polyline in SVG")


def has_zero_line(path) -> bool:
    import xml.etree.ElementTree as ET

    root = ET.parse(path).getroot()
    return any(el.tag.endswith("line") and el.get("class") == "zero" for el in root.iter())

