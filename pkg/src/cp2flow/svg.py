"""Deterministic SVG rendering of profile curves and cone overlays.

The output is plain text assembled with fixed-precision coordinates, so the
same geometry always yields byte-identical files. Viewport is the square
[-view, view]^2 in the profile plane, default view = 3.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import ConeSpec, ProfileCurve

PALETTE = ("#1f6fb2", "#b23a1f", "#2e8b57", "#7a4fb2")
CONE_COLOR = "#888888"
REGION_FILL = "#f2c879"
MARKER_COLOR = "#b23a1f"


def _fmt(x: float) -> str:
    # fixed decimals keep output byte-stable across platforms
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


class _Canvas:
    def __init__(self, size: int, view: float):
        self.size = size
        self.view = view
        self.scale = size / (2.0 * view)

    def xy(self, w: complex) -> tuple[str, str]:
        x = (w.real + self.view) * self.scale
        y = (self.view - w.imag) * self.scale
        return _fmt(x), _fmt(y)

    def path(self, z: np.ndarray, closed: bool = True) -> str:
        parts = []
        for i, w in enumerate(z):
            x, y = self.xy(complex(w))
            parts.append(f"{'M' if i == 0 else 'L'} {x} {y}")
        if closed:
            parts.append("Z")
        return " ".join(parts)


def _cone_lines(canvas: _Canvas, cone: ConeSpec) -> list[str]:
    out = []
    reach = canvas.view * math.sqrt(2.0) * 1.05
    for theta in cone.line_angles:
        u = reach * complex(math.cos(theta), math.sin(theta))
        x0, y0 = canvas.xy(-u)
        x1, y1 = canvas.xy(u)
        out.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" '
            f'stroke="{CONE_COLOR}" stroke-width="1" '
            'stroke-dasharray="6 4" />')
    return out


def render_svg(curves, cones=(), regions=(), markers=(), title: str = "",
               size: int = 640, view: float = 3.0) -> str:
    """SVG text for a set of curves with optional overlays.

    curves: ProfileCurve instances or raw complex vertex arrays.
    cones: ConeSpec overlays drawn as dashed boundary lines.
    regions: closed complex polylines drawn as shaded fills under the curves.
    markers: complex points drawn as small circles (e.g. cone crossings).
    """
    canvas = _Canvas(size, view)
    body: list[str] = []
    body.append(
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff" />')
    # faint unit-circle reference ring
    cx, cy = canvas.xy(0.0 + 0.0j)
    body.append(
        f'<circle cx="{cx}" cy="{cy}" r="{_fmt(canvas.scale)}" fill="none" '
        'stroke="#dddddd" stroke-width="1" />')
    for poly in regions:
        z = np.asarray(poly, dtype=complex)
        body.append(
            f'<path d="{canvas.path(z)}" fill="{REGION_FILL}" '
            'fill-opacity="0.5" stroke="none" />')
    for cone in cones:
        body.extend(_cone_lines(canvas, cone))
    items = []
    for item in curves:
        if isinstance(item, ProfileCurve):
            items.extend(item.components)
        else:
            items.append(np.asarray(item, dtype=complex))
    for i, z in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        body.append(
            f'<path d="{canvas.path(z)}" fill="none" stroke="{color}" '
            'stroke-width="1.5" />')
    for w in markers:
        x, y = canvas.xy(complex(w))
        body.append(
            f'<circle cx="{x}" cy="{y}" r="4" fill="none" '
            f'stroke="{MARKER_COLOR}" stroke-width="1.5" />')
    if title:
        body.append(
            f'<text x="10" y="20" font-family="monospace" font-size="14" '
            f'fill="#333333">{title}</text>')
    head = (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def save_svg(text: str, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


__all__ = ["render_svg", "save_svg"]
