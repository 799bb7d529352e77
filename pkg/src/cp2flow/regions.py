"""Areas, mean curvature integrals, and Maslov bookkeeping on the profile plane.

The reduced area form is 2/(1+2r^2)^2 dA with primitive a(r) dphi,
a(r) = r^2/(1+2r^2), normalized to vanish at the origin. Along an edge whose
radius is linear in the polar angle increment (the chord model used here), the
integrals of a(r) dphi and of the drift term h(r) dphi, h = (1-4r^2)/(1+2r^2),
have closed forms through the quantity

    I(r0, r1) = atan(u)/(u (1+2 r0 r1)),   u = sqrt(2)(r1-r0)/(1+2 r0 r1):

    edge area       A = (dphi/2) (1 - I)
    edge drift      H = dphi (-2 + 3 I)

and the pointwise identity 6 a(r) + h(r) = 1 makes 6A + H = dphi exact, so
closed-loop conservation sums telescope to machine precision. Circle arcs at
constant radius integrate exactly; radial rays contribute exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import GeometryError, ProfileCurve

# closure tolerance for region boundaries
CLOSURE_TOL = 1e-9


# ---------------------------------------------------------------------------
# closed-form edge integrals
# ---------------------------------------------------------------------------


def area_primitive(r):
    """a(r) = r^2/(1+2r^2), the boundary primitive of the area density."""
    r = np.asarray(r, dtype=float)
    return r * r / (1.0 + 2.0 * r * r)


def drift_factor(r):
    """h(r) = (1-4r^2)/(1+2r^2); the non-curvature part of H is h(r) dphi."""
    r = np.asarray(r, dtype=float)
    return (1.0 - 4.0 * r * r) / (1.0 + 2.0 * r * r)


def _edge_I(r0: np.ndarray, r1: np.ndarray) -> np.ndarray:
    d = 1.0 + 2.0 * r0 * r1
    u = math.sqrt(2.0) * (r1 - r0) / d
    u = np.asarray(u)
    s = u * u
    small = s < 1e-12
    # atan(u)/u by series below the rounding floor of the direct quotient
    series = 1.0 - s / 3.0 + s * s / 5.0 - s * s * s / 7.0
    safe = np.where(small, 1.0, u)
    direct = np.arctan(safe) / safe
    return np.where(small, series, direct) / d


def _wrapped_dphi(z0: np.ndarray, z1: np.ndarray) -> np.ndarray:
    return np.angle(z1 / z0)


def edge_areas(z: np.ndarray, closed: bool = True) -> np.ndarray:
    """Symplectic area swept by origin-pie-slices of each edge."""
    z0 = z
    z1 = np.roll(z, -1) if closed else z[1:]
    if not closed:
        z0 = z[:-1]
    r0 = np.abs(z0)
    r1 = np.abs(z1)
    dphi = _wrapped_dphi(z0, z1)
    return 0.5 * dphi * (1.0 - _edge_I(r0, r1))


def edge_drifts(z: np.ndarray, closed: bool = True) -> np.ndarray:
    """Per-edge integral of h(r) dphi (the drift part of H)."""
    z0 = z
    z1 = np.roll(z, -1) if closed else z[1:]
    if not closed:
        z0 = z[:-1]
    r0 = np.abs(z0)
    r1 = np.abs(z1)
    dphi = _wrapped_dphi(z0, z1)
    return dphi * (-2.0 + 3.0 * _edge_I(r0, r1))


def polyline_area(z: np.ndarray, closed: bool = True) -> float:
    return float(np.sum(edge_areas(z, closed)))


def exterior_angles(z: np.ndarray, closed: bool = True) -> np.ndarray:
    """Turning angle at each vertex (interior vertices only when open)."""
    if closed:
        e = np.roll(z, -1) - z
        e_prev = np.roll(e, 1)
    else:
        e = z[1:] - z[:-1]
        e_prev = e[:-1]
        e = e[1:]
    if np.any(np.abs(e) == 0.0) or np.any(np.abs(e_prev) == 0.0):
        raise GeometryError("degenerate edge in turning computation")
    return np.angle(e / e_prev)


def total_turning(z: np.ndarray, closed: bool = True) -> float:
    return float(np.sum(exterior_angles(z, closed)))


# ---------------------------------------------------------------------------
# region boundary pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveArc:
    """Contiguous vertex range [start, stop] of one component, walked forward.

    Fractional endpoints select points part-way along an edge (as returned by
    cone crossing queries). reverse=True traverses the same arc backward.
    """

    component: int = 0
    start: float = 0.0
    stop: float = 0.0
    reverse: bool = False


@dataclass(frozen=True)
class ConeRay:
    """Radial segment at a fixed angle; contributes exactly zero area/drift."""

    angle: float
    r_from: float
    r_to: float


@dataclass(frozen=True)
class CircleArc:
    """Arc of an origin-centered circle from phi_from to phi_to (signed)."""

    radius: float
    phi_from: float
    phi_to: float


@dataclass(frozen=True)
class RegionSpec:
    """Oriented closed boundary loop; counterclockwise gives positive area."""

    boundary: tuple
    counterclockwise: bool = True
    curve: ProfileCurve | None = None

    def validate(self) -> None:
        if not self.boundary:
            return
        ends = []
        for piece in self.boundary:
            a, b = _piece_endpoints(piece, self.curve)
            ends.append((a, b))
        scale = max(1.0, max(max(abs(a), abs(b)) for a, b in ends))
        for i, (_, b) in enumerate(ends):
            a_next = ends[(i + 1) % len(ends)][0]
            if abs(b - a_next) > CLOSURE_TOL * scale:
                raise GeometryError(
                    f"region-malformed: piece {i} ends {b:.3e}, next starts "
                    f"{a_next:.3e}")


def _point_on_component(curve: ProfileCurve, component: int, t: float) -> complex:
    z = curve.components[component]
    n = z.size
    i = int(math.floor(t)) % n
    frac = t - math.floor(t)
    return z[i] + frac * (z[(i + 1) % n] - z[i])


def resolve_arc(curve: ProfileCurve, arc: CurveArc) -> np.ndarray:
    """Vertex chain of the arc, including fractional endpoints."""
    if curve is None:
        raise GeometryError("curve arc requires a curve reference")
    if not 0 <= arc.component < len(curve.components):
        raise GeometryError("invalid-arc: no such component")
    z = curve.components[arc.component]
    n = z.size
    t0 = arc.start % n
    t1 = arc.stop % n
    span = (t1 - t0) % n
    if span == 0.0 and arc.start != arc.stop:
        span = float(n)  # full loop requested via start == stop mod n
    pts = [_point_on_component(curve, arc.component, t0)]
    # integer vertices strictly inside (t0, t0 + span)
    k = int(math.floor(t0)) + 1
    while k - t0 < span:
        pts.append(z[k % n])
        k += 1
    end = _point_on_component(curve, arc.component, t1)
    if abs(end - pts[-1]) > 0.0:
        pts.append(end)
    out = np.asarray(pts, dtype=complex)
    if arc.reverse:
        out = out[::-1]
    return out


def _piece_endpoints(piece, curve: ProfileCurve | None):
    if isinstance(piece, CurveArc):
        z = resolve_arc(curve, piece)
        return complex(z[0]), complex(z[-1])
    if isinstance(piece, ConeRay):
        u = complex(math.cos(piece.angle), math.sin(piece.angle))
        return piece.r_from * u, piece.r_to * u
    if isinstance(piece, CircleArc):
        if piece.radius <= 0.0:
            raise GeometryError("degenerate-region: circle arc of radius <= 0")
        return (piece.radius * complex(math.cos(piece.phi_from), math.sin(piece.phi_from)),
                piece.radius * complex(math.cos(piece.phi_to), math.sin(piece.phi_to)))
    raise GeometryError(f"unknown boundary piece {piece!r}")


def _piece_area(piece, curve: ProfileCurve | None) -> float:
    if isinstance(piece, CurveArc):
        z = resolve_arc(curve, piece)
        if z.size < 2:
            return 0.0
        _check_origin_clearance(z)
        return polyline_area(z, closed=False)
    if isinstance(piece, ConeRay):
        return 0.0
    if isinstance(piece, CircleArc):
        a = float(area_primitive(piece.radius))
        return a * (piece.phi_to - piece.phi_from)
    raise GeometryError(f"unknown boundary piece {piece!r}")


def _check_origin_clearance(z: np.ndarray) -> None:
    a = z[:-1]
    e = z[1:] - a
    L2 = np.abs(e) ** 2
    t = np.clip(-np.real(np.conj(e) * a) / np.where(L2 == 0.0, 1.0, L2), 0.0, 1.0)
    d = np.abs(a + t * e)
    if np.min(d) < 1e-12:
        raise GeometryError("degenerate-region: boundary passes through origin")


def symplectic_area(region: RegionSpec) -> float:
    """Integral of the reduced area form over the region, via its boundary.

    Counterclockwise boundary loops give positive area; reversing the loop
    negates the result exactly. An empty boundary has area 0.
    """
    if not region.boundary:
        return 0.0
    region.validate()
    return float(sum(_piece_area(p, region.curve) for p in region.boundary))


# ---------------------------------------------------------------------------
# mean curvature integral
# ---------------------------------------------------------------------------


def mean_curvature_integral(curve: ProfileCurve, arc: CurveArc | None = None,
                            component: int = 0) -> float:
    """Integral of the mean curvature 1-form along a curve arc.

    The discrete form sums exterior turning angles at interior vertices plus
    the closed-form drift integral h(r) dphi on each edge. For a full closed
    component the turning sum is 2 pi times the turning number.
    """
    if arc is None:
        if not 0 <= component < len(curve.components):
            raise GeometryError("invalid-arc: no such component")
        z = curve.components[component]
        return float(np.sum(exterior_angles(z, closed=True))
                     + np.sum(edge_drifts(z, closed=True)))
    z = resolve_arc(curve, arc)
    if z.size < 2:
        return 0.0
    turning = float(np.sum(exterior_angles(z, closed=False))) if z.size > 2 else 0.0
    return turning + float(np.sum(edge_drifts(z, closed=False)))


# ---------------------------------------------------------------------------
# Maslov bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaslovData:
    """Decomposition of the (real) Maslov number of a disc or polygon."""

    topological_part: int
    corner_part: float
    origin_part: float

    @property
    def total(self) -> float:
        return self.topological_part + self.corner_part + self.origin_part


def maslov_disc(curve: ProfileCurve, component: int = 0) -> int:
    """Maslov index of the disc bounded by one component: 4 if the component
    winds once about the origin, 2 if it does not wind at all."""
    from .curves import component_winding
    if not 0 <= component < len(curve.components):
        raise GeometryError("invalid-arc: no such component")
    w = component_winding(curve.components[component])
    if abs(w) == 1:
        return 4
    if w == 0:
        return 2
    raise GeometryError(f"unsupported topology: winding {w}")


def maslov_polygon(xi: float, psi: float) -> float:
    """Real Maslov number of the origin-vertex triangle with corner turning
    xi at both curve-cone vertices and opening psi at the origin."""
    return maslov_polygon_data(xi, psi).total


def maslov_polygon_data(xi: float, psi: float) -> MaslovData:
    if not (0.0 < xi <= math.pi):
        raise GeometryError("corner turning angle must lie in (0, pi]")
    if not (0.0 < psi < math.pi):
        raise GeometryError("opening angle must lie in (0, pi)")
    return MaslovData(topological_part=2,
                      corner_part=-(2.0 / math.pi) * xi,
                      origin_part=-(math.pi - 2.0 * psi) / math.pi)


# ---------------------------------------------------------------------------
# convenience wrappers
# ---------------------------------------------------------------------------


def component_area(curve: ProfileCurve, component: int = 0) -> float:
    """Signed symplectic area enclosed by one closed component."""
    return polyline_area(curve.components[component], closed=True)


def enclosed_area(curve: ProfileCurve) -> float:
    """Signed symplectic area summed over all components."""
    return float(sum(component_area(curve, i)
                     for i in range(len(curve.components))))


__all__ = [
    "CurveArc", "ConeRay", "CircleArc", "RegionSpec", "MaslovData",
    "symplectic_area", "mean_curvature_integral",
    "maslov_disc", "maslov_polygon", "maslov_polygon_data",
    "area_primitive", "drift_factor",
    "edge_areas", "edge_drifts", "polyline_area",
    "exterior_angles", "total_turning",
    "resolve_arc", "component_area", "enclosed_area",
]
