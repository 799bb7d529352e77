"""Conservation-law diagnostics for profile curves and flow trajectories.

Every closed component satisfies 6 area - pi mu + integral(H) = 0 with mu the
disc Maslov index; triangle patches cut off by a tangent cone satisfy the same
identity with the polygon Maslov number. These residuals are the primary
correctness monitors of the flow: they vanish identically in the continuum and
telescope to rounding error in the discretization used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import (
    CHEKANOV,
    CLIFFORD,
    MODE_CHEKANOV_UD,
    GeometryError,
    PlanarPoint,
    ProfileCurve,
)
from .regions import (
    ConeRay,
    CurveArc,
    RegionSpec,
    component_area,
    maslov_disc,
    maslov_polygon,
    mean_curvature_integral,
    symplectic_area,
)

MONOTONE_AREA_CLIFFORD = 2.0 * math.pi / 3.0
MONOTONE_AREA_CHEKANOV = math.pi / 3.0


# ---------------------------------------------------------------------------
# conservation residuals
# ---------------------------------------------------------------------------


def cg_residual(curve: ProfileCurve, component: int = 0) -> float:
    """6 area - pi mu + integral(H) over one closed component."""
    area = component_area(curve, component)
    mu = maslov_disc(curve, component)
    h = mean_curvature_integral(curve, component=component)
    return 6.0 * area - math.pi * mu + h


@dataclass(frozen=True)
class TrianglePatch:
    """Cone-and-curve triangle at an opening tangency.

    opening is the cone angle psi, turning the corner angle xi measured
    between the incoming cone ray and the outgoing discrete tangent, arc the
    curve range joining p_minus to p_plus on the origin side.
    """

    opening: float
    p_plus: PlanarPoint
    p_minus: PlanarPoint
    arc: CurveArc
    area: float
    turning: float


def cg_polygon_residual(patch: TrianglePatch, curve: ProfileCurve) -> float:
    """6 area - pi mu_poly + integral_arc(H) for a triangle patch."""
    mu = maslov_polygon(patch.turning, patch.opening)
    h = mean_curvature_integral(curve, arc=patch.arc)
    return 6.0 * patch.area - math.pi * mu + h


# ---------------------------------------------------------------------------
# monotonicity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneDefect:
    symmetry_class: str
    disc_area: float
    target: float
    defect: float


def monotone_target(symmetry_class: str) -> float:
    if symmetry_class == CLIFFORD:
        return MONOTONE_AREA_CLIFFORD
    if symmetry_class == CHEKANOV:
        return MONOTONE_AREA_CHEKANOV
    raise GeometryError(f"unknown symmetry class {symmetry_class!r}")


def chekanov_disc_component(curve: ProfileCurve) -> int:
    """Index of the distinguished disc component of a two-component curve:
    the one on the positive side of the pair's symmetry axis."""
    if len(curve.components) != 2:
        raise GeometryError("expected a two-component curve")
    if curve.mode == MODE_CHEKANOV_UD:
        key = [float(np.mean(np.imag(z))) for z in curve.components]
    else:
        key = [float(np.mean(np.real(z))) for z in curve.components]
    return int(np.argmax(key))


def disc_area(curve: ProfileCurve) -> float:
    """Area of the distinguished Maslov-2 or Maslov-4 disc of the curve."""
    if curve.symmetry_class == CLIFFORD:
        return component_area(curve, 0)
    return component_area(curve, chekanov_disc_component(curve))


def monotone_defect(curve: ProfileCurve) -> MonotoneDefect:
    target = monotone_target(curve.symmetry_class)
    area = disc_area(curve)
    return MonotoneDefect(curve.symmetry_class, area, target, area - target)


# ---------------------------------------------------------------------------
# opening angle and triangle patches
# ---------------------------------------------------------------------------


def _axis_rotation(axis: str) -> complex:
    if axis == "real":
        return 1.0 + 0.0j
    if axis == "imaginary":
        return complex(math.cos(-math.pi / 2), math.sin(-math.pi / 2))
    raise GeometryError(f"unknown axis {axis!r}")


def _probe_component(curve: ProfileCurve, axis: str) -> int:
    if len(curve.components) == 1:
        return 0
    if axis == "imaginary":
        key = [float(np.mean(np.imag(z))) for z in curve.components]
    else:
        key = [float(np.mean(np.real(z))) for z in curve.components]
    return int(np.argmax(key))


def max_opening_angle(curve: ProfileCurve, axis: str = "real"):
    """Opening angle of the maximal tangent cone about an axis.

    Returns (psi, p_plus) where psi = 2 max |arg z| over the vertices of the
    component on the positive side of the axis, and p_plus attains the max on
    the positive-angle side. The component must not cross the orthogonal axis,
    otherwise no tangent cone of opening < pi exists.
    """
    idx = _probe_component(curve, axis)
    z = curve.components[idx] * _axis_rotation(axis)
    if np.any(np.real(z) <= 0.0):
        raise GeometryError(
            "invalid-class: component crosses the orthogonal axis, "
            "no tangent cone of opening below pi")
    phi = np.angle(z)
    j = int(np.argmax(np.abs(phi)))
    psi = 2.0 * float(abs(phi[j]))
    if phi[j] < 0.0:
        # report the attaining point in the upper half by symmetry
        cand = np.where(phi >= 0.0, phi, -np.inf)
        j = int(np.argmax(cand))
    p = curve.components[idx][j]
    return psi, PlanarPoint(float(np.real(p)), float(np.imag(p)))


def _measured_corner(ray_angle: float, chord: complex) -> float:
    """Corner turning between the outward ray direction and a chord."""
    ray = complex(math.cos(ray_angle), math.sin(ray_angle))
    ang = abs(float(np.angle(chord / ray)))
    return min(max(ang, 1e-15), math.pi)


def triangle_patch(curve: ProfileCurve, axis: str = "real") -> TrianglePatch:
    """Triangle cut off by the maximal tangent cone, bounded on the far side
    by the origin-facing curve arc between the two tangency vertices."""
    psi, _p = max_opening_angle(curve, axis)
    idx = _probe_component(curve, axis)
    rot = _axis_rotation(axis)
    z = curve.components[idx] * rot
    phi = np.angle(z)
    j_plus = int(np.argmax(phi))
    j_minus = int(np.argmin(phi))
    n = z.size

    def arc_min_radius(a: int, b: int) -> float:
        span = (b - a) % n
        idxs = (a + np.arange(span + 1)) % n
        return float(np.min(np.abs(z[idxs])))

    # origin-facing range between the tangency vertices
    if arc_min_radius(j_plus, j_minus) <= arc_min_radius(j_minus, j_plus):
        arc = CurveArc(idx, float(j_plus), float(j_minus), reverse=True)
        first = z[j_minus + 1 if j_minus + 1 < n else 0]
        chord_out = z[j_plus] - z[(j_plus + 1) % n]
    else:
        arc = CurveArc(idx, float(j_minus), float(j_plus), reverse=False)
        first = z[(j_minus + 1) % n]
        chord_out = z[j_plus] - z[j_plus - 1]
    # corner at p_minus: incoming outward ray, outgoing first chord of the arc
    xi_minus = _measured_corner(float(phi[j_minus]), first - z[j_minus])
    xi_plus = _measured_corner(float(phi[j_plus]), -chord_out)
    xi = 0.5 * (xi_minus + xi_plus)

    region = RegionSpec(
        boundary=(
            ConeRay(float(np.angle(curve.components[idx][j_minus])), 0.0,
                    float(np.abs(z[j_minus]))),
            arc,
            ConeRay(float(np.angle(curve.components[idx][j_plus])),
                    float(np.abs(z[j_plus])), 0.0),
        ),
        curve=curve,
    )
    area = symplectic_area(region)
    p_plus = curve.components[idx][j_plus]
    p_minus = curve.components[idx][j_minus]
    return TrianglePatch(
        opening=psi,
        p_plus=PlanarPoint(float(np.real(p_plus)), float(np.imag(p_plus))),
        p_minus=PlanarPoint(float(np.real(p_minus)), float(np.imag(p_minus))),
        arc=arc,
        area=area,
        turning=xi,
    )


# ---------------------------------------------------------------------------
# trajectory monitors
# ---------------------------------------------------------------------------


def area_rate_check(trajectory, disc: str = "m4") -> float:
    """Max deviation of the centered-difference disc area rate from
    6 area - pi mu along a sampled trajectory."""
    if disc not in ("m2", "m4"):
        raise GeometryError("disc selection must be 'm2' or 'm4'")
    mu = 2.0 if disc == "m2" else 4.0
    ts = np.array([s.t for s in trajectory])
    areas = np.array([s.area_m2 if disc == "m2" else s.area_m4
                      for s in trajectory])
    good = np.isfinite(areas)
    ts, areas = ts[good], areas[good]
    if ts.size < 3:
        return 0.0
    rate = (areas[2:] - areas[:-2]) / (ts[2:] - ts[:-2])
    expected = 6.0 * areas[1:-1] - math.pi * mu
    return float(np.max(np.abs(rate - expected)))


def triangle_monitor(trajectory):
    """Per-sample (t, triangle area, bound violation) for runs recording the
    opening monitor. The admissible rate is 6 A + (pi - 2 psi) + 1e-3."""
    pts = [(s.t, s.triangle_area, s.psi_max) for s in trajectory
           if math.isfinite(getattr(s, "triangle_area", math.nan))]
    out = []
    for i, (t, a, psi) in enumerate(pts):
        violated = False
        if 0 < i < len(pts) - 1:
            t0, a0, _ = pts[i - 1]
            t1, a1, _ = pts[i + 1]
            if t1 > t0:
                rate = (a1 - a0) / (t1 - t0)
                violated = rate > 6.0 * a + (math.pi - 2.0 * psi) + 1e-3
        out.append((t, a, violated))
    return out


def hausdorff_to_unit_circle(curve: ProfileCurve) -> float:
    """Hausdorff distance between the curve and the unit circle."""
    d_curve = 0.0
    for z in curve.components:
        d_curve = max(d_curve, float(np.max(np.abs(np.abs(z) - 1.0))))
    # distance from circle samples to the curve polylines
    m = max(512, 2 * curve.vertex_count())
    theta = 2.0 * math.pi * np.arange(m) / m
    probes = np.exp(1j * theta)
    best = np.full(m, np.inf)
    for z in curve.components:
        a = z
        b = np.roll(z, -1)
        e = b - a
        L2 = np.abs(e) ** 2
        L2 = np.where(L2 == 0.0, 1.0, L2)
        # chunk over probes to bound memory
        for lo in range(0, m, 512):
            p = probes[lo:lo + 512, None]
            t = np.clip(np.real((p - a[None, :]) * np.conj(e[None, :])) / L2[None, :], 0.0, 1.0)
            d = np.abs(p - (a[None, :] + t * e[None, :]))
            best[lo:lo + 512] = np.minimum(best[lo:lo + 512], d.min(axis=1))
    d_circle = float(best.max())
    return max(d_curve, d_circle)


__all__ = [
    "MonotoneDefect", "TrianglePatch",
    "cg_residual", "cg_polygon_residual",
    "monotone_defect", "monotone_target", "disc_area",
    "chekanov_disc_component",
    "max_opening_angle", "triangle_patch",
    "area_rate_check", "triangle_monitor",
    "hausdorff_to_unit_circle",
    "MONOTONE_AREA_CLIFFORD", "MONOTONE_AREA_CHEKANOV",
]
