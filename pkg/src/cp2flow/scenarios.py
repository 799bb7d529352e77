"""Named flow scenarios: initial-data generators, reproducible runs, timing.

A scenario couples a generator for the starting curve with flow settings and
the ordered list of events the run is expected to produce. run_scenario
executes the flow (with surgery unless disabled), checks the observed event
sequence against the expected one, and writes an artifact bundle: trajectory
CSV, curve snapshots, SVG frames, a surgery log, and a manifest. Identical
scenario inputs produce byte-identical CSV/SVG/JSON artifacts; only the wall
clock entries of the manifest vary between runs.

Generator self-checks run before every flow, so a run that starts is a run
whose initial data demonstrably satisfies the scenario's stated geometry
(monotone defect, crossing counts, pocket and triangle areas for the
two-surgery construction). Infeasible targets raise GeometryError instead of
silently producing a different curve.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize

from .curves import (
    CHEKANOV,
    CLIFFORD,
    MODE_CHEKANOV_LR,
    MODE_CHEKANOV_UD,
    MODE_CLIFFORD,
    GeometryError,
    ProfileCurve,
    _segments_cross,
    circle_curve,
    cone_intersections,
    curve_to_json,
    winding_number,
)
from .diagnostics import disc_area, monotone_defect
from .flow import (
    CONE_HALF_PI,
    CONE_TWO_THIRDS,
    CONVERGED,
    CSV_HEADER,
    GRAPHICAL_ATTAINED,
    HALTED,
    SCALE_PROBE_HIT,
    SINGULARITY_DETECTED,
    SURGERY_PERFORMED,
    FlowConfig,
    FlowState,
    run,
    sample_csv_row,
)
from .minimal import find_closed, first_integral_residual, synthesize_profile
from .regions import ConeRay, CurveArc, RegionSpec, symplectic_area
from .surgery import flow_with_surgery
from .svg import render_svg, save_svg

MONOTONE_AREA_CLIFFORD = 2.0 * math.pi / 3.0
MONOTONE_AREA_CHEKANOV = math.pi / 3.0

_GL_NODES, _GL_WEIGHTS = leggauss(96)


# ---------------------------------------------------------------------------
# symplectic discs and barrier circles
# ---------------------------------------------------------------------------


def disc_area_euclidean_circle(center: complex, radius: float) -> float:
    """Symplectic area of the round Euclidean disc |z - center| <= radius.

    The area density 2 (1 + 2 r^2)^-2 is radial (the boundary primitive is
    r^2/(1 + 2 r^2)), so the double integral reduces to a single integral
    over the radial coordinate; the sine substitution removes the
    square-root behaviour at the tangent radii.
    """
    if radius <= 0.0:
        raise GeometryError("circle radius must be positive")
    c = abs(center)
    if c < 1e-15:
        r2 = radius * radius
        return 2.0 * math.pi * r2 / (1.0 + 2.0 * r2)
    u = 0.5 * math.pi * _GL_NODES
    r = c + radius * np.sin(u)
    r = np.clip(r, 0.0, None)
    cos_u = np.cos(u)
    # wedge angle of the circle r = const inside the disc
    arg = (r * r + c * c - radius * radius) / np.where(r > 0, 2.0 * r * c, 1.0)
    wedge = np.where(r > 0, 2.0 * np.arccos(np.clip(arg, -1.0, 1.0)),
                     2.0 * math.pi)
    density = 2.0 / (1.0 + 2.0 * r * r) ** 2
    integrand = density * r * wedge * radius * cos_u * (0.5 * math.pi)
    return float(np.dot(_GL_WEIGHTS, integrand))


def circle_for_area(center: complex, area: float, r_max: float = 50.0) -> float:
    """Euclidean radius of the circle about center with given symplectic area."""
    if not 0.0 < area:
        raise GeometryError("target area must be positive")
    hi = min(r_max, abs(center) + 10.0) if abs(center) > 0 else r_max
    if disc_area_euclidean_circle(center, hi) < area:
        raise GeometryError(
            f"infeasible: no circle about {center} holds area {area:.6g}")
    return float(brentq(
        lambda rho: disc_area_euclidean_circle(center, rho) - area,
        1e-9, hi, xtol=1e-14, rtol=8.9e-16))


def barrier_radius(area: float) -> float:
    """Euclidean radius floor R(A) = sqrt(A / (pi - 2 A)) for a barrier circle
    of symplectic area A; R(pi/18) = 1/4."""
    if not 0.0 < area < 0.5 * math.pi:
        raise GeometryError("barrier area must lie in (0, pi/2)")
    return math.sqrt(area / (math.pi - 2.0 * area))


def shrink_time(area: float, maslov: int) -> float:
    """Collapse time of a shrinking disc of the given symplectic area.

    The disc area obeys d/dt A = 6 A - pi mu, so a Maslov-4 disc of area B
    vanishes at (1/6) log(2 pi / (2 pi - 3 B)) and a Maslov-2 disc of area A
    at (1/6) log(pi / (pi - 3 A)). Monotone or super-monotone areas never
    vanish; they raise instead.
    """
    if maslov == 4:
        residue = 2.0 * math.pi - 3.0 * area
        if residue <= 1e-12:
            raise GeometryError(
                "infinite-time: a monotone Maslov-4 disc does not vanish")
        return math.log(2.0 * math.pi / residue) / 6.0
    if maslov == 2:
        residue = math.pi - 3.0 * area
        if residue <= 1e-12:
            raise GeometryError(
                "infinite-time: a monotone Maslov-2 disc does not vanish")
        return math.log(math.pi / residue) / 6.0
    raise GeometryError("maslov must be 2 or 4")


def patch_deadline(area: float, opening: float) -> float:
    """Latest survival time of an origin-cornered tangency patch.

    A patch bounded by two rays with opening angle psi < pi/2 and a curve
    arc tangent to them obeys d/dt A <= 6 A - (pi - 2 psi), so its area
    must vanish by (1/6) log(K / (K - A)) with K = (pi - 2 psi) / 6. At
    opening pi/3 and area pi/216 this is (1/6) log(12/11); smaller openings
    force an earlier deadline.
    """
    if not 0.0 < opening < 0.5 * math.pi:
        raise GeometryError("patch opening must lie in (0, pi/2)")
    if area <= 0.0:
        raise GeometryError("patch area must be positive")
    cap = (math.pi - 2.0 * opening) / 6.0
    if area >= cap:
        raise GeometryError("infinite-time: patch area exceeds its rate cap")
    return math.log(cap / (cap - area)) / 6.0


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _even_count(n: int) -> int:
    n = int(n)
    if n < 16:
        raise GeometryError("vertex count must be at least 16")
    return n + (n % 2)


def _mirrored_radial_curve(r_of_phi, n: int, scale: float) -> ProfileCurve:
    """Clifford-class curve r(phi) e^{i phi} with the symmetries enforced
    bitwise: vertex j <-> conjugate vertex n-j, antipode at offset n/2."""
    n = _even_count(n)
    if n % 4:
        n += 2
    m = n // 2
    j = np.arange(m // 2 + 1)
    phi = 2.0 * math.pi * j / n
    r = scale * np.asarray([r_of_phi(p) for p in phi], dtype=float)
    if np.any(r <= 0.0):
        raise GeometryError("radial profile must stay positive")
    quarter = r * np.exp(1j * phi)
    quarter[0] = complex(r[0], 0.0)
    quarter[-1] = complex(0.0, r[-1])
    # quarter covers [0, pi/2]; reflect across the imaginary axis, then negate
    upper = np.concatenate([quarter[:-1], -np.conj(quarter[:0:-1])])
    z = np.concatenate([upper[:m], -upper[:m]])
    return ProfileCurve(components=(z,), symmetry_class=CLIFFORD,
                        mode=MODE_CLIFFORD)


def round_circle(radius: float, n: int = 1024) -> ProfileCurve:
    """Origin-centered circle, vertex 0 anchored on the positive real axis."""
    return circle_curve(radius, _even_count(n))


def ellipse(a: float, b: float, n: int = 1024) -> ProfileCurve:
    """Axis-aligned ellipse about the origin."""
    if a <= 0.0 or b <= 0.0:
        raise GeometryError("ellipse semi-axes must be positive")
    n = _even_count(n)
    phi = 2.0 * math.pi * np.arange(n) / n
    z = a * np.cos(phi) + 1j * b * np.sin(phi)
    return ProfileCurve(components=(z,), symmetry_class=CLIFFORD,
                        mode=MODE_CLIFFORD)


def chekanov_pair(center: float = 1.25, radius: float | None = None,
                  n: int = 1024, mode: str = MODE_CHEKANOV_LR) -> ProfileCurve:
    """Pair of circles centered at +-center; radius None tunes the discrete
    disc area to the monotone value pi/3."""
    if center <= 0.0:
        raise GeometryError("pair center must be positive")
    if mode not in (MODE_CHEKANOV_LR, MODE_CHEKANOV_UD):
        raise GeometryError("mode must be chekanov_lr or chekanov_ud")
    n = _even_count(n)
    phi = 2.0 * math.pi * np.arange(n) / n

    def pair_for(rho: float) -> ProfileCurve:
        disc = center + rho * np.exp(1j * phi)
        comps = (disc, -disc)
        if mode == MODE_CHEKANOV_UD:
            comps = (1j * disc, -1j * disc)
        return ProfileCurve(components=comps, symmetry_class=CHEKANOV,
                            mode=mode)

    if radius is None:
        hi = center * (1.0 - 1e-6)
        if disc_area(pair_for(hi)) < MONOTONE_AREA_CHEKANOV:
            raise GeometryError(
                f"infeasible: no monotone pair at center {center:.6g}")
        radius = float(brentq(
            lambda rho: disc_area(pair_for(rho)) - MONOTONE_AREA_CHEKANOV,
            1e-3 * center, hi, xtol=1e-15, rtol=8.9e-16))
    if not 0.0 < radius < center:
        raise GeometryError("pair radius must lie in (0, center)")
    return pair_for(float(radius))


_DEFAULT_MODES = {2: 0.08, 4: 0.05, 6: 0.02}


def perturbed_clifford(amplitudes: dict | None = None,
                       seed: int | None = None,
                       n: int = 1024) -> ProfileCurve:
    """Monotone Clifford-class star curve r(phi) = s (1 + sum a_k cos k phi).

    Only even modes preserve the antipodal symmetry; odd mode numbers are
    rejected. The overall scale s is tuned so the enclosed symplectic area is
    exactly the monotone value 2 pi / 3 on the discrete curve. With a seed,
    small random even-mode amplitudes are drawn instead of the defaults.
    """
    if amplitudes is None:
        if seed is None:
            amplitudes = dict(_DEFAULT_MODES)
        else:
            rng = np.random.default_rng(int(seed))
            amplitudes = {
                2: float(rng.uniform(0.03, 0.09)) * (1 if rng.random() < 0.5 else -1),
                4: float(rng.uniform(0.02, 0.06)) * (1 if rng.random() < 0.5 else -1),
                6: float(rng.uniform(0.005, 0.02)) * (1 if rng.random() < 0.5 else -1),
            }
    modes = {}
    for k, a in amplitudes.items():
        k = int(k)
        if k <= 0 or k % 2:
            raise GeometryError("perturbation modes must be positive even integers")
        modes[k] = float(a)
    wiggle = sum(abs(k * a) for k, a in modes.items())
    if wiggle >= 0.9:
        raise GeometryError("perturbation too large to stay graphical")

    def r_of_phi(phi: float) -> float:
        return 1.0 + sum(a * math.cos(k * phi) for k, a in modes.items())

    def defect_at(s: float) -> float:
        return monotone_defect(_mirrored_radial_curve(r_of_phi, n, s)).defect

    lo, hi = 0.5, 2.0
    if defect_at(lo) > 0.0 or defect_at(hi) < 0.0:
        raise GeometryError("infeasible: monotone scale not bracketed")
    s = float(brentq(defect_at, lo, hi, xtol=1e-15, rtol=8.9e-16))
    return _mirrored_radial_curve(r_of_phi, n, s)


def minimal_profile_curve(C: float | None = None, m: int | None = None,
                          k: int | None = None,
                          vertices_per_period: int = 8192) -> ProfileCurve:
    """Closed immersed profile of the minimal family, by C or by (m, k)."""
    if C is not None:
        return synthesize_profile(float(C), vertices_per_period)
    if m is None or k is None:
        raise GeometryError("minimal_profile needs either C or both m and k")
    sol = find_closed(int(m), int(k), vertices_per_period=vertices_per_period)
    if sol is None:
        raise GeometryError(f"no closed profile found for (m, k) = ({m}, {k})")
    return sol.profile


# ---------------------------------------------------------------------------
# the two-surgery construction
# ---------------------------------------------------------------------------

TRIANGLE_TARGET = math.pi / 216.0
POCKET_TARGET = math.pi / 18.0

_TWO_SURGERY_SHAPE = {
    # knots of the quadrant profile in (phi, log r): finger tip on the real
    # axis, flank tangency to the ray phi_tangent, head excursion past the
    # two-thirds cone at roughly unit radius, angular retreat back below the
    # quarter-pi cone, and exit on the imaginary axis.  The head/retreat
    # band stays near r = 1 while the exit leg climbs to top_r, so the
    # return path never pinches against the rising leg.
    "phi_tangent": 0.22,
    "r_tangent": 0.40,
    "head_phi": 1.16,
    "head_r": 1.05,
    "dip_phi": 0.55,
    "dip_r": 1.08,
    "top_r": 1.95,
    "n_quarter": 512,
}
_LEG_FRACTIONS = (0.10, 0.25, 0.18, 0.47)


def _hermite_2d(p0, d0, p1, d1, count: int, mags=None) -> np.ndarray:
    """count+1 planar samples of the cubic with unit end directions
    (endpoints included).

    Tangent magnitudes: half-chord for parallel end directions; for
    perpendicular ones (quarter-turn corners) pi/2 times the chord component
    along each direction, which matches a quarter ellipse and keeps both
    coordinates monotone (no overshoot past the end ordinates).
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    chord = p1 - p0
    if mags is None:
        if abs(float(d0 @ d1)) < 0.5:
            mags = (0.5 * math.pi * abs(float(chord @ d0)),
                    0.5 * math.pi * abs(float(chord @ d1)))
        else:
            mags = (0.5 * float(np.hypot(*chord)),) * 2
    m0 = mags[0] * d0
    m1 = mags[1] * d1
    s = np.linspace(0.0, 1.0, count + 1)[:, None]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1


def _two_surgery_quarter(shape: dict, r_tip: float, scale: float):
    """Quadrant-I vertex chain from the finger tip to the top exit, plus the
    index of the flank tangency vertex."""
    knots = [
        ((0.0, math.log(r_tip)), (1.0, 0.0)),
        ((shape["phi_tangent"], math.log(shape["r_tangent"])), (0.0, 1.0)),
        ((shape["head_phi"], math.log(shape["head_r"])), (0.0, 1.0)),
        ((shape["dip_phi"], math.log(shape["dip_r"])), (0.0, 1.0)),
        ((0.5 * math.pi, math.log(shape["top_r"])), (1.0, 0.0)),
    ]
    n_quarter = int(shape["n_quarter"])
    counts = [max(16, round(f * n_quarter)) for f in _LEG_FRACTIONS]
    counts[-1] += n_quarter - sum(counts)
    pieces = []
    for i in range(4):
        (p0, d0), (p1, d1) = knots[i], knots[i + 1]
        leg = _hermite_2d(p0, d0, p1, d1, counts[i])
        pieces.append(leg if i == 3 else leg[:-1])
    pl = np.concatenate(pieces)
    q = scale * np.exp(pl[:, 1]) * np.exp(1j * pl[:, 0])
    q[0] = complex(scale * r_tip, 0.0)
    q[-1] = complex(0.0, scale * shape["top_r"])
    return q, counts[0]


def _assemble_quarter(q: np.ndarray) -> np.ndarray:
    """Close a quadrant chain (tip on +real axis ... top on +imaginary axis)
    under the conjugation and antipodal symmetries, bitwise exact."""
    m = q.size - 1
    upper = np.concatenate([q[:m], -np.conj(q[m:0:-1])])
    return np.concatenate([upper, -upper])


def _finger_triangle_area(curve: ProfileCurve, i_plus: int) -> float:
    """Symplectic area of the patch between the tangency rays and the finger
    arc through the tip (vertex 0)."""
    z = curve.components[0]
    n = z.size
    i_minus = n - i_plus
    a_plus = float(np.angle(z[i_plus]))
    a_minus = float(np.angle(z[i_minus]))
    region = RegionSpec(
        boundary=(
            ConeRay(a_minus, 0.0, float(abs(z[i_minus]))),
            CurveArc(0, float(i_minus), float(i_plus), reverse=False),
            ConeRay(a_plus, float(abs(z[i_plus])), 0.0),
        ),
        curve=curve,
    )
    return symplectic_area(region)


def _curve_is_embedded(z: np.ndarray) -> bool:
    """Proper-crossing scan over all non-adjacent segment pairs."""
    n = z.size
    a = z
    b = np.roll(z, -1)
    for i in range(n - 2):
        j0, j1 = i + 2, n if i > 0 else n - 1
        if np.any(_segments_cross(a[i], b[i], a[j0:j1], b[j0:j1])):
            return False
    return True


def _distance_to_curve(curve: ProfileCurve, point: complex) -> float:
    best = math.inf
    for z in curve.components:
        a = z
        b = np.roll(z, -1)
        e = b - a
        ee = np.abs(e) ** 2
        t = np.clip(((point - a) * np.conj(e)).real / np.where(ee > 0, ee, 1.0),
                    0.0, 1.0)
        d = np.abs(point - (a + t * e))
        best = min(best, float(np.min(d)))
    return best


def inscribed_barrier(curve: ProfileCurve, area: float,
                      search_center: complex, search_span: float):
    """Largest-clearance barrier circle of the given symplectic area inside
    the curve, searched around search_center.

    Returns (center, radius, clearance). The circle of symplectic area
    `area` about the returned center has Euclidean radius `radius` and the
    nearest curve point at distance `clearance` > radius.
    """

    def margin(xy) -> float:
        c = complex(xy[0], xy[1])
        d = _distance_to_curve(curve, c)
        if d <= 1e-3:
            return -1.0
        try:
            rho = circle_for_area(c, area, r_max=max(d, 1e-2))
        except GeometryError:
            return d - 10.0  # infeasible: still ranks fatter spots higher
        return d - rho

    xs = np.linspace(search_center.real - search_span,
                     search_center.real + search_span, 11)
    ys = np.linspace(search_center.imag - search_span,
                     search_center.imag + search_span, 11)
    best_xy, best_val = None, -math.inf
    for x in xs:
        for y in ys:
            val = margin((x, y))
            if val > best_val:
                best_xy, best_val = (x, y), val
    res = minimize(lambda xy: -margin(xy), np.asarray(best_xy),
                   method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
    c = complex(res.x[0], res.x[1])
    d = _distance_to_curve(curve, c)
    rho = circle_for_area(c, area, r_max=max(d, 1e-2))
    if rho >= d:
        raise GeometryError(
            "infeasible: no inscribed circle of the requested area")
    return c, rho, d


def two_surgery_construction(n_quarter: int | None = None,
                             shape: dict | None = None):
    """Monotone Clifford curve with two antipodal fingers that pinch first.

    The curve crosses the two-thirds cone three times per quadrant; the patch
    between the tangency rays and each finger arc has symplectic area
    pi/216, twelve times smaller than the pi/18 barrier circles inscribed in
    the upper and lower pockets, so both fingers pinch at the origin while
    the pockets survive. Tip depth and overall scale are tuned so the finger
    patch and the total enclosed area hit their targets exactly on the
    discrete curve. Returns (curve, checks).
    """
    shp = dict(_TWO_SURGERY_SHAPE)
    if shape:
        unknown = set(shape) - set(shp)
        if unknown:
            raise GeometryError(
                f"unknown two_surgery shape keys: {sorted(unknown)}")
        shp.update({k: float(v) for k, v in shape.items()})
    if n_quarter is not None:
        shp["n_quarter"] = int(n_quarter)
    r_tan = shp["r_tangent"]

    def build(r_tip: float, scale: float):
        q, i_plus = _two_surgery_quarter(shp, r_tip, scale)
        z = _assemble_quarter(q)
        curve = ProfileCurve(components=(z,), symmetry_class=CLIFFORD,
                             mode=MODE_CLIFFORD)
        return curve, i_plus

    def tip_for_scale(scale: float) -> float:
        def f(r_tip: float) -> float:
            curve, i_plus = build(r_tip, scale)
            return _finger_triangle_area(curve, i_plus) - TRIANGLE_TARGET

        lo, hi = 0.10 * r_tan, 0.92 * r_tan
        if f(lo) > 0.0 or f(hi) < 0.0:
            raise GeometryError(
                "infeasible: finger patch target not bracketed")
        return float(brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16))

    def total_defect(scale: float) -> float:
        curve, _ = build(tip_for_scale(scale), scale)
        return disc_area(curve) - MONOTONE_AREA_CLIFFORD

    lo, hi = 0.85, 1.55
    if total_defect(lo) > 0.0 or total_defect(hi) < 0.0:
        raise GeometryError("infeasible: monotone scale not bracketed")
    scale = float(brentq(total_defect, lo, hi, xtol=1e-13, rtol=8.9e-16))
    r_tip = tip_for_scale(scale)
    curve, i_plus = build(r_tip, scale)

    checks = _two_surgery_checks(curve, i_plus, shp, scale)
    checks["r_tip"] = r_tip * scale
    checks["scale"] = scale
    return curve, checks


def _two_surgery_checks(curve: ProfileCurve, i_plus: int, shp: dict,
                        scale: float) -> dict:
    tri = _finger_triangle_area(curve, i_plus)
    if abs(tri - TRIANGLE_TARGET) > 1e-6:
        raise GeometryError(
            f"self-check failed: finger patch area {tri:.9f} != pi/216")
    defect = monotone_defect(curve).defect
    if abs(defect) > 1e-9:
        raise GeometryError(
            f"self-check failed: monotone defect {defect:.3e}")
    n23 = cone_intersections(curve, CONE_TWO_THIRDS)[0]
    n90 = cone_intersections(curve, CONE_HALF_PI)[0]
    if n23 != 12 or n90 != 12:
        raise GeometryError(
            f"self-check failed: crossing counts ({n23}, {n90}) != (12, 12)")
    if not _curve_is_embedded(curve.components[0]):
        raise GeometryError("self-check failed: curve self-intersects")
    r_floor = barrier_radius(POCKET_TARGET)
    if abs(r_floor - 0.25) > 1e-12:
        raise GeometryError("self-check failed: barrier radius formula")
    hub = 0.9j * scale
    pockets = {}
    for label, guess in (("upper", hub), ("lower", np.conj(hub))):
        c, rho, clear = inscribed_barrier(curve, POCKET_TARGET, complex(guess),
                                          0.35 * scale)
        if rho <= r_floor + 1e-3:
            raise GeometryError(
                f"self-check failed: {label} pocket circle radius {rho:.4f} "
                "does not clear the barrier floor 1/4")
        if winding_number(curve, c) != 1:
            raise GeometryError(
                f"self-check failed: {label} pocket center outside the curve")
        area = disc_area_euclidean_circle(c, rho)
        if abs(area - POCKET_TARGET) > 1e-6:
            raise GeometryError(
                f"self-check failed: {label} pocket circle area {area:.9f}")
        pockets[label] = {"center": [c.real, c.imag], "radius": rho,
                          "clearance": clear, "area": area}
    deadline = shrink_time(POCKET_TARGET, maslov=2)
    return {
        "triangle_area": tri,
        "triangle_deadline": patch_deadline(tri, 2.0 * shp["phi_tangent"]),
        "pocket_deadline": deadline,
        "monotone_defect": defect,
        "crossings_two_thirds": n23,
        "crossings_half_pi": n90,
        "barrier_radius_floor": r_floor,
        "pockets": pockets,
    }


# ---------------------------------------------------------------------------
# scenario specs
# ---------------------------------------------------------------------------


_GENERATOR_PARAMS = {
    "round_circle": {"radius", "n"},
    "ellipse": {"a", "b", "n"},
    "chekanov_pair": {"center", "radius", "n", "mode"},
    "perturbed_clifford": {"amplitudes", "seed", "n"},
    "two_surgery_construction": {"n_quarter", "shape"},
    "minimal_profile": {"C", "m", "k", "vertices_per_period"},
}

_EVENT_KINDS = {SINGULARITY_DETECTED, SCALE_PROBE_HIT, GRAPHICAL_ATTAINED,
                SURGERY_PERFORMED, CONVERGED, HALTED, "ConeCountDropped"}

_SPEC_FIELDS = {"name", "generator", "parameters", "config",
                "expected_events", "surgery", "eps0", "description"}


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete, hashable description of one reproducible run."""

    name: str
    generator: str
    parameters: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    expected_events: tuple = ()
    surgery: bool = True
    eps0: float = 0.1
    description: str = ""

    def validate(self) -> None:
        if self.generator not in _GENERATOR_PARAMS:
            raise GeometryError(f"unknown generator {self.generator!r}")
        allowed = _GENERATOR_PARAMS[self.generator]
        unknown = set(self.parameters) - allowed
        if unknown:
            raise GeometryError(
                f"unknown parameters for {self.generator}: {sorted(unknown)}")
        config_fields = {f.name for f in dataclasses.fields(FlowConfig)}
        unknown = set(self.config) - config_fields
        if unknown:
            raise GeometryError(f"unknown config keys: {sorted(unknown)}")
        for name in self.expected_events:
            if name.rstrip("?") not in _EVENT_KINDS:
                raise GeometryError(f"unknown expected event {name!r}")
        if not 0.0 < self.eps0 < math.pi / 8.0:
            raise GeometryError("eps0 must lie in (0, pi/8)")

    def flow_config(self) -> FlowConfig:
        config = FlowConfig(**self.config)
        config.validate()
        return config

    def canonical(self) -> dict:
        return {
            "name": self.name,
            "generator": self.generator,
            "parameters": self.parameters,
            "config": self.config,
            "expected_events": list(self.expected_events),
            "surgery": self.surgery,
            "eps0": self.eps0,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def scenario_from_dict(data: dict) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise GeometryError("scenario config must be a JSON object")
    unknown = set(data) - _SPEC_FIELDS
    if unknown:
        raise GeometryError(f"unknown scenario keys: {sorted(unknown)}")
    if "name" not in data or "generator" not in data:
        raise GeometryError("scenario config needs 'name' and 'generator'")
    spec = ScenarioSpec(
        name=str(data["name"]),
        generator=str(data["generator"]),
        parameters=dict(data.get("parameters", {})),
        config=dict(data.get("config", {})),
        expected_events=tuple(data.get("expected_events", ())),
        surgery=bool(data.get("surgery", True)),
        eps0=float(data.get("eps0", 0.1)),
        description=str(data.get("description", "")),
    )
    spec.validate()
    spec.flow_config()
    return spec


def scenario_from_json(text: str) -> ScenarioSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryError(f"invalid scenario JSON: {exc}") from exc
    return scenario_from_dict(data)


def _build_curve(spec: ScenarioSpec):
    p = spec.parameters
    if spec.generator == "round_circle":
        curve = round_circle(float(p.get("radius", 1.0)),
                             int(p.get("n", 1024)))
        return curve, {"radius": float(p.get("radius", 1.0)),
                       "disc_area": disc_area(curve)}
    if spec.generator == "ellipse":
        curve = ellipse(float(p.get("a", 1.2)), float(p.get("b", 0.9)),
                        int(p.get("n", 1024)))
        return curve, {"disc_area": disc_area(curve)}
    if spec.generator == "chekanov_pair":
        curve = chekanov_pair(float(p.get("center", 1.25)),
                              p.get("radius"), int(p.get("n", 1024)),
                              str(p.get("mode", MODE_CHEKANOV_LR)))
        return curve, {"disc_area": disc_area(curve),
                       "monotone_defect": monotone_defect(curve).defect}
    if spec.generator == "perturbed_clifford":
        seed = p.get("seed")
        curve = perturbed_clifford(p.get("amplitudes"),
                                   None if seed is None else int(seed),
                                   int(p.get("n", 1024)))
        return curve, {"disc_area": disc_area(curve),
                       "monotone_defect": monotone_defect(curve).defect}
    if spec.generator == "two_surgery_construction":
        return two_surgery_construction(p.get("n_quarter"), p.get("shape"))
    if spec.generator == "minimal_profile":
        vpp = int(p.get("vertices_per_period", 8192))
        if p.get("C") is not None:
            cval = float(p["C"])
            curve = synthesize_profile(cval, vpp)
        else:
            if p.get("m") is None or p.get("k") is None:
                raise GeometryError(
                    "minimal_profile needs either C or both m and k")
            sol = find_closed(int(p["m"]), int(p["k"]),
                              vertices_per_period=vpp)
            if sol is None:
                raise GeometryError(
                    f"no closed profile found for (m, k) = "
                    f"({p['m']}, {p['k']})")
            cval, curve = sol.C, sol.profile
        return curve, {"C": cval, "first_integral_residual":
                       first_integral_residual(curve, cval)}
    raise GeometryError(f"unknown generator {spec.generator!r}")


def generate(spec: ScenarioSpec, with_checks: bool = False):
    """Initial FlowState for a scenario, after generator self-checks."""
    spec.validate()
    curve, checks = _build_curve(spec)
    curve.validate()
    state = FlowState(curve)
    return (state, checks) if with_checks else state


# ---------------------------------------------------------------------------
# event sequence assertion
# ---------------------------------------------------------------------------


def match_events(expected, observed) -> tuple[bool, str]:
    """Ordered-subsequence check of required events, with '?' marking
    optional ones; the terminal observed event must equal the last expected
    entry, and surgeries must match exactly in number."""
    required = [e.rstrip("?") for e in expected if not e.endswith("?")]
    names = [e.rstrip("?") for e in expected]
    problems = []
    pos = 0
    for name in required:
        while pos < len(observed) and observed[pos] != name:
            pos += 1
        if pos == len(observed):
            problems.append(f"missing required event {name}")
            break
        pos += 1
    if names:
        if not observed:
            problems.append("no events observed")
        elif observed[-1] != names[-1]:
            problems.append(
                f"terminal event {observed[-1]} != expected {names[-1]}")
    want_surgeries = required.count(SURGERY_PERFORMED)
    got_surgeries = observed.count(SURGERY_PERFORMED)
    if want_surgeries != got_surgeries:
        problems.append(
            f"{got_surgeries} surgeries observed, expected {want_surgeries}")
    if problems:
        diff = ("expected " + " -> ".join(expected) + "; observed "
                + (" -> ".join(observed) if observed else "(none)")
                + "; " + "; ".join(problems))
        return False, diff
    return True, ""


# ---------------------------------------------------------------------------
# scenario runs and artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    config_hash: str
    started_unix: float
    elapsed_seconds: float
    outputs: dict
    events: tuple
    terminal_event: str
    surgeries: int
    checks: dict
    ok: bool
    event_diff: str = ""

    def to_json(self) -> str:
        data = dataclasses.asdict(self)
        data["events"] = [[k, t] for k, t in self.events]
        return json.dumps(data, sort_keys=True, indent=1)


def _json_payload(payload: dict) -> dict:
    out = {}
    for key, val in payload.items():
        if dataclasses.is_dataclass(val) and not isinstance(val, type):
            out[key] = _json_payload(dataclasses.asdict(val))
        elif isinstance(val, dict):
            out[key] = _json_payload(val)
        elif isinstance(val, (np.floating, np.integer)):
            out[key] = val.item()
        elif isinstance(val, (list, tuple)):
            out[key] = [v.item() if isinstance(v, (np.floating, np.integer))
                        else v for v in val]
        else:
            out[key] = val
    return out


def _surgery_record_json(rec) -> str:
    data = dataclasses.asdict(rec)
    return json.dumps(_json_payload(data), sort_keys=True)


def _select_frames(samples, max_frames: int):
    with_curves = [s for s in samples if s.curve is not None]
    if len(with_curves) <= max_frames:
        return with_curves
    idx = np.unique(np.linspace(0, len(with_curves) - 1,
                                max_frames).round().astype(int))
    return [with_curves[i] for i in idx]


def run_scenario(spec: ScenarioSpec, out_dir, max_frames: int = 16):
    """Execute one scenario and write its artifact bundle.

    Writes trajectory.csv, curve_initial/final.json, frame_<i>_<t>.svg,
    surgeries.jsonl, and manifest.json into out_dir. Returns the manifest;
    manifest.ok reflects the event-sequence assertion.
    """
    started = time.time()
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state, checks = generate(spec, with_checks=True)
    config = spec.flow_config()

    outputs = {"manifest": "manifest.json", "trajectory": "trajectory.csv",
               "initial_curve": "curve_initial.json",
               "final_curve": "curve_final.json",
               "surgery_log": "surgeries.jsonl"}
    (out / "curve_initial.json").write_text(curve_to_json(state.curve))

    if spec.surgery:
        final, records, samples = flow_with_surgery(
            state, config, collect=True, eps0=spec.eps0)
    else:
        final, samples, _events = run(state, config)
        records = []

    observed = [e.kind for e in final.event_log]
    ok, diff = match_events(spec.expected_events, observed)

    rows = [CSV_HEADER] + [sample_csv_row(s) for s in samples]
    (out / "trajectory.csv").write_text("\n".join(rows) + "\n")
    (out / "curve_final.json").write_text(curve_to_json(final.curve))
    with open(out / "surgeries.jsonl", "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(_surgery_record_json(rec) + "\n")
    cones = (CONE_HALF_PI, CONE_TWO_THIRDS)
    frames = _select_frames(samples, max_frames)
    for i, smp in enumerate(frames):
        name = f"frame_{i:04d}_{smp.t:.6f}.svg"
        save_svg(render_svg([smp.curve], cones=cones,
                            title=f"{spec.name} t={smp.t:.6f}"), out / name)
        outputs[f"frame_{i:04d}"] = name

    manifest = RunManifest(
        scenario=spec.name,
        config_hash=spec.config_hash(),
        started_unix=started,
        elapsed_seconds=time.time() - started,
        outputs=outputs,
        events=tuple((e.kind, e.t) for e in final.event_log),
        terminal_event=observed[-1] if observed else "",
        surgeries=len(records),
        checks=_json_payload(checks),
        ok=ok,
        event_diff=diff,
    )
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest


# ---------------------------------------------------------------------------
# shrinker timing
# ---------------------------------------------------------------------------


def _vanish_from_trailing_area(samples, attr: str) -> float:
    pts = [(s.t, getattr(s, attr)) for s in samples
           if math.isfinite(getattr(s, attr)) and getattr(s, attr) > 0.0]
    if len(pts) < 2:
        raise GeometryError("too few samples to extrapolate a vanishing time")
    tail = pts[-6:]
    ts = np.array([p[0] for p in tail])
    areas = np.array([p[1] for p in tail])
    coef = np.polyfit(ts, areas, 1)
    if coef[0] >= 0.0:
        raise GeometryError("area is not decreasing; no vanishing time")
    return float(-coef[1] / coef[0])


def shrinker_timing(r0: float, maslov: int = 4, center: float = 1.0,
                    config: FlowConfig | None = None,
                    simulate: bool = True):
    """Simulated and exact collapse times of a shrinking circle.

    maslov=4: origin-centered circle of radius r0 in (0, 1); its Maslov-4
    disc area B = 2 pi r0^2 / (1 + 2 r0^2) vanishes at
    (1/6) log(2 pi / (2 pi - 3 B)). maslov=2: circle pair of Euclidean
    radius r0 about +-center; the Maslov-2 disc area A < pi/3 vanishes at
    (1/6) log(pi / (pi - 3 A)). Monotone input raises (infinite time).

    Returns (t_sim, t_exact); t_sim is nan when simulate is off.
    """
    if maslov == 4:
        if not 0.0 < r0:
            raise GeometryError("radius must be positive")
        if r0 >= 1.0 - 1e-9:
            raise GeometryError(
                "infinite-time: the monotone circle r0 >= 1 does not vanish")
        curve = round_circle(r0, n=384)
        t_exact = shrink_time(disc_area(curve), maslov=4)
        if not simulate:
            return math.nan, t_exact
        cfg = config or FlowConfig(vertices_per_component=384, cfl=0.45,
                                   max_time=2.0 * t_exact)
        _final, _samples, events = run(FlowState(curve), cfg)
        for e in events:
            if e.kind == SINGULARITY_DETECTED:
                return float(e.payload["report"].estimated_T), t_exact
        raise GeometryError("no singularity detected before max_time")
    if maslov == 2:
        curve = chekanov_pair(center, r0, n=256)
        area = disc_area(curve)
        if area >= MONOTONE_AREA_CHEKANOV - 1e-9:
            raise GeometryError(
                "infinite-time: a monotone Maslov-2 disc does not vanish")
        t_exact = shrink_time(area, maslov=2)
        if not simulate:
            return math.nan, t_exact
        cfg = config or FlowConfig(vertices_per_component=256, cfl=0.45,
                                   max_time=2.0 * t_exact)
        _final, samples, _events = run(FlowState(curve), cfg)
        return _vanish_from_trailing_area(samples, "area_m2"), t_exact
    raise GeometryError("maslov must be 2 or 4")


# ---------------------------------------------------------------------------
# the scenario library
# ---------------------------------------------------------------------------


SCENARIOS = {
    "unit_circle": ScenarioSpec(
        name="unit_circle",
        generator="round_circle",
        parameters={"radius": 1.0, "n": 1024},
        config={"vertices_per_component": 1024},
        expected_events=(CONVERGED,),
        surgery=False,
        description="The monotone circle is stationary; converges at once."),
    "shrinking_circle": ScenarioSpec(
        name="shrinking_circle",
        generator="round_circle",
        parameters={"radius": 0.7071067811865476, "n": 512},
        config={"vertices_per_component": 512, "cfl": 0.45, "max_time": 0.5},
        expected_events=(SINGULARITY_DETECTED,),
        surgery=False,
        description="Non-monotone circle collapsing to the origin in finite "
                    "time; the run ends at the detected singularity."),
    "graphical_clifford": ScenarioSpec(
        name="graphical_clifford",
        generator="perturbed_clifford",
        parameters={"n": 512},
        config={"vertices_per_component": 512, "cfl": 0.4,
                "convergence_speed": 1e-5, "max_time": 3.0},
        expected_events=(GRAPHICAL_ATTAINED + "?", CONVERGED),
        surgery=False,
        description="Monotone graphical star curve relaxing to the unit "
                    "circle with no surgery."),
    "chekanov_collapse": ScenarioSpec(
        name="chekanov_collapse",
        generator="chekanov_pair",
        parameters={"center": 1.25, "n": 512},
        config={"vertices_per_component": 512, "cfl": 0.4,
                "convergence_speed": 1e-5, "monitor_opening": True,
                "max_time": 4.0},
        expected_events=(SINGULARITY_DETECTED, SURGERY_PERFORMED, CONVERGED),
        description="Monotone pair collapsing at the origin; one neck-to-neck "
                    "surgery turns it into a Clifford-class curve that "
                    "relaxes to the unit circle."),
    "two_surgery": ScenarioSpec(
        name="two_surgery",
        generator="two_surgery_construction",
        parameters={"n_quarter": 128},
        config={"vertices_per_component": 512, "cfl": 0.4,
                "convergence_speed": 1e-5, "monitor_opening": True,
                "max_time": 6.0},
        expected_events=(SINGULARITY_DETECTED, SURGERY_PERFORMED,
                         SINGULARITY_DETECTED, SURGERY_PERFORMED, CONVERGED),
        description="Finger construction passing through two surgeries "
                    "before converging; the first pinch arrives before the "
                    "pi/18 barrier deadline (1/6) log(6/5)."),
    "minimal_profile_54": ScenarioSpec(
        name="minimal_profile_54",
        generator="minimal_profile",
        parameters={"C": 54.0},
        config={"vertices_per_component": 4096, "convergence_speed": 1e-4,
                "max_time": 0.01},
        expected_events=(CONVERGED,),
        surgery=False,
        description="Closed immersed minimal profile; stationary up to "
                    "discretization, converges immediately."),
}


__all__ = [
    "MONOTONE_AREA_CLIFFORD", "MONOTONE_AREA_CHEKANOV",
    "TRIANGLE_TARGET", "POCKET_TARGET",
    "ScenarioSpec", "RunManifest", "SCENARIOS",
    "round_circle", "ellipse", "chekanov_pair", "perturbed_clifford",
    "two_surgery_construction", "minimal_profile_curve",
    "disc_area_euclidean_circle", "circle_for_area", "barrier_radius",
    "shrink_time", "patch_deadline", "shrinker_timing", "inscribed_barrier",
    "generate", "run_scenario", "match_events",
    "scenario_from_dict", "scenario_from_json",
]
