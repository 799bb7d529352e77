"""The first-integral family of immersed minimal equivariant profiles.

With f = log r as a function of the polar angle, minimal profiles satisfy

    f'^2 = B(f, C) = C e^{4f} / (1 + 2 e^{2f})^3 - 1,

so the radius oscillates between the two positive roots r1 < 1 < r2 of
C x^2 = (1+2x)^3 in x = r^2 (equivalently of the cubic
-8x^3 + (C-12)x^2 - 6x - 1). One full radial oscillation spans the polar angle

    psi(C) = 2 * integral_{r1}^{r2} dr / (r sqrt(B)),

and the profile closes up after m oscillations iff m psi = 2 pi k. All angle
integrals are computed in the log-radius variable with the substitution
lambda = lambda_a cos^2 u + lambda_b sin^2 u, which removes the inverse-
square-root endpoint singularities; 512-node Gauss-Legendre then evaluates
them to ~1e-12 (documented bound 1e-9) across the whole range C in (27, 1e8].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .curves import CLIFFORD, MODE_CLIFFORD, GeometryError, ProfileCurve

_GL_U, _GL_W = np.polynomial.legendre.leggauss(512)
_GL_U = 0.25 * math.pi * (_GL_U + 1.0)   # nodes on (0, pi/2)
_GL_W = 0.25 * math.pi * _GL_W
_GL_SIN2 = np.sin(_GL_U) ** 2
_GL_COS2 = np.cos(_GL_U) ** 2
_GL_SC = np.sin(_GL_U) * np.cos(_GL_U)

DEGENERATE_C = 27.0


def _cubic(x: float, C: float) -> float:
    return ((C - 12.0) - 8.0 * x) * x * x - 6.0 * x - 1.0


def _cubic_deriv(x: float, C: float) -> float:
    return (2.0 * (C - 12.0) - 24.0 * x) * x - 6.0


def _bracketed_root(C: float, lo: float, hi: float) -> float:
    """Bisection to 1e-15 relative, then clamped Newton polish."""
    glo = _cubic(lo, C)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = _cubic(mid, C)
        if gm == 0.0:
            return mid
        if (gm < 0.0) == (glo < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(3):
        d = _cubic_deriv(x, C)
        if d == 0.0:
            break
        x = min(max(x - _cubic(x, C) / d, lo), hi)
    return x


def radial_roots(C: float):
    """Turning radii (r1, r2) and the auxiliary negative root x3 in x = r^2."""
    if C <= DEGENERATE_C:
        raise GeometryError(
            "no radial oscillation for C <= 27 (degenerate circular profile)")
    x1 = _bracketed_root(C, 0.0, 1.0)
    hi = max(2.0, C / 8.0 + 2.0)
    x2 = _bracketed_root(C, 1.0, hi)
    x3 = _bracketed_root(C, -1.0, 0.0)
    return math.sqrt(x1), math.sqrt(x2), x3


@dataclass(frozen=True)
class MinimalProfile:
    C: float
    r1: float
    r2: float
    x3: float
    period: float
    inner_period: float
    cone_radius: float

    def validate(self) -> None:
        for r in (self.r1, self.r2):
            x = r * r
            rel = abs(self.C * x * x - (1.0 + 2.0 * x) ** 3) / (self.C * x * x)
            if rel > 1e-12:
                raise GeometryError(f"root certification failed: {rel:.3e}")
        if not (self.period > self.inner_period > 0.0):
            raise GeometryError("period ordering violated")
        if not (self.r1 < self.cone_radius < self.r2):
            raise GeometryError("cone radius outside the oscillation band")


@dataclass(frozen=True)
class ClosureSolution:
    m: int
    k: int
    C: float
    profile: ProfileCurve
    closure_gap: float
    reduced: bool = False


def _segment_angle_impl(x1: float, x2: float, x3: float,
                        lam1: float, lam2: float,
                        lam_a: float, lam_b: float) -> float:
    """integral of d(lambda)/(2 sqrt(B)) over [lam_a, lam_b], lambda = log x.

    Turning-point endpoints are regularized by the cos^2/sin^2 substitution;
    the factors x - x1 and x2 - x are evaluated through expm1 of offsets that
    are exactly signed when an endpoint coincides with a turning point.
    """
    if lam_b <= lam_a:
        return 0.0
    span = lam_b - lam_a
    off_a = span * _GL_SIN2            # lam - lam_a, exact >= 0
    off_b = -span * _GL_COS2           # lam - lam_b, exact <= 0
    da = (lam_a - lam1) + off_a        # lam - lam1; >= 0 exactly if lam_a==lam1
    db = (lam_b - lam2) + off_b        # lam - lam2; <= 0 exactly if lam_b==lam2
    x = np.exp(lam_a + off_a)
    d1 = x1 * np.expm1(da)
    d2 = -x2 * np.expm1(db)
    B = 8.0 * d1 * d2 * (x - x3) / (1.0 + 2.0 * x) ** 3
    vals = span * _GL_SC / np.sqrt(B)
    return float(np.dot(_GL_W, vals))


def _family_frame(C: float):
    r1, r2, x3 = radial_roots(C)
    x1, x2 = r1 * r1, r2 * r2
    return x1, x2, x3, math.log(x1), math.log(x2)


def period(C: float) -> float:
    """Polar-angle span of one full radial oscillation."""
    if C <= DEGENERATE_C + 1e-9:
        raise GeometryError("period undefined within 1e-9 of C = 27")
    x1, x2, x3, lam1, lam2 = _family_frame(C)
    return 2.0 * _segment_angle_impl(x1, x2, x3, lam1, lam2, lam1, lam2)


def inner_period(C: float) -> float:
    """Angle span of the inward excursion, twice [r1, 1]."""
    if C <= DEGENERATE_C + 1e-9:
        raise GeometryError("period undefined within 1e-9 of C = 27")
    x1, x2, x3, lam1, lam2 = _family_frame(C)
    return 2.0 * _segment_angle_impl(x1, x2, x3, lam1, lam2, lam1, 0.0)


def cone_radius(C: float) -> float:
    """Radius where the profile, started at its minimum on the positive real
    axis, crosses the cone line at polar angle pi/4."""
    if C <= DEGENERATE_C + 1e-9:
        raise GeometryError("period undefined within 1e-9 of C = 27")
    x1, x2, x3, lam1, lam2 = _family_frame(C)

    def angle_to(lam: float) -> float:
        return _segment_angle_impl(x1, x2, x3, lam1, lam2, lam1, lam)

    target = 0.25 * math.pi
    half = angle_to(lam2)
    if half <= target:
        # angle pi/4 is reached on the falling branch (never for C > 27 in
        # practice; kept for completeness): fold across the maximum
        def angle_to_folded(lam):
            return 2.0 * half - angle_to(lam)
        lo, hi = lam1, lam2
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if angle_to_folded(mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-11:
                break
        return math.exp(0.25 * (lo + hi))
    lo, hi = lam1, lam2
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if angle_to(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-11:
            break
    return math.exp(0.25 * (lo + hi))


def minimal_profile(C: float) -> MinimalProfile:
    r1, r2, x3 = radial_roots(C)
    prof = MinimalProfile(C=C, r1=r1, r2=r2, x3=x3, period=period(C),
                          inner_period=inner_period(C),
                          cone_radius=cone_radius(C))
    prof.validate()
    return prof


# ---------------------------------------------------------------------------
# profile synthesis
# ---------------------------------------------------------------------------


def _half_branch(C: float, n_half: int):
    """Dense log-radius f(phi) on the rising branch [0, psi/2] via the
    second-order form f'' = 2 C x^2 (1-x)/(1+2x)^4, x = e^{2f}."""
    psi = period(C)
    r1, _, _ = radial_roots(C)
    half = 0.5 * psi

    def rhs(phi, y):
        x = math.exp(2.0 * y[0])
        return (y[1], 2.0 * C * x * x * (1.0 - x) / (1.0 + 2.0 * x) ** 4)

    grid = half * np.arange(n_half + 1) / n_half
    sol = solve_ivp(rhs, (0.0, half), (math.log(r1), 0.0), method="DOP853",
                    rtol=1e-12, atol=1e-12, t_eval=grid, dense_output=False)
    if not sol.success:
        raise GeometryError(f"profile integration failed: {sol.message}")
    return psi, grid, sol.y[0]


def synthesize_profile(C: float, vertices_per_period: int = 1024,
                       m: int = 1, as_arc: bool = False):
    """Polyline of the minimal profile over m periods, starting at (r1, 0).

    Closed profiles require m*psi to be a multiple of 2 pi (gap < 1e-6);
    as_arc=True instead returns the raw vertex array of the rising branch
    r1 -> r2 spanning angle psi/2.
    """
    if C <= DEGENERATE_C + 1e-9:
        raise GeometryError("period undefined within 1e-9 of C = 27")
    if vertices_per_period < 8 or vertices_per_period % 2:
        raise GeometryError("vertices_per_period must be even and >= 8")
    n_half = vertices_per_period // 2
    psi, grid, f = _half_branch(C, n_half)
    if as_arc:
        return np.exp(f) * np.exp(1j * grid)
    total = m * psi
    k = round(total / (2.0 * math.pi))
    gap = abs(total - 2.0 * math.pi * k)
    if k < 1 or gap > 1e-6:
        raise GeometryError(
            f"open-arc: {m} periods span {total:.9f}, not a multiple of 2*pi; "
            "request as_arc=True for the open branch")
    # one period: rising half (r1 -> r2) then mirrored falling half
    rise = f[:n_half]
    fall = f[n_half:0:-1]
    f_period = np.concatenate([rise, fall])
    phi_period = psi * np.arange(vertices_per_period) / vertices_per_period
    blocks = [np.exp(f_period) * np.exp(1j * (phi_period + p * psi))
              for p in range(m)]
    z = np.concatenate(blocks)
    return ProfileCurve(components=(z,), symmetry_class=CLIFFORD,
                        mode=MODE_CLIFFORD, strict=False)


def find_closed(m: int, k: int, C_range=(27.000001, 1e8),
                vertices_per_period: int = 8192):
    """Closure solution of m*psi = 2*pi*k, or None if no bracket on the scan.

    gcd(m, k) > 1 is reduced to lowest terms (the geometric curve is the same)
    and flagged via the reduced field.
    """
    if m < 1 or k < 1:
        raise GeometryError("m and k must be positive integers")
    g = math.gcd(m, k)
    m0, k0 = m // g, k // g
    target = 2.0 * math.pi * k0 / m0
    C = _bracket_and_bisect_period(target, C_range)
    if C is None:
        return None
    profile = synthesize_profile(C, vertices_per_period, m0)
    gap = abs(m0 * period(C) - 2.0 * math.pi * k0)
    return ClosureSolution(m=m0, k=k0, C=C, profile=profile,
                           closure_gap=gap, reduced=g > 1)


def _period_grid(C_range):
    lo = max(C_range[0], DEGENERATE_C + 1e-6)
    hi = C_range[1]
    if hi <= lo:
        return np.array([]), np.array([])
    n = int(math.ceil(64.0 * (math.log10(hi) - math.log10(lo)))) + 1
    Cs = np.logspace(math.log10(lo), math.log10(hi), max(n, 2))
    return Cs, np.array([period(c) for c in Cs])


def _bracket_and_bisect_period(target: float, C_range,
                               grid=None) -> float | None:
    Cs, psis = grid if grid is not None else _period_grid(C_range)
    if Cs.size == 0:
        return None
    diff = psis - target
    hit = np.nonzero(diff == 0.0)[0]
    if hit.size:
        return float(Cs[hit[0]])
    sign_change = np.nonzero(diff[:-1] * diff[1:] < 0.0)[0]
    if sign_change.size == 0:
        return None
    i = int(sign_change[0])
    lo, hi = float(Cs[i]), float(Cs[i + 1])
    flo = float(diff[i])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = period(mid) - target
        if abs(fm) < 1e-10:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def closure_catalog(m_max: int = 40, C_range=(27.000001, 1e8)):
    """All primitive (m, k) closure solutions on the scan range, as rows
    (m, k, C, r1, r2, psi, R_C), deterministically ordered."""
    grid = _period_grid(C_range)
    psis = grid[1]
    if psis.size == 0:
        return []
    lo_psi, hi_psi = float(np.min(psis)), float(np.max(psis))
    rows = []
    for m in range(1, m_max + 1):
        k_lo = int(math.ceil(m * lo_psi / (2.0 * math.pi)))
        k_hi = int(math.floor(m * hi_psi / (2.0 * math.pi)))
        for k in range(max(k_lo, 1), k_hi + 1):
            if math.gcd(m, k) != 1:
                continue
            C = _bracket_and_bisect_period(2.0 * math.pi * k / m, C_range,
                                           grid=grid)
            if C is None:
                continue
            r1, r2, _ = radial_roots(C)
            rows.append({"m": m, "k": k, "C": C, "r1": r1, "r2": r2,
                         "psi": period(C), "R_C": cone_radius(C)})
    return rows


# ---------------------------------------------------------------------------
# first-integral residual
# ---------------------------------------------------------------------------


def first_integral_residual(profile: ProfileCurve, C: float) -> float:
    """max over vertices of |f'^2 - B(f, C)|, f = log r, f' in polar angle."""
    worst = 0.0
    for z in profile.components:
        f = np.log(np.abs(z))
        phi = np.unwrap(np.angle(z))
        dphi = np.diff(phi)
        if not (np.all(dphi > 0.0) or np.all(dphi < 0.0)):
            raise GeometryError(
                "first-integral residual needs a polar-graph profile")
        wind = 2.0 * math.pi * _closing_winding(phi)
        fe = np.concatenate([f[-2:], f, f[:2]])
        pe = np.concatenate([phi[-2:] - wind, phi, phi[:2] + wind])
        d = np.diff(pe)
        h = float(np.median(d))
        # uniform grid up to the closure gap: high-order central stencil
        if np.max(np.abs(d - h)) < 1e-6 * abs(h):
            fp = (-fe[4:] + 8.0 * fe[3:-1] - 8.0 * fe[1:-3] + fe[:-4]) / (12.0 * h)
        else:
            fp = np.gradient(fe, pe)[2:-2]
        x = np.exp(2.0 * f)
        B = C * x * x / (1.0 + 2.0 * x) ** 3 - 1.0
        worst = max(worst, float(np.max(np.abs(fp * fp - B))))
    return worst


def _closing_winding(phi: np.ndarray) -> float:
    """Angle jump closing the loop, as a multiple of 2 pi."""
    span = phi[-1] - phi[0]
    # the closing edge continues the sweep by about one average step
    step = span / max(phi.size - 1, 1)
    return round((span + step) / (2.0 * math.pi))


__all__ = [
    "MinimalProfile", "ClosureSolution", "DEGENERATE_C",
    "radial_roots", "period", "inner_period", "cone_radius",
    "minimal_profile", "synthesize_profile", "find_closed",
    "closure_catalog", "first_integral_residual",
]
