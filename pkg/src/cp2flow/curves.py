"""Planar profile curves for the reduced equivariant Lagrangian flow.

A torus orbit in the ambient space is encoded by a closed curve in the
punctured plane (the "profile plane"); the radial coordinate r = |w| sets the
area density 2/(1+2r^2)^2 dA and the boundary primitive r^2/(1+2r^2) dphi.
Two symmetry classes occur:

  * CliffordType: one embedded component, winding +-1 about the origin,
    invariant under conjugation and under negation;
  * ChekanovType: two embedded components with winding 0, swapped by negation.

Curves are stored as tuples of complex vertex arrays (closing edge implicit).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

# Vertices closer to the origin than this are geometrically meaningless for
# the reduced flow (the density and the drift term blow up).
MIN_VERTEX_RADIUS = 1e-12

# Tie-break offset for cone crossing counts: vertices this close to a cone
# line are nudged along the curve's inward-pointing normal before counting.
CONE_TIE_EPS = 1e-12

CLIFFORD = "clifford"
CHEKANOV = "chekanov"

# Internal symmetry bookkeeping (how the enforced symmetries act on vertices):
#   clifford      single loop invariant under conj and under negation
#   chekanov_lr   right/left pair: comp0 conj-invariant, comp1 = -comp0
#   chekanov_ud   upper/lower pair: comp0 invariant under w -> -conj(w),
#                 comp1 = conj(comp0)
MODE_CLIFFORD = "clifford"
MODE_CHEKANOV_LR = "chekanov_lr"
MODE_CHEKANOV_UD = "chekanov_ud"


class GeometryError(ValueError):
    """Raised for malformed curves, regions, or degenerate configurations."""


@dataclass(frozen=True)
class PlanarPoint:
    """A point of the profile plane."""

    x: float
    y: float

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def phi(self) -> float:
        return math.atan2(self.y, self.x)

    @classmethod
    def from_complex(cls, w: complex) -> "PlanarPoint":
        return cls(float(np.real(w)), float(np.imag(w)))

    @classmethod
    def from_polar(cls, r: float, phi: float) -> "PlanarPoint":
        return cls(r * math.cos(phi), r * math.sin(phi))

    def to_complex(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class ConeSpec:
    """Union of the two full lines through the origin at axis_angle +- opening/2.

    opening is the angle between the lines on the axis side; the four rays of
    the cone boundary sit at axis_angle +- opening/2 and the antipodes.
    """

    axis_angle: float
    opening: float

    def validate(self) -> None:
        if not (np.isfinite(self.axis_angle) and np.isfinite(self.opening)):
            raise GeometryError("cone parameters must be finite")
        if not 0.0 < self.opening < math.pi:
            raise GeometryError("cone opening must lie in (0, pi)")

    @property
    def line_angles(self) -> tuple[float, float]:
        return (self.axis_angle - 0.5 * self.opening,
                self.axis_angle + 0.5 * self.opening)

    @property
    def ray_angles(self) -> tuple[float, float, float, float]:
        a, b = self.line_angles
        return (a, b, a + math.pi, b + math.pi)


def standard_cone(opening: float) -> ConeSpec:
    """Cone symmetric about the positive real axis with the given opening."""
    return ConeSpec(axis_angle=0.0, opening=opening)


def _as_vertex_array(vertices) -> np.ndarray:
    z = np.asarray(vertices)
    if z.ndim == 2 and z.shape[1] == 2:
        z = z[:, 0] + 1j * z[:, 1]
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1:
        raise GeometryError("component vertices must be a 1-d sequence")
    return z


def component_winding(z: np.ndarray, point: complex = 0.0 + 0.0j) -> int:
    """Winding number of one closed polyline about a point."""
    w = z - point
    ang = np.angle(np.roll(w, -1) / w)
    return int(round(float(np.sum(ang)) / (2.0 * math.pi)))


def _point_on_polyline(z: np.ndarray, point: complex, tol: float) -> bool:
    a = z
    e = np.roll(z, -1) - a
    w = point - a
    L2 = np.abs(e) ** 2
    t = np.clip(np.real(np.conj(e) * w) / np.where(L2 == 0.0, 1.0, L2), 0.0, 1.0)
    return bool(np.min(np.abs(w - t * e)) < tol)


@dataclass(frozen=True)
class ProfileCurve:
    """A profile curve: closed oriented polyline components plus class tag.

    strict=False relaxes the embeddedness / symmetry / winding checks; it is
    used for immersed closed profiles of the minimal family (|winding| can
    exceed 1 and the symmetry is a rotation group, not the standard pair).
    """

    components: tuple
    symmetry_class: str
    mode: str = ""
    strict: bool = True

    def __post_init__(self):
        comps = tuple(_as_vertex_array(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        for z in comps:
            if z.size < 3:
                raise GeometryError("each component needs at least 3 vertices")
            if not np.all(np.isfinite(z.view(float))):
                raise GeometryError("curve vertices must be finite")
        if self.symmetry_class not in (CLIFFORD, CHEKANOV):
            raise GeometryError("symmetry_class must be 'clifford' or 'chekanov'")
        if not self.mode:
            object.__setattr__(self, "mode", _infer_mode(comps, self.symmetry_class))

    # -- basic geometry --------------------------------------------------

    @property
    def radii(self) -> tuple:
        return tuple(np.abs(z) for z in self.components)

    @property
    def min_radius(self) -> float:
        return float(min(np.min(r) for r in self.radii))

    @property
    def max_radius(self) -> float:
        return float(max(np.max(r) for r in self.radii))

    def windings(self) -> list[int]:
        return [component_winding(z) for z in self.components]

    def vertex_count(self) -> int:
        return int(sum(z.size for z in self.components))

    def edge_lengths(self, component: int = 0) -> np.ndarray:
        z = self.components[component]
        return np.abs(np.roll(z, -1) - z)

    def copy_with(self, **kw) -> "ProfileCurve":
        return replace(self, **kw)

    # -- validation --------------------------------------------------------

    def validate(self, symmetry_tol: float = 1e-9) -> None:
        """Full invariant check; raises GeometryError on violation."""
        for z in self.components:
            if np.min(np.abs(z)) < MIN_VERTEX_RADIUS:
                raise GeometryError("component passes through the origin")
            if np.min(np.abs(np.roll(z, -1) - z)) == 0.0:
                raise GeometryError("duplicate consecutive vertices")
        if not self.strict:
            return
        w = self.windings()
        scale = max(1.0, self.max_radius)
        if self.symmetry_class == CLIFFORD:
            if len(self.components) != 1:
                raise GeometryError("clifford curves have a single component")
            if abs(w[0]) != 1:
                raise GeometryError(f"clifford winding must be +-1, got {w[0]}")
            z = self.components[0]
            if _symmetry_gap(z, np.conj(z)) > symmetry_tol * scale:
                raise GeometryError("clifford curve is not conjugation symmetric")
            if _symmetry_gap(z, -z) > symmetry_tol * scale:
                raise GeometryError("clifford curve is not point symmetric")
        else:
            if len(self.components) != 2:
                raise GeometryError("chekanov curves have two components")
            if any(x != 0 for x in w):
                raise GeometryError(f"chekanov windings must be 0, got {w}")
            a, b = self.components
            if _symmetry_gap(-a, b) > symmetry_tol * scale:
                raise GeometryError("chekanov components are not negation partners")
        for z in self.components:
            if _self_intersects(z):
                raise GeometryError("component is not embedded")
        if len(self.components) == 2 and _polylines_intersect(*self.components):
            raise GeometryError("components intersect each other")


def _symmetry_gap(z: np.ndarray, image: np.ndarray) -> float:
    """Two-sided vertex-to-polyline gap between a curve and its symmetry image.

    Vertex sets may be offset along the curve, so vertex-to-vertex distance is
    the wrong metric; distance to the opposing polyline is parametrization
    free. Samples are decimated for large N (the gap is a smooth field, a few
    hundred probes locate its max to sufficient accuracy for validation).
    """
    def side(p: np.ndarray, q: np.ndarray) -> float:
        a = q
        e = np.roll(q, -1) - a
        L2 = np.abs(e) ** 2
        L2 = np.where(L2 == 0.0, 1.0, L2)
        step = max(1, p.size // 512)
        worst = 0.0
        for w in p[::step]:
            t = np.clip(np.real(np.conj(e) * (w - a)) / L2, 0.0, 1.0)
            worst = max(worst, float(np.min(np.abs(w - (a + t * e)))))
        return worst

    return max(side(z, image), side(image, z))


def _segments_cross(a0, a1, b0, b1) -> np.ndarray:
    """Vectorized proper-crossing test of one segment against a batch."""
    d1 = a1 - a0
    d2 = b1 - b0

    def cross(u, v):
        return np.real(u) * np.imag(v) - np.imag(u) * np.real(v)

    denom = cross(d1, d2)
    ok = np.abs(denom) > 1e-30
    denom = np.where(ok, denom, 1.0)
    t = cross(b0 - a0, d2) / denom
    s = cross(b0 - a0, d1) / denom
    eps = 1e-12
    return ok & (t > eps) & (t < 1 - eps) & (s > eps) & (s < 1 - eps)


def _self_intersects(z: np.ndarray) -> bool:
    n = z.size
    a0 = z
    a1 = np.roll(z, -1)
    idx = np.arange(n)
    for i in range(n - 2):
        j = idx[i + 2:]
        if i == 0:
            j = j[:-1]          # segment n-1 is adjacent to segment 0
        if j.size and np.any(_segments_cross(a0[i], a1[i], a0[j], a1[j])):
            return True
    return False


def _polylines_intersect(za: np.ndarray, zb: np.ndarray) -> bool:
    b0, b1 = zb, np.roll(zb, -1)
    a1 = np.roll(za, -1)
    for i in range(za.size):
        if np.any(_segments_cross(za[i], a1[i], b0, b1)):
            return True
    return False


def _infer_mode(comps, symmetry_class: str) -> str:
    if symmetry_class == CLIFFORD:
        return MODE_CLIFFORD
    c = np.mean(comps[0])
    return MODE_CHEKANOV_LR if abs(c.real) >= abs(c.imag) else MODE_CHEKANOV_UD


# ---------------------------------------------------------------------------
# construction and serialization
# ---------------------------------------------------------------------------


def close_curve(points) -> np.ndarray:
    """Drop an explicit closing vertex if present."""
    z = _as_vertex_array(points)
    if z.size > 1 and abs(z[0] - z[-1]) < 1e-15 * max(1.0, abs(z[0])):
        z = z[:-1]
    return z


def curve_to_json(curve: ProfileCurve) -> str:
    comps = [[[format(w.real, ".17g"), format(w.imag, ".17g")] for w in z]
             for z in curve.components]
    body = ",".join(
        "[" + ",".join(f"[{x},{y}]" for x, y in comp) + "]" for comp in comps)
    return f'{{"class": "{curve.symmetry_class}", "components": [{body}]}}'


def curve_from_json(text: str) -> ProfileCurve:
    doc = json.loads(text)
    if not isinstance(doc, dict) or set(doc) != {"class", "components"}:
        raise GeometryError("curve json must have exactly 'class' and 'components'")
    comps = tuple(close_curve([complex(x, y) for x, y in c])
                  for c in doc["components"])
    return ProfileCurve(components=comps, symmetry_class=doc["class"])


def save_curve(curve: ProfileCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write(curve_to_json(curve))
        fh.write("\n")


def load_curve(path) -> ProfileCurve:
    with open(path) as fh:
        return curve_from_json(fh.read())


def circle_curve(radius: float, n: int = 256, winding: int = 1) -> ProfileCurve:
    """Origin-centered circle as a CliffordType curve."""
    if radius <= 0.0:
        raise GeometryError("circle radius must be positive")
    phi = 2.0 * math.pi * np.arange(n) / n * (1 if winding >= 0 else -1)
    return ProfileCurve(components=(radius * np.exp(1j * phi),),
                        symmetry_class=CLIFFORD)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def winding_number(curve: ProfileCurve, point) -> int:
    """Total winding of the curve about a point; errors if on the boundary."""
    p = point.to_complex() if isinstance(point, PlanarPoint) else complex(point)
    tol = 1e-12 * max(1.0, abs(p), curve.max_radius)
    total = 0
    for z in curve.components:
        if _point_on_polyline(z, p, tol):
            raise GeometryError("winding undefined: point lies on the curve")
        total += component_winding(z, p)
    return total


def cone_intersections(curve: ProfileCurve, cone: ConeSpec):
    """Transversal intersections of the curve with a cone's boundary lines.

    Returns (count, points) with points = list of (PlanarPoint, component,
    parameter) sorted by radius; parameter is the fractional vertex index.
    Vertices within 1e-12 of a cone line are nudged 1e-12 along the leftward
    normal before counting, so tangential touches contribute zero.
    """
    cone.validate()
    hits = []
    for ci, z in enumerate(curve.components):
        nudged = _nudge_near_cone(z, cone)
        for theta in cone.line_angles:
            u = np.exp(-1j * theta)
            d = np.imag(nudged * u)            # signed distance to the line
            d_next = np.roll(d, -1)
            for i in np.nonzero((d * d_next) < 0.0)[0]:
                t = d[i] / (d[i] - d_next[i])
                w = z[i] + t * (z[(i + 1) % z.size] - z[i])
                hits.append((PlanarPoint.from_complex(w), ci, float(i + t)))
    hits.sort(key=lambda h: (h[0].r, h[1], h[2]))
    return len(hits), hits


def _nudge_near_cone(z: np.ndarray, cone: ConeSpec) -> np.ndarray:
    e = np.roll(z, -1) - z
    e_prev = np.roll(e, 1)
    t = e_prev / np.abs(e_prev) + e / np.abs(e)
    norm = np.abs(t)
    t = np.where(norm > 1e-30, t / np.where(norm == 0.0, 1.0, norm),
                 e / np.abs(e))
    nu = 1j * t                                # leftward normal
    out = z.astype(complex, copy=True)
    for theta in cone.line_angles:
        u = np.exp(-1j * theta)
        near = np.abs(np.imag(out * u)) < CONE_TIE_EPS
        out = np.where(near, out + CONE_TIE_EPS * nu, out)
    return out


def unit_circle_crossings(curve: ProfileCurve, radius: float = 1.0,
                          band: float = 1e-6) -> int:
    """Sign changes of |w| - radius around the curve, with a dead band.

    Vertices inside the band are skipped before counting; a curve hugging the
    circle (e.g. after convergence) therefore counts zero instead of FP noise.
    """
    total = 0
    for z in curve.components:
        d = np.abs(z) - radius
        live = d[np.abs(d) >= band]
        if live.size < 2:
            continue
        s = np.sign(live)
        total += int(np.sum(s != np.roll(s, -1)))
    return total


def classify(curve: ProfileCurve) -> str:
    """Return 'clifford' or 'chekanov' from the actual geometry."""
    w = curve.windings()
    if len(curve.components) == 1:
        if abs(w[0]) != 1:
            raise GeometryError(f"unsupported topology: single loop winding {w[0]}")
        z = curve.components[0]
        if _symmetry_gap(z, -z) > 1e-6 * max(1.0, float(np.max(np.abs(z)))):
            raise GeometryError("unsupported topology: single loop lacks point "
                                "symmetry")
        return CLIFFORD
    if len(curve.components) == 2 and w == [0, 0]:
        a, b = curve.components
        if _symmetry_gap(-a, b) > 1e-6 * max(1.0, float(np.max(np.abs(a)))):
            raise GeometryError("unsupported topology: components are not "
                                "negation partners")
        return CHEKANOV
    raise GeometryError("unsupported topology")


# ---------------------------------------------------------------------------
# symmetrization
# ---------------------------------------------------------------------------


def symmetrize(curve: ProfileCurve, max_asymmetry: float | None = None) -> ProfileCurve:
    """Project onto the enforced symmetry group by paired-vertex averaging.

    Each vertex is averaged with the symmetry image of its partner vertex; the
    partner map must be an involution of the index set, which makes the
    projection exact and idempotent. Asymmetry beyond max_asymmetry (default:
    the component's min edge length) raises a symmetry-broken error.
    """
    if curve.mode == MODE_CLIFFORD:
        z = curve.components[0]
        z = _average_with(z, np.conj(z), max_asymmetry)
        z = _average_with(z, -z, max_asymmetry)
        return curve.copy_with(components=(z,))
    if curve.mode == MODE_CHEKANOV_LR:
        a, b = curve.components
        sigma = _match_indices(a, -b, max_asymmetry)
        a = 0.5 * (a + (-b)[sigma])
        a = _average_with(a, np.conj(a), max_asymmetry)
        return curve.copy_with(components=(a, -a[_inverse_perm(sigma)]))
    if curve.mode == MODE_CHEKANOV_UD:
        a, b = curve.components
        sigma = _match_indices(a, np.conj(b), max_asymmetry)
        a = 0.5 * (a + np.conj(b)[sigma])
        a = _average_with(a, -np.conj(a), max_asymmetry)
        return curve.copy_with(components=(a, np.conj(a)[_inverse_perm(sigma)]))
    raise GeometryError(f"unknown symmetry mode {curve.mode!r}")


def _match_indices(z: np.ndarray, image: np.ndarray,
                   max_asymmetry: float | None) -> np.ndarray:
    """Index map sigma minimizing |image[sigma] - z|, as a cyclic (re)alignment.

    Both arrays sample the same closed loop, so the optimal matching is a
    cyclic shift, possibly orientation reversing.
    """
    if z.size != image.size:
        raise GeometryError("symmetry-broken: component sizes differ")
    n = z.size
    j0 = int(np.argmin(np.abs(image - z[0])))
    idx = np.arange(n)
    fwd = (j0 + idx) % n
    rev = (j0 - idx) % n
    gap_f = float(np.max(np.abs(image[fwd] - z)))
    gap_r = float(np.max(np.abs(image[rev] - z)))
    sigma, gap = (fwd, gap_f) if gap_f <= gap_r else (rev, gap_r)
    tol = max_asymmetry
    if tol is None:
        tol = float(np.min(np.abs(np.roll(z, -1) - z)))
    if gap > tol:
        raise GeometryError(
            f"symmetry-broken: asymmetry {gap:.3e} exceeds tolerance {tol:.3e}")
    return sigma


def _inverse_perm(sigma: np.ndarray) -> np.ndarray:
    inv = np.empty_like(sigma)
    inv[sigma] = np.arange(sigma.size)
    return inv


def _average_with(z: np.ndarray, image: np.ndarray,
                  max_asymmetry: float | None) -> np.ndarray:
    sigma = _match_indices(z, image, max_asymmetry)
    if not np.array_equal(sigma[sigma], np.arange(z.size)):
        raise GeometryError("symmetry-broken: vertex matching is not involutive")
    return 0.5 * (z + image[sigma])


# ---------------------------------------------------------------------------
# relative angle
# ---------------------------------------------------------------------------


def relative_angle(curve: ProfileCurve, component: int = 0) -> np.ndarray:
    """Unwrapped angle between the curve tangent and the circular direction.

    Per vertex, from centered differences of (r, phi):
        theta = -atan2(dr, r * dphi)
    so an origin-centered circle has theta identically 0 and a radial ray
    -pi/2 (outward) or pi/2 (inward). Unwrapped along the component.
    """
    z = curve.components[component]
    r = np.abs(z)
    dz = np.roll(z, -1) - np.roll(z, 1)
    if np.min(np.abs(dz)) < 1e-15 * max(1.0, float(np.max(r))):
        raise GeometryError("degenerate tangent in relative_angle")
    phi = np.unwrap(np.angle(z))
    w = 2.0 * math.pi * component_winding(z)
    n = z.size
    dr = np.roll(r, -1) - np.roll(r, 1)
    dphi = np.empty(n)
    dphi[1:-1] = phi[2:] - phi[:-2]
    dphi[0] = phi[1] - (phi[-1] - w)
    dphi[-1] = (phi[0] + w) - phi[-2]
    return np.unwrap(np.arctan2(-dr, r * dphi))


__all__ = [
    "PlanarPoint", "ConeSpec", "ProfileCurve", "GeometryError",
    "CLIFFORD", "CHEKANOV",
    "MODE_CLIFFORD", "MODE_CHEKANOV_LR", "MODE_CHEKANOV_UD",
    "MIN_VERTEX_RADIUS",
    "standard_cone", "circle_curve", "close_curve",
    "winding_number", "cone_intersections", "unit_circle_crossings",
    "classify", "symmetrize", "relative_angle", "component_winding",
    "curve_to_json", "curve_from_json", "save_curve", "load_curve",
]
