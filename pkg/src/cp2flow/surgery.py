"""Neck detection and neck-to-neck surgery on profile curves.

A curve collapsing at the origin develops a symmetric pair of strands that
cross one axis (the pinch axis) close to the origin while hugging the
diagonal lines from the side of that axis. Shortly before the collapse the
strands poke past the diagonals, so a probe cone slightly wider than a right
angle meets the curve at a small radius r'. The surgery then

  * excises the arcs inside radius r' that cross the pinch axis (each carries
    exactly two crossings with the right-angle cone),
  * splices in a pair of arcs crossing the perpendicular axis instead; each is
    a circular arc tangent at radius r'' = r'/2 to the lines tilted eps/2 past
    the diagonals, joined to the cut ends by cubic Hermite segments that match
    position and tangent direction,
  * re-symmetrizes, remeshes, and rescales radially until the distinguished
    disc hits the monotone area target again.

The inserted arcs stay strictly between the diagonals (the open quarter-plane
sector is convex, and the Hermite control points are kept inside it by using
half the chord length as the tangent magnitude), so the crossing count with
the right-angle cone drops by exactly four and the topological class flips:
one component becomes two or two become one.

Everything is written for a pinch on the real axis. A pinch on the imaginary
axis is reduced to it by the exact quarter turn w -> -iw, which is a bitwise
rotation of the vertex data, maps the symmetry group and the diagonal cone to
themselves, and swaps the two-component modes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .curves import (
    CHEKANOV,
    CLIFFORD,
    MODE_CHEKANOV_LR,
    MODE_CHEKANOV_UD,
    MODE_CLIFFORD,
    GeometryError,
    PlanarPoint,
    ProfileCurve,
    _polylines_intersect,
    _self_intersects,
    classify,
    cone_intersections,
    symmetrize,
)
from .diagnostics import disc_area, monotone_defect, monotone_target
from .flow import (
    CONE_HALF_PI,
    CONVERGED,
    HALTED,
    SCALE_PROBE_HIT,
    SINGULARITY_DETECTED,
    SURGERY_PERFORMED,
    FlowConfig,
    FlowEvent,
    FlowState,
    remesh,
    run,
    scale_probe,
)


class SurgeryError(GeometryError):
    """A splice or renormalization attempt failed; retry at another scale."""


@dataclass(frozen=True)
class NeckSpec:
    """Symmetric neck configuration selected by the cone probe.

    scale is the probe ball radius actually used. p_plus is the smallest
    radius probe hit in the open first quadrant and p_minus its conjugate;
    axis_before names the axis the collapsing strands cross. For a pinch on
    the imaginary axis the probe cone is the mirror image of the usual one
    (tilted eps toward the real axis), consistent with a quarter turn.
    """

    scale: float
    eps: float
    p_plus: PlanarPoint
    p_minus: PlanarPoint
    axis_before: str

    def validate(self) -> None:
        if self.axis_before not in ("real", "imaginary"):
            raise GeometryError(f"unknown axis {self.axis_before!r}")
        if not 0.0 < self.eps < math.pi / 8.0:
            raise GeometryError("neck eps must lie in (0, pi/8)")
        if not 0.0 < self.p_plus.r <= self.scale * (1.0 + 1e-12):
            raise GeometryError("neck points must lie inside the probe ball")
        gap = abs(self.p_minus.to_complex() - self.p_plus.to_complex().conjugate())
        if gap > 1e-9 * max(1.0, self.p_plus.r):
            raise GeometryError("p_minus must be the conjugate of p_plus")


@dataclass(frozen=True)
class SurgeryRecord:
    t: float
    neck: NeckSpec
    class_before: str
    class_after: str
    n_before: int
    n_after: int
    lam: float
    defect_after: float

    def validate(self) -> None:
        if self.n_after > self.n_before - 1:
            raise GeometryError("surgery must strictly decrease the crossing index")
        if self.class_after == self.class_before:
            raise GeometryError("surgery must flip the topological class")
        if not self.lam > 0.0:
            raise GeometryError("renormalization scale must be positive")
        if abs(self.defect_after) > 1e-8:
            raise GeometryError("post-surgery curve must be monotone")


def crossing_index(curve: ProfileCurve) -> int:
    """Transversal crossings with the right-angle cone, divided by four."""
    count = cone_intersections(curve, CONE_HALF_PI)[0]
    if count % 4 != 0:
        raise GeometryError(f"cone crossing count {count} is not a multiple of four")
    return count // 4


# ---------------------------------------------------------------------------
# neck detection
# ---------------------------------------------------------------------------


_MODE_QUARTER = {MODE_CHEKANOV_LR: MODE_CHEKANOV_UD,
                 MODE_CHEKANOV_UD: MODE_CHEKANOV_LR}


def _quarter_turn(curve: ProfileCurve, u: complex) -> ProfileCurve:
    """Rotate by an exact quarter turn; u must be +-1j."""
    return ProfileCurve(components=tuple(u * z for z in curve.components),
                        symmetry_class=curve.symmetry_class,
                        mode=_MODE_QUARTER.get(curve.mode, curve.mode),
                        strict=curve.strict)


def _sign_flips(y: np.ndarray) -> int:
    s = np.sign(y)
    s = s[s != 0.0]
    if s.size < 2:
        return 0
    return int(np.sum(s[1:] != s[:-1]))


def _pinch_axis(curve: ProfileCurve) -> str:
    """Axis crossed by the near-origin arcs.

    Counts real/imaginary axis sign changes over edges lying inside a ball
    that grows from 10x the inner radius until the counts disagree; falls
    back to the angular position of the innermost vertex.
    """
    min_r = curve.min_radius
    cap = 2.0 * curve.max_radius
    R = 10.0 * min_r
    while R <= cap:
        n_re = n_im = 0
        for z in curve.components:
            a = z
            b = np.roll(z, -1)
            inside = (np.abs(a) < R) & (np.abs(b) < R)
            if np.any(inside):
                ai, bi = a[inside], b[inside]
                n_re += int(np.sum(np.imag(ai) * np.imag(bi) < 0.0))
                n_im += int(np.sum(np.real(ai) * np.real(bi) < 0.0))
        if n_re != n_im:
            return "real" if n_re > n_im else "imaginary"
        R *= 2.0
    w = min((z[int(np.argmin(np.abs(z)))] for z in curve.components), key=abs)
    return "real" if abs(w.real) >= abs(w.imag) else "imaginary"


def detect_neck(state: FlowState, r: float, eps0: float,
                near_radius: float = 1e-2) -> NeckSpec | None:
    """Probe for a symmetric neck configuration near the origin.

    Returns None when the curve is not near-singular (inner radius at least
    near_radius) or the probe cone never meets it. The probe ball starts at
    radius r and doubles until hits appear, capped at twice the outer radius;
    the returned NeckSpec records the ball radius actually used.
    """
    curve = state.curve
    if curve.min_radius >= near_radius:
        return None
    axis = _pinch_axis(curve)
    work = curve if axis == "real" else _quarter_turn(curve, -1j)
    probe = FlowState(work, state.t)
    R = max(float(r), 1e-12)
    cap = 2.0 * curve.max_radius
    while True:
        found = scale_probe(probe, R, eps0)
        if found is not None:
            break
        if R >= cap:
            return None
        R = min(2.0 * R, cap)
    eps, hits = found
    back = 1.0 + 0.0j if axis == "real" else 1j
    for pt, _, _ in hits:
        w = complex(pt.x, pt.y) * back
        if w.real > 0.0 and w.imag > 0.0:
            return NeckSpec(scale=R, eps=float(eps),
                            p_plus=PlanarPoint.from_complex(w),
                            p_minus=PlanarPoint.from_complex(w.conjugate()),
                            axis_before=axis)
    return None


# ---------------------------------------------------------------------------
# the splice
# ---------------------------------------------------------------------------


def _cyclic_runs(mask: np.ndarray):
    """Maximal cyclic runs of True as (start, end) inclusive index pairs."""
    starts = np.nonzero(mask & ~np.roll(mask, 1))[0]
    ends = np.nonzero(mask & ~np.roll(mask, -1))[0]
    runs = []
    for s in starts:
        cand = ends[ends >= s]
        e = int(cand[0]) if cand.size else int(ends[0])
        runs.append((int(s), e))
    return runs


def _crosses_real_axis(z: np.ndarray, s: int, e: int) -> bool:
    # include the outside neighbors so a crossing on a cut edge still counts
    n = z.size
    count = (e - s) % n + 1
    idx = (s + np.arange(-1, count + 1)) % n
    return _sign_flips(np.imag(z[idx])) > 0


def _ball_crossing(a: complex, b: complex, r_x: float, exiting: bool) -> complex:
    ab = b - a
    c2 = (ab * ab.conjugate()).real
    c1 = 2.0 * (ab.conjugate() * a).real
    c0 = (a * a.conjugate()).real - r_x * r_x
    if c2 <= 0.0:
        raise SurgeryError("surgery-failed: degenerate edge at the excision radius")
    sq = math.sqrt(max(c1 * c1 - 4.0 * c2 * c0, 0.0))
    t = (-c1 + sq) / (2.0 * c2) if exiting else (-c1 - sq) / (2.0 * c2)
    return a + min(max(t, 0.0), 1.0) * ab


def _unit(w: complex) -> complex:
    m = abs(w)
    if m < 1e-300:
        raise SurgeryError("surgery-failed: zero tangent at a cut end")
    return w / m


def _cut_strands(z: np.ndarray, runs, r_x: float):
    """Open kept paths between excised runs, with cut points and tangents.

    Each strand starts at the ball-exit point of one run and ends at the
    ball-entry point of the next; the recorded directions are those of the
    original cut edges, so the splice can match tangents.
    """
    n = z.size
    runs = sorted(runs)
    out = []
    k = len(runs)
    for j in range(k):
        _, e_j = runs[j]
        s_n, _ = runs[(j + 1) % k]
        head = _ball_crossing(z[e_j], z[(e_j + 1) % n], r_x, exiting=True)
        tail = _ball_crossing(z[(s_n - 1) % n], z[s_n], r_x, exiting=False)
        count = (s_n - e_j - 1) % n
        idx = (e_j + 1 + np.arange(count)) % n
        out.append({
            "pts": np.concatenate(([head], z[idx], [tail])),
            "head": head, "head_dir": _unit(z[(e_j + 1) % n] - z[e_j]),
            "tail": tail, "tail_dir": _unit(z[s_n] - z[(s_n - 1) % n]),
        })
    return out


def _hermite(p0: complex, d0: complex, p1: complex, d1: complex,
             n: int) -> np.ndarray:
    """Interior samples of a cubic Hermite join with unit end directions.

    Tangent magnitude is half the chord: the Bezier control points then stay
    inside the convex sector spanned by the endpoints, which keeps the join
    clear of the diagonal cone.
    """
    s = np.arange(1, n + 1) / (n + 1.0)
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    m = 0.5 * abs(p1 - p0)
    return h00 * p0 + (m * h10) * d0 + h01 * p1 + (m * h11) * d1


def _splice_path(p_a: complex, d_a: complex, p_b: complex, d_b: complex,
                 r_x: float, eps: float) -> np.ndarray:
    """Connector from one cut end to the other across the imaginary axis.

    Hermite join, circular arc tangent at radius r_x/2 to the lines tilted
    eps/2 past the diagonals, Hermite join. Endpoints are not included. Built
    in the upper half plane; lower connectors are handled by conjugation.
    """
    if p_a.imag < 0.0:
        low = _splice_path(p_a.conjugate(), d_a.conjugate(),
                           p_b.conjugate(), d_b.conjugate(), r_x, eps)
        return np.conj(low)
    if p_a.real * p_b.real >= 0.0:
        raise SurgeryError("surgery-failed: connector endpoints on one side "
                           "of the flipped axis")
    alpha = 0.25 * math.pi + 0.5 * eps
    r2 = 0.5 * r_x
    center = 1j * (r2 / math.sin(alpha))
    rho = r2 * math.cos(alpha) / math.sin(alpha)
    q_right = r2 * cmath.exp(1j * alpha)
    q_left = complex(-q_right.real, q_right.imag)
    q_a, q_b = (q_right, q_left) if p_a.real > 0.0 else (q_left, q_right)
    th_a = cmath.phase(q_a - center)
    th_b = cmath.phase(q_b - center)
    # both angles lie in the lower half of the arc circle, so the linear
    # sweep runs through its bottom and crosses the imaginary axis once
    th = np.linspace(th_a, th_b, 49)
    arc = center + rho * np.exp(1j * th)
    sgn = 1.0 if th_b > th_a else -1.0
    dir_a = sgn * 1j * cmath.exp(1j * th_a)
    dir_b = sgn * 1j * cmath.exp(1j * th_b)
    h1 = _hermite(p_a, d_a, q_a, dir_a, 24)
    h2 = _hermite(q_b, dir_b, p_b, d_b, 24)
    return np.concatenate([h1, arc, h2])


# resampling starts from vertex 0, so remeshing keeps the vertex set
# symmetric only when vertex 0 sits on the symmetry axis (flow preserves
# this: an on-axis vertex of a symmetric curve moves along the axis). The
# splice starts components at a cut point, so they are re-anchored first.
_ANCHOR_AXIS = {MODE_CLIFFORD: "real", MODE_CHEKANOV_LR: "real",
                MODE_CHEKANOV_UD: "imaginary"}


def _anchor_component(z: np.ndarray, axis: str, with_antipode: bool) -> np.ndarray:
    """Rotate vertex order so vertex 0 lies exactly on the given axis,
    inserting the interpolated crossing when no vertex is on it.

    The outermost crossing is used (ties broken toward the positive side),
    which picks mirror-image anchors on mirror-image components. For a
    single-component curve the antipode is inserted too, so the half-turn
    vertex pairing stays exact.
    """
    f = np.imag(z) if axis == "real" else np.real(z)
    n = z.size
    zn = np.roll(z, -1)
    fn = np.roll(f, -1)
    best = None
    for i in range(n):
        if f[i] == 0.0:
            pt = z[i]
            split = False
        elif f[i] * fn[i] < 0.0:
            t = f[i] / (f[i] - fn[i])
            w = z[i] + t * (zn[i] - z[i])
            pt = complex(w.real, 0.0) if axis == "real" else complex(0.0, w.imag)
            split = True
        else:
            continue
        coord = pt.real if axis == "real" else pt.imag
        key = (abs(pt), coord)
        if best is None or key > best[0]:
            best = (key, i, pt, split)
    if best is None:
        raise SurgeryError(f"surgery-failed: no {axis}-axis crossing to anchor on")
    _, i, pt, split = best
    if not split:
        return np.roll(z, -i)
    rolled = np.roll(z, -(i + 1))
    if not with_antipode:
        return np.concatenate(([pt], rolled))
    half = n // 2
    return np.concatenate(([pt], rolled[:half], [-pt], rolled[half:]))


def _reanchored(curve: ProfileCurve) -> ProfileCurve:
    axis = _ANCHOR_AXIS[curve.mode]
    single = len(curve.components) == 1
    comps = tuple(_anchor_component(z, axis, single) for z in curve.components)
    return curve.copy_with(components=comps)


def _dedupe(z: np.ndarray) -> np.ndarray:
    keep = np.ones(z.size, dtype=bool)
    keep[1:] = np.abs(np.diff(z)) > 1e-12
    if abs(z[-1] - z[0]) <= 1e-12:
        keep[-1] = False
    return z[keep]


def _stitch(strands, r_x: float, eps: float):
    """Join cut strands with one connector per half plane and walk the
    resulting cycles into closed components."""
    links = {}
    for sign_y, name in ((1.0, "upper"), (-1.0, "lower")):
        t_idx = [i for i, s in enumerate(strands) if s["tail"].imag * sign_y > 0.0]
        h_idx = [i for i, s in enumerate(strands) if s["head"].imag * sign_y > 0.0]
        if len(t_idx) != 1 or len(h_idx) != 1:
            raise SurgeryError("surgery-failed: cut ends are not split one "
                               f"outgoing and one incoming in the {name} half plane")
        a = strands[t_idx[0]]
        b = strands[h_idx[0]]
        path = _splice_path(a["tail"], a["tail_dir"], b["head"], b["head_dir"],
                            r_x, eps)
        links[t_idx[0]] = (path, h_idx[0])
    comps = []
    visited = set()
    for start in range(len(strands)):
        if start in visited:
            continue
        parts = []
        cur = start
        while True:
            visited.add(cur)
            parts.append(strands[cur]["pts"])
            path, nxt = links[cur]
            parts.append(path)
            if nxt == start:
                break
            cur = nxt
        comps.append(_dedupe(np.concatenate(parts)))
    return comps


def _splice_real_pinch(curve: ProfileCurve, r_x: float, eps: float):
    """Excise the real-axis pinch inside radius r_x and reconnect across the
    imaginary axis. Returns the new component arrays."""
    strands = []
    closed = []
    n_excised = 0
    for z in curve.components:
        inside = np.abs(z) < r_x
        if not np.any(inside):
            closed.append(z.copy())
            continue
        if np.all(inside):
            raise SurgeryError("surgery-failed: a whole component sits inside "
                               "the excision ball")
        runs = [(s, e) for s, e in _cyclic_runs(inside)
                if _crosses_real_axis(z, s, e)]
        if not runs:
            closed.append(z.copy())
            continue
        n_excised += len(runs)
        strands.extend(_cut_strands(z, runs, r_x))
    if n_excised != 2:
        raise SurgeryError("surgery-failed: expected one symmetric pair of "
                           f"pinch strands, found {n_excised}")
    return tuple(_stitch(strands, r_x, eps)) + tuple(closed)


def neck_to_neck(curve: ProfileCurve, neck: NeckSpec,
                 config: FlowConfig | None = None) -> ProfileCurve:
    """Excise the pinch strands and splice in arcs crossing the flipped axis.

    The output is re-symmetrized and remeshed; its crossings with the
    right-angle cone drop by at least four and its topological class flips.
    Raises SurgeryError when the configuration does not look like a single
    symmetric neck or when the replacement arcs intersect the remainder.
    """
    neck.validate()
    n_before = cone_intersections(curve, CONE_HALF_PI)[0]
    work = curve if neck.axis_before == "real" else _quarter_turn(curve, -1j)
    comps = _splice_real_pinch(work, neck.p_plus.r, neck.eps)
    if neck.axis_before == "imaginary":
        comps = tuple(1j * z for z in comps)
    if len(comps) not in (1, 2):
        raise SurgeryError(f"surgery-failed: splice produced {len(comps)} components")
    guess = CLIFFORD if len(comps) == 1 else CHEKANOV
    try:
        out = symmetrize(ProfileCurve(components=comps, symmetry_class=guess))
    except GeometryError as exc:
        raise SurgeryError(f"surgery-failed: {exc}") from None
    for z in out.components:
        if _self_intersects(z):
            raise SurgeryError("surgery-failed: spliced component self-intersects")
    if len(out.components) == 2 and _polylines_intersect(*out.components):
        raise SurgeryError("surgery-failed: spliced components intersect")
    if config is None:
        total = sum(z.size for z in curve.components)
        n_target = max(256, total // len(comps))
        config = FlowConfig(vertices_per_component=n_target + n_target % 2)
    out = symmetrize(remesh(_reanchored(out), config))
    out.validate()
    if classify(out) == curve.symmetry_class:
        raise SurgeryError("surgery-failed: topological class did not flip")
    n_after = cone_intersections(out, CONE_HALF_PI)[0]
    if n_after > n_before - 4:
        raise SurgeryError("surgery-failed: cone crossings went "
                           f"{n_before} -> {n_after}")
    return out


# ---------------------------------------------------------------------------
# renormalization and the surgery loop
# ---------------------------------------------------------------------------


def _homothety(curve: ProfileCurve, lam: float) -> ProfileCurve:
    return curve.copy_with(components=tuple(lam * z for z in curve.components))


def monotone_renormalize(curve: ProfileCurve):
    """Radial rescale w -> lam w to the monotone area target.

    The enclosed area of a winding-one curve grows monotonically with lam, so
    plain bracketing works; the disc area of a two-component curve rises to a
    single hump and falls back to zero, so the root is taken on the rising
    branch of a coarse log-scan. Returns (rescaled curve, lam); cone crossing
    counts are unchanged because a homothety fixes lines through the origin.
    """
    n0 = cone_intersections(curve, CONE_HALF_PI)[0]
    target = monotone_target(curve.symmetry_class)

    def defect_of(lam: float) -> float:
        return disc_area(_homothety(curve, lam)) - target

    if abs(defect_of(1.0)) <= 1e-12:
        return curve, 1.0
    if curve.symmetry_class == CLIFFORD:
        lo = hi = 1.0
        while defect_of(lo) > 0.0:
            lo *= 0.5
            if lo < 1e-9:
                raise SurgeryError("renormalization-failed: no lower bracket")
        while defect_of(hi) < 0.0:
            hi *= 2.0
            if hi > 1e9:
                raise SurgeryError("renormalization-failed: no upper bracket")
        lam = brentq(defect_of, lo, hi, xtol=1e-15, rtol=8.9e-16)
    else:
        grid = np.exp(np.linspace(math.log(1e-3), math.log(1e3), 121))
        vals = np.array([defect_of(g) for g in grid])
        k = int(np.argmax(vals))
        if vals[k] < 0.0:
            raise SurgeryError("renormalization-failed: area target unreachable")
        j = k
        while j > 0 and vals[j] > 0.0:
            j -= 1
        if vals[j] > 0.0:
            raise SurgeryError("renormalization-failed: no bracket below the peak")
        lam = brentq(defect_of, grid[j], grid[k], xtol=1e-15, rtol=8.9e-16)
    out = _homothety(curve, float(lam))
    if abs(disc_area(out) - target) > 1e-10:
        raise SurgeryError("renormalization-failed: residual defect above 1e-10")
    if cone_intersections(out, CONE_HALF_PI)[0] != n0:
        raise SurgeryError("renormalization-failed: crossing count changed")
    return out, float(lam)


def _attempt_surgery(state: FlowState, config: FlowConfig, eps0: float):
    """Try the surgery over a ladder of probe widths.

    Wider cones give larger excision radii (used when the hits sit so close
    to the origin that the spliced curve would re-trigger detection at once);
    narrower cones shrink the excision (used when the splice self-intersects).
    Returns (neck, new curve) or (None, reason).
    """
    cap = 0.95 * math.pi / 8.0
    ladder = [eps0, min(2.0 * eps0, cap), min(4.0 * eps0, cap),
              0.5 * eps0, 0.25 * eps0, 0.125 * eps0]
    eps_seen = set()
    ladder = [e for e in ladder if not (e in eps_seen or eps_seen.add(e))]
    floor = 8.0 * config.singular_radius
    reason = "no neck found"
    for relax in (False, True):
        for e0 in ladder:
            neck = detect_neck(state, 10.0 * state.min_radius, e0,
                               near_radius=10.0 * config.singular_radius)
            if neck is None:
                continue
            if not relax and neck.p_plus.r < floor:
                reason = "probe hits below the resolvable scale"
                continue
            try:
                return neck, neck_to_neck(state.curve, neck, config)
            except SurgeryError as exc:
                reason = str(exc)
    return None, reason


def flow_with_surgery(state: FlowState, config: FlowConfig,
                      collect: bool = False, eps0: float = 0.1):
    """Alternate flow legs and neck-to-neck surgeries until convergence.

    Returns (final state, surgery records), plus the concatenated trajectory
    samples when collect is set. Every surgery strictly decreases the
    crossing index and flips the class; a violation is fatal. A leg that
    halts near the origin (time step exhausted inside a pinch) is treated
    like a detected singularity. When no surgery is possible the final state
    carries a Halted event explaining why.
    """
    config.validate()
    records: list[SurgeryRecord] = []
    trajectory = []
    while True:
        state, samples, events = run(state, config)
        trajectory.extend(samples)
        terminal = events[-1].kind if events else None
        if terminal == CONVERGED:
            break
        near = state.min_radius < 10.0 * config.singular_radius
        singular = terminal == SINGULARITY_DETECTED or (terminal == HALTED and near)
        if not singular:
            break
        if len(records) >= 16:
            raise GeometryError("invariant-violation: surgery cascade did not "
                                "terminate")
        neck, result = _attempt_surgery(state, config, eps0)
        if neck is None:
            state = FlowState(state.curve, state.t, state.step_count,
                              state.event_log + (FlowEvent(HALTED, state.t, {
                                  "reason": f"surgery-failed: {result}"}),))
            break
        n_before = crossing_index(state.curve)
        n_after = crossing_index(result)
        if n_after > n_before - 1:
            raise GeometryError("invariant-violation: crossing index went "
                                f"{n_before} -> {n_after}")
        class_before = state.curve.symmetry_class
        result, lam = monotone_renormalize(result)
        record = SurgeryRecord(
            t=state.t, neck=neck, class_before=class_before,
            class_after=result.symmetry_class, n_before=n_before,
            n_after=n_after, lam=lam,
            defect_after=abs(monotone_defect(result).defect))
        record.validate()
        records.append(record)
        events = (
            FlowEvent(SCALE_PROBE_HIT, state.t, {
                "eps": neck.eps, "scale": neck.scale,
                "radius": neck.p_plus.r, "axis": neck.axis_before}),
            FlowEvent(SURGERY_PERFORMED, state.t, {
                "n_before": n_before, "n_after": n_after, "lam": lam,
                "class_after": result.symmetry_class}),
        )
        state = FlowState(result, state.t, state.step_count,
                          state.event_log + events)
    if collect:
        return state, records, trajectory
    return state, records


__all__ = [
    "NeckSpec", "SurgeryRecord", "SurgeryError",
    "crossing_index", "detect_neck", "neck_to_neck",
    "monotone_renormalize", "flow_with_surgery",
]
