"""Explicit evolution of equivariant profile curves by their normal speed.

Each vertex moves by V nu with nu the leftward unit normal and

    V = (1/2)(1+2r^2)^2 ( k - h(r) <gamma, nu> / r^2 ),
    h(r) = (1-4r^2)/(1+2r^2),

so an origin-centered circle obeys dr/dt = -(1+2r^2)(1-r^2)/r. Curvature is
the circumradius reciprocal of vertex triples and the normal bisects the edge
directions, which makes round circles exactly stationary at r = 1 for any
vertex count. Time stepping is forward Euler under a parabolic step bound;
meshes are redistributed adaptively (denser where curvature is large or the
radius is small) and the discrete symmetries are re-imposed periodically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .curves import (
    CHEKANOV,
    CLIFFORD,
    MIN_VERTEX_RADIUS,
    MODE_CHEKANOV_UD,
    ConeSpec,
    GeometryError,
    PlanarPoint,
    ProfileCurve,
    cone_intersections,
    standard_cone,
    symmetrize,
    unit_circle_crossings,
)
from .diagnostics import (
    disc_area,
    max_opening_angle,
    monotone_defect,
    monotone_target,
    triangle_patch,
)

SINGULARITY_DETECTED = "SingularityDetected"
SCALE_PROBE_HIT = "ScaleProbeHit"
GRAPHICAL_ATTAINED = "GraphicalAttained"
CONE_COUNT_DROPPED = "ConeCountDropped"
SURGERY_PERFORMED = "SurgeryPerformed"
CONVERGED = "Converged"
HALTED = "Halted"

CONE_HALF_PI = standard_cone(math.pi / 2.0)
CONE_TWO_THIRDS = standard_cone(2.0 * math.pi / 3.0)


class ResolutionExhausted(GeometryError):
    """Raised when the stable time step collapses below the floor."""


@dataclass(frozen=True)
class FlowEvent:
    kind: str
    t: float
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FlowConfig:
    vertices_per_component: int = 1024
    cfl: float = 0.2
    remesh_ratio: float = 2.0
    singular_radius: float = 1e-3
    curvature_resolution_factor: float = 0.1
    max_time: float = math.inf
    # sampling and monitoring
    sample_stride: int = 256
    curve_stride: int = 16
    convergence_speed: float = 1e-6
    max_steps: int = 10_000_000
    monotone_projection: str = "auto"  # "auto" | "on" | "off"
    monitor_cones: bool = True
    monitor_defect: bool = True
    monitor_opening: bool = False
    min_dt: float = 1e-14
    theta_max: float = 0.2
    radius_resolution: float = 0.35
    symmetrize_stride: int = 16

    def validate(self) -> None:
        if not (0.0 < self.cfl <= 0.5):
            raise GeometryError("cfl must lie in (0, 0.5]")
        if self.remesh_ratio <= 1.0:
            raise GeometryError("remesh_ratio must exceed 1")
        for name in ("singular_radius", "curvature_resolution_factor",
                     "convergence_speed", "min_dt", "theta_max",
                     "radius_resolution"):
            if getattr(self, name) <= 0.0:
                raise GeometryError(f"{name} must be positive")
        if self.vertices_per_component < 16:
            raise GeometryError("vertices_per_component must be at least 16")
        if self.monotone_projection not in ("auto", "on", "off"):
            raise GeometryError("monotone_projection must be auto/on/off")


@dataclass(frozen=True)
class FlowState:
    curve: ProfileCurve
    t: float = 0.0
    step_count: int = 0
    event_log: tuple = ()

    @property
    def min_radius(self) -> float:
        return self.curve.min_radius

    @property
    def max_curvature(self) -> float:
        return float(max(np.max(np.abs(_geometry(z)[2]))
                         for z in self.curve.components))


@dataclass(frozen=True)
class SingularityReport:
    t_detected: float
    at_origin: bool
    cone_deviation: float
    type_one_ratio: float
    estimated_T: float


@dataclass(frozen=True)
class FlowSample:
    """Scalar monitors at one sampling time; curve snapshots are retained on a
    coarser stride (curve is None in between)."""

    t: float
    min_r: float
    max_k: float
    area_m2: float
    area_m4: float
    defect: float
    n_cone: int
    psi_max: float
    max_speed: float
    n_cone23: int = -1
    n_circle: int = -1
    triangle_area: float = math.nan
    curve: ProfileCurve | None = None


CSV_HEADER = "t,min_r,max_k,area_m2,area_m4,defect,n_cone,psi_max,max_speed"


def sample_csv_row(s: FlowSample) -> str:
    vals = [s.t, s.min_r, s.max_k, s.area_m2, s.area_m4, s.defect]
    cells = [f"{v:.17g}" for v in vals]
    cells.append(str(s.n_cone))
    cells.append(f"{s.psi_max:.17g}")
    cells.append(f"{s.max_speed:.17g}")
    return ",".join(cells)


# ---------------------------------------------------------------------------
# discrete geometry
# ---------------------------------------------------------------------------


def _geometry(z: np.ndarray):
    """Edges, edge lengths, Menger curvature, leftward normal, dual length."""
    e = np.roll(z, -1) - z
    le = np.abs(e)
    if np.min(le) <= 0.0:
        raise GeometryError("degenerate edge")
    ep = np.roll(e, 1)
    lp = np.roll(le, 1)
    cross = np.imag(np.conj(ep) * e)
    chord = np.abs(ep + e)
    k = 2.0 * cross / (lp * le * np.maximum(chord, 1e-300))
    tt = ep / lp + e / le
    at = np.abs(tt)
    if np.min(at) < 1e-12:
        raise GeometryError("degenerate-tangent: edge reversal at a vertex")
    nu = 1j * tt / at
    ds = 0.5 * (lp + le)
    return e, le, k, nu, ds


def _component_velocity(z: np.ndarray):
    r = np.abs(z)
    if np.min(r) < MIN_VERTEX_RADIUS:
        raise GeometryError("near-origin: vertex radius below 1e-12")
    _, le, k, nu, _ = _geometry(z)
    r2 = r * r
    g = np.real(np.conj(z) * nu)
    h = (1.0 - 4.0 * r2) / (1.0 + 2.0 * r2)
    diffusivity = 0.5 * (1.0 + 2.0 * r2) ** 2
    V = diffusivity * (k - h * g / r2)
    return V, nu, le, diffusivity


def normal_velocity(curve: ProfileCurve):
    """Per-vertex normal speed of each component (positive toward the
    leftward normal of the stored orientation)."""
    return tuple(_component_velocity(z)[0] for z in curve.components)


def max_speed(curve: ProfileCurve) -> float:
    return float(max(np.max(np.abs(V)) for V in normal_velocity(curve)))


# ---------------------------------------------------------------------------
# adaptive remesh
# ---------------------------------------------------------------------------


def _target_spacing(z: np.ndarray, k: np.ndarray, le: np.ndarray,
                    config: FlowConfig) -> np.ndarray:
    n = z.size
    L = float(np.sum(le))
    s_max = 2.0 * L / n
    r = np.abs(z)
    s = np.minimum(s_max, config.radius_resolution * r)
    s = np.minimum(s, config.theta_max / np.maximum(np.abs(k), 1e-12))
    return np.maximum(s, 1e-7 * s_max)


def _needs_remesh(le: np.ndarray, s: np.ndarray, ratio: float) -> bool:
    target = 0.5 * (s + np.roll(s, -1))
    q = le / target
    return bool(np.max(q) > ratio or np.min(q) < 1.0 / ratio)


def _resample(z: np.ndarray, s: np.ndarray, n_new: int) -> np.ndarray:
    le = np.abs(np.roll(z, -1) - z)
    target = 0.5 * (s + np.roll(s, -1))
    w = le / target
    cw = np.concatenate(([0.0], np.cumsum(w)))
    total = cw[-1]
    tj = total * np.arange(n_new) / n_new
    idx = np.clip(np.searchsorted(cw, tj, side="right") - 1, 0, z.size - 1)
    frac = (tj - cw[idx]) / w[idx]
    zn = np.roll(z, -1)
    return z[idx] + frac * (zn[idx] - z[idx])


def remesh(curve: ProfileCurve, config: FlowConfig) -> ProfileCurve:
    comps = []
    for z in curve.components:
        _, le, k, _, _ = _geometry(z)
        s = _target_spacing(z, k, le, config)
        comps.append(_resample(z, s, config.vertices_per_component))
    return curve.copy_with(components=tuple(comps))


# ---------------------------------------------------------------------------
# monotone projection
# ---------------------------------------------------------------------------


def _scaled(curve: ProfileCurve, lam: float) -> ProfileCurve:
    return curve.copy_with(components=tuple(lam * z for z in curve.components))


def monotone_project(curve: ProfileCurve, iterations: int = 2) -> ProfileCurve:
    """Small homothety pinning the distinguished disc area to its monotone
    value; counteracts the exponential drift of the area mode."""
    target = monotone_target(curve.symmetry_class)
    for _ in range(iterations):
        a = disc_area(curve)
        err = target - a
        if abs(err) < 1e-15:
            break
        # dA/dlambda at lambda=1 from the edge midpoint rule
        idx = 0 if curve.symmetry_class == CLIFFORD else None
        if idx is None:
            from .diagnostics import chekanov_disc_component
            idx = chekanov_disc_component(curve)
        z = curve.components[idx]
        dphi = np.angle(np.roll(z, -1) / z)
        rm = 0.5 * (np.abs(z) + np.abs(np.roll(z, -1)))
        deriv = float(np.sum(dphi * 2.0 * rm * rm / (1.0 + 2.0 * rm * rm) ** 2))
        if deriv <= 0.0:
            break
        curve = _scaled(curve, 1.0 + err / deriv)
    return curve


def _resolve_projection(curve: ProfileCurve, config: FlowConfig) -> bool:
    if config.monotone_projection == "on":
        return True
    if config.monotone_projection == "off":
        return False
    try:
        return abs(monotone_defect(curve).defect) < 1e-6
    except GeometryError:
        return False


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def _advance_once(curve: ProfileCurve, config: FlowConfig, t_remaining: float):
    """One Euler step; returns (new components tuple, dt, remeshed flag)."""
    comps = []
    dt = math.inf
    fields = []
    for z in curve.components:
        V, nu, le, diffusivity = _component_velocity(z)
        h_local = np.minimum(le, np.roll(le, 1))
        dt = min(dt, float(np.min(h_local * h_local / diffusivity)))
        fields.append((V, nu, le))
    dt = config.cfl * dt
    if dt < config.min_dt:
        raise ResolutionExhausted("resolution-exhausted: step size below floor")
    dt = min(dt, t_remaining)
    for z, (V, nu, _) in zip(curve.components, fields):
        comps.append(z + dt * V * nu)
    moved = curve.copy_with(components=tuple(comps))
    remesh_due = False
    for z in moved.components:
        _, le, k, _, _ = _geometry(z)
        s = _target_spacing(z, k, le, config)
        if _needs_remesh(le, s, config.remesh_ratio):
            remesh_due = True
            break
    if remesh_due:
        moved = remesh(moved, config)
    return moved, dt, remesh_due


def step(state: FlowState, config: FlowConfig) -> FlowState:
    """Single forward Euler step with remeshing and symmetrization."""
    config.validate()
    remaining = config.max_time - state.t
    if remaining <= 0.0:
        return state
    moved, dt, _ = _advance_once(state.curve, config, remaining)
    if moved.strict:
        moved = symmetrize(moved)
    if _resolve_projection(state.curve, config):
        moved = monotone_project(moved)
    return replace(state, curve=moved, t=state.t + dt,
                   step_count=state.step_count + 1)


# ---------------------------------------------------------------------------
# monitors and sampling
# ---------------------------------------------------------------------------


def _component_min_radius(curve: ProfileCurve) -> float:
    return float(min(np.min(np.abs(z)) for z in curve.components))


def _areas(curve: ProfileCurve):
    try:
        a = disc_area(curve)
    except GeometryError:
        return math.nan, math.nan
    if curve.symmetry_class == CLIFFORD:
        return math.pi - a, a
    return a, math.pi - a


def _opening(curve: ProfileCurve):
    axis = "imaginary" if curve.mode == MODE_CHEKANOV_UD else "real"
    try:
        psi, _ = max_opening_angle(curve, axis)
        patch = triangle_patch(curve, axis)
        return psi, patch.area
    except GeometryError:
        return math.nan, math.nan


def make_sample(curve: ProfileCurve, t: float, config: FlowConfig,
                keep_curve: bool) -> FlowSample:
    minr = _component_min_radius(curve)
    maxk = 0.0
    vmax = 0.0
    for z in curve.components:
        V, _, _, _ = _component_velocity(z)
        _, _, k, _, _ = _geometry(z)
        maxk = max(maxk, float(np.max(np.abs(k))))
        vmax = max(vmax, float(np.max(np.abs(V))))
    area_m2, area_m4 = _areas(curve)
    defect = math.nan
    if config.monitor_defect:
        try:
            defect = monotone_defect(curve).defect
        except GeometryError:
            pass
    n_cone = n_23 = n_circ = -1
    if config.monitor_cones:
        n_cone = cone_intersections(curve, CONE_HALF_PI)[0]
        n_23 = cone_intersections(curve, CONE_TWO_THIRDS)[0]
        n_circ = unit_circle_crossings(curve)
    psi = tri = math.nan
    if config.monitor_opening and curve.symmetry_class == CHEKANOV:
        psi, tri = _opening(curve)
    return FlowSample(
        t=t, min_r=minr, max_k=maxk, area_m2=area_m2, area_m4=area_m4,
        defect=defect, n_cone=n_cone, psi_max=psi, max_speed=vmax,
        n_cone23=n_23, n_circle=n_circ, triangle_area=tri,
        curve=curve if keep_curve else None)


def _is_graphical(curve: ProfileCurve) -> bool:
    if curve.symmetry_class != CLIFFORD or len(curve.components) != 1:
        return False
    if abs(curve.windings()[0]) != 1:
        return False
    z = curve.components[0]
    dphi = np.angle(np.roll(z, -1) / z)
    return bool(np.all(dphi > 0.0) or np.all(dphi < 0.0))


# ---------------------------------------------------------------------------
# singularity detection
# ---------------------------------------------------------------------------


def _estimate_vanishing_time(history, t: float, min_r: float) -> float:
    """Least-squares linear fit of min_r^2 against t over trailing samples."""
    pts = history[-16:]
    if len(pts) >= 4:
        ts = np.array([p[0] for p in pts])
        r2 = np.array([p[1] ** 2 for p in pts])
        A = np.vstack([ts, np.ones_like(ts)]).T
        slope, intercept = np.linalg.lstsq(A, r2, rcond=None)[0]
        if slope < 0.0:
            return float(-intercept / slope)
    return t + 0.5 * min_r * min_r


def detect_singularity(state: FlowState, config: FlowConfig,
                       history=None) -> SingularityReport | None:
    """Fires when the curve dips below the singular radius or the curvature
    outruns the mesh near the origin; reports cone alignment and rate data."""
    curve = state.curve
    min_r = _component_min_radius(curve)
    near = 10.0 * config.singular_radius
    fired = min_r < config.singular_radius
    max_k = 0.0
    if not fired:
        for z in curve.components:
            r = np.abs(z)
            _, _, k, _, ds = _geometry(z)
            sel = r < near
            if np.any(sel) and np.max(np.abs(k[sel]) * ds[sel]) > \
                    1.0 / config.curvature_resolution_factor:
                fired = True
                break
    if not fired:
        return None
    for z in curve.components:
        _, _, k, _, _ = _geometry(z)
        max_k = max(max_k, float(np.max(np.abs(k))))
    max_r = float(max(np.max(np.abs(z)) for z in curve.components))
    at_origin = min_r < config.singular_radius and max_r > near
    deviation = math.pi / 4.0
    if at_origin:
        angles = []
        for z in curve.components:
            r = np.abs(z)
            sel = (r >= 3.0 * min_r) & (r <= 10.0 * min_r)
            if np.any(sel):
                angles.append(np.angle(z[sel]))
        if angles:
            phi = np.concatenate(angles)
            # distance to the nearest diagonal direction
            d = np.abs((phi - math.pi / 4.0 + math.pi / 4.0)
                       % (math.pi / 2.0) - math.pi / 4.0)
            deviation = float(np.max(d))
    t_est = _estimate_vanishing_time(history or [], state.t, min_r)
    ratio = (t_est - state.t) * max_k * max_k
    return SingularityReport(
        t_detected=state.t, at_origin=at_origin, cone_deviation=deviation,
        type_one_ratio=ratio, estimated_T=t_est)


# ---------------------------------------------------------------------------
# scale probe
# ---------------------------------------------------------------------------


def _clipped_cone_hits(curve: ProfileCurve, R: float, eps: float):
    """Intersections of the curve restricted to the ball of radius R with the
    cone of opening pi/2 + 2 eps."""
    hits = []
    for theta in (math.pi / 4.0 + eps, -(math.pi / 4.0 + eps)):
        u = complex(math.cos(theta), math.sin(theta))
        for ci, z in enumerate(curve.components):
            a = z
            b = np.roll(z, -1)
            e = b - a
            # clip the edge to the closed ball |w| <= R
            c2 = np.abs(e) ** 2
            c1 = 2.0 * np.real(np.conj(e) * a)
            c0 = np.abs(a) ** 2 - R * R
            disc = c1 * c1 - 4.0 * c2 * c0
            ok = disc >= 0.0
            sq = np.sqrt(np.maximum(disc, 0.0))
            t0 = np.clip((-c1 - sq) / (2.0 * np.maximum(c2, 1e-300)), 0.0, 1.0)
            t1 = np.clip((-c1 + sq) / (2.0 * np.maximum(c2, 1e-300)), 0.0, 1.0)
            ok &= t1 > t0
            d = np.imag(a * np.conj(u))
            de = np.imag(e * np.conj(u))
            da = d + t0 * de
            db = d + t1 * de
            crossing = ok & (da * db <= 0.0) & ((da != 0.0) | (db != 0.0))
            for i in np.nonzero(crossing)[0]:
                tden = de[i]
                tc = t0[i] if tden == 0.0 else -d[i] / tden
                tc = min(max(tc, t0[i]), t1[i])
                w = a[i] + tc * e[i]
                hits.append((PlanarPoint(float(w.real), float(w.imag)),
                             ci, float(i + tc)))
    hits.sort(key=lambda h: (h[0].r, h[1], h[2]))
    return hits


def scale_probe(state: FlowState, R: float, eps0: float):
    """Largest eps below eps0 whose widened cone still meets the curve inside
    the ball of radius R; scanned on a 32-point grid, refined by bisection."""
    if not (0.0 < eps0 < math.pi / 8.0):
        raise GeometryError("eps0 must lie in (0, pi/8)")
    curve = state.curve

    def hit(eps: float) -> bool:
        return bool(_clipped_cone_hits(curve, R, eps))

    grid = [eps0 * j / 32.0 for j in range(1, 33)]
    found = None
    for j in range(len(grid) - 1, -1, -1):
        if hit(grid[j]):
            found = j
            break
    if found is None:
        return None
    lo = grid[found]
    if found < len(grid) - 1:
        hi = grid[found + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if hit(mid):
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
    return lo, tuple(_clipped_cone_hits(curve, R, lo))


def intersection_monitor(trajectory, cone: ConeSpec):
    """Cone crossing counts along the stored curve snapshots."""
    out = []
    for s in trajectory:
        if s.curve is None:
            continue
        out.append((s.t, cone_intersections(s.curve, cone)[0]))
    return out


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def run(state: FlowState, config: FlowConfig):
    """Flow until max_time, convergence, or singularity detection.

    Returns (final state, trajectory samples, new events). Events are also
    appended to the state's event log.
    """
    config.validate()
    curve = symmetrize(state.curve) if state.curve.strict else state.curve
    t = state.t
    steps = state.step_count
    project = _resolve_projection(curve, config)
    samples: list[FlowSample] = []
    events: list[FlowEvent] = []
    history: list[tuple] = []
    prev_counts = None
    graphical_seen = False
    halt_reason = None
    since_symmetrize = 0
    sample_index = 0

    while True:
        keep = (sample_index % config.curve_stride) == 0
        try:
            smp = make_sample(curve, t, config, keep)
        except GeometryError as exc:
            events.append(FlowEvent(HALTED, t, {"reason": str(exc)}))
            break
        samples.append(smp)
        sample_index += 1
        history.append((t, smp.min_r))
        if config.monitor_cones and prev_counts is not None:
            for label, now, before in (
                    ("half_pi", smp.n_cone, prev_counts[0]),
                    ("two_thirds", smp.n_cone23, prev_counts[1]),
                    ("unit_circle", smp.n_circle, prev_counts[2])):
                if 0 <= now < before:
                    events.append(FlowEvent(CONE_COUNT_DROPPED, t, {
                        "probe": label, "from": before, "to": now}))
        prev_counts = (smp.n_cone, smp.n_cone23, smp.n_circle)
        if not graphical_seen and _is_graphical(curve):
            graphical_seen = True
            events.append(FlowEvent(GRAPHICAL_ATTAINED, t, {}))
        probe_state = FlowState(curve, t, steps, state.event_log)
        report = detect_singularity(probe_state, config, history)
        if report is not None:
            events.append(FlowEvent(SINGULARITY_DETECTED, t, {
                "report": report}))
            break
        if smp.max_speed < config.convergence_speed:
            events.append(FlowEvent(CONVERGED, t, {
                "max_speed": smp.max_speed}))
            break
        if t >= config.max_time:
            break
        if steps >= config.max_steps:
            events.append(FlowEvent(HALTED, t, {"reason": "max-steps"}))
            break
        try:
            for _ in range(config.sample_stride):
                curve, dt, remeshed = _advance_once(curve, config,
                                                    config.max_time - t)
                t += dt
                steps += 1
                since_symmetrize += 1
                if curve.strict and (remeshed or
                                     since_symmetrize >= config.symmetrize_stride):
                    curve = symmetrize(curve)
                    since_symmetrize = 0
                if project:
                    curve = monotone_project(curve)
                if t >= config.max_time or steps >= config.max_steps:
                    break
                if _component_min_radius(curve) < config.singular_radius:
                    break
        except ResolutionExhausted as exc:
            halt_reason = str(exc)
        except GeometryError as exc:
            halt_reason = str(exc)
        if halt_reason is not None:
            try:
                samples.append(make_sample(curve, t, config, True))
            except GeometryError:
                pass
            events.append(FlowEvent(HALTED, t, {"reason": halt_reason}))
            break

    final = FlowState(curve, t, steps,
                      event_log=state.event_log + tuple(events))
    return final, samples, events


__all__ = [
    "FlowEvent", "FlowConfig", "FlowState", "FlowSample",
    "SingularityReport", "ResolutionExhausted",
    "normal_velocity", "max_speed", "step", "run",
    "detect_singularity", "scale_probe", "intersection_monitor",
    "remesh", "monotone_project", "make_sample", "sample_csv_row",
    "CSV_HEADER",
    "SINGULARITY_DETECTED", "SCALE_PROBE_HIT", "GRAPHICAL_ATTAINED",
    "CONE_COUNT_DROPPED", "SURGERY_PERFORMED", "CONVERGED", "HALTED",
]
