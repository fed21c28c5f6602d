"""Reeb trajectory integration with boundary event detection.

Trajectories solve dx/dt = +-v_beta(x) with an adaptive RK45 and per-step
dense output. Events are roots or near-zero extrema of t -> h(x(t)),
refined by bisection and Newton; the tangency order at an event comes from
the Lie tower of h along the field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import RK45

from .errors import AmbiguousTangency, StepFailure
from .scene import ContactScene

__all__ = [
    "HitEvent", "Trajectory", "CausalityPair", "FlowPath",
    "integrate", "next_boundary_hit", "trajectory_from_entry",
    "causality_map", "flow_point", "property_a_check", "waterfall_sample",
    "classify_start",
]


@dataclass
class HitEvent:
    point: np.ndarray
    time: float
    multiplicity: int
    crossing: bool


@dataclass
class FlowPath:
    """Integration record: sample polyline plus the boundary events met."""

    scene: ContactScene
    direction: int
    times: np.ndarray
    points: np.ndarray
    events: list = field(default_factory=list)
    exit_event: Optional[HitEvent] = None
    reached_max_time: bool = False

    @property
    def start(self) -> np.ndarray:
        return self.points[0]


@dataclass
class Trajectory:
    entry: HitEvent
    exit: HitEvent
    interior_events: list
    times: np.ndarray
    points: np.ndarray
    word: tuple
    beta_length: float

    @property
    def chord_time(self) -> float:
        return self.exit.time - self.entry.time

    @property
    def norm(self) -> int:
        return int(sum(self.word))

    @property
    def reduced_norm(self) -> int:
        return int(sum(m - 1 for m in self.word))


@dataclass
class CausalityPair:
    x_plus: np.ndarray
    x_minus: np.ndarray
    chord_time: float
    word: tuple = ()


def _multiplicity(scene: ContactScene, point, direction: int) -> int:
    """Tangency order: first Lie-tower entry above threshold."""
    depth = scene.dim
    sign = float(direction)

    def fld(q):
        return sign * scene.reeb(q)

    from .domains import lie_tower
    g = lie_tower(scene.domain, fld, point, depth, scene.numerics.lie_step_rel)
    for k in range(1, depth + 1):
        if abs(g[k]) > scene.tau:
            return k
    raise AmbiguousTangency(
        f"Lie tower below threshold {scene.tau:g} up to depth {depth} at {point}")


def classify_start(scene: ContactScene, point, direction: int = +1):
    """(multiplicity, leaves_immediately) for a trajectory started on the boundary.

    A start of even order m with the first nonzero tower entry positive has
    h > 0 on both sides: the maximal trajectory is a singleton.
    """
    sign = float(direction)

    def fld(q):
        return sign * scene.reeb(q)

    from .domains import lie_tower
    g = lie_tower(scene.domain, fld, point, scene.dim, scene.numerics.lie_step_rel)
    for k in range(1, scene.dim + 1):
        if abs(g[k]) > scene.tau:
            return k, (k % 2 == 0 and g[k] > 0.0)
    raise AmbiguousTangency(f"cannot classify start at {point}")


def _project_to_boundary(scene: ContactScene, p: np.ndarray) -> np.ndarray:
    """One or two Newton steps of p along grad h onto {h = 0}."""
    for _ in range(2):
        hv = float(scene.domain.h(p))
        if abs(hv) < scene.eps_hit:
            break
        g = scene.domain.grad_h(p)
        p = p - hv * g / float(g @ g)
    return p


def _refine_crossing(scene, dense, ta, tb, ha, direction):
    """Bisection then Newton for a sign-change root of h(x(t)) in [ta, tb]."""
    lo, hi, f_lo = ta, tb, ha
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        fm = float(scene.domain.h(dense(mid)))
        if (fm < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(8):
        p = dense(t)
        hv = float(scene.domain.h(p))
        dh = float(scene.domain.grad_h(p) @ (direction * scene.reeb(p)))
        if dh == 0.0:
            break
        t_new = t - hv / dh
        if not (min(ta, lo) - 1e-12 <= t_new <= max(tb, hi) + 1e-12):
            break
        if abs(t_new - t) < 1e-15 * max(1.0, abs(t)):
            t = t_new
            break
        t = t_new
    return t


def _refine_extremum(scene, dense, ta, tb, direction):
    """Bisection on d/dt h(x(t)) to localize an interior extremum."""
    def dh(t):
        p = dense(t)
        return float(scene.domain.grad_h(p) @ (direction * scene.reeb(p)))

    f_lo = dh(ta)
    lo, hi = ta, tb
    if (dh(tb) < 0.0) == (f_lo < 0.0):
        return None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = dh(mid)
        if (fm < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate(scene: ContactScene, start, direction: int = +1,
              max_time: Optional[float] = None,
              stop_at_exit: bool = True) -> FlowPath:
    """Integrate dx/dt = direction * v_beta(x) from ``start``.

    Boundary events are collected in order; integration stops at the first
    crossing (odd multiplicity) event when ``stop_at_exit`` is true, else at
    ``max_time``. Even-multiplicity touches are recorded and passed through.
    """
    start = np.asarray(start, dtype=float)
    num = scene.numerics
    if max_time is None:
        max_time = num.max_time_factor * max(1.0, scene.scale)

    sgn = float(direction)

    def rhs(_t, y):
        return sgn * scene.reeb(y)

    h0 = float(scene.domain.h(start))
    on_boundary = abs(h0) < 1e3 * scene.eps_hit
    touch_tol = 1e-9 * max(1.0, scene.scale)

    solver = RK45(rhs, 0.0, start, t_bound=max_time, rtol=num.ode_rtol,
                  atol=num.ode_atol, max_step=scene.scale / 8.0)

    times = [0.0]
    points = [start.copy()]
    events: list[HitEvent] = []
    exit_event = None
    # skip the initial boundary-touching prefix when starting on the boundary
    armed = not on_boundary

    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StepFailure(f"RK45 step failed: {msg}")
        if solver.step_size is not None and solver.step_size < 1e-14:
            raise StepFailure("step size underflow")
        dense = solver.dense_output()
        t_old, t_new = dense.t_min, dense.t_max
        ts = np.linspace(t_old, t_new, num.dense_substeps + 1)
        ps = dense(ts).T if dense(ts).ndim == 2 else dense(ts)[None, :]
        hs = scene.domain.h(ps)

        found = []
        for i in range(len(ts) - 1):
            if not armed:
                if hs[i] < -10.0 * scene.eps_hit:
                    armed = True
                else:
                    continue
            if (hs[i] < 0.0) != (hs[i + 1] < 0.0):
                t_star = _refine_crossing(scene, dense, ts[i], ts[i + 1],
                                          hs[i], direction)
                found.append(t_star)
            elif 0 < i and hs[i] > hs[i - 1] and hs[i] >= hs[i + 1] \
                    and hs[i] > -1e-4 * max(1.0, scene.scale) and hs[i] < 0.0:
                t_star = _refine_extremum(scene, dense, ts[i - 1], ts[i + 1],
                                          direction)
                if t_star is not None:
                    p_star = dense(t_star)
                    if float(scene.domain.h(p_star)) > -touch_tol:
                        found.append(t_star)

        # merge near-coincident roots (a grazing crossing pair is one tangency)
        found.sort()
        merged = []
        for t_star in found:
            if merged and abs(t_star - merged[-1]) < 1e-6 * max(1.0, t_new):
                merged[-1] = 0.5 * (merged[-1] + t_star)
            else:
                merged.append(t_star)

        stop_t = None
        for t_star in merged:
            p_star = _project_to_boundary(scene, dense(t_star))
            m = _multiplicity(scene, p_star, direction)
            ev = HitEvent(p_star, t_star, m, m % 2 == 1)
            events.append(ev)
            if ev.crossing and stop_at_exit:
                exit_event = ev
                stop_t = t_star
                break

        if stop_t is not None:
            sub = ts[ts < stop_t]
            for tval in sub[1:]:
                times.append(float(tval))
                points.append(dense(tval))
            times.append(float(stop_t))
            points.append(exit_event.point.copy())
            break

        times.append(float(t_new))
        points.append(solver.y.copy())

    path = FlowPath(scene, direction, np.asarray(times), np.asarray(points),
                    events, exit_event, reached_max_time=exit_event is None)
    return path


def next_boundary_hit(scene: ContactScene, path: FlowPath) -> HitEvent:
    """First boundary event of an integration record."""
    if not path.events:
        raise StepFailure("no boundary event on the integrated path")
    return path.events[0]


def _beta_length(scene: ContactScene, path: FlowPath) -> float:
    """Quadrature of beta(dx/dt) dt along the path (Simpson on a fine grid)."""
    t0, t1 = path.times[0], path.times[-1]
    if t1 <= t0:
        return 0.0
    m = max(32, 4 * (len(path.times) // 2) + 4)
    ts = np.linspace(t0, t1, 2 * m + 1)
    # interpolate the stored polyline; the integrand is smooth (= 1 up to
    # Reeb-residual error), so linear interpolation in t is enough here
    P = np.empty((ts.size, scene.dim))
    for j in range(scene.dim):
        P[:, j] = np.interp(ts, path.times, path.points[:, j])
    B = scene.form.beta_many(P)
    V = path.direction * scene.reeb_many(P)
    f = np.sum(B * V, axis=-1)
    h = (t1 - t0) / (2 * m)
    return float(h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-2:2].sum()))


def trajectory_from_entry(scene: ContactScene, x_plus,
                          max_time: Optional[float] = None) -> Trajectory:
    """Maximal forward trajectory from an entry point on the boundary."""
    x_plus = np.asarray(x_plus, dtype=float)
    m_in, singleton = classify_start(scene, x_plus, +1)
    entry = HitEvent(x_plus.copy(), 0.0, m_in, m_in % 2 == 1)
    if singleton:
        return Trajectory(entry, entry, [], np.zeros(1), x_plus[None, :],
                          (m_in,), 0.0)

    path = integrate(scene, x_plus, +1, max_time=max_time)
    if path.exit_event is None:
        raise StepFailure("trajectory did not exit within max_time "
                          "(field not traversing?)")
    interior = [ev for ev in path.events if not ev.crossing]
    exit_ev = path.exit_event
    word = (m_in,) + tuple(ev.multiplicity for ev in interior) \
        + (exit_ev.multiplicity,)
    blen = _beta_length(scene, path)
    return Trajectory(entry, exit_ev, interior, path.times, path.points,
                      word, blen)


def causality_map(scene: ContactScene, x_plus,
                  max_time: Optional[float] = None) -> CausalityPair:
    """Next genuine exit point downstream of x_plus (identity on singletons)."""
    traj = trajectory_from_entry(scene, x_plus, max_time=max_time)
    if traj.chord_time == 0.0:
        return CausalityPair(traj.entry.point, traj.entry.point, 0.0, traj.word)
    return CausalityPair(traj.entry.point, traj.exit.point,
                         traj.chord_time, traj.word)


def flow_point(scene: ContactScene, x, time: float,
               direction: int = +1) -> np.ndarray:
    """Flow a point for a fixed parameter time (no event handling)."""
    x = np.asarray(x, dtype=float)
    if time == 0.0:
        return x.copy()
    num = scene.numerics
    sgn = float(direction) * np.sign(time)

    def rhs(_t, y):
        return sgn * scene.reeb(y)

    solver = RK45(rhs, 0.0, x, t_bound=abs(time), rtol=num.ode_rtol,
                  atol=num.ode_atol, max_step=max(abs(time), scene.scale) / 8.0)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StepFailure(f"RK45 step failed: {msg}")
    return solver.y.copy()


def entry_point(scene: ContactScene, x, max_time: Optional[float] = None):
    """Entry boundary point upstream of an interior point x.

    Returns (point, time_since_entry, touched_deep_stratum).
    """
    path = integrate(scene, x, -1, max_time=max_time)
    if path.exit_event is None:
        raise StepFailure("backward flow did not reach the boundary")
    touched = any(ev.multiplicity >= 2 for ev in path.events)
    return path.exit_event.point, path.exit_event.time, touched


def property_a_check(scene: ContactScene, n_samples: int = 256,
                     seed: int = 0) -> dict:
    """Scan trajectory words from an inflow grid for Property-A violations.

    A violating word has no transversal entry (no 1) and is not an
    even-order singleton.
    """
    from .strata import inflow_samples

    rng = np.random.default_rng(seed)
    pts = inflow_samples(scene, n_samples, rng)
    witnesses = []
    words = {}
    for p in pts:
        try:
            traj = trajectory_from_entry(scene, p)
        except AmbiguousTangency:
            continue
        words[traj.word] = words.get(traj.word, 0) + 1
        if 1 not in traj.word and not (len(traj.word) == 1 and traj.word[0] % 2 == 0):
            witnesses.append(p)
    return {"holds": len(witnesses) == 0, "witnesses": witnesses,
            "word_counts": words}


def waterfall_sample(scene: ContactScene, n_samples: int = 64) -> list:
    """Polylines of the downward flow through the tangency locus.

    One polyline per sampled point of the depth-2 stratum; convex tangency
    points yield single-point polylines (the downward flow leaves at once).
    """
    from .strata import stratum_samples

    pts = stratum_samples(scene, 2, n_samples)
    polylines = []
    for p in pts:
        try:
            _m, leaves = classify_start(scene, p, -1)
        except AmbiguousTangency:
            leaves = True
        if leaves:
            polylines.append(p[None, :])
            continue
        path = integrate(scene, p, -1)
        polylines.append(path.points)
    return polylines
