"""Morse strata of the boundary with respect to the Reeb field.

A boundary point has depth j when the Lie tower h, L_v h, ..., first
exceeds the tangency threshold at order j; its sign is '+' when the field
points into the positive part of the previous stratum, equivalently when
the first above-threshold tower entry is negative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domains import BoundaryChart
from .errors import AmbiguousTangency, MissingChart, OpenCurveWarning
from .forms import eval_beta_wedge_dbeta_power, eval_dbeta_power
from .scene import ContactScene

__all__ = [
    "StratumPoint", "StratumChart", "classify", "trace_stratum_curve",
    "stratum_charts", "stratum_samples", "inflow_samples",
    "stratum_positivity_scan",
]


@dataclass
class StratumPoint:
    point: np.ndarray
    depth: int
    sign: str                      # '+' or '-'
    chart_param: Optional[np.ndarray] = None
    tower: tuple = ()


@dataclass
class StratumChart:
    """A traced component of a depth-j stratum, exposed as a 1d chart.

    The smooth parametrization re-solves the defining equation on demand,
    so quadrature over the chart converges spectrally for closed curves.
    """

    chart: BoundaryChart           # 1d chart over the free parameter
    depth: int
    sign: str
    closed: bool
    closure_error: float
    host: BoundaryChart            # the 2d boundary chart it was traced in


def classify(scene: ContactScene, point, chart_param=None) -> StratumPoint:
    """Stratum depth and sign of a boundary point."""
    point = np.asarray(point, dtype=float)
    g = scene.lie_tower(point, scene.dim)
    for k in range(1, scene.dim + 1):
        if abs(g[k]) > scene.tau:
            return StratumPoint(point, k, "+" if g[k] < 0.0 else "-",
                                chart_param, tuple(g[: k + 1]))
    raise AmbiguousTangency(
        f"tower below threshold up to depth {scene.dim} at {point}")


def _g1_many(scene: ContactScene, P: np.ndarray) -> np.ndarray:
    """dh(v_beta) on a batch of points."""
    V = scene.reeb_many(P)
    G = scene.domain.grad_h(P)
    return np.sum(G * V, axis=-1)


def _g1_on_chart(scene, chart, U):
    return _g1_many(scene, chart.map_many(np.atleast_2d(np.asarray(U, float))))


def trace_stratum_curve(scene: ContactScene, chart: BoundaryChart,
                        j: int = 2, resolution: int = 96,
                        closure_tol: float = 1e-6) -> list:
    """Trace the depth-2 curves {dh(v) = 0} inside a 2d boundary chart (n=1).

    The zero set is scanned on a parameter grid, refined along the first
    chart axis by bisection, and the branches are returned as smooth
    StratumCharts parametrized by the second chart axis. Branch orientation
    follows the Stokes convention for the inflow region {dh(v) < 0}.
    """
    if scene.n != 1:
        raise MissingChart("generic stratum tracing is implemented for n=1 "
                           "only; supply explicit stratum charts for n=2")
    if j != 2:
        raise MissingChart(f"tracing only supports depth 2, got {j}")

    (a0, b0), (a1, b1) = chart.param_box
    u0 = np.linspace(a0, b0, resolution + 1)
    u1 = np.linspace(a1, b1, resolution + 1)
    UU = np.stack(np.meshgrid(u0, u1, indexing="ij"), axis=-1)  # (m0, m1, 2)
    G = _g1_many(scene, chart.map_many(UU.reshape(-1, 2))).reshape(
        resolution + 1, resolution + 1)

    # per-column (fixed u1) roots along u0
    neg = G < 0.0
    branch_pts = {}          # column index -> list of refined u0 roots
    for col in range(resolution + 1):
        roots = []
        for row in range(resolution):
            if neg[row, col] != neg[row + 1, col]:
                lo, hi = u0[row], u0[row + 1]
                f_lo = G[row, col]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    fm = float(_g1_on_chart(scene, chart,
                                            [[mid, u1[col]]])[0])
                    if (fm < 0.0) == (f_lo < 0.0):
                        lo, f_lo = mid, fm
                    else:
                        hi = mid
                roots.append(0.5 * (lo + hi))
        branch_pts[col] = roots

    counts = {len(v) for v in branch_pts.values()}
    if counts == {0}:
        return []
    if len(counts) != 1:
        # root count changes along columns: the curve is not a graph over
        # the second axis; fall back to the most common count and warn
        warnings.warn("stratum curve is not a graph over the chart axis; "
                      "branches may be incomplete", OpenCurveWarning)
    n_branch = max(counts)

    out = []
    periodic = bool(chart.periodic and chart.periodic[-1])
    for b in range(n_branch):
        cols = [c for c in range(resolution + 1) if len(branch_pts[c]) > b]
        u1_vals = np.array([u1[c] for c in cols])
        u0_vals = np.array([sorted(branch_pts[c])[b] for c in cols])

        closure = 0.0
        if periodic:
            p_first = chart.map(np.array([u0_vals[0], u1_vals[0]]))
            p_last = chart.map(np.array([u0_vals[-1], u1_vals[-1]]))
            closure = float(np.linalg.norm(p_first - p_last))
            if closure > closure_tol * max(1.0, scene.scale):
                warnings.warn(f"traced branch fails to close: gap {closure:g}",
                              OpenCurveWarning)

        curve = _branch_chart(scene, chart, u0_vals, u1_vals, periodic)
        mid = curve.map(np.array([0.5 * (u1_vals[0] + u1_vals[-1])]))
        sp = classify(scene, mid)
        out.append(StratumChart(curve, 2, sp.sign, periodic,
                                closure, chart))
    return out


def _branch_chart(scene, host, u0_vals, u1_vals, periodic) -> BoundaryChart:
    """1d chart t -> boundary point with dh(v)=0, re-solved per call."""
    pad = 0.35 * max(1e-3, float(np.ptp(u0_vals)) + 1e-3)
    lo_box, hi_box = host.param_box[0]

    def solve_u0(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        guess = np.interp(t, u1_vals, u0_vals,
                          period=(u1_vals[-1] - u1_vals[0]) if periodic else None)
        lo = np.clip(guess - pad, lo_box, hi_box)
        hi = np.clip(guess + pad, lo_box, hi_box)
        f_lo = _g1_on_chart(scene, host, np.stack([lo, t], axis=-1))
        f_hi = _g1_on_chart(scene, host, np.stack([hi, t], axis=-1))
        bad = (f_lo < 0) == (f_hi < 0)
        if np.any(bad):
            lo = np.where(bad, lo_box, lo)
            hi = np.where(bad, hi_box, hi)
            f_lo = np.where(bad, _g1_on_chart(
                scene, host, np.stack([lo, t], axis=-1)), f_lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = _g1_on_chart(scene, host, np.stack([mid, t], axis=-1))
            take = (fm < 0.0) == (f_lo < 0.0)
            lo = np.where(take, mid, lo)
            f_lo = np.where(take, fm, f_lo)
            hi = np.where(take, hi, mid)
        return 0.5 * (lo + hi)

    def mp(T):
        T = np.asarray(T, dtype=float)
        t = T[..., 0]
        flat = np.atleast_1d(t).ravel()
        U = np.stack([solve_u0(flat), flat], axis=-1)
        P = host.map_many(U)
        return P.reshape(T.shape[:-1] + (P.shape[-1],))

    # the scan grid includes both endpoints of a periodic axis, so the
    # branch values already span one full period
    box = np.array([[u1_vals[0], u1_vals[-1]]])

    # Stokes orientation of the boundary of the inflow region {g1 < 0}:
    # walk so that (grad g1, tangent) is a positive frame relative to the
    # flow orientation of the inflow side, on which (dbeta)^n pulls back
    # positively
    eps = 1e-5 * max(1.0, float(np.ptp(host.param_box)))
    t_probe = u1_vals[len(u1_vals) // 2]
    u_star = float(solve_u0(np.array([t_probe]))[0])
    g_u0 = float(_g1_on_chart(scene, host, [[u_star + eps, t_probe]])[0]
                 - _g1_on_chart(scene, host, [[u_star - eps, t_probe]])[0])
    g_u1 = float(_g1_on_chart(scene, host, [[u_star, t_probe + eps]])[0]
                 - _g1_on_chart(scene, host, [[u_star, t_probe - eps]])[0])
    du0 = float(solve_u0(np.array([t_probe + eps]))[0]
                - solve_u0(np.array([t_probe - eps]))[0])
    # tangent in host params along increasing t is (du0/dt, 1)
    det = g_u0 * 1.0 - g_u1 * (du0 / (2.0 * eps))

    grad_norm = float(np.hypot(g_u0, g_u1))
    step_in = 0.02 * max(1e-3, float(np.ptp(host.param_box[0])))
    u_in = np.array([u_star - step_in * g_u0 / max(grad_norm, 1e-300),
                     t_probe - step_in * g_u1 / max(grad_norm, 1e-300)])
    from .quadrature import pullback_density
    P_in = host.map_many(u_in[None, :])
    J_in = host.jacobian(u_in[None, :])
    s_flow = float(np.sign(pullback_density(scene.form, P_in, J_in,
                                            scene.n, False)[0]))
    if s_flow == 0.0:
        s_flow = 1.0

    orient = float(np.sign(det) * s_flow)
    if orient == 0.0:
        orient = 1.0

    if orient < 0:
        def mp_flipped(T):
            T = np.asarray(T, dtype=float)
            flipped = T.copy()
            flipped[..., 0] = box[0, 0] + box[0, 1] - T[..., 0]
            return mp(flipped)
        return BoundaryChart("traced-stratum2", "stratum:2-traced", box,
                             mp_flipped, None, +1.0, periodic=(periodic,))
    return BoundaryChart("traced-stratum2", "stratum:2-traced", box,
                         mp, None, +1.0, periodic=(periodic,))


def stratum_charts(scene: ContactScene, j: int, resolution: int = 96) -> list:
    """Charts of the depth-j stratum: builtin ones for vertical Reeb scenes,
    traced ones otherwise (n=1). Returns [] when the stratum is declared
    empty by the domain."""
    if j in scene.domain.empty_strata:
        return []
    builtin = scene.domain.charts_by_role(f"stratum:{j}")
    if scene.vertical_reeb and builtin:
        out = []
        for ch in builtin:
            grid = ch.grid([8] * ch.k)
            sp = classify(scene, ch.map(grid[len(grid) // 2]))
            out.append(StratumChart(ch, j, sp.sign, True, 0.0, ch))
        return out
    if j == 2 and scene.n == 1:
        out = []
        for host in scene.domain.charts_by_role("boundary"):
            out.extend(trace_stratum_curve(scene, host, 2, resolution))
        if out:
            return out
    raise MissingChart(f"no chart available for stratum depth {j}")


def stratum_samples(scene: ContactScene, j: int, n_samples: int) -> np.ndarray:
    """Sample points of the depth-j stratum from its charts."""
    charts = stratum_charts(scene, j)
    if not charts:
        return np.empty((0, scene.dim))
    per = max(1, n_samples // len(charts))
    pts = [sc.chart.map_many(sc.chart.grid([per] * sc.chart.k))
           for sc in charts]
    return np.concatenate(pts, axis=0)


def inflow_samples(scene: ContactScene, n_samples: int, rng) -> np.ndarray:
    """Random boundary samples classified to the open inflow region."""
    hosts = scene.domain.charts_by_role("boundary")
    if not hosts:
        hosts = scene.domain.charts_by_role("inflow")
    out = []
    got = 0
    tries = 0
    while got < n_samples and tries < 60:
        tries += 1
        for ch in hosts:
            k = ch.k
            lo, hi = ch.param_box[:, 0], ch.param_box[:, 1]
            U = lo + (hi - lo) * rng.random((2 * n_samples, k))
            P = ch.map_many(U)
            g1 = _g1_many(scene, P)
            keep = P[g1 < -10.0 * scene.tau]
            if keep.size:
                out.append(keep)
                got += keep.shape[0]
    if not out:
        raise MissingChart("no inflow samples found")
    return np.concatenate(out, axis=0)[:n_samples]


def stratum_positivity_scan(scene: ContactScene, j: int,
                            resolution: int = 48) -> dict:
    """Empirical single-signedness scan of the stratum density.

    Evaluates the degree-matched density (beta ^ (dbeta)^s for even j,
    (dbeta)^s for odd j) on each depth-j chart grid, normalizes the overall
    orientation to the dominant sign, and reports the worst signed value.
    The claim is scanned, never asserted.
    """
    charts = stratum_charts(scene, j)
    if not charts:
        return {"empty": True, "min_oriented": 0.0, "per_chart": []}
    results = []
    worst = np.inf
    for sc in charts:
        ch = sc.chart
        k = ch.k
        if j % 2 == 0:
            m = (2 * scene.n - j) // 2
            with_beta = True
        else:
            m = (2 * scene.n + 1 - j) // 2
            with_beta = False
        U = ch.grid([resolution] * k)
        P = ch.map_many(U)
        J = ch.jacobian(U)
        dens = _form_density_batch(scene, P, J, m, with_beta) * ch.orientation_sign
        i_dom = int(np.argmax(np.abs(dens)))
        sigma = 1.0 if dens[i_dom] >= 0 else -1.0
        vals = sigma * dens
        i_min = int(np.argmin(vals))
        results.append({
            "chart": ch.name, "sign": sc.sign, "orientation": sigma,
            "min": float(vals[i_min]), "argmin_param": U[i_min].tolist(),
            "max": float(vals.max()),
        })
        worst = min(worst, float(vals[i_min]))
    return {"empty": False, "min_oriented": worst, "per_chart": results}


def _form_density_batch(scene, P, J, m, with_beta) -> np.ndarray:
    """Pullback density of (dbeta)^m or beta ^ (dbeta)^m on chart Jacobians."""
    B = scene.form.beta_many(P)
    D = scene.form.dbeta_many(P)
    N = P.shape[0]
    out = np.empty(N)
    for i in range(N):
        if with_beta:
            out[i] = eval_beta_wedge_dbeta_power(B[i], D[i], J[i], m)
        else:
            out[i] = eval_dbeta_power(D[i], J[i], m)
    return out
