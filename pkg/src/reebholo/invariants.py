"""Volume invariants of a contact scene and the inequalities between them.

Conventions. Wedge powers are plain (no factorial): the Stokes pairs such
as the boundary integral of (dbeta)^n against the equatorial integral of
beta ^ (dbeta)^(n-1) hold exactly. The two *named volumes* vol_X and the
trajectory-space volume divide by n! so that the Darboux/radial builtins
report the Euclidean volume of the domain in every dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .domains import Domain, vertical_chords
from .errors import ContactViolated, MissingChart
from .forms import top_form_value_many
from .quadrature import QuadratureSpec, integrate_form_on_chart
from .scene import ContactScene, contact_check, sample_interior
from .strata import stratum_charts

__all__ = [
    "QuadratureSpec", "InvariantReport", "volume_X", "shadow_volume",
    "kappa", "kappa_plus", "reeb_diameter", "average_length",
    "isoperimetric_check", "deformation_scan", "invariant_report",
]


# -- fibered volume over vertical columns --------------------------------------


def _column_base(domain: Domain):
    """Parametrized base of the vertical-column fibration plus its density.

    Returns (param_box, w_map, density) where w_map sends base parameters to
    the non-z coordinates and density is the Jacobian determinant of w_map.
    Ellipsoid bases use a sine substitution in the radial variable so the
    chord integrand is smooth up to the rim.
    """
    kind = domain.kind
    if kind == "ellipsoid":
        semi = domain.params["semi_axes"]
        if domain.dim == 3:
            sx, sy = semi[1], semi[2]
            box = np.array([[0.0, np.pi / 2.0], [0.0, 2.0 * np.pi]])

            def w_map(U):
                al, ph = U[..., 0], U[..., 1]
                return np.stack([sx * np.sin(al) * np.cos(ph),
                                 sy * np.sin(al) * np.sin(ph)], axis=-1)

            def dens(U):
                al = U[..., 0]
                return sx * sy * np.sin(al) * np.cos(al)

            return box, w_map, dens

        s1, s2, s3, s4 = semi[1:]
        box = np.array([[0.0, np.pi / 2.0], [0.0, np.pi],
                        [0.0, np.pi], [0.0, 2.0 * np.pi]])

        def w_map(U):
            al, ps, th, ph = (U[..., i] for i in range(4))
            r = np.sin(al)
            sp = np.sin(ps)
            return np.stack([
                s1 * r * np.cos(ps),
                s2 * r * sp * np.cos(th),
                s3 * r * sp * np.sin(th) * np.cos(ph),
                s4 * r * sp * np.sin(th) * np.sin(ph),
            ], axis=-1)

        def dens(U):
            al, ps, th = U[..., 0], U[..., 1], U[..., 2]
            r = np.sin(al)
            return (s1 * s2 * s3 * s4 * r**3 * np.cos(al)
                    * np.sin(ps)**2 * np.sin(th))

        return box, w_map, dens

    # polar base covering the bounding box of the projection
    rmax = float(np.max(np.abs(domain.bbox[1:, :])))
    box = np.array([[0.0, rmax], [0.0, 2.0 * np.pi]])

    def w_map(U):
        r, ph = U[..., 0], U[..., 1]
        return np.stack([r * np.cos(ph), r * np.sin(ph)], axis=-1)

    def dens(U):
        return U[..., 0]

    return box, w_map, dens


def _grid(box, res):
    axes = []
    for (lo, hi), m in zip(box, res):
        step = (hi - lo) / m
        axes.append(lo + step * (np.arange(m) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    cell = float(np.prod([(hi - lo) / m for (lo, hi), m in zip(box, res)]))
    return np.stack([m.ravel() for m in mesh], axis=-1), cell


_GAUSS8 = np.polynomial.legendre.leggauss(8)


def _volume_columns(scene: ContactScene, spec: QuadratureSpec,
                    radial: int, angular: int) -> float:
    box, w_map, dens = _column_base(scene.domain)
    k = box.shape[0]
    res = [radial] + [angular] * (k - 1)
    U, cell = _grid(box, res)
    W = w_map(U)
    weights = dens(U) * cell

    total = 0.0
    chunk = 16384
    gx, gw = _GAUSS8
    for i0 in range(0, U.shape[0], chunk):
        Wc = W[i0:i0 + chunk]
        wc = weights[i0:i0 + chunk]
        ci, zlo, zhi = vertical_chords(scene.domain, Wc,
                                       n_scan=512 if scene.domain.kind != "ellipsoid" else 64)
        if ci.size == 0:
            continue
        mid = 0.5 * (zlo + zhi)[:, None]
        half = 0.5 * (zhi - zlo)[:, None]
        Z = mid + half * gx[None, :]
        P = np.empty((ci.size, 8, scene.dim))
        P[:, :, 0] = Z
        P[:, :, 1:] = Wc[ci][:, None, :]
        vals = top_form_value_many(scene.form, P.reshape(-1, scene.dim))
        vals = vals.reshape(ci.size, 8)
        chord_int = (vals * gw[None, :]).sum(axis=1) * half[:, 0]
        total += float((chord_int * wc[ci]).sum())
    return total / math.factorial(scene.n)


def _volume_mc(scene: ContactScene, spec: QuadratureSpec) -> float:
    rng = np.random.default_rng(spec.seed)
    lo, hi = scene.domain.bbox[:, 0], scene.domain.bbox[:, 1]
    boxvol = float(np.prod(hi - lo))
    n = spec.mc_samples
    total = 0.0
    done = 0
    while done < n:
        take = min(1 << 17, n - done)
        P = lo + (hi - lo) * rng.random((take, scene.dim))
        mask = scene.domain.h(P) < 0.0
        if np.any(mask):
            total += float(top_form_value_many(scene.form, P[mask]).sum())
        done += take
    return total / n * boxvol / math.factorial(scene.n)


def volume_X(scene: ContactScene, spec: QuadratureSpec | None = None,
             method: str = "auto"):
    """Integral of beta ^ (dbeta)^n / n! over the domain.

    "columns": fibered quadrature over vertical chords (builtin domains with
    a vertical Reeb chord structure); "mc": seeded rejection Monte Carlo.
    Returns (value, error_estimate).
    """
    spec = spec or QuadratureSpec()
    if method == "auto":
        method = "columns" if scene.domain.kind in ("ellipsoid", "shell",
                                                    "sandclock") else "mc"
    if method == "columns":
        if scene.dim == 5:
            radial, angular = spec.column_radial_4d, spec.column_angular_4d
        else:
            radial, angular = spec.column_radial, spec.column_angular
        v = _volume_columns(scene, spec, radial, angular)
        v2 = _volume_columns(scene, spec, radial // 2, max(8, angular // 2))
        return v, abs(v - v2) / 3.0
    v = _volume_mc(scene, spec)
    return v, abs(v) / math.sqrt(max(spec.mc_samples, 1))


def shadow_volume(scene: ContactScene, spec: QuadratureSpec | None = None):
    """Trajectory-space volume: integral of (dbeta)^n / n! over the inflow
    boundary, in the field-contraction orientation. Returns (value, err)."""
    spec = spec or QuadratureSpec()
    plain, err = _shadow_plain(scene, spec)
    f = math.factorial(scene.n)
    return plain / f, err / f


def _shadow_plain(scene: ContactScene, spec: QuadratureSpec):
    charts = scene.domain.charts_by_role("inflow")
    if not charts or not scene.vertical_reeb:
        raise MissingChart("inflow charts require a vertical-Reeb builtin scene")
    total, err = 0.0, 0.0
    for ch in charts:
        v, e = integrate_form_on_chart(scene.form, ch, scene.n, False, spec)
        total += v
        err += e
    return total, err


def kappa(scene: ContactScene, j: int, spec: QuadratureSpec | None = None) -> float:
    """Stratified volume of the depth-j stratum.

    Zero exactly for odd j; for even j the integral of
    beta ^ (dbeta)^((2n-j)/2) over the depth-j stratum charts in the Stokes
    orientation of the inflow region.
    """
    spec = spec or QuadratureSpec()
    if j < 1 or j > 2 * scene.n:
        raise ValueError(f"j must lie in [1, {2 * scene.n}]")
    if j % 2 == 1:
        return 0.0
    charts = stratum_charts(scene, j)
    m = (2 * scene.n - j) // 2
    total = 0.0
    for sc in charts:
        v, _ = integrate_form_on_chart(scene.form, sc.chart, m, True, spec)
        total += v
    return total


def kappa_plus(scene: ContactScene, j: int,
               spec: QuadratureSpec | None = None) -> float:
    """Stratified volume of the positive depth-j stratum.

    Odd j: integral of (dbeta)^((2n+1-j)/2) over the inflow part of the
    stratum (for j = 1 the inflow boundary itself; equals kappa(j+1) by
    Stokes, which is used as the fallback when no direct chart exists).
    Even j: the beta ^ (dbeta)^((2n-j)/2) integral over '+'-signed charts.
    """
    spec = spec or QuadratureSpec()
    if j < 1 or j > 2 * scene.n:
        raise ValueError(f"j must lie in [1, {2 * scene.n}]")
    if j % 2 == 1:
        if j == 1:
            try:
                v, _ = _shadow_plain(scene, spec)
                return v
            except MissingChart:
                return kappa(scene, 2, spec)
        if (j + 1) in scene.domain.empty_strata or j in scene.domain.empty_strata:
            return 0.0
        return kappa(scene, j + 1, spec)
    charts = stratum_charts(scene, j)
    m = (2 * scene.n - j) // 2
    total = 0.0
    for sc in charts:
        if sc.sign != "+":
            continue
        v, _ = integrate_form_on_chart(scene.form, sc.chart, m, True, spec)
        total += v
    return total


# -- chord lengths and the diameter --------------------------------------------


def chord_time_vertical(scene: ContactScene, points: np.ndarray) -> np.ndarray:
    """beta-length of the chords through boundary points of a vertical scene."""
    points = np.atleast_2d(points)
    W = points[:, 1:]
    z0 = points[:, 0]
    ci, zlo, zhi = vertical_chords(scene.domain, W)
    out = np.zeros(points.shape[0])
    tol = 1e-6 * max(1.0, scene.scale)
    for idx in range(points.shape[0]):
        sel = ci == idx
        if not np.any(sel):
            continue
        lo, hi = zlo[sel], zhi[sel]
        on = (z0[idx] >= lo - tol) & (z0[idx] <= hi + tol)
        if np.any(on):
            k = int(np.argmax(on))
            out[idx] = hi[on][0] - lo[on][0] if k >= 0 else 0.0
    return out


def _chart_chord(scene, chart, U, max_time=None):
    U = np.atleast_2d(U)
    P = chart.map_many(U)
    if scene.vertical_reeb:
        return chord_time_vertical(scene, P)
    from .flow import causality_map
    from .errors import AmbiguousTangency
    out = np.zeros(U.shape[0])
    for i, p in enumerate(P):
        try:
            out[i] = causality_map(scene, p, max_time=max_time).chord_time
        except AmbiguousTangency:
            out[i] = 0.0
    return out


def reeb_diameter(scene: ContactScene, spec: QuadratureSpec | None = None):
    """Supremum of chord beta-lengths: inflow grid plus coordinate ascent.

    Returns (diameter, spread) where spread is the scatter of the random
    restarts around the best value.
    """
    spec = spec or QuadratureSpec()
    charts = scene.domain.charts_by_role("inflow")
    if not charts:
        charts = scene.domain.charts_by_role("boundary")
    rng = np.random.default_rng(spec.seed)
    best = 0.0
    restart_vals = []

    for ch in charts:
        res = [spec.diam_grid] * ch.k
        U = ch.grid(res)
        vals = _chart_chord(scene, ch, U)
        order = np.argsort(vals)[::-1]
        pool = max(4, len(order) // 64)
        starts = [U[order[0]]]
        for _ in range(max(0, spec.diam_restarts - 1)):
            starts.append(U[order[int(rng.integers(1, pool))]])
        widths = (ch.param_box[:, 1] - ch.param_box[:, 0]) / spec.diam_grid
        for s in starts:
            u = np.asarray(s, dtype=float)
            val = float(_chart_chord(scene, ch, u[None, :])[0])
            for _ in range(spec.diam_rounds):
                for axis in range(ch.k):
                    a = max(ch.param_box[axis, 0], u[axis] - widths[axis])
                    b = min(ch.param_box[axis, 1], u[axis] + widths[axis])
                    u[axis], val = _golden_axis(scene, ch, u, axis, a, b, val)
                widths = widths / 3.0
            restart_vals.append(val)
            best = max(best, val)
    spread = float(np.ptp(restart_vals)) if restart_vals else 0.0
    return best, spread


def _golden_axis(scene, chart, u, axis, a, b, current):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)

    def f(x):
        q = u.copy()
        q[axis] = x
        return float(_chart_chord(scene, chart, q[None, :])[0])

    f1, f2 = f(x1), f(x2)
    for _ in range(40):
        if b - a < 1e-9:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = f(x1)
    cand = [(current, u[axis]), (f1, x1), (f2, x2)]
    val, x = max(cand, key=lambda t: t[0])
    return x, val


def average_length(scene: ContactScene, spec: QuadratureSpec | None = None) -> float:
    """Mean chord beta-length: vol_X over the trajectory-space volume."""
    spec = spec or QuadratureSpec()
    v, _ = volume_X(scene, spec)
    s, _ = shadow_volume(scene, spec)
    return v / s


# -- reports --------------------------------------------------------------------


@dataclass
class InvariantReport:
    n: int
    vol_X: float
    vol_err: float
    shadow_vol: float
    shadow_plain: float
    kappa: dict
    kappa_plus: dict
    kappa_abs: dict
    diam_R: float
    diam_spread: float
    av_R: float
    slack_isoperimetric: float
    slack_equatorial: float
    stokes_residual: float
    stokes_rel: float

    def to_dict(self) -> dict:
        return asdict(self)


def isoperimetric_check(scene: ContactScene,
                        spec: QuadratureSpec | None = None) -> dict:
    """Slacks of the volume inequalities plus the Stokes-twin residual."""
    spec = spec or QuadratureSpec()
    vol, _ = volume_X(scene, spec)
    shadow, _ = shadow_volume(scene, spec)
    k2 = kappa(scene, 2, spec)
    diam, _ = reeb_diameter(scene, spec)
    f = math.factorial(scene.n)
    slack1 = diam * shadow - vol
    slack2 = diam * (k2 / f) - vol
    stokes = abs(shadow * f - k2)
    return {
        "slack_isoperimetric": slack1,
        "slack_equatorial": slack2,
        "stokes_residual": stokes,
        "stokes_rel": stokes / max(abs(k2), 1e-300),
        "vol_X": vol, "shadow_vol": shadow, "kappa_2": k2, "diam_R": diam,
    }


def invariant_report(scene: ContactScene,
                     spec: QuadratureSpec | None = None) -> InvariantReport:
    spec = spec or QuadratureSpec()
    vol, vol_err = volume_X(scene, spec)
    shadow, _ = shadow_volume(scene, spec)
    f = math.factorial(scene.n)
    kap, kap_p, kap_abs = {}, {}, {}
    for j in range(1, 2 * scene.n + 1):
        try:
            kap[j] = kappa(scene, j, spec)
            kap_abs[j] = abs(kap[j])
            kap_p[j] = kappa_plus(scene, j, spec)
        except MissingChart:
            kap[j] = float("nan")
            kap_abs[j] = float("nan")
            kap_p[j] = float("nan")
    diam, spread = reeb_diameter(scene, spec)
    av = vol / shadow
    k2 = kap.get(2, float("nan"))
    stokes = abs(shadow * f - k2)
    return InvariantReport(
        n=scene.n, vol_X=vol, vol_err=vol_err, shadow_vol=shadow,
        shadow_plain=shadow * f, kappa=kap, kappa_plus=kap_p, kappa_abs=kap_abs,
        diam_R=diam, diam_spread=spread, av_R=av,
        slack_isoperimetric=diam * shadow - vol,
        slack_equatorial=diam * (k2 / f) - vol,
        stokes_residual=stokes,
        stokes_rel=stokes / max(abs(k2), 1e-300),
    )


def deformation_scan(scene: ContactScene, grad_eta, t_values,
                     spec: QuadratureSpec | None = None,
                     check_samples: int = 200) -> dict:
    """kappa values along the exact deformation family beta + t d(eta).

    grad_eta must be the vectorized gradient of eta. Raises ContactViolated
    when the deformed form fails the contact check at some t. Reports the
    per-j spread over t; the '+' volumes are scanned as well but carry no
    invariance claim.
    """
    spec = spec or QuadratureSpec()
    t_values = list(t_values)
    rows = []
    for t in t_values:
        form_t = scene.form.plus_exact(grad_eta, t) if t != 0.0 else scene.form
        rep = contact_check(form_t, scene.domain, check_samples, seed=spec.seed)
        if not rep.accepted:
            raise ContactViolated(f"contact check failed at t={t:g}: "
                                  f"min {rep.min_value:g}")
        scene_t = scene.with_form(form_t)
        row = {"t": t}
        for j in range(2, 2 * scene.n + 1, 2):
            row[f"kappa_{j}"] = kappa(scene_t, j, spec)
            row[f"kappa_plus_{j}"] = kappa_plus(scene_t, j, spec)
        rows.append(row)
    spreads = {}
    for key in rows[0]:
        if key == "t":
            continue
        vals = [r[key] for r in rows]
        spreads[key] = max(vals) - min(vals)
    return {"rows": rows, "spread": spreads}
