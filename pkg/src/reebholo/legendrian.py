"""Legendrian patches, their boundary shadows, and shadow lifts.

The shadow of a patch is its image on the inflow boundary under the
downward flow; the drop time of the lift obeys ds = -c*beta because beta
is invariant under the Reeb flow, so a shadow path plus one drop time
reconstructs the patch. Shadows jump across the waterfall of the tangency
locus; jump parameters are flagged and refined, and the sum of drop-time
jumps measures the concavity interaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domains import vertical_chords
from .errors import NonLagrangianShadow
from .flow import entry_point, flow_point
from .scene import ContactScene

__all__ = [
    "LegendrianPatch", "ShadowPatch", "ball_arc", "figure_eight",
    "circle_dim5", "circle_dim5_nonisotropic", "shadow_project",
    "shadow_reeb_lengths", "lift_shadow", "lift_shadow_surface",
    "shadow_beta_integral", "concavity_criterion", "zero_volume_checks",
    "drop_map",
]


@dataclass
class LegendrianPatch:
    """Parametrized (sub-)Legendrian patch t -> point, t in a k-box."""

    param_box: np.ndarray          # (k, 2)
    map_many: Callable[[np.ndarray], np.ndarray]
    name: str = "patch"
    closed: bool = False
    fd_step: float = 1e-6

    @property
    def k(self) -> int:
        return self.param_box.shape[0]

    def params(self, n: int) -> np.ndarray:
        if self.k != 1:
            raise ValueError("1d parameter grids only")
        a, b = self.param_box[0]
        return np.linspace(a, b, n, endpoint=not self.closed)

    def map(self, t) -> np.ndarray:
        return self.map_many(np.asarray(t, dtype=float))

    def tangents(self, T: np.ndarray) -> np.ndarray:
        """Central-difference tangent frames, shape (N, d, k)."""
        T = np.atleast_2d(np.asarray(T, dtype=float))
        cols = []
        for j in range(self.k):
            e = np.zeros(self.k)
            e[j] = self.fd_step
            cols.append((self.map_many(T + e) - self.map_many(T - e))
                        / (2.0 * self.fd_step))
        return np.stack(cols, axis=-1)

    def isotropy_residuals(self, form, n: int = 256) -> dict:
        """max |beta(tau_i)| and max |dbeta(tau_i, tau_j)| over the patch."""
        if self.k == 1:
            T = self.params(n)[:, None]
        else:
            T = _box_grid(self.param_box, n)
        P = self.map_many(T)
        Tan = self.tangents(T)
        B = form.beta_many(P)
        r_beta = float(np.abs(np.einsum("ni,nik->nk", B, Tan)).max())
        r_dbeta = 0.0
        if self.k > 1:
            D = form.dbeta_many(P)
            W = np.einsum("nia,nij,njb->nab", Tan, D, Tan)
            r_dbeta = float(np.abs(W).max())
        return {"beta": r_beta, "dbeta": r_dbeta}


def _box_grid(box, n):
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass
class ShadowPatch:
    """Shadow samples on the inflow boundary with drop times and flags."""

    params: np.ndarray             # (N,)
    points: np.ndarray             # (N, d), on the boundary
    s: np.ndarray                  # (N,) drop times, >= 0
    flags: np.ndarray              # (N,) bool: trajectory met the tangency locus
    closed: bool = False
    jump_params: list = field(default_factory=list)
    jump_sizes: list = field(default_factory=list)    # |s jump| per refined jump
    source: Optional[LegendrianPatch] = None


# -- builtin patches -------------------------------------------------------


def ball_arc(r: float = 0.4, t0: float = 0.0, t1: float = 1.2,
             z0: float = 0.1) -> LegendrianPatch:
    """Open Legendrian arc in the Darboux 3-ball: dz = -x dy along it."""

    def mp(T):
        T = np.asarray(T, dtype=float)
        t = T[..., 0]
        out = np.empty(T.shape[:-1] + (3,))
        out[..., 0] = z0 - r**2 * (t / 2.0 + np.sin(2.0 * t) / 4.0)
        out[..., 1] = r * np.cos(t)
        out[..., 2] = r * np.sin(t)
        return out

    return LegendrianPatch(np.array([[t0, t1]]), mp, name="ball-arc")


def figure_eight(r: float = 0.45, z0: float = 0.0,
                 x_center: float = 0.0) -> LegendrianPatch:
    """Closed Legendrian loop whose footprint is a figure eight, so the
    enclosed x dy area vanishes and z returns to itself."""

    def mp(T):
        T = np.asarray(T, dtype=float)
        t = T[..., 0]
        out = np.empty(T.shape[:-1] + (3,))
        out[..., 0] = (z0 - x_center * (r / 2.0) * np.sin(2.0 * t)
                       - r**2 * (np.sin(3.0 * t) / 6.0 + np.sin(t) / 2.0))
        out[..., 1] = x_center + r * np.cos(t)
        out[..., 2] = (r / 2.0) * np.sin(2.0 * t)
        return out

    return LegendrianPatch(np.array([[0.0, 2.0 * np.pi]]), mp,
                           name="figure-eight", closed=True)


def circle_dim5(r: float = 0.3, z0: float = 0.2) -> LegendrianPatch:
    """Closed sub-Legendrian circle in the Darboux 5-ball: the two symplectic
    planes are traversed with opposite orientations, so x1 dy1 + x2 dy2
    pulls back to zero and z stays constant."""

    def mp(T):
        T = np.asarray(T, dtype=float)
        t = T[..., 0]
        out = np.empty(T.shape[:-1] + (5,))
        out[..., 0] = z0
        out[..., 1] = r * np.cos(t)
        out[..., 2] = r * np.sin(t)
        out[..., 3] = r * np.cos(t)
        out[..., 4] = -r * np.sin(t)
        return out

    return LegendrianPatch(np.array([[0.0, 2.0 * np.pi]]), mp,
                           name="circle-5d", closed=True)


def circle_dim5_nonisotropic(r: float = 0.3, z0: float = 0.2) -> LegendrianPatch:
    """Deliberately non-Legendrian loop (both planes counterclockwise)."""

    def mp(T):
        T = np.asarray(T, dtype=float)
        t = T[..., 0]
        out = np.empty(T.shape[:-1] + (5,))
        out[..., 0] = z0
        out[..., 1] = r * np.cos(t)
        out[..., 2] = r * np.sin(t)
        out[..., 3] = r * np.cos(t)
        out[..., 4] = r * np.sin(t)
        return out

    return LegendrianPatch(np.array([[0.0, 2.0 * np.pi]]), mp,
                           name="circle-5d-noniso", closed=True)


# -- the drop map ---------------------------------------------------------


def _descending_root(scene: ContactScene, p: np.ndarray, n: int = 4096):
    """First boundary crossing strictly below p along its vertical column."""
    z0 = p[0]
    z_min = scene.domain.bbox[0, 0]
    if float(scene.domain.h(p)) > 1e-9 * max(1.0, scene.scale):
        return None
    zs = np.linspace(z0, z_min, n)
    Q = np.tile(p, (n, 1))
    Q[:, 0] = zs
    Hs = scene.domain.h(Q)
    pos = np.nonzero(Hs > 0.0)[0]
    if pos.size == 0:
        return None
    k = int(pos[0])
    lo, hi = zs[k], zs[k - 1] if k > 0 else z0   # h(lo) > 0 >= h(hi)
    q = p.copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        q[0] = mid
        if float(scene.domain.h(q)) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def drop_map(scene: ContactScene, P: np.ndarray, flag_tol: float = 1e-6):
    """Downward-flow arrival on the inflow boundary for a batch of points.

    Returns (C, s, flags): arrival points, drop times, and flags marking
    drops that met the tangency locus within tolerance. Vertical-Reeb
    scenes drop along z columns; other scenes integrate the flow.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    N = P.shape[0]
    d = scene.dim
    C = np.empty_like(P)
    s = np.empty(N)
    flags = np.zeros(N, dtype=bool)
    tol = flag_tol * max(1.0, scene.scale)

    if scene.vertical_reeb:
        W = P[:, 1:]
        ci, zlo, zhi = vertical_chords(scene.domain, W)
        ztol = 1e-9 * max(1.0, scene.scale)
        filled = np.zeros(N, dtype=bool)
        for row in range(ci.size):
            i = ci[row]
            if zlo[row] - ztol <= P[i, 0] <= zhi[row] + ztol:
                C[i, 0] = zlo[row]
                C[i, 1:] = W[i]
                s[i] = P[i, 0] - zlo[row]
                filled[i] = True
        for i in np.nonzero(~filled)[0]:
            # near-tangent column: the global scan merged or missed a close
            # root pair; rescan finely downward from the start height
            arrival = _descending_root(scene, P[i])
            if arrival is None:
                raise ValueError(f"point outside the domain: {P[i]}")
            C[i, 0] = arrival
            C[i, 1:] = W[i]
            s[i] = P[i, 0] - arrival
            filled[i] = True
        G1 = np.sum(scene.domain.grad_h(C) * scene.reeb_many(C), axis=-1)
        flags |= np.abs(G1) < tol
        # interior near-tangency of the traversed segment: h has a local
        # maximum within tolerance of zero strictly between arrival and start
        m = 48
        uu = np.linspace(0.0, 1.0, m)[None, :, None]
        seg = C[:, None, :] * (1.0 - uu) + P[:, None, :] * uu
        Hs = scene.domain.h(seg.reshape(-1, d)).reshape(N, m)
        interior_max = np.max(Hs[:, 2:-2], axis=1)
        flags |= interior_max > -1e-6 * max(1.0, scene.scale) ** 2
        return C, s, flags

    for i in range(N):
        y, t_back, touched = entry_point(scene, P[i])
        C[i] = y
        s[i] = t_back
        g1 = float(scene.domain.grad_h(y) @ scene.reeb(y))
        flags[i] = touched or abs(g1) < tol
    return C, s, flags


def shadow_project(scene: ContactScene, patch: LegendrianPatch,
                   n_params: int = 512, refine_jumps: bool = True) -> ShadowPatch:
    """Shadow of a 1-parameter patch on the inflow boundary."""
    T = patch.params(n_params)
    P = patch.map_many(T[:, None])
    C, s, flags = drop_map(scene, P)
    shadow = ShadowPatch(T, C, s, flags, closed=patch.closed, source=patch)
    if refine_jumps:
        _refine_shadow_jumps(scene, patch, shadow)
    return shadow


def shadow_reeb_lengths(scene: ContactScene, shadow: ShadowPatch,
                        stride: int = 8) -> dict:
    """Reeb chord lengths over a shadow: the beta length of the full
    trajectory through every stride-th shadow point, and their supremum
    (the Reeb diameter of the component). Reported without further
    semantics."""
    from .flow import causality_map
    from .errors import AmbiguousTangency

    idx = np.arange(0, len(shadow.params), max(1, stride))
    lengths = np.full(idx.size, np.nan)
    for k, i in enumerate(idx):
        if shadow.flags[i]:
            continue
        try:
            lengths[k] = causality_map(scene, shadow.points[i]).chord_time
        except AmbiguousTangency:
            continue
    finite = lengths[np.isfinite(lengths)]
    return {"params": shadow.params[idx], "lengths": lengths,
            "sup": float(finite.max()) if finite.size else float("nan")}


def _refine_shadow_jumps(scene, patch, shadow, jump_factor: float = 12.0):
    """Locate waterfall crossings: parameters where the drop map jumps."""
    T, C, s = shadow.params, shadow.points, shadow.s
    n = len(T)
    seg = range(n if shadow.closed else n - 1)
    d_pts = np.array([np.linalg.norm(C[(i + 1) % n] - C[i]) for i in seg])
    if d_pts.size == 0:
        return
    typical = np.median(d_pts) + 1e-30
    jump_idx = [i for i in seg
                if d_pts[i] > jump_factor * typical
                and d_pts[i] > 1e-3 * scene.scale]
    for i in jump_idx:
        a, b = T[i], T[(i + 1) % n]
        if shadow.closed and b < a:
            b = b + (patch.param_box[0, 1] - patch.param_box[0, 0])
        ca = C[i]
        for _ in range(48):
            mid = 0.5 * (a + b)
            pm = patch.map(np.array([mid]))
            cm, _, _ = drop_map(scene, pm[None, :] if pm.ndim == 1 else pm)
            cm = cm[0]
            if np.linalg.norm(cm - ca) < 0.5 * d_pts[i]:
                a, ca = mid, cm
            else:
                b = mid
        eps = 1e-7 * max(1.0, float(np.ptp(patch.param_box[0])))
        pa = patch.map(np.array([a - eps]))
        pb = patch.map(np.array([b + eps]))
        Cab, sab, _ = drop_map(scene, np.stack([pa, pb]))
        size = float(abs(sab[1] - sab[0]))
        # steep-but-continuous segments refine to a negligible drop-time
        # step; only genuine waterfall discontinuities count
        if size > 1e-3 * max(1.0, scene.scale):
            shadow.jump_params.append(0.5 * (a + b))
            shadow.jump_sizes.append(size)


def _path_tangents(params, points, closed):
    """Fourth-order finite-difference tangents of a uniformly sampled path."""
    n = len(params)
    dt = params[1] - params[0]
    if closed:
        return (8.0 * (np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0))
                - (np.roll(points, -2, axis=0) - np.roll(points, 2, axis=0))
                ) / (12.0 * dt)
    Tan = np.empty_like(points)
    if n >= 7:
        Tan[2:-2] = (8.0 * (points[3:-1] - points[1:-3])
                     - (points[4:] - points[:-4])) / (12.0 * dt)
        fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        for j, row in ((0, points[0:5]), (1, points[1:6])):
            Tan[j] = fwd @ row / dt
        for j, row in ((n - 1, points[-5:]), (n - 2, points[-6:-1])):
            Tan[j] = -(fwd @ row[::-1]) / dt
    else:
        Tan[1:-1] = (points[2:] - points[:-2]) / (2.0 * dt)
        Tan[0] = (points[1] - points[0]) / dt
        Tan[-1] = (points[-1] - points[-2]) / dt
    return Tan


def _pullback_beta(scene, params, points, closed):
    B = scene.form.beta_many(points)
    Tan = _path_tangents(params, points, closed)
    return np.sum(B * Tan, axis=-1)


def _cumulative_quad(f, t):
    from scipy.integrate import cumulative_simpson
    return cumulative_simpson(f, x=t, initial=0.0)


def lift_shadow(scene: ContactScene, params: np.ndarray, points: np.ndarray,
                s0: float, closed: bool = False) -> dict:
    """Lift a shadow path to a Legendrian curve.

    The drop time along the lift satisfies s(t) = s0 - int c*beta, by
    invariance of beta under the Reeb flow. Returns the lifted points, the
    drop-time profile, the Legendrian residual max |beta(dL/dt)|, and, for
    closed paths, the lift gap (equal to the beta period of the loop).
    """
    params = np.asarray(params, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dens = _pullback_beta(scene, params, points, closed)
    s = s0 - _cumulative_quad(dens, params)
    if closed:
        dt = params[1] - params[0]
        total = float(np.sum(dens) * dt)
    else:
        total = float(np.trapezoid(dens, params))

    if scene.vertical_reeb:
        L = points.copy()
        L[:, 0] += s
    else:
        L = np.stack([flow_point(scene, points[i], s[i], +1)
                      for i in range(len(params))])

    lb = _pullback_beta(scene, params, L, closed)
    gap = float(abs(total)) if closed else 0.0
    return {"params": params, "points": L, "s": s,
            "legendrian_residual": float(np.abs(lb).max()),
            "beta_period": total, "gap": gap}


def lift_shadow_surface(scene: ContactScene, grids: tuple, points: np.ndarray,
                        s0: float, tol: float = 1e-5) -> dict:
    """Lift a 2-parameter shadow patch (n = 2 scenes).

    points has shape (m1, m2, d) over the tensor grid grids = (t1, t2).
    The drop-time increment ds = -c*beta must be integrable: the value
    obtained by integrating along axis 0 then axis 1 is compared with the
    opposite order, and a mismatch beyond tol raises NonLagrangianShadow
    (the shadow is not Lagrangian for dbeta on the inflow boundary).
    """
    t1, t2 = (np.asarray(g, dtype=float) for g in grids)
    m1, m2, d = points.shape
    B = scene.form.beta_many(points.reshape(-1, d)).reshape(m1, m2, d)
    dt1 = t1[1] - t1[0]
    dt2 = t2[1] - t2[0]
    g1 = np.gradient(points, dt1, axis=0)
    g2 = np.gradient(points, dt2, axis=1)
    f1 = np.einsum("abi,abi->ab", B, g1)   # c*beta on d/dt1
    f2 = np.einsum("abi,abi->ab", B, g2)

    def cum(f, dt, axis):
        out = np.zeros_like(f)
        idx = [slice(None)] * f.ndim
        idx[axis] = slice(1, None)
        shift = [slice(None)] * f.ndim
        shift[axis] = slice(None, -1)
        out[tuple(idx)] = np.cumsum(
            0.5 * (f[tuple(idx)] + f[tuple(shift)]) * dt, axis=axis)
        return out

    s_a = cum(f1, dt1, 0)[:, :1] + cum(f2, dt2, 1)          # rows then cols
    s_b = cum(f2, dt2, 1)[:1, :] + cum(f1, dt1, 0)          # cols then rows
    mismatch = float(np.abs(s_a - s_b).max())
    if mismatch > tol * max(1.0, scene.scale):
        raise NonLagrangianShadow(
            f"path-dependent drop time: mismatch {mismatch:g} exceeds {tol:g}")
    s = s0 - s_a
    if scene.vertical_reeb:
        L = points.copy()
        L[..., 0] += s
    else:
        L = np.stack([
            flow_point(scene, points.reshape(-1, d)[i],
                       float(s.ravel()[i]), +1)
            for i in range(m1 * m2)]).reshape(m1, m2, d)
    Bl = scene.form.beta_many(L.reshape(-1, d)).reshape(m1, m2, d)
    r1 = np.einsum("abi,abi->ab", Bl, np.gradient(L, dt1, axis=0))
    r2 = np.einsum("abi,abi->ab", Bl, np.gradient(L, dt2, axis=1))
    return {"points": L, "s": s, "mismatch": mismatch,
            "legendrian_residual": float(max(np.abs(r1).max(), np.abs(r2).max()))}


def shadow_beta_integral(scene: ContactScene, patch: LegendrianPatch,
                         n_params: int = 1024) -> dict:
    """Integral of beta over the closed-up shadow of a closed patch.

    The shadow pieces between waterfall jumps are integrated with the
    orientation induced by the patch parametrization; each waterfall
    connector (the vertical segment the drop time jumps over) is counted
    downward, i.e. with negative beta length. With that convention the
    total equals minus the beta length of the waterfall interaction, which
    vanishes exactly when no downward trajectory from the patch meets the
    positive tangency locus. The raw piecewise integral (which telescopes
    to zero for closed loops regardless of jumps) is reported alongside.
    """
    if not patch.closed:
        raise ValueError("closed patches only")
    shadow = shadow_project(scene, patch, n_params)
    a, b = patch.param_box[0]
    cuts = sorted(shadow.jump_params)
    jump_total = float(sum(shadow.jump_sizes))
    if not cuts:
        T = shadow.params
        dens = _pullback_beta(scene, T, shadow.points, True)
        piecewise = float(np.sum(dens) * (T[1] - T[0]))
        return {"integral": piecewise, "piecewise": piecewise,
                "jump_total": 0.0, "n_jumps": 0,
                "flag_fraction": float(np.mean(shadow.flags))}
    piecewise = 0.0
    pad = 1e-6 * (b - a)
    bounds = cuts + [cuts[0] + (b - a)]
    for i in range(len(cuts)):
        t0, t1 = bounds[i] + pad, bounds[i + 1] - pad
        tt = np.linspace(t0, t1, max(64, n_params // max(1, len(cuts))))
        pp = patch.map_many(((tt - a) % (b - a) + a)[:, None])
        cc, _, _ = drop_map(scene, pp)
        dens = _pullback_beta(scene, tt, cc, False)
        piecewise += float(np.trapezoid(dens, tt))
    return {"integral": piecewise - jump_total, "piecewise": piecewise,
            "jump_total": jump_total, "n_jumps": len(cuts),
            "flag_fraction": float(np.mean(shadow.flags))}


def concavity_criterion(scene: ContactScene, patch: LegendrianPatch,
                        n_params: int = 1024, tol: float = 1e-5) -> dict:
    """Boundary-localized concavity test for a closed sub-Legendrian loop.

    Compares the sign of the shadow beta integral against direct detection
    of a downward trajectory from the loop meeting the positive tangency
    locus (a waterfall jump of the drop map, or an exact tangency flag).
    """
    rep = shadow_beta_integral(scene, patch, n_params)
    shadow = shadow_project(scene, patch, n_params)
    witness = bool(shadow.jump_params) or bool(np.any(shadow.flags))
    negative = rep["integral"] < -tol * max(1.0, scene.scale)
    return {"negative_integral": negative, "trajectory_witness": witness,
            "agree": negative == witness, **rep}


def zero_volume_checks(scene: ContactScene, patch: LegendrianPatch,
                       n_params: int = 512, n_layers: int = 24) -> dict:
    """Quadrature residuals of the swept-surface and shadow integrals of a
    closed loop: the dbeta integral over the downward-swept surface and the
    beta integral over the shadow both vanish for sub-Legendrian loops in
    general position (the latter up to the concavity defect)."""
    T = patch.params(n_params)
    P = patch.map_many(T[:, None])
    C, s, flags = drop_map(scene, P)

    # swept surface (t, u) -> drop of L(t) by u * s(t)
    dt = (T[1] - T[0])
    du = 1.0 / n_layers
    uu = (np.arange(n_layers) + 0.5) * du
    swept = 0.0
    D_is_const = scene.vertical_reeb
    for j, u in enumerate(uu):
        if scene.vertical_reeb:
            Q = P.copy()
            Q[:, 0] -= u * s
            Qt = _path_tangents(T, Q, patch.closed)
            Qu = np.zeros_like(Q)
            Qu[:, 0] = -s
        else:
            Q = np.stack([flow_point(scene, P[i], -u * s[i]) for i in range(len(T))])
            Qt = _path_tangents(T, Q, patch.closed)
            eps = 1e-5
            Qu_pts = np.stack([flow_point(scene, P[i], -(u + eps) * s[i])
                               for i in range(len(T))])
            Qu = (Qu_pts - Q) / eps
        D = scene.form.dbeta_many(Q)
        dens = np.einsum("ni,nij,nj->n", Qt, D, Qu)
        swept += float(dens.sum()) * dt * du

    sh = shadow_beta_integral(scene, patch, n_params)
    iso = patch.isotropy_residuals(scene.form, min(n_params, 512))
    return {"swept_dbeta": swept, "shadow_beta": sh["integral"],
            "isotropy": iso, "flag_fraction": float(np.mean(flags))}
