"""Contact embeddings, folding complexity, and non-squeezing checks.

Embeddings here are affine maps between scenes that pull the target form
back to the source form (identity inclusions and z/y translations for the
Darboux form; arbitrary translations for no form at all). The image is
treated as semi-transparent: target trajectories pass through it and their
crossings of the embedded boundary are counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domains import vertical_chords
from .errors import AmbiguousTangency, MissingChart
from .quadrature import QuadratureSpec, integrate_form_on_chart
from .scene import ContactScene, sample_interior
from .invariants import volume_X, shadow_volume, reeb_diameter, kappa_plus

__all__ = ["AffineEmbedding", "EmbeddingReport", "inclusion", "z_translation",
           "anisotropic_scaling", "pullback_residual", "complexity",
           "nonsqueezing_check", "shadow_kappa"]


@dataclass
class AffineEmbedding:
    """Affine map p -> A p + b from a source scene into a target scene."""

    source: ContactScene
    target: ContactScene
    A: np.ndarray
    b: np.ndarray
    name: str = "affine"
    form_compatible: bool = True    # whether A, b are declared to pull the
                                    # target form back to the source form

    def psi(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return P @ self.A.T + self.b

    def psi_inv(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return (P - self.b) @ np.linalg.inv(self.A).T


def inclusion(source: ContactScene, target: ContactScene) -> AffineEmbedding:
    d = source.dim
    return AffineEmbedding(source, target, np.eye(d), np.zeros(d), "inclusion")


def z_translation(source: ContactScene, target: ContactScene,
                  c: float) -> AffineEmbedding:
    d = source.dim
    b = np.zeros(d)
    b[0] = c
    return AffineEmbedding(source, target, np.eye(d), b,
                           f"z-translate({c:g})")


def anisotropic_scaling(source: ContactScene, target: ContactScene,
                        lam: float, mu: float) -> AffineEmbedding:
    """x -> lam x, y -> lam y, z -> mu z. Does not preserve the Darboux
    form; provided for complexity and geometry experiments with the
    compatibility check disabled."""
    d = source.dim
    A = np.eye(d) * lam
    A[0, 0] = mu
    return AffineEmbedding(source, target, A, np.zeros(d),
                           f"A({lam:g},{mu:g})", form_compatible=False)


def pullback_residual(emb: AffineEmbedding, n_samples: int = 256,
                      seed: int = 0) -> dict:
    """max |psi^* beta_Y - beta_X| over interior source samples, plus the
    containment check h_Y(psi(samples)) < 0."""
    rng = np.random.default_rng(seed)
    P = sample_interior(emb.source.domain, n_samples, rng)
    Q = emb.psi(P)
    BX = emb.source.form.beta_many(P)
    BY = emb.target.form.beta_many(Q)
    res = float(np.abs(BY @ emb.A - BX).max())
    h_img = emb.target.domain.h(Q)
    return {"pullback": res, "contained": bool(np.all(h_img < 0.0)),
            "max_h_image": float(h_img.max())}


def complexity(emb: AffineEmbedding, grid: int = 48, n_line: int = 2048,
               ambiguous_limit: float = 0.10) -> dict:
    """Half the maximal number of transversal crossings of the embedded
    boundary by target Reeb trajectories from an inflow grid.

    Grazing trajectories (an extremum of the composed boundary function
    within tolerance of zero but no sign change nearby) are skipped;
    AmbiguousTangency is raised when they exceed the ambiguity budget.
    """
    tgt = emb.target
    if not tgt.vertical_reeb:
        return _complexity_flow(emb, grid, ambiguous_limit)

    charts = tgt.domain.charts_by_role("inflow")
    if not charts:
        raise MissingChart("target scene has no inflow charts")
    pts = np.concatenate([ch.map_many(ch.grid([grid] * ch.k)) for ch in charts])
    W = pts[:, 1:]
    ci, zlo, zhi = vertical_chords(tgt.domain, W)
    graze_tol = 1e-9 * max(1.0, tgt.scale) ** 2

    best = 0
    ambiguous = 0
    total = 0
    uu = np.linspace(0.0, 1.0, n_line)
    for row in range(ci.size):
        i = ci[row]
        zz = zlo[row] + (zhi[row] - zlo[row]) * uu
        Q = np.empty((n_line, tgt.dim))
        Q[:, 0] = zz
        Q[:, 1:] = W[i]
        hx = emb.source.domain.h(emb.psi_inv(Q))
        sgn = hx < 0.0
        count = int(np.sum(sgn[:-1] != sgn[1:]))
        total += 1
        # near-miss extremum: local max of -|hx| close to zero without a
        # sign change marks a grazing crossing
        if count % 2 == 1:
            ambiguous += 1
            continue
        interior = hx[1:-1]
        loc_max = (interior > hx[:-2]) & (interior >= hx[2:]) & (interior < 0)
        if np.any(interior[loc_max] > -graze_tol):
            ambiguous += 1
            continue
        best = max(best, count // 2)
    if total and ambiguous / total > ambiguous_limit:
        raise AmbiguousTangency(
            f"{ambiguous}/{total} grid trajectories graze the embedded boundary")
    return {"c_bullet": int(best), "ambiguous": int(ambiguous),
            "trajectories": int(total)}


def _complexity_flow(emb: AffineEmbedding, grid: int, ambiguous_limit: float):
    from .flow import trajectory_from_entry
    from .strata import inflow_samples

    rng = np.random.default_rng(0)
    pts = inflow_samples(emb.target, grid * grid, rng)
    best = 0
    ambiguous = 0
    for p in pts:
        try:
            traj = trajectory_from_entry(emb.target, p)
        except AmbiguousTangency:
            ambiguous += 1
            continue
        hx = emb.source.domain.h(emb.psi_inv(traj.points))
        sgn = hx < 0.0
        count = int(np.sum(sgn[:-1] != sgn[1:]))
        if count % 2 == 1:
            ambiguous += 1
            continue
        best = max(best, count // 2)
    if len(pts) and ambiguous / len(pts) > ambiguous_limit:
        raise AmbiguousTangency("too many grazing trajectories")
    return {"c_bullet": int(best), "ambiguous": int(ambiguous),
            "trajectories": int(len(pts))}


@dataclass
class EmbeddingReport:
    c_bullet: int
    vol_source: float
    vol_target: float
    diam_source: float
    diam_target: float
    shadow_source: float
    shadow_target: float
    slack_volume: float
    slack_diameter: float
    slack_equatorial: float
    pullback: float
    contained: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def nonsqueezing_check(emb: AffineEmbedding,
                       spec: Optional[QuadratureSpec] = None,
                       grid: int = 48) -> EmbeddingReport:
    """The three non-squeezing slacks for a form-compatible embedding:
    target volume minus source volume, diameter difference, and
    c_bullet * target trajectory-space volume minus the source one."""
    spec = spec or QuadratureSpec()
    res = pullback_residual(emb, seed=spec.seed)
    if emb.form_compatible and res["pullback"] > 1e-8:
        raise ValueError(f"embedding is not form-compatible: {res}")
    c = complexity(emb, grid=grid)["c_bullet"]
    vol_s, _ = volume_X(emb.source, spec)
    vol_t, _ = volume_X(emb.target, spec)
    diam_s, _ = reeb_diameter(emb.source, spec)
    diam_t, _ = reeb_diameter(emb.target, spec)
    sh_s, _ = shadow_volume(emb.source, spec)
    sh_t, _ = shadow_volume(emb.target, spec)
    return EmbeddingReport(
        c_bullet=c, vol_source=vol_s, vol_target=vol_t,
        diam_source=diam_s, diam_target=diam_t,
        shadow_source=sh_s, shadow_target=sh_t,
        slack_volume=vol_t - vol_s,
        slack_diameter=diam_t - diam_s,
        slack_equatorial=c * sh_t - sh_s,
        pullback=res["pullback"], contained=res["contained"],
    )


def shadow_kappa(emb: AffineEmbedding, j: int = 1,
                 spec: Optional[QuadratureSpec] = None) -> dict:
    """Holography of the odd positive stratified volumes under embeddings.

    The positive depth-j stratum of the source is pushed into the target
    and dropped to the target inflow boundary along the downward flow; the
    (dbeta_Y)-power integral over that projected chart recovers the
    intrinsic kappa_j^+ of the source up to the projection orientation,
    so absolute values are compared.
    """
    from .domains import BoundaryChart
    from .legendrian import drop_map
    from .strata import stratum_charts

    spec = spec or QuadratureSpec()
    if j % 2 == 0:
        raise ValueError("odd j only (the even kappas project via j-1)")
    n = emb.source.n
    if j == 1:
        src_charts = emb.source.domain.charts_by_role("inflow")
    else:
        src_charts = [sc.chart for sc in stratum_charts(emb.source, j)
                      if sc.sign == "+"]
    if not src_charts:
        raise MissingChart(f"no source charts for stratum {j}")

    intrinsic = kappa_plus(emb.source, j, spec)
    m = (2 * n + 1 - j) // 2
    projected = 0.0
    for ch in src_charts:
        def pushed_map(U, _ch=ch):
            U = np.asarray(U, dtype=float)
            P = _ch.map_many(U)
            flat = P.reshape(-1, P.shape[-1])
            C, _, _ = drop_map(emb.target, emb.psi(flat))
            return C.reshape(P.shape)

        pushed = BoundaryChart(f"pushed-{ch.name}", "pushed", ch.param_box,
                               pushed_map, None, ch.orientation_sign,
                               periodic=ch.periodic)
        v, _ = integrate_form_on_chart(emb.target.form, pushed, m, False, spec)
        projected += v
    return {"intrinsic": intrinsic, "projected": -projected,
            "abs_intrinsic": abs(intrinsic), "abs_projected": abs(projected),
            "rel_gap": abs(abs(intrinsic) - abs(projected))
            / max(abs(intrinsic), 1e-300)}
