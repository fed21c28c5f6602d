"""Boundary data and holographic reconstruction.

The Lyapunov normalization df(v_beta) = 1 makes flow time equal to the
increment of f along trajectories, so a bulk point is pinned down by its
entry point and its f value. Boundary diffeomorphisms compatible with the
causality map, f restricted to the boundary, and beta restricted to the
boundary extend canonically to the bulk; the extension is a group section.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import IncompatibleBoundaryMap, OutOfChordRange, AmbiguousTangency
from .flow import causality_map, entry_point, flow_point
from .scene import ContactScene

__all__ = ["lyapunov_bullet", "BoundaryData", "extract_boundary_data",
           "BoundaryDiffeo", "rotation_z", "extend_diffeo", "reconstruct_point"]


def lyapunov_bullet(scene: ContactScene, p, mode: str = "auto") -> float:
    """Lyapunov value with unit derivative along the Reeb flow.

    "exact-z": the z coordinate (valid for the Darboux/radial builtins whose
    Reeb field is d/dz). "chord-midpoint": flow time since the entry point
    minus half the chord time, which is zero at the chord midpoint; it
    satisfies df(v) = 1 along every trajectory but is discontinuous across
    the waterfall of the tangency locus.
    """
    p = np.asarray(p, dtype=float)
    if mode == "auto":
        mode = "exact-z" if scene.vertical_reeb else "chord-midpoint"
    if mode == "exact-z":
        if not scene.vertical_reeb:
            raise ValueError("exact-z mode requires a vertical-Reeb builtin form")
        return float(p[0])
    if mode != "chord-midpoint":
        raise ValueError(f"unknown Lyapunov mode {mode!r}")
    y, t_back, _ = entry_point(scene, p)
    pair = causality_map(scene, y)
    return t_back - 0.5 * pair.chord_time


@dataclass
class BoundaryData:
    """Tabulated boundary data over a chart grid."""

    scene: ContactScene
    points: np.ndarray            # (N, d)
    chart_names: list
    params: np.ndarray            # (N, k)
    depth: np.ndarray             # (N,)
    sign: list
    f_values: np.ndarray          # (N,)
    beta_values: np.ndarray       # (N, d)
    pairs: list = field(default_factory=list)   # CausalityPair for inflow rows
    pair_index: np.ndarray = None               # row index of each pair

    def reconstruct(self, pair_idx: int, f_value: float) -> np.ndarray:
        pair = self.pairs[pair_idx]
        return reconstruct_point(self.scene, pair.x_plus, f_value)


def extract_boundary_data(scene: ContactScene, grid: int = 24,
                          mode: str = "auto") -> BoundaryData:
    """Classification, Lyapunov restriction, beta restriction, and causality
    pairs over the boundary chart grids."""
    from .strata import classify

    charts = scene.domain.charts_by_role("boundary")
    if not charts:
        charts = (scene.domain.charts_by_role("inflow")
                  + scene.domain.charts_by_role("outflow"))
    pts, names, params, depths, signs = [], [], [], [], []
    for ch in charts:
        U = ch.grid([grid] * ch.k)
        P = ch.map_many(U)
        for u, p in zip(U, P):
            try:
                sp = classify(scene, p)
            except AmbiguousTangency:
                continue
            pts.append(p)
            names.append(ch.name)
            params.append(u)
            depths.append(sp.depth)
            signs.append(sp.sign)
    P = np.asarray(pts)
    F = np.array([lyapunov_bullet(scene, p, mode) for p in P])
    B = scene.form.beta_many(P)
    pairs, pair_idx = [], []
    for i, p in enumerate(P):
        if depths[i] == 1 and signs[i] == "+":
            pairs.append(causality_map(scene, p))
            pair_idx.append(i)
        elif depths[i] >= 2:
            try:
                pairs.append(causality_map(scene, p))
                pair_idx.append(i)
            except AmbiguousTangency:
                pass
    return BoundaryData(scene, P, names, np.asarray(params),
                        np.asarray(depths), signs, F, B, pairs,
                        np.asarray(pair_idx, dtype=int))


@dataclass
class BoundaryDiffeo:
    """Boundary map with inverse and declared-compatibility bookkeeping."""

    map: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    residuals: Optional[dict] = None

    def check_compatibility(self, scene: ContactScene, n_samples: int = 24,
                            mode: str = "auto", seed: int = 0) -> dict:
        """Residuals of causality commutation, f preservation, and beta
        preservation over an inflow sample set."""
        from .strata import inflow_samples

        rng = np.random.default_rng(seed)
        pts = inflow_samples(scene, n_samples, rng)
        r_c = r_f = r_b = 0.0
        h_fd = 1e-6 * max(1.0, scene.scale)
        for p in pts:
            pair = causality_map(scene, p)
            q = np.asarray(self.map(p), dtype=float)
            pair_q = causality_map(scene, q)
            r_c = max(r_c, float(np.linalg.norm(
                np.asarray(self.map(pair.x_minus)) - pair_q.x_minus)))
            r_f = max(r_f, abs(lyapunov_bullet(scene, q, mode)
                               - lyapunov_bullet(scene, p, mode)))
            # pullback of beta under the map at p (finite-difference Jacobian)
            d = scene.dim
            J = np.empty((d, d))
            for j in range(d):
                e = np.zeros(d)
                e[j] = h_fd
                J[:, j] = (np.asarray(self.map(p + e))
                           - np.asarray(self.map(p - e))) / (2.0 * h_fd)
            bq = scene.form.beta(q)
            r_b = max(r_b, float(np.abs(J.T @ bq - scene.form.beta(p)).max()))
        self.residuals = {"causality": r_c, "lyapunov": r_f, "beta": r_b,
                          "n_samples": int(len(pts))}
        return self.residuals


def rotation_z(theta: float, dim: int = 3) -> BoundaryDiffeo:
    """Rotation by theta in every (x_i, y_i) plane; preserves the radial
    form, the z coordinate, and the causality map of rotation-symmetric
    scenes."""
    n = (dim - 1) // 2
    R = np.eye(dim)
    c, s = np.cos(theta), np.sin(theta)
    for i in range(n):
        R[1 + 2 * i, 1 + 2 * i] = c
        R[1 + 2 * i, 2 + 2 * i] = -s
        R[2 + 2 * i, 1 + 2 * i] = s
        R[2 + 2 * i, 2 + 2 * i] = c
    Rinv = R.T

    return BoundaryDiffeo(lambda p: R @ np.asarray(p, dtype=float),
                          lambda p: Rinv @ np.asarray(p, dtype=float),
                          name=f"rotation_z({theta:g})")


def extend_diffeo(scene: ContactScene, bmap: BoundaryDiffeo, x,
                  mode: str = "auto", tol: float = 1e-6,
                  check_samples: int = 12) -> np.ndarray:
    """Canonical bulk extension of a compatible boundary diffeomorphism.

    The image of x is the point on the trajectory through the mapped entry
    point carrying the same Lyapunov value as x; df(v) = 1 turns the
    Lyapunov increment into flow time.
    """
    if bmap.residuals is None:
        bmap.check_compatibility(scene, n_samples=check_samples, mode=mode)
    worst = max(bmap.residuals["causality"], bmap.residuals["lyapunov"],
                bmap.residuals["beta"])
    if worst > tol:
        raise IncompatibleBoundaryMap(
            f"boundary map residuals {bmap.residuals} exceed {tol:g}")
    x = np.asarray(x, dtype=float)
    f_x = lyapunov_bullet(scene, x, mode)
    y, _, _ = entry_point(scene, x)
    y2 = np.asarray(bmap.map(y), dtype=float)
    f_y2 = lyapunov_bullet(scene, y2, mode)
    return flow_point(scene, y2, f_x - f_y2, +1)


def reconstruct_point(scene: ContactScene, entry: np.ndarray,
                      f_value: float, mode: str = "auto") -> np.ndarray:
    """The unique point with the given Lyapunov value on the trajectory
    entering at ``entry``."""
    entry = np.asarray(entry, dtype=float)
    pair = causality_map(scene, entry)
    f_in = lyapunov_bullet(scene, entry, mode)
    f_out = f_in + pair.chord_time
    pad = 1e-9 * max(1.0, scene.scale)
    if not (f_in - pad <= f_value <= f_out + pad):
        raise OutOfChordRange(
            f"f={f_value:g} outside chord range [{f_in:g}, {f_out:g}]")
    return flow_point(scene, entry, f_value - f_in, +1)
