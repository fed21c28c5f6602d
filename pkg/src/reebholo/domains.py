"""Implicit domains with boundary charts.

A domain is the sublevel set {h <= 0} of a smooth function with 0 as a
regular value. Builtins: ellipsoids (axes given as full axis lengths),
round shells, and a smooth sand-clock solid of revolution.

Charts map parameter boxes onto pieces of the boundary. Chart orientation
signs follow the field-contraction convention for the vertical field d/dz:
a chart has sign +1 when its parameter order pulls dx ^ dy (resp. the
4-volume on the x, y coordinates) back positively.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = ["BoundaryChart", "Domain", "lie_tower", "vertical_chords"]


@dataclass
class BoundaryChart:
    """Parametrized piece of the boundary (or of a deeper stratum).

    map_many takes parameter arrays of shape (..., k) to points (..., d);
    jac_many, when given, returns (..., d, k) Jacobians, otherwise central
    differences are used.
    """

    name: str
    role: str                      # "boundary", "inflow", "outflow", "stratum:2"
    param_box: np.ndarray          # (k, 2)
    map_many: Callable[[np.ndarray], np.ndarray]
    jac_many: Optional[Callable[[np.ndarray], np.ndarray]] = None
    orientation_sign: float = 1.0
    periodic: tuple = ()
    fd_step: float = 1e-6

    @property
    def k(self) -> int:
        return self.param_box.shape[0]

    def map(self, u) -> np.ndarray:
        return self.map_many(np.asarray(u, dtype=float))

    def jacobian(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if self.jac_many is not None:
            return self.jac_many(U)
        return self._jac_fd(U)

    def _jac_fd(self, U: np.ndarray) -> np.ndarray:
        k = self.k
        h = self.fd_step * np.maximum(1.0, np.abs(self.param_box).max())
        cols = []
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            cols.append((self.map_many(U + e) - self.map_many(U - e)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def grid(self, resolution) -> np.ndarray:
        """Midpoint tensor grid over the parameter box, shape (N, k)."""
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (self.k,))
        axes = []
        for (lo, hi), m in zip(self.param_box, res):
            step = (hi - lo) / m
            axes.append(lo + step * (np.arange(m) + 0.5))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_measure(self, resolution) -> float:
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (self.k,))
        widths = self.param_box[:, 1] - self.param_box[:, 0]
        return float(np.prod(widths / res))


@dataclass
class Domain:
    """Compact domain {h <= 0} with 0 a regular value of h on the boundary."""

    kind: str
    dim: int
    h: Callable[[np.ndarray], np.ndarray]          # vectorized, (..., d) -> (...)
    grad_h: Callable[[np.ndarray], np.ndarray]     # vectorized, (..., d) -> (..., d)
    bbox: np.ndarray                               # (d, 2)
    interior_witness: np.ndarray
    charts: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    empty_strata: frozenset = frozenset()

    @property
    def scale(self) -> float:
        return float(np.max(self.bbox[:, 1] - self.bbox[:, 0]))

    def charts_by_role(self, role: str) -> list:
        return [c for c in self.charts if c.role == role]

    def inside(self, P, margin: float = 0.0) -> np.ndarray:
        return self.h(np.asarray(P, dtype=float)) < -margin

    # -- builtins -------------------------------------------------------------

    @staticmethod
    def ellipsoid(axes: Sequence[float]) -> "Domain":
        """Ellipsoid given by full axis lengths with the z axis listed last.

        ellipsoid([A, B, C]) is x^2/(A/2)^2 + y^2/(B/2)^2 + z^2/(C/2)^2 <= 1,
        so the vertical Reeb chord through the center has length C.
        """
        axes = np.asarray(axes, dtype=float)
        semi = np.concatenate(([axes[-1]], axes[:-1])) / 2.0
        d = semi.size
        if d not in (3, 5):
            raise ValueError("ellipsoid dimension must be 3 or 5")
        inv2 = 1.0 / semi**2

        def h(P):
            P = np.asarray(P, dtype=float)
            return np.sum(P**2 * inv2, axis=-1) - 1.0

        def grad_h(P):
            P = np.asarray(P, dtype=float)
            return 2.0 * P * inv2

        bbox = np.stack([-semi, semi], axis=1)
        dom = Domain(
            "ellipsoid", d, h, grad_h, bbox, np.zeros(d),
            params={"semi_axes": semi},
        )
        dom.charts = _ellipsoid_charts(semi)
        if d == 5:
            dom.empty_strata = frozenset({3, 4, 5})
        else:
            dom.empty_strata = frozenset({3})
        return dom

    @staticmethod
    def shell(r_in: float, r_out: float) -> "Domain":
        """Round shell r_in <= |p| <= r_out in dimension 3."""
        if not 0 < r_in < r_out:
            raise ValueError("need 0 < r_in < r_out")

        a2, b2 = r_in**2, r_out**2

        def h(P):
            P = np.asarray(P, dtype=float)
            r2 = np.sum(P**2, axis=-1)
            return (r2 - a2) * (r2 - b2)

        def grad_h(P):
            P = np.asarray(P, dtype=float)
            r2 = np.sum(P**2, axis=-1)
            return 2.0 * P * (2.0 * r2 - a2 - b2)[..., None]

        bbox = np.stack([-r_out * np.ones(3), r_out * np.ones(3)], axis=1)
        mid = 0.5 * (r_in + r_out)
        dom = Domain(
            "shell", 3, h, grad_h, bbox, np.array([0.0, mid, 0.0]),
            params={"r_in": r_in, "r_out": r_out},
        )
        dom.charts = _shell_charts(r_in, r_out)
        dom.empty_strata = frozenset({3})
        return dom

    @staticmethod
    def sandclock(neck: float = 0.3, amplitude: float = 1.0,
                  half_height: float = 1.0) -> "Domain":
        """Smooth sand-clock solid of revolution about the z axis.

        Boundary profile x^2 + y^2 = amplitude^2 * g(z / half_height) with
        g(s) = (1 - s^2)(s^2 + c), c = (neck / amplitude)^2: two bulbs joined
        by a waist of radius ``neck`` at z = 0.
        """
        a, H = float(amplitude), float(half_height)
        c = (neck / a) ** 2
        if not 0 < c < 1:
            raise ValueError("need 0 < neck < amplitude")

        def g(s):
            return (1.0 - s**2) * (s**2 + c)

        def gp(s):
            return 2.0 * s * (1.0 - c - 2.0 * s**2)

        def h(P):
            P = np.asarray(P, dtype=float)
            s = P[..., 0] / H
            return P[..., 1] ** 2 + P[..., 2] ** 2 - a**2 * g(s)

        def grad_h(P):
            P = np.asarray(P, dtype=float)
            out = np.empty(P.shape)
            out[..., 0] = -(a**2 / H) * gp(P[..., 0] / H)
            out[..., 1] = 2.0 * P[..., 1]
            out[..., 2] = 2.0 * P[..., 2]
            return out

        r_max = a * (1.0 + c) / 2.0
        bbox = np.array([[-H, H], [-r_max, r_max], [-r_max, r_max]])
        dom = Domain(
            "sandclock", 3, h, grad_h, bbox, np.zeros(3),
            params={"c": c, "amplitude": a, "half_height": H,
                    "s_bulge": float(np.sqrt((1.0 - c) / 2.0))},
        )
        dom.charts = _sandclock_charts(c, a, H)
        dom.empty_strata = frozenset({3})
        return dom

    @staticmethod
    def from_spec(spec: dict) -> "Domain":
        kind = spec.get("kind")
        if kind == "ellipsoid":
            return Domain.ellipsoid(spec["axes"])
        if kind == "shell":
            return Domain.shell(spec["r_in"], spec["r_out"])
        if kind == "sandclock":
            return Domain.sandclock(
                spec.get("neck", 0.3), spec.get("amplitude", 1.0),
                spec.get("half_height", 1.0),
            )
        raise ValueError(f"unknown domain kind: {kind!r}")


# -- builtin chart factories ---------------------------------------------------


def _sphere_map(semi, z_sign):
    """(theta, phi) -> (z, x, y) on a hemisphere-or-more of an ellipsoid."""
    sz, sx, sy = semi

    def mp(U):
        U = np.asarray(U, dtype=float)
        th, ph = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (3,))
        out[..., 0] = z_sign * sz * np.cos(th)
        out[..., 1] = sx * np.sin(th) * np.cos(ph)
        out[..., 2] = sy * np.sin(th) * np.sin(ph)
        return out

    def jac(U):
        U = np.asarray(U, dtype=float)
        th, ph = U[..., 0], U[..., 1]
        J = np.empty(U.shape[:-1] + (3, 2))
        J[..., 0, 0] = -z_sign * sz * np.sin(th)
        J[..., 0, 1] = 0.0
        J[..., 1, 0] = sx * np.cos(th) * np.cos(ph)
        J[..., 1, 1] = -sx * np.sin(th) * np.sin(ph)
        J[..., 2, 0] = sy * np.cos(th) * np.sin(ph)
        J[..., 2, 1] = sy * np.sin(th) * np.cos(ph)
        return J

    return mp, jac


def _s3_embed(w_semi):
    """Hyperspherical chart of the unit S^3 scaled by w_semi, in the
    coordinate order (x1, y1, x2, y2):
    (cos psi, sin psi cos th, sin psi sin th cos ph, sin psi sin th sin ph).
    """
    s1, s2, s3, s4 = w_semi

    def w(U):
        U = np.asarray(U, dtype=float)
        ps, th, ph = U[..., 0], U[..., 1], U[..., 2]
        out = np.empty(U.shape[:-1] + (4,))
        sp = np.sin(ps)
        out[..., 0] = s1 * np.cos(ps)
        out[..., 1] = s2 * sp * np.cos(th)
        out[..., 2] = s3 * sp * np.sin(th) * np.cos(ph)
        out[..., 3] = s4 * sp * np.sin(th) * np.sin(ph)
        return out

    def jw(U):
        U = np.asarray(U, dtype=float)
        ps, th, ph = U[..., 0], U[..., 1], U[..., 2]
        sp, cp = np.sin(ps), np.cos(ps)
        st, ct = np.sin(th), np.cos(th)
        sf, cf = np.sin(ph), np.cos(ph)
        J = np.zeros(U.shape[:-1] + (4, 3))
        J[..., 0, 0] = -s1 * sp
        J[..., 1, 0] = s2 * cp * ct
        J[..., 1, 1] = -s2 * sp * st
        J[..., 2, 0] = s3 * cp * st * cf
        J[..., 2, 1] = s3 * sp * ct * cf
        J[..., 2, 2] = -s3 * sp * st * sf
        J[..., 3, 0] = s4 * cp * st * sf
        J[..., 3, 1] = s4 * sp * ct * sf
        J[..., 3, 2] = s4 * sp * st * cf
        return J

    return w, jw


def _ellipsoid_charts(semi) -> list:
    d = semi.size
    charts = []
    if d == 3:
        mp_full, jac_full = _sphere_map(semi, -1.0)
        charts.append(BoundaryChart(
            "sphere", "boundary",
            np.array([[0.0, np.pi], [0.0, 2.0 * np.pi]]),
            mp_full, jac_full, +1.0, periodic=(False, True),
        ))
        charts.append(BoundaryChart(
            "lower", "inflow",
            np.array([[0.0, np.pi / 2.0], [0.0, 2.0 * np.pi]]),
            mp_full, jac_full, +1.0, periodic=(False, True),
        ))
        mp_up, jac_up = _sphere_map(semi, +1.0)
        charts.append(BoundaryChart(
            "upper", "outflow",
            np.array([[0.0, np.pi / 2.0], [0.0, 2.0 * np.pi]]),
            mp_up, jac_up, +1.0, periodic=(False, True),
        ))
        sx, sy = semi[1], semi[2]

        def eq_map(U):
            U = np.asarray(U, dtype=float)
            t = U[..., 0]
            out = np.zeros(U.shape[:-1] + (3,))
            out[..., 1] = sx * np.cos(t)
            out[..., 2] = sy * np.sin(t)
            return out

        charts.append(BoundaryChart(
            "equator", "stratum:2",
            np.array([[0.0, 2.0 * np.pi]]),
            eq_map, None, +1.0, periodic=(True,),
        ))
        return charts

    # d == 5: graph chart over the polar 4-ball plus the equatorial S^3
    sz = semi[0]
    w_semi = semi[1:]
    w_map, w_jac = _s3_embed(w_semi)

    def mk_hemi(z_sign):
        def mp(U):
            U = np.asarray(U, dtype=float)
            r = U[..., 0]
            W = w_map(U[..., 1:])
            out = np.empty(U.shape[:-1] + (5,))
            out[..., 0] = z_sign * sz * np.sqrt(np.clip(1.0 - r**2, 0.0, None))
            out[..., 1:] = r[..., None] * W
            return out

        def jac(U):
            U = np.asarray(U, dtype=float)
            r = U[..., 0]
            W = w_map(U[..., 1:])
            JW = w_jac(U[..., 1:])
            J = np.zeros(U.shape[:-1] + (5, 4))
            root = np.sqrt(np.clip(1.0 - r**2, 1e-300, None))
            J[..., 0, 0] = -z_sign * sz * r / root
            J[..., 1:, 0] = W
            J[..., 1:, 1:] = r[..., None, None] * JW
            return J

        return mp, jac

    box4 = np.array([[0.0, 1.0], [0.0, np.pi], [0.0, np.pi], [0.0, 2.0 * np.pi]])
    mp_lo, jac_lo = mk_hemi(-1.0)
    charts = [BoundaryChart("lower", "inflow", box4, mp_lo, jac_lo, +1.0,
                            periodic=(False, False, False, True))]
    mp_up, jac_up = mk_hemi(+1.0)
    charts.append(BoundaryChart("upper", "outflow", box4, mp_up, jac_up, +1.0,
                                periodic=(False, False, False, True)))

    def eq_map(U):
        U = np.asarray(U, dtype=float)
        W = w_map(U)
        out = np.zeros(U.shape[:-1] + (5,))
        out[..., 1:] = W
        return out

    def eq_jac(U):
        U = np.asarray(U, dtype=float)
        JW = w_jac(U)
        J = np.zeros(U.shape[:-1] + (5, 3))
        J[..., 1:, :] = JW
        return J

    charts.append(BoundaryChart(
        "equator3", "stratum:2",
        np.array([[0.0, np.pi], [0.0, np.pi], [0.0, 2.0 * np.pi]]),
        eq_map, eq_jac, +1.0, periodic=(False, False, True),
    ))
    return charts


def _shell_charts(r_in, r_out) -> list:
    charts = []
    for name, r in (("outer", r_out), ("inner", r_in)):
        semi = np.array([r, r, r])
        mp_dn, jac_dn = _sphere_map(semi, -1.0)
        mp_up, jac_up = _sphere_map(semi, +1.0)
        full_box = np.array([[0.0, np.pi], [0.0, 2.0 * np.pi]])
        half_box = np.array([[0.0, np.pi / 2.0], [0.0, 2.0 * np.pi]])
        charts.append(BoundaryChart(
            f"{name}-sphere", "boundary", full_box, mp_dn, jac_dn, +1.0,
            periodic=(False, True),
        ))
        # the flow enters the shell through the outer-lower and inner-upper caps
        if name == "outer":
            charts.append(BoundaryChart("outer-lower", "inflow", half_box,
                                        mp_dn, jac_dn, +1.0, periodic=(False, True)))
            charts.append(BoundaryChart("outer-upper", "outflow", half_box,
                                        mp_up, jac_up, +1.0, periodic=(False, True)))
        else:
            charts.append(BoundaryChart("inner-upper", "inflow", half_box,
                                        mp_up, jac_up, +1.0, periodic=(False, True)))
            charts.append(BoundaryChart("inner-lower", "outflow", half_box,
                                        mp_dn, jac_dn, +1.0, periodic=(False, True)))

        def mk_eq(rr):
            def eq_map(U):
                U = np.asarray(U, dtype=float)
                t = U[..., 0]
                out = np.zeros(U.shape[:-1] + (3,))
                out[..., 1] = rr * np.cos(t)
                out[..., 2] = rr * np.sin(t)
                return out
            return eq_map

        charts.append(BoundaryChart(
            f"{name}-equator", "stratum:2", np.array([[0.0, 2.0 * np.pi]]),
            mk_eq(r), None, +1.0, periodic=(True,),
        ))
    return charts


def _sandclock_charts(c, a, H) -> list:
    s_m = float(np.sqrt((1.0 - c) / 2.0))

    def radius(s):
        return a * np.sqrt(np.clip((1.0 - s**2) * (s**2 + c), 0.0, None))

    def mk_lateral(s_lo, s_hi, name, role):
        def mp(U):
            U = np.asarray(U, dtype=float)
            s, ph = U[..., 0], U[..., 1]
            R = radius(s)
            out = np.empty(U.shape[:-1] + (3,))
            out[..., 0] = H * s
            out[..., 1] = R * np.cos(ph)
            out[..., 2] = R * np.sin(ph)
            return out
        return BoundaryChart(
            name, role, np.array([[s_lo, s_hi], [0.0, 2.0 * np.pi]]),
            mp, None, +1.0, periodic=(False, True),
        )

    charts = [
        mk_lateral(-1.0, 1.0, "lateral", "boundary"),
        mk_lateral(-1.0, -s_m, "lower-bulb-in", "inflow"),
        mk_lateral(0.0, s_m, "upper-neck-in", "inflow"),
        mk_lateral(-s_m, 0.0, "lower-neck-out", "outflow"),
        mk_lateral(s_m, 1.0, "upper-bulb-out", "outflow"),
    ]

    def mk_circle(s0, name, orient):
        R0 = float(radius(np.asarray(s0)))

        def mp(U):
            U = np.asarray(U, dtype=float)
            t = U[..., 0]
            out = np.empty(U.shape[:-1] + (3,))
            out[..., 0] = H * s0
            out[..., 1] = R0 * np.cos(t)
            out[..., 2] = R0 * np.sin(t)
            return out

        return BoundaryChart(name, "stratum:2", np.array([[0.0, 2.0 * np.pi]]),
                             mp, None, orient, periodic=(True,))

    # Stokes orientation of the inflow bands: counterclockwise rims, but the
    # neck bounds the upper inflow band from below and runs clockwise
    charts += [
        mk_circle(0.0, "neck", -1.0),
        mk_circle(s_m, "upper-rim", +1.0),
        mk_circle(-s_m, "lower-rim", +1.0),
    ]
    return charts


# -- Lie tower -----------------------------------------------------------------


def lie_tower(domain: Domain, field_func, p, depth: int,
              step_rel: float = 1e-4) -> list:
    """Iterated directional derivatives [h, L_v h, ..., L_v^depth h] at p.

    The first derivative uses the analytic gradient of h; higher ones use
    central differences along the frozen direction v(q), Richardson
    extrapolated once. Accuracy degrades roughly by a factor 1/step per
    level, which is adequate up to depth 3.
    """
    p = np.asarray(p, dtype=float)
    step = step_rel * domain.scale

    def g(k, q):
        if k == 0:
            return float(domain.h(q))
        if k == 1:
            return float(np.dot(domain.grad_h(q), field_func(q)))
        v = np.asarray(field_func(q), dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        e = v / nv

        def phi(t):
            return g(k - 1, q + t * e)

        d1 = (phi(step) - phi(-step)) / (2.0 * step)
        d2 = (phi(step / 2.0) - phi(-step / 2.0)) / step
        return ((4.0 * d2 - d1) / 3.0) * nv

    return [g(k, p) for k in range(depth + 1)]


# -- vertical chord extraction ---------------------------------------------


def vertical_chords(domain: Domain, W: np.ndarray, n_scan: int = 512,
                    refine_iters: int = 60):
    """Interior z-intervals of the vertical lines through the columns W.

    W has shape (N, d-1): the non-z coordinates of each column. Returns
    (col_idx, z_lo, z_hi) arrays with one row per chord; columns missing
    the domain contribute nothing. Roots of h along z are found by a sign
    scan over n_scan points refined by bisection.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    N, dm1 = W.shape
    z0, z1 = domain.bbox[0]
    zs = np.linspace(z0, z1, n_scan)

    P = np.empty((N, n_scan, dm1 + 1))
    P[:, :, 0] = zs[None, :]
    P[:, :, 1:] = W[:, None, :]
    Hv = domain.h(P.reshape(-1, dm1 + 1)).reshape(N, n_scan)

    neg = Hv < 0.0
    sign_change = neg[:, :-1] != neg[:, 1:]
    cols, segs = np.nonzero(sign_change)
    if cols.size == 0:
        return (np.empty(0, dtype=int), np.empty(0), np.empty(0))

    lo = zs[segs].copy()
    hi = zs[segs + 1].copy()
    f_lo = Hv[cols, segs].copy()

    for _ in range(refine_iters):
        mid = 0.5 * (lo + hi)
        Pm = np.empty((mid.size, dm1 + 1))
        Pm[:, 0] = mid
        Pm[:, 1:] = W[cols]
        fm = domain.h(Pm)
        take_lo = (fm < 0.0) == (f_lo < 0.0)
        lo = np.where(take_lo, mid, lo)
        f_lo = np.where(take_lo, fm, f_lo)
        hi = np.where(take_lo, hi, mid)
    roots = 0.5 * (lo + hi)

    # pair consecutive roots per column where the midpoint is interior
    order = np.lexsort((roots, cols))
    cols_s, roots_s = cols[order], roots[order]
    same = cols_s[:-1] == cols_s[1:]
    if not np.any(same):
        return (np.empty(0, dtype=int), np.empty(0), np.empty(0))
    lo_c = roots_s[:-1][same]
    hi_c = roots_s[1:][same]
    cc = cols_s[:-1][same]
    mids = np.empty((cc.size, dm1 + 1))
    mids[:, 0] = 0.5 * (lo_c + hi_c)
    mids[:, 1:] = W[cc]
    # tiny positive tolerance keeps grazing chords (interior tangency) whole
    keep = domain.h(mids) < 1e-12 * max(1.0, domain.scale) ** 2
    return cc[keep], lo_c[keep], hi_c[keep]
