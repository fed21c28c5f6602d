"""Contact 1-forms on R^(2n+1) and pointwise exterior algebra.

Coordinates are ordered (z, x_1, y_1, ..., x_n, y_n). A form is represented by
its coefficient covector ``beta(p)`` and the antisymmetric matrix
``dbeta(p)[i, j] = (d beta)(e_i, e_j)``.

Wedge powers are evaluated with the determinant convention,
``(a ^ b)(v_1..v_{p+q}) = 1/(p! q!) sum_sigma sign(sigma) a(..) b(..)``,
so ``dz ^ dx ^ dy`` takes the value 1 on the standard ordered basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SingularForm

__all__ = [
    "ContactForm",
    "reeb_field",
    "reeb_field_many",
    "top_form_value",
    "top_form_value_many",
    "eval_dbeta_power",
    "eval_beta_wedge_dbeta_power",
]

_DET_TOL = 1e-12

# signed permutations of {0..k-1}, cached per k
_PERM_CACHE: dict[int, list[tuple[tuple[int, ...], int]]] = {}


def _signed_permutations(k: int):
    if k not in _PERM_CACHE:
        out = []
        for perm in itertools.permutations(range(k)):
            inv = sum(
                1
                for a in range(k)
                for c in range(a + 1, k)
                if perm[a] > perm[c]
            )
            out.append((perm, -1 if inv % 2 else 1))
        _PERM_CACHE[k] = out
    return _PERM_CACHE[k]


def eval_dbeta_power(D: np.ndarray, vectors: np.ndarray, m: int) -> float:
    """Value of (dbeta)^m on 2m vectors (columns of ``vectors``)."""
    if m == 0:
        return 1.0
    W = vectors.T @ D @ vectors  # W[a, b] = dbeta(v_a, v_b)
    if m == 1:
        return float(W[0, 1])
    total = 0.0
    for perm, sign in _signed_permutations(2 * m):
        prod = 1.0
        for k in range(m):
            prod *= W[perm[2 * k], perm[2 * k + 1]]
        total += sign * prod
    return total / (2.0 ** m)


def eval_beta_wedge_dbeta_power(
    b: np.ndarray, D: np.ndarray, vectors: np.ndarray, m: int
) -> float:
    """Value of beta ^ (dbeta)^m on 2m+1 vectors (columns of ``vectors``)."""
    bv = b @ vectors  # bv[a] = beta(v_a)
    if m == 0:
        return float(bv[0])
    W = vectors.T @ D @ vectors
    total = 0.0
    for perm, sign in _signed_permutations(2 * m + 1):
        prod = bv[perm[0]]
        for k in range(m):
            prod *= W[perm[2 * k + 1], perm[2 * k + 2]]
        total += sign * prod
    return total / (2.0 ** m)


def _fd_jacobian(func, p, step):
    """Central-difference Jacobian J[i, j] = d func_i / d p_j at one point."""
    d = p.size
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (func(p + e) - func(p - e)) / (2.0 * step)
    return J


@dataclass
class ContactForm:
    """A 1-form beta with its exterior derivative on R^(2n+1).

    Parameters
    ----------
    n : half-dimension, 1 or 2 (manifold dimension 2n+1).
    kind : "darboux", "radial", or "custom".
    beta_func : vectorized coefficient map, shape (..., d) -> (..., d).
    dbeta_func : optional analytic antisymmetric matrix map, point -> (d, d).
        When absent, central differences with one Richardson step are used.
    fd_step : base step of the finite-difference fallback.
    """

    n: int
    kind: str
    beta_func: Callable[[np.ndarray], np.ndarray]
    dbeta_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-5
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n in {1, 2} is supported")

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    # -- evaluation ---------------------------------------------------------

    def beta(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.beta_func(p)

    def dbeta(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.dbeta_func is not None:
            return self.dbeta_func(p)
        return self._dbeta_fd(p)

    def _dbeta_fd(self, p: np.ndarray) -> np.ndarray:
        h = self.fd_step
        J1 = _fd_jacobian(self.beta_func, p, h)
        J2 = _fd_jacobian(self.beta_func, p, h / 2.0)
        J = (4.0 * J2 - J1) / 3.0
        return J.T - J

    def beta_many(self, P: np.ndarray) -> np.ndarray:
        """Coefficients at a batch of points, shape (N, d) -> (N, d)."""
        return self.beta_func(np.asarray(P, dtype=float))

    def dbeta_many(self, P: np.ndarray) -> np.ndarray:
        """Antisymmetric matrices at a batch of points, (N, d) -> (N, d, d)."""
        P = np.asarray(P, dtype=float)
        if self.dbeta_func is not None and getattr(self, "_dbeta_vectorized", False):
            return self.dbeta_func(P)
        return np.stack([self.dbeta(p) for p in P])

    # -- builtins ------------------------------------------------------------

    @staticmethod
    def darboux(n: int) -> "ContactForm":
        """dz + sum_i x_i dy_i."""
        d = 2 * n + 1

        def beta(P):
            P = np.asarray(P, dtype=float)
            out = np.zeros(P.shape)
            out[..., 0] = 1.0
            for i in range(n):
                out[..., 2 + 2 * i] = P[..., 1 + 2 * i]
            return out

        D0 = np.zeros((d, d))
        for i in range(n):
            D0[1 + 2 * i, 2 + 2 * i] = 1.0
            D0[2 + 2 * i, 1 + 2 * i] = -1.0

        def dbeta(P):
            P = np.asarray(P, dtype=float)
            if P.ndim == 1:
                return D0.copy()
            return np.broadcast_to(D0, P.shape[:-1] + (d, d)).copy()

        form = ContactForm(n, "darboux", beta, dbeta, label="darboux")
        form._dbeta_vectorized = True
        return form

    @staticmethod
    def radial(n: int) -> "ContactForm":
        """dz + (1/2) sum_i (x_i dy_i - y_i dx_i); invariant under rotations
        of each (x_i, y_i) plane, same dbeta as the Darboux form."""
        d = 2 * n + 1

        def beta(P):
            P = np.asarray(P, dtype=float)
            out = np.zeros(P.shape)
            out[..., 0] = 1.0
            for i in range(n):
                out[..., 1 + 2 * i] = -0.5 * P[..., 2 + 2 * i]
                out[..., 2 + 2 * i] = 0.5 * P[..., 1 + 2 * i]
            return out

        D0 = np.zeros((d, d))
        for i in range(n):
            D0[1 + 2 * i, 2 + 2 * i] = 1.0
            D0[2 + 2 * i, 1 + 2 * i] = -1.0

        def dbeta(P):
            P = np.asarray(P, dtype=float)
            if P.ndim == 1:
                return D0.copy()
            return np.broadcast_to(D0, P.shape[:-1] + (d, d)).copy()

        form = ContactForm(n, "radial", beta, dbeta, label="radial")
        form._dbeta_vectorized = True
        return form

    @staticmethod
    def custom(
        n: int,
        beta_func,
        dbeta_func=None,
        fd_step: float = 1e-5,
        label: str = "custom",
    ) -> "ContactForm":
        return ContactForm(n, "custom", beta_func, dbeta_func, fd_step, label=label)

    @staticmethod
    def from_spec(spec) -> "ContactForm":
        """Build a builtin form from a scene-file fragment like
        {"kind": "darboux"}; custom forms are API-only."""
        kind = spec.get("kind", "darboux")
        n = int(spec.get("n", 1))
        if kind == "darboux":
            return ContactForm.darboux(n)
        if kind == "radial":
            return ContactForm.radial(n)
        raise ValueError(f"unknown builtin form kind: {kind!r}")

    # -- derived forms -------------------------------------------------------

    def plus_exact(self, grad_eta, scale: float = 1.0) -> "ContactForm":
        """The form beta + scale * d(eta), given the gradient of eta.

        d(d eta) = 0, so dbeta is unchanged; this is the exact-slanting
        deformation used by the invariance scans.
        """
        base_beta = self.beta_func
        base = self

        def beta(P):
            P = np.asarray(P, dtype=float)
            return base_beta(P) + scale * np.asarray(grad_eta(P), dtype=float)

        form = ContactForm(
            self.n, "custom", beta, base.dbeta_func, self.fd_step,
            label=f"{self.label}+{scale:g}*d(eta)",
        )
        form._dbeta_vectorized = getattr(base, "_dbeta_vectorized", False)
        if base.dbeta_func is None:
            form.dbeta_func = None
        return form

    def scaled(self, factor, grad_factor) -> "ContactForm":
        """The conformally rescaled form f(p) * beta with f > 0.

        dbeta picks up the df ^ beta term; both callables must be
        vectorized (f: (..., d) -> (...), grad f: (..., d) -> (..., d)).
        """
        base = self

        def beta(P):
            P = np.asarray(P, dtype=float)
            return np.asarray(factor(P))[..., None] * base.beta_func(P)

        def dbeta(p):
            p = np.asarray(p, dtype=float)
            f = float(factor(p))
            g = np.asarray(grad_factor(p), dtype=float)
            b = base.beta_func(p)
            # d(f beta) = df ^ beta + f dbeta
            return np.outer(g, b) - np.outer(b, g) + f * base.dbeta(p)

        return ContactForm(
            self.n, "custom", beta, dbeta, self.fd_step,
            label=f"scaled({self.label})",
        )


def reeb_field(form: ContactForm, p) -> np.ndarray:
    """Solve for the Reeb vector v with beta(v) = 1 and v in ker(dbeta).

    Uses the square system (dbeta + beta (x) beta) v = beta, which is
    invertible exactly when the contact condition holds at p.
    """
    p = np.asarray(p, dtype=float)
    b = form.beta(p)
    D = form.dbeta(p)
    M = D + np.outer(b, b)
    if abs(np.linalg.det(M)) < _DET_TOL:
        raise SingularForm(f"contact condition violated at {p}: |det M| < {_DET_TOL}")
    return np.linalg.solve(M, b)


def reeb_field_many(form: ContactForm, P: np.ndarray) -> np.ndarray:
    """Batched Reeb solve, (N, d) -> (N, d)."""
    P = np.asarray(P, dtype=float)
    B = form.beta_many(P)
    D = form.dbeta_many(P)
    M = D + B[:, :, None] * B[:, None, :]
    dets = np.linalg.det(M)
    if np.any(np.abs(dets) < _DET_TOL):
        i = int(np.argmin(np.abs(dets)))
        raise SingularForm(f"contact condition violated at {P[i]}")
    return np.linalg.solve(M, B[..., None])[..., 0]


def top_form_value(form: ContactForm, p) -> float:
    """Value of beta ^ (dbeta)^n at p on the standard ordered basis."""
    p = np.asarray(p, dtype=float)
    b = form.beta(p)
    D = form.dbeta(p)
    return eval_beta_wedge_dbeta_power(b, D, np.eye(form.dim), form.n)


def top_form_value_many(form: ContactForm, P: np.ndarray) -> np.ndarray:
    """Batched top-form values, (N, d) -> (N,)."""
    P = np.asarray(P, dtype=float)
    B = form.beta_many(P)
    D = form.dbeta_many(P)
    n = form.n
    out = np.zeros(P.shape[0])
    for perm, sign in _signed_permutations(2 * n + 1):
        prod = sign * B[:, perm[0]]
        for k in range(n):
            prod = prod * D[:, perm[2 * k + 1], perm[2 * k + 2]]
        out += prod
    return out / (2.0 ** n)
