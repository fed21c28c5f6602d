"""Contact vector fields and the Moser deformation velocity.

For a function h, the contact field u = h v_beta + w is determined by the
unique w in ker(beta) solving  w _| dbeta = -dh + dh(v_beta) beta; the
restriction of that equation to ker(beta) is a nondegenerate 2n x 2n
linear system. The Moser velocity of an affine family beta + t sigma
(sigma closed) solves w_t _| dbeta_t = mu_t beta_t - sigma with
mu_t = sigma(v_t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSymplectic
from .forms import reeb_field
from .scene import ContactScene, sample_interior

__all__ = ["MoserVelocity", "ContactField", "ker_basis", "solve_w",
           "verify_solution", "moser_velocity"]

_SING_TOL = 1e-12


def ker_basis(b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker(beta) at a point, deterministic in the
    coordinate order: project the coordinate frame along the metric dual of
    beta, drop the most beta-aligned axis, Gram-Schmidt the rest.
    Returns a (d, 2n) matrix of columns."""
    d = b.size
    i0 = int(np.argmax(np.abs(b)))
    bb = float(b @ b)
    cols = []
    for i in range(d):
        if i == i0:
            continue
        e = np.zeros(d)
        e[i] = 1.0
        u = e - (b[i] / bb) * b
        for c in cols:
            u = u - (u @ c) * c
        nu = np.linalg.norm(u)
        if nu < 1e-14:
            raise SingularSymplectic("degenerate kernel basis")
        cols.append(u / nu)
    return np.stack(cols, axis=1)


def _solve_in_kernel(b, D, rhs_cov) -> np.ndarray:
    """Solve dbeta(w, u_k) = rhs(u_k) for w in ker(beta)."""
    U = ker_basis(b)
    A = U.T @ D @ U                      # A[k, l] = dbeta(u_k, u_l)
    rhs = U.T @ rhs_cov
    if abs(np.linalg.det(A)) < _SING_TOL:
        raise SingularSymplectic("dbeta restricted to ker(beta) is singular")
    c = np.linalg.solve(A.T, rhs)
    return U @ c


def solve_w(scene: ContactScene, grad_h, p) -> np.ndarray:
    """The unique w in ker(beta) with  w _| dbeta = -dh + dh(v_beta) beta.

    grad_h maps points to the gradient covector of h. Only the restriction
    of -dh to ker(beta) enters the solve; the full equation then holds
    automatically.
    """
    p = np.asarray(p, dtype=float)
    b = scene.form.beta(p)
    D = scene.form.dbeta(p)
    dh = np.asarray(grad_h(p), dtype=float)
    return _solve_in_kernel(b, D, -dh)


def verify_solution(scene: ContactScene, grad_h, w_func,
                    n_samples: int = 100, seed: int = 0) -> dict:
    """Residuals of the contact-field equation and of hypersurface tangency.

    Reports max over interior samples of |w _| dbeta + dh - dh(v) beta|
    (componentwise sup), of |dh(w)|, and of the ker-beta defect |beta(w)|.
    """
    rng = np.random.default_rng(seed)
    P = sample_interior(scene.domain, n_samples, rng)
    r_eq = 0.0
    r_tan = 0.0
    r_ker = 0.0
    for p in P:
        b = scene.form.beta(p)
        D = scene.form.dbeta(p)
        dh = np.asarray(grad_h(p), dtype=float)
        v = reeb_field(scene.form, p)
        w = np.asarray(w_func(p), dtype=float)
        res = w @ D + dh - float(dh @ v) * b
        r_eq = max(r_eq, float(np.abs(res).max()))
        r_tan = max(r_tan, abs(float(dh @ w)))
        r_ker = max(r_ker, abs(float(b @ w)))
    return {"equation": r_eq, "tangency": r_tan, "kernel": r_ker,
            "n_samples": int(P.shape[0])}


@dataclass
class ContactField:
    """The full contact field u = h v_beta + w for a given h."""

    scene: ContactScene
    h: callable
    grad_h: callable

    def w(self, p) -> np.ndarray:
        return solve_w(self.scene, self.grad_h, p)

    def lam(self, p) -> float:
        """The conformal factor dh(v_beta) in L_u beta = lam beta."""
        p = np.asarray(p, dtype=float)
        return float(np.asarray(self.grad_h(p)) @ self.scene.reeb(p))

    def u(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return float(self.h(p)) * self.scene.reeb(p) + self.w(p)


@dataclass
class MoserVelocity:
    w: np.ndarray
    mu: float
    residual: float


def moser_velocity(scene: ContactScene, sigma, t: float, p) -> MoserVelocity:
    """Moser velocity of the family beta_t = beta + t sigma at (t, p).

    sigma is a closed 1-form given by its covector map, so dbeta_t = dbeta
    and beta_t-dot = sigma. Returns the kernel field w_t, the factor
    mu_t = sigma(v_t), and the sup-norm residual of the defining equation.
    """
    p = np.asarray(p, dtype=float)
    sig = np.asarray(sigma(p), dtype=float)
    b = scene.form.beta(p) + t * sig
    D = scene.form.dbeta(p)
    M = D + np.outer(b, b)
    if abs(np.linalg.det(M)) < _SING_TOL:
        raise SingularSymplectic(f"deformed form not contact at {p}")
    v_t = np.linalg.solve(M, b)
    mu = float(sig @ v_t)
    rhs_cov = mu * b - sig
    w = _solve_in_kernel(b, D, rhs_cov)
    residual = float(np.abs(w @ D - rhs_cov).max())
    return MoserVelocity(w, mu, residual)
