import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reebholo import ContactForm, SingularForm, reeb_field, top_form_value
from reebholo.forms import (eval_beta_wedge_dbeta_power, eval_dbeta_power,
                            reeb_field_many, top_form_value_many)


def hand_top_form_3d(b, D):
    """Independent oracle: expand beta ^ dbeta on (e_z, e_x, e_y) by hand.

    With dbeta = sum_{i<j} D_ij dx^i ^ dx^j the 3-form value is
    b_0 D_12 - b_1 D_02 + b_2 D_01.
    """
    return b[0] * D[1, 2] - b[1] * D[0, 2] + b[2] * D[0, 1]


def e_x_scaled_darboux():
    base = ContactForm.darboux(1)

    def f(P):
        return np.exp(np.asarray(P, dtype=float)[..., 1])

    def grad_f(P):
        P = np.asarray(P, dtype=float)
        out = np.zeros(P.shape)
        out[..., 1] = np.exp(P[..., 1])
        return out

    return base.scaled(f, grad_f)


def dz_only_form():
    def beta(P):
        P = np.asarray(P, dtype=float)
        out = np.zeros(P.shape)
        out[..., 0] = 1.0
        return out

    return ContactForm.custom(1, beta, lambda p: np.zeros((3, 3)))


class TestBuiltins:
    def test_darboux_reeb_is_dz(self):
        f = ContactForm.darboux(1)
        v = reeb_field(f, [0.0, 1.0, 0.0])
        assert np.allclose(v, [1.0, 0.0, 0.0], atol=1e-14)

    def test_radial_dim5_reeb_is_dz(self, rng):
        f = ContactForm.radial(2)
        for _ in range(5):
            v = reeb_field(f, rng.uniform(-1, 1, 5))
            assert np.allclose(v, [1, 0, 0, 0, 0], atol=1e-13)

    def test_antisymmetry_sampled(self, rng):
        for form in (ContactForm.darboux(1), ContactForm.radial(1),
                     ContactForm.darboux(2), ContactForm.radial(2),
                     e_x_scaled_darboux()):
            for _ in range(20):
                p = rng.uniform(-1, 1, form.dim)
                D = form.dbeta(p)
                assert np.abs(D + D.T).max() < 1e-12

    @pytest.mark.parametrize("maker,n", [
        (ContactForm.darboux, 1), (ContactForm.radial, 1),
        (ContactForm.darboux, 2), (ContactForm.radial, 2),
    ])
    def test_reeb_residuals_thousand_points(self, maker, n, rng):
        form = maker(n)
        P = rng.uniform(-1, 1, (1000, form.dim))
        V = reeb_field_many(form, P)
        B = form.beta_many(P)
        D = form.dbeta_many(P)
        assert np.abs(np.einsum("nij,nj->ni", D, V)).max() < 1e-10
        assert np.abs(np.einsum("ni,ni->n", B, V) - 1.0).max() < 1e-10


class TestCustomForms:
    def test_scaled_darboux_reeb_matches_analytic(self, rng):
        form = e_x_scaled_darboux()
        for _ in range(20):
            p = rng.uniform(-0.8, 0.8, 3)
            v = reeb_field(form, p)
            x = p[1]
            expected = np.array([(1 + x) * np.exp(-x), 0.0, -np.exp(-x)])
            assert np.abs(v - expected).max() < 1e-10
            assert np.abs(form.dbeta(p) @ v).max() < 1e-10
            assert abs(form.beta(p) @ v - 1.0) < 1e-10

    def test_fd_dbeta_matches_analytic(self, rng):
        analytic = ContactForm.darboux(1)
        fd = ContactForm.custom(1, analytic.beta_func)   # no dbeta given
        for _ in range(10):
            p = rng.uniform(-1, 1, 3)
            assert np.abs(fd.dbeta(p) - analytic.dbeta(p)).max() < 1e-6

    def test_plus_exact_keeps_dbeta(self, rng):
        base = ContactForm.darboux(1)

        def grad_eta(P):
            P = np.asarray(P, dtype=float)
            return -0.2 * np.exp(-np.sum(P**2, axis=-1))[..., None] * P

        form = base.plus_exact(grad_eta, 0.1)
        p = rng.uniform(-1, 1, 3)
        assert np.allclose(form.dbeta(p), base.dbeta(p))
        assert np.allclose(form.beta(p), base.beta(p) + 0.1 * grad_eta(p))

    def test_singular_form_raises(self):
        with pytest.raises(SingularForm):
            reeb_field(dz_only_form(), [0.0, 0.0, 0.0])


class TestTopForm:
    def test_darboux_n1_equals_one(self, rng):
        f = ContactForm.darboux(1)
        for _ in range(5):
            p = rng.uniform(-2, 2, 3)
            assert abs(top_form_value(f, p) - 1.0) < 1e-13

    def test_radial_n1_constant(self, rng):
        f = ContactForm.radial(1)
        vals = [top_form_value(f, rng.uniform(-2, 2, 3)) for _ in range(10)]
        assert np.ptp(vals) < 1e-13
        assert vals[0] > 0

    def test_degenerate_dz_vanishes(self):
        assert top_form_value(dz_only_form(), [0.3, 0.1, -0.5]) == 0.0

    def test_hand_expansion_oracle(self, rng):
        for form in (ContactForm.darboux(1), ContactForm.radial(1),
                     e_x_scaled_darboux()):
            for _ in range(10):
                p = rng.uniform(-1, 1, 3)
                expected = hand_top_form_3d(form.beta(p), form.dbeta(p))
                assert abs(top_form_value(form, p) - expected) < 1e-12

    def test_dim5_darboux_equals_two(self, rng):
        f = ContactForm.darboux(2)
        p = rng.uniform(-1, 1, 5)
        assert abs(top_form_value(f, p) - 2.0) < 1e-12

    def test_batched_matches_scalar(self, rng):
        f = e_x_scaled_darboux()
        P = rng.uniform(-1, 1, (40, 3))
        batch = top_form_value_many(f, P)
        single = [top_form_value(f, p) for p in P]
        assert np.abs(batch - single).max() < 1e-12


class TestWedgeEval:
    def test_dbeta_power_m1_is_matrix_entry(self, rng):
        D = rng.normal(size=(3, 3))
        D = D - D.T
        V = rng.normal(size=(3, 2))
        assert abs(eval_dbeta_power(D, V, 1) - V[:, 0] @ D @ V[:, 1]) < 1e-14

    def test_dbeta_square_formula(self, rng):
        # (w ^ w)(v1..v4) = 2 (w12 w34 - w13 w24 + w14 w23)
        D = rng.normal(size=(5, 5))
        D = D - D.T
        V = rng.normal(size=(5, 4))
        W = V.T @ D @ V
        expected = 2.0 * (W[0, 1] * W[2, 3] - W[0, 2] * W[1, 3]
                          + W[0, 3] * W[1, 2])
        assert abs(eval_dbeta_power(D, V, 2) - expected) < 1e-11

    def test_beta_wedge_alternating(self, rng):
        b = rng.normal(size=3)
        D = rng.normal(size=(3, 3))
        D = D - D.T
        V = rng.normal(size=(3, 3))
        val = eval_beta_wedge_dbeta_power(b, D, V, 1)
        Vs = V[:, [1, 0, 2]]
        assert abs(eval_beta_wedge_dbeta_power(b, D, Vs, 1) + val) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3),
       st.floats(-0.8, 0.8))
def test_conformal_scaling_keeps_reeb_residuals(coords, a):
    """Reeb solve stays consistent for e^{a x} rescalings of the Darboux form."""
    base = ContactForm.darboux(1)

    def f(P):
        return np.exp(a * np.asarray(P, dtype=float)[..., 1])

    def grad_f(P):
        P = np.asarray(P, dtype=float)
        out = np.zeros(P.shape)
        out[..., 1] = a * np.exp(a * P[..., 1])
        return out

    form = base.scaled(f, grad_f)
    p = np.asarray(coords)
    v = reeb_field(form, p)
    assert np.abs(form.dbeta(p) @ v).max() < 1e-9
    assert abs(form.beta(p) @ v - 1.0) < 1e-9
