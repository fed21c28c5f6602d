import math

import numpy as np
import pytest

from reebholo import ContactForm, Domain
from reebholo.flow import trajectory_from_entry
from reebholo.nonsqueezing import (anisotropic_scaling, complexity, inclusion,
                                   nonsqueezing_check, pullback_residual,
                                   shadow_kappa, z_translation)
from reebholo.scene import ContactScene


@pytest.fixture(scope="module")
def big_ball():
    return ContactScene(1, Domain.ellipsoid([4, 4, 4]), ContactForm.darboux(1))


class TestEmbeddings:
    def test_identity_pullback_exact(self, ball, big_ball):
        rep = pullback_residual(inclusion(ball, big_ball))
        assert rep["pullback"] < 1e-12
        assert rep["contained"]

    def test_z_translation_preserves_darboux(self, big_ball):
        small = ContactScene(1, Domain.ellipsoid([1, 1, 1]), ContactForm.darboux(1))
        rep = pullback_residual(z_translation(small, big_ball, 0.5))
        assert rep["pullback"] < 1e-12
        assert rep["contained"]

    def test_x_translation_breaks_darboux(self, big_ball):
        small = ContactScene(1, Domain.ellipsoid([1, 1, 1]), ContactForm.darboux(1))
        from reebholo.nonsqueezing import AffineEmbedding
        b = np.array([0.0, 0.5, 0.0])
        emb = AffineEmbedding(small, big_ball, np.eye(3), b, "x-shift")
        assert pullback_residual(emb)["pullback"] > 0.1

    def test_scaling_declared_incompatible(self, sandclock):
        tgt = ContactScene(1, Domain.sandclock(0.6, 2.0, 2.0), ContactForm.darboux(1))
        emb = anisotropic_scaling(sandclock, tgt, 2.0, 2.0)
        assert not emb.form_compatible
        assert pullback_residual(emb)["pullback"] > 0.1


class TestComplexity:
    def test_ball_in_ball(self, ball, big_ball):
        rep = complexity(inclusion(ball, big_ball), grid=24)
        assert rep["c_bullet"] == 1

    def test_sandclock(self, sandclock):
        tgt = ContactScene(1, Domain.sandclock(0.6, 2.0, 2.0), ContactForm.darboux(1))
        rep = complexity(inclusion(sandclock, tgt), grid=40)
        assert rep["c_bullet"] == 2

    def test_shell_in_ball(self, shell):
        tgt = ContactScene(1, Domain.ellipsoid([5, 5, 5]), ContactForm.darboux(1))
        rep = complexity(inclusion(shell, tgt), grid=32)
        assert rep["c_bullet"] == 2

    def test_lower_bound_from_source_words(self, shell, rng):
        # half the max source trajectory norm bounds the complexity below
        tgt = ContactScene(1, Domain.ellipsoid([5, 5, 5]), ContactForm.darboux(1))
        c = complexity(inclusion(shell, tgt), grid=32)["c_bullet"]
        from reebholo.strata import inflow_samples
        words = []
        for p in inflow_samples(shell, 16, rng):
            words.append(trajectory_from_entry(shell, p).norm)
        assert max(words) / 2 <= c


class TestNonSqueezing:
    def test_ball_in_ball_slacks(self, ball, big_ball, quad):
        rep = nonsqueezing_check(inclusion(ball, big_ball), quad, grid=24)
        assert rep.c_bullet == 1
        assert abs(rep.vol_source - 4 * math.pi / 3) / rep.vol_source < 5e-3
        assert abs(rep.vol_target - 32 * math.pi / 3) / rep.vol_target < 5e-3
        assert abs(rep.diam_source - 2) < 1e-4
        assert abs(rep.diam_target - 4) < 1e-4
        assert abs(rep.shadow_source - math.pi) / math.pi < 5e-3
        assert abs(rep.shadow_target - 4 * math.pi) / (4 * math.pi) < 5e-3
        assert rep.slack_volume > 0
        assert rep.slack_diameter > 0
        assert rep.slack_equatorial > 0

    def test_equality_case_identity_on_same_scene(self, ball, quad):
        grown = ContactScene(1, Domain.ellipsoid([2 + 1e-9, 2 + 1e-9, 2 + 1e-9]),
                             ContactForm.darboux(1))
        rep = nonsqueezing_check(inclusion(ball, grown), quad, grid=24)
        assert rep.c_bullet == 1
        assert abs(rep.slack_volume) < 5e-3 * rep.vol_source
        assert abs(rep.slack_diameter) < 1e-3
        assert abs(rep.slack_equatorial) < 5e-3 * rep.shadow_source

    def test_incompatible_embedding_rejected(self, sandclock, quad):
        tgt = ContactScene(1, Domain.sandclock(0.6, 2.0, 2.0), ContactForm.darboux(1))
        emb = anisotropic_scaling(sandclock, tgt, 2.0, 2.0)
        emb.form_compatible = True     # force the check to look
        with pytest.raises(ValueError):
            nonsqueezing_check(emb, quad, grid=16)


class TestShadowKappa:
    def test_translated_ball_matches(self, big_ball, quad):
        r = 0.5
        small = ContactScene(1, Domain.ellipsoid([2 * r, 2 * r, 2 * r]),
                             ContactForm.darboux(1))
        rep = shadow_kappa(z_translation(small, big_ball, 0.3), 1, quad)
        assert rep["rel_gap"] < 1e-2
        assert abs(rep["abs_intrinsic"] - math.pi * r * r) / (math.pi * r * r) < 1e-2

    def test_translation_invariance(self, big_ball, quad):
        small = ContactScene(1, Domain.ellipsoid([1, 1, 1]), ContactForm.darboux(1))
        a = shadow_kappa(z_translation(small, big_ball, 0.0), 1, quad)
        b = shadow_kappa(z_translation(small, big_ball, 0.4), 1, quad)
        assert abs(a["abs_projected"] - b["abs_projected"]) < 1e-6

    def test_even_j_rejected(self, ball, big_ball, quad):
        with pytest.raises(ValueError):
            shadow_kappa(inclusion(ball, big_ball), 2, quad)
