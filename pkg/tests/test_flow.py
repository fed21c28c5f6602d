import numpy as np
import pytest

from reebholo import AmbiguousTangency, ContactForm, Domain
from reebholo.flow import (causality_map, classify_start, flow_point,
                           integrate, next_boundary_hit, property_a_check,
                           trajectory_from_entry, waterfall_sample)
from reebholo.scene import ContactScene


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


class TestIntegrate:
    def test_vertical_chord(self, ball):
        path = integrate(ball, [-0.8, 0.6, 0.0], +1)
        ev = next_boundary_hit(ball, path)
        assert abs(ev.point[0] - 0.8) < 1e-9
        assert ev.multiplicity == 1 and ev.crossing
        assert np.abs(path.points[:, 1] - 0.6).max() < 1e-12

    def test_scaled_form_straight_tilted_line(self):
        # Reeb of e^x-scaled Darboux: ((1+x)e^-x, 0, -e^-x); x constant,
        # y drifts, the path is a straight line
        scene = ContactScene(1, Domain.ellipsoid([2, 2, 2]), e_x_scaled_darboux())
        start = np.array([-0.5, 0.3, 0.2])
        path = integrate(scene, start, +1)
        pts = path.points
        assert np.abs(pts[:, 1] - 0.3).max() < 1e-9          # x frozen
        assert pts[-1][2] < pts[0][2] - 1e-3                 # y drifts down
        x = 0.3
        direction = np.array([(1 + x) * np.exp(-x), 0.0, -np.exp(-x)])
        rel = pts - start
        cross = rel[:, 0] * direction[2] - rel[:, 2] * direction[0]
        assert np.abs(cross).max() < 1e-8                    # collinear in (z,y)

    def test_backward_reproduces_forward(self, ball):
        pair = causality_map(ball, [-0.8, 0.6, 0.0])
        back = integrate(ball, pair.x_minus, -1)
        assert np.abs(back.exit_event.point - pair.x_plus).max() < 1e-8

    def test_flow_point_roundtrip(self, ball, rng):
        p = np.array([0.1, 0.2, -0.3])
        q = flow_point(ball, p, 0.37)
        back = flow_point(ball, q, -0.37)
        assert np.abs(back - p).max() < 1e-10


class TestEvents:
    def test_equator_singleton(self, ball):
        m, leaves = classify_start(ball, [0.0, 1.0, 0.0], +1)
        assert m == 2 and leaves
        traj = trajectory_from_entry(ball, [0.0, 1.0, 0.0])
        assert traj.word == (2,)
        assert traj.chord_time == 0.0
        assert traj.beta_length == 0.0

    def test_shell_grazing_word(self, shell):
        p = np.array([-np.sqrt(3.0), 1.0, 0.0])
        traj = trajectory_from_entry(shell, p)
        assert traj.word == (1, 2, 1)
        assert len(traj.interior_events) == 1
        ev = traj.interior_events[0]
        assert abs(np.hypot(ev.point[1], ev.point[2]) - 1.0) < 1e-6
        assert abs(ev.point[0]) < 1e-5

    def test_event_on_boundary(self, ball):
        path = integrate(ball, [-0.8, 0.6, 0.0], +1)
        for ev in path.events:
            assert abs(float(ball.domain.h(ev.point))) < ball.eps_hit

    def test_outflow_start_rejected(self, ball):
        m, leaves = classify_start(ball, [0.8, 0.6, 0.0], +1)
        assert m == 1 and not leaves
        # forward trajectory from an exit point exits immediately; the
        # entry classification in causality still treats it as depth 1
        g1 = float(ball.domain.grad_h([0.8, 0.6, 0.0]) @ ball.reeb([0.8, 0.6, 0.0]))
        assert g1 > 0


class TestCausality:
    def test_ball_z_flip(self, ball, rng):
        for _ in range(20):
            th = rng.uniform(0.15, np.pi / 2 - 0.15)
            ph = rng.uniform(0, 2 * np.pi)
            p = np.array([-np.cos(th), np.sin(th) * np.cos(ph),
                          np.sin(th) * np.sin(ph)])
            pair = causality_map(ball, p)
            expected = p.copy()
            expected[0] = -expected[0]
            assert np.abs(pair.x_minus - expected).max() < 1e-8
            assert abs(pair.chord_time - 2 * np.cos(th)) < 1e-8
            assert pair.word == (1, 1)

    def test_equator_identity(self, ball):
        pair = causality_map(ball, [0.0, 1.0, 0.0])
        assert pair.chord_time == 0.0
        assert np.abs(pair.x_minus - pair.x_plus).max() == 0.0

    def test_shell_first_exit_routing(self, shell):
        rho = 0.5
        p = np.array([-np.sqrt(4 - rho**2), rho, 0.0])
        pair = causality_map(shell, p)
        assert abs(pair.x_minus[0] + np.sqrt(1 - rho**2)) < 1e-8
        # and from the inner-upper cap to the outer-upper cap
        q = np.array([np.sqrt(1 - rho**2), rho, 0.0])
        pair2 = causality_map(shell, q)
        assert abs(pair2.x_minus[0] - np.sqrt(4 - rho**2)) < 1e-8

    def test_beta_length_equals_time(self, ball, rng):
        for _ in range(10):
            th = rng.uniform(0.2, np.pi / 2 - 0.2)
            p = np.array([-np.cos(th), np.sin(th), 0.0])
            traj = trajectory_from_entry(ball, p)
            assert abs(traj.beta_length - traj.chord_time) < 1e-9

    def test_causality_image_is_outflow(self, shell, rng):
        from reebholo.strata import inflow_samples
        pts = inflow_samples(shell, 12, rng)
        for p in pts:
            pair = causality_map(shell, p)
            g1 = float(shell.domain.grad_h(pair.x_minus)
                       @ shell.reeb(pair.x_minus))
            assert g1 >= -shell.tau

    def test_word_parity(self, sandclock, rng):
        from reebholo.strata import inflow_samples
        pts = inflow_samples(sandclock, 24, rng)
        for p in pts:
            traj = trajectory_from_entry(sandclock, p)
            crossings = sum(1 for m in traj.word if m % 2 == 1)
            assert crossings % 2 == 0


class TestPropertyA:
    def test_ball(self, ball):
        rep = property_a_check(ball, 48, seed=5)
        assert rep["holds"]
        assert set(rep["word_counts"]) <= {(1, 1), (2,)}

    def test_shell(self, shell):
        rep = property_a_check(shell, 48, seed=5)
        assert rep["holds"]

    def test_sandclock_words(self, sandclock):
        # maximal interior trajectories stop at their first genuine exit, so
        # neck columns carry (1,1) words (the 4-fold count is the
        # semi-transparent crossing count of the embedding complexity)
        rep = property_a_check(sandclock, 96, seed=5)
        assert rep["holds"]
        assert (1, 1) in rep["word_counts"]
        assert all(w[0] % 2 == 1 and w[-1] % 2 == 1 or w == (2,)
                   for w in rep["word_counts"])


class TestWaterfall:
    def test_ball_waterfall_is_pointlike(self, ball):
        polys = waterfall_sample(ball, 16)
        assert all(p.shape[0] == 1 for p in polys)

    def test_shell_waterfall_cylinder(self, shell):
        polys = waterfall_sample(shell, 16)
        drops = [p for p in polys if p.shape[0] > 1]
        assert drops
        for seg in drops:
            rho = np.hypot(seg[:, 1], seg[:, 2])
            assert np.abs(rho - 1.0).max() < 1e-9
            assert abs(seg[-1, 0] + np.sqrt(3.0)) < 1e-6

    def test_sandclock_waterfall_under_neck(self, sandclock):
        polys = waterfall_sample(sandclock, 24)
        drops = [p for p in polys if p.shape[0] > 1]
        assert drops
        c = sandclock.domain.params["c"]
        for seg in drops:
            rho = np.hypot(seg[0, 1], seg[0, 2])
            assert abs(rho - np.sqrt(c)) < 1e-6          # starts on the neck
            assert abs(seg[-1, 0] + np.sqrt(1 - c)) < 1e-5


class TestAmbiguity:
    def test_flat_tower_raises(self):
        # a half-space-like domain whose h is independent of the flow
        # direction of the custom form (Reeb = d/dx)
        def beta(P):
            P = np.asarray(P, dtype=float)
            out = np.zeros(P.shape)
            out[..., 1] = 1.0
            out[..., 0] = P[..., 2]      # dx + y dz keeps it contact
            return out

        form = ContactForm.custom(1, beta)
        dom = Domain("custom", 3,
                     lambda P: np.asarray(P, dtype=float)[..., 0],
                     lambda P: np.broadcast_to(
                         np.array([1.0, 0.0, 0.0]),
                         np.asarray(P).shape).copy(),
                     np.array([[-1.0, 1.0]] * 3), np.array([-0.5, 0.0, 0.0]))
        scene = ContactScene(1, dom, form)
        with pytest.raises(AmbiguousTangency):
            classify_start(scene, [0.0, 0.2, 0.1], +1)
