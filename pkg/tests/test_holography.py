import numpy as np
import pytest

from reebholo import IncompatibleBoundaryMap, OutOfChordRange
from reebholo.flow import entry_point
from reebholo.holography import (BoundaryDiffeo, extend_diffeo,
                                 extract_boundary_data, lyapunov_bullet,
                                 reconstruct_point, rotation_z)
from reebholo.scene import sample_interior


class TestLyapunov:
    def test_exact_z(self, ball):
        assert lyapunov_bullet(ball, [0.3, 0.0, 0.0], "exact-z") == 0.3

    def test_chord_midpoint_center(self, ball):
        assert abs(lyapunov_bullet(ball, [0.0, 0.0, 0.0], "chord-midpoint")) < 1e-9

    def test_modes_agree_on_ball(self, ball, rng):
        # vertical chords of the ball are symmetric about z = 0, so the
        # chord-midpoint value equals z
        for _ in range(10):
            p = rng.uniform(-0.55, 0.55, 3)
            if ball.domain.h(p) > -0.05:
                continue
            a = lyapunov_bullet(ball, p, "exact-z")
            b = lyapunov_bullet(ball, p, "chord-midpoint")
            assert abs(a - b) < 1e-6

    def test_unit_derivative_along_flow(self, ball, rng):
        from reebholo.flow import flow_point
        p = np.array([-0.2, 0.3, 0.1])
        dt = 1e-3
        q = flow_point(ball, p, dt)
        df = (lyapunov_bullet(ball, q, "chord-midpoint")
              - lyapunov_bullet(ball, p, "chord-midpoint")) / dt
        assert abs(df - 1.0) < 1e-6


class TestBoundaryData:
    def test_monotone_along_pairs(self, radial_ball):
        bd = extract_boundary_data(radial_ball, grid=10)
        assert len(bd.pairs) > 0
        for pair in bd.pairs:
            df = (lyapunov_bullet(radial_ball, pair.x_minus)
                  - lyapunov_bullet(radial_ball, pair.x_plus))
            assert abs(df - pair.chord_time) < 1e-9
            assert pair.chord_time >= 0.0

    def test_shell_routing(self, shell):
        bd = extract_boundary_data(shell, grid=8)
        names = set(bd.chart_names)
        assert {"outer-sphere", "inner-sphere"} <= names
        # inflow pairs route to the opposite caps
        for pair in bd.pairs:
            if pair.chord_time == 0.0:
                continue
            g1 = float(shell.domain.grad_h(pair.x_minus)
                       @ shell.reeb(pair.x_minus))
            assert g1 >= -shell.tau

    def test_degenerate_rows_identity(self, radial_ball):
        bd = extract_boundary_data(radial_ball, grid=9)
        deep = [i for i, d in enumerate(bd.depth) if d >= 2]
        for i in deep:
            j = list(bd.pair_index).index(i) if i in bd.pair_index else None
            if j is not None:
                assert bd.pairs[j].chord_time == 0.0


class TestExtension:
    def test_identity_map(self, radial_ball, rng):
        ident = BoundaryDiffeo(lambda p: np.asarray(p, dtype=float),
                               lambda p: np.asarray(p, dtype=float), "id")
        p = np.array([0.2, 0.3, -0.4])
        img = extend_diffeo(radial_ball, ident, p)
        assert np.abs(img - p).max() < 1e-8

    def test_rotation_matches_truth(self, radial_ball, rng):
        rot = rotation_z(0.7)
        for _ in range(5):
            p = rng.uniform(-0.5, 0.5, 3)
            if radial_ball.domain.h(p) > -0.1:
                continue
            img = extend_diffeo(radial_ball, rot, p)
            assert np.abs(img - rot.map(p)).max() < 1e-6

    def test_group_section_composition(self, radial_ball):
        x = np.array([0.2, 0.4, -0.3])
        r1, r2 = rotation_z(0.5), rotation_z(0.9)
        lhs = extend_diffeo(radial_ball, r1,
                            extend_diffeo(radial_ball, r2, x))
        rhs = extend_diffeo(radial_ball, rotation_z(1.4), x)
        assert np.abs(lhs - rhs).max() < 1e-6

    def test_incompatible_map_rejected(self, ball):
        # the Darboux form is not rotation invariant: beta preservation fails
        rot = rotation_z(0.7)
        with pytest.raises(IncompatibleBoundaryMap):
            extend_diffeo(ball, rot, np.array([0.1, 0.2, 0.3]))
        assert rot.residuals["beta"] > 1e-3


class TestReconstruction:
    def test_vertical_chord_midpoint(self, ball):
        p = reconstruct_point(ball, np.array([-0.8, 0.6, 0.0]), 0.0,
                              mode="exact-z")
        assert np.abs(p - [0.0, 0.6, 0.0]).max() < 1e-9

    def test_entry_value_returns_entry(self, ball):
        entry = np.array([-0.8, 0.6, 0.0])
        p = reconstruct_point(ball, entry, -0.8, mode="exact-z")
        assert np.abs(p - entry).max() < 1e-9

    def test_round_trip_interior(self, radial_ball, rng):
        pts = sample_interior(radial_ball.domain, 40, rng)
        worst = 0.0
        for q in pts:
            y, _, _ = entry_point(radial_ball, q)
            f = lyapunov_bullet(radial_ball, q)
            q2 = reconstruct_point(radial_ball, y, f)
            worst = max(worst, float(np.abs(q2 - q).max()))
        assert worst < 1e-8

    def test_out_of_range(self, ball):
        with pytest.raises(OutOfChordRange):
            reconstruct_point(ball, np.array([-0.8, 0.6, 0.0]), 1.5,
                              mode="exact-z")
