"""Acceptance suite: the closed-form example values and inequality checks,
one criterion per test, each printing a pass/fail line with the measured
quantity at its stated tolerance."""

import math

import numpy as np
import pytest

from reebholo import ContactForm, Domain
from reebholo.contact_fields import solve_w
from reebholo.flow import causality_map, entry_point, trajectory_from_entry
from reebholo.holography import (extend_diffeo, lyapunov_bullet,
                                 reconstruct_point, rotation_z)
from reebholo.invariants import (average_length, deformation_scan,
                                 isoperimetric_check, kappa, kappa_plus,
                                 reeb_diameter, shadow_volume, volume_X)
from reebholo.legendrian import (ball_arc, circle_dim5, concavity_criterion,
                                 figure_eight, lift_shadow, shadow_project,
                                 zero_volume_checks)
from reebholo.nonsqueezing import (complexity, inclusion, nonsqueezing_check,
                                   shadow_kappa, z_translation)
from reebholo.quadrature import QuadratureSpec
from reebholo.scene import ContactScene, sample_interior
from reebholo.strata import stratum_positivity_scan


def report(criterion, ok, detail):
    line = f"ACCEPTANCE {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    assert ok, line


def darboux_ellipsoid(*axes):
    return ContactScene(1, Domain.ellipsoid(list(axes)), ContactForm.darboux(1))


SPEC = QuadratureSpec(column_radial=500, column_angular=16,
                      column_radial_4d=44, column_angular_4d=16,
                      res_2d=96, res_3d=22, diam_grid=16, diam_restarts=3)


def test_criterion_01_ellipsoid_volume():
    errs = []
    for axes in ((2, 2, 2), (1, 2, 3)):
        scene = darboux_ellipsoid(*axes)
        v, _ = volume_X(scene, SPEC)
        exact = math.pi * axes[0] * axes[1] * axes[2] / 6.0
        errs.append(abs(v - exact) / exact)
    report(1, all(e < 5e-3 for e in errs),
           f"vol rel errs {errs[0]:.2e} (2,2,2), {errs[1]:.2e} (1,2,3); tol 0.5%")


def test_criterion_02_stokes_twin():
    rows = []
    for axes in ((2, 2, 2), (1, 2, 3)):
        scene = darboux_ellipsoid(*axes)
        target = math.pi * axes[0] * axes[1] / 4.0
        shadow_plain = kappa_plus(scene, 1, SPEC)
        k2 = kappa(scene, 2, SPEC)
        rows.append((abs(shadow_plain - target) / target,
                     abs(k2 - target) / target,
                     abs(shadow_plain - k2) / abs(k2)))
    ok = all(max(r) < 5e-3 for r in rows)
    report(2, ok, "max rel gap "
           + ", ".join(f"{max(r):.2e}" for r in rows)
           + " vs piAB/4; tol 0.5%")


def test_criterion_03_isoperimetric_random_ellipsoids():
    rng = np.random.default_rng(90125)
    worst = np.inf
    for _ in range(20):
        axes = rng.uniform(0.8, 3.0, size=3)
        scene = darboux_ellipsoid(*axes)
        rep = isoperimetric_check(scene, SPEC)
        worst = min(worst,
                    rep["slack_isoperimetric"] / rep["vol_X"],
                    rep["slack_equatorial"] / rep["vol_X"])
    report(3, worst > -5e-3,
           f"min relative slack {worst:.4f} over 20 seeded ellipsoids; tol -0.5%")


def test_criterion_04_diameter_and_average():
    rows = []
    for axes in ((2, 2, 2), (1, 2, 3), (2.5, 1.2, 1.8)):
        scene = darboux_ellipsoid(*axes)
        d, _ = reeb_diameter(scene, SPEC)
        av = average_length(scene, SPEC)
        C = axes[2]
        rows.append((abs(d - C), abs(av - 2 * C / 3) / (2 * C / 3)))
    ok = all(dd < 1e-4 and aa < 1e-2 for dd, aa in rows)
    report(4, ok, "max |diam-C| "
           + f"{max(r[0] for r in rows):.2e} (tol 1e-4), "
           + f"max av rel err {max(r[1] for r in rows):.2e} (tol 1%)")


def test_criterion_05_dim5_ball_volume():
    scene = ContactScene(2, Domain.ellipsoid([2, 2, 2, 2, 2]),
                         ContactForm.radial(2))
    v, _ = volume_X(scene, SPEC)
    exact = 8.0 * math.pi**2 / 15.0        # pi^{5/2} / Gamma(7/2)
    err = abs(v - exact) / exact
    report(5, err < 1e-2, f"vol {v:.6f} vs 8pi^2/15 = {exact:.6f}, "
                          f"rel err {err:.2e}; tol 1%")


def test_criterion_06_contact_field_closed_form():
    scene = darboux_ellipsoid(2, 2, 2)
    rng = np.random.default_rng(61)
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(-0.7, 0.7, 3)
        w = solve_w(scene, lambda q: np.asarray(q, dtype=float), p)
        z, x, y = p
        exact = np.array([-x**2, x * z - y, x])
        worst = max(worst, float(np.abs(w - exact).max()))

    def grad_z(q):
        out = np.zeros(3)
        out[0] = 1.0
        return out

    worst_z = 0.0
    for _ in range(20):
        p = rng.uniform(-0.8, 0.8, 3)
        wz = solve_w(scene, grad_z, p)
        worst_z = max(worst_z, float(np.abs(wz - [0.0, p[1], 0.0]).max()))
    report(6, worst < 1e-9 and worst_z < 1e-12,
           f"sphere-h residual {worst:.2e} (tol 1e-9), "
           f"h=z residual {worst_z:.2e} (exact)")


def test_criterion_07_dim5_stratum_density():
    scene = ContactScene(2, Domain.ellipsoid([2, 2, 2, 2, 2]),
                         ContactForm.darboux(2))
    rep = stratum_positivity_scan(scene, 2, resolution=22)   # 22^3 > 10^4 grid
    report(7, rep["min_oriented"] >= -1e-10,
           f"min oriented density {rep['min_oriented']:.2e} over "
           f"{22**3} grid points; tol -1e-10")


def test_criterion_08_ball_causality():
    scene = darboux_ellipsoid(2, 2, 2)
    rng = np.random.default_rng(88)
    worst_pt = worst_len = 0.0
    words_ok = True
    for _ in range(100):
        th = rng.uniform(0.05, np.pi / 2 - 0.05)
        ph = rng.uniform(0.0, 2 * np.pi)
        p = np.array([-np.cos(th), np.sin(th) * np.cos(ph),
                      np.sin(th) * np.sin(ph)])
        traj = trajectory_from_entry(scene, p)
        expected = p.copy()
        expected[0] = -expected[0]
        worst_pt = max(worst_pt, float(np.abs(traj.exit.point - expected).max()))
        worst_len = max(worst_len, abs(traj.beta_length - traj.chord_time))
        words_ok = words_ok and traj.word == (1, 1)
    eq = causality_map(scene, [0.0, 1.0, 0.0])
    words_ok = words_ok and eq.word == (2,) and eq.chord_time == 0.0
    report(8, worst_pt < 1e-8 and worst_len < 1e-9 and words_ok,
           f"max endpoint err {worst_pt:.2e} (tol 1e-8), "
           f"max |beta_len - time| {worst_len:.2e} (tol 1e-9), words ok")


def test_criterion_09_reconstruction_and_rotations():
    scene = ContactScene(1, Domain.ellipsoid([2, 2, 2]), ContactForm.radial(1))
    rng = np.random.default_rng(99)
    pts = sample_interior(scene.domain, 1000, rng)
    worst = 0.0
    for q in pts:
        y, _, _ = entry_point(scene, q)
        f = lyapunov_bullet(scene, q)
        q2 = reconstruct_point(scene, y, f)
        worst = max(worst, float(np.abs(q2 - q).max()))

    x = np.array([0.2, 0.4, -0.3])
    rot = rotation_z(0.7)
    ext_err = float(np.abs(extend_diffeo(scene, rot, x) - rot.map(x)).max())
    lhs = extend_diffeo(scene, rotation_z(0.5),
                        extend_diffeo(scene, rotation_z(0.9), x))
    rhs = extend_diffeo(scene, rotation_z(1.4), x)
    comp_err = float(np.abs(lhs - rhs).max())
    report(9, worst < 1e-8 and ext_err < 1e-6 and comp_err < 1e-6,
           f"round trip {worst:.2e} on 1000 samples (tol 1e-8), rotation "
           f"{ext_err:.2e}, composition {comp_err:.2e} (tol 1e-6)")


def test_criterion_10_legendrian_round_trip():
    scene = darboux_ellipsoid(2, 2, 2)
    arc = ball_arc()
    sh = shadow_project(scene, arc, 1601)
    P = arc.map_many(sh.params[:, None])
    lift = lift_shadow(scene, sh.params, sh.points, s0=sh.s[0])
    rt = float(np.abs(lift["points"] - P).max())

    r = 0.5
    th = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    circle = np.stack([np.full_like(th, -np.sqrt(1 - r * r)),
                       r * np.cos(th), r * np.sin(th)], axis=-1)
    helix = lift_shadow(scene, th, circle, s0=0.3, closed=True)
    gap_err = abs(helix["gap"] - math.pi * r * r)
    report(10, rt < 1e-6 and gap_err < 1e-6,
           f"lift(shadow) err {rt:.2e}, helix gap err {gap_err:.2e}; tol 1e-6")


def test_criterion_11_concavity_criterion():
    shell = ContactScene(1, Domain.shell(1.0, 2.0), ContactForm.darboux(1))
    cases = [
        (figure_eight(0.35, z0=1.2, x_center=1.0), True),
        (figure_eight(0.30, z0=1.3, x_center=0.95), True),
        (figure_eight(0.40, z0=1.1, x_center=1.05), True),
        (figure_eight(0.20, z0=1.6, x_center=0.0), False),
        (figure_eight(0.15, z0=1.5, x_center=0.3), False),
        (figure_eight(0.20, z0=0.8, x_center=1.5), False),
    ]
    outcomes = []
    for patch, expect in cases:
        rep = concavity_criterion(shell, patch)
        outcomes.append(rep["agree"]
                        and rep["negative_integral"] == expect
                        and rep["trajectory_witness"] == expect)
    report(11, all(outcomes),
           f"3 crossing + 3 disjoint loops, all routes agree: {outcomes}")


def test_criterion_12_nonsqueezing():
    d = ContactForm.darboux(1)
    clock = ContactScene(1, Domain.sandclock(0.3), d)
    clock_big = ContactScene(1, Domain.sandclock(0.6, 2.0, 2.0), d)
    c_clock = complexity(inclusion(clock, clock_big), grid=40)["c_bullet"]

    ball = ContactScene(1, Domain.ellipsoid([2, 2, 2]), d)
    big = ContactScene(1, Domain.ellipsoid([4, 4, 4]), d)
    rep = nonsqueezing_check(inclusion(ball, big), SPEC, grid=24)
    slacks_ok = (rep.slack_volume > 0 and rep.slack_diameter > 0
                 and rep.slack_equatorial > 0)

    r = 0.5
    small = ContactScene(1, Domain.ellipsoid([2 * r, 2 * r, 2 * r]), d)
    sk = shadow_kappa(z_translation(small, big, 0.3), 1, SPEC)
    report(12, c_clock == 2 and slacks_ok and sk["rel_gap"] < 1e-2,
           f"sand-clock c_bullet {c_clock} (expect 2), ball-in-ball slacks "
           f"({rep.slack_volume:.3f}, {rep.slack_diameter:.3f}, "
           f"{rep.slack_equatorial:.3f}) > 0, kappa holography gap "
           f"{sk['rel_gap']:.2e} (tol 1%)")


def test_criterion_13_deformation_invariance():
    scene = darboux_ellipsoid(2, 2, 2)

    def grad_eta(P):
        P = np.asarray(P, dtype=float)
        return -0.2 * np.exp(-np.sum(P**2, axis=-1))[..., None] * P

    rep = deformation_scan(scene, grad_eta, [0.0, 0.05, 0.1], SPEC)
    spread = rep["spread"]["kappa_2"]
    base = abs(rep["rows"][0]["kappa_2"])
    report(13, spread / base < 5e-3,
           f"kappa_2 spread {spread:.2e} / {base:.4f} over t in "
           f"{{0, 0.05, 0.1}}; tol 0.5%")


def test_criterion_14_dim5_zero_volumes():
    scene = ContactScene(2, Domain.ellipsoid([2, 2, 2, 2, 2]),
                         ContactForm.darboux(2))
    rep = zero_volume_checks(scene, circle_dim5(0.3, 0.2))
    ok = abs(rep["swept_dbeta"]) < 1e-6 and abs(rep["shadow_beta"]) < 1e-6
    report(14, ok, f"swept dbeta {rep['swept_dbeta']:.2e}, shadow beta "
                   f"{rep['shadow_beta']:.2e}; tol 1e-6")
