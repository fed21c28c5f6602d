"""Command-line interface: scene loading, subcommand dispatch, reports.

Reports are JSON with floats serialized at 17 significant digits and
sorted keys, so identical scene + seed runs produce byte-identical files.
Large sample dumps go to CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .errors import (AmbiguousTangency, ReebHoloError, ResolutionTooLow,
                     SceneValidationError)
from .quadrature import QuadratureSpec
from .scene import load_scene

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_AMBIGUOUS = 3
EXIT_USAGE = 64


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def _dump_json(obj, indent=0):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            items.append(f'{pad}  {json.dumps(str(k))}: '
                         f'{_dump_json(obj[k], indent + 2).lstrip()}')
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}  {_dump_json(v, indent + 2).lstrip()}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        if obj != obj:
            return '"nan"'
        if obj in (float("inf"), float("-inf")):
            return f'"{obj}"'
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj)


def write_report(path, obj):
    text = _dump_json(_to_jsonable(obj)) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("REEB_HOLO_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(func, items):
    """Map honoring the REEB_HOLO_THREADS worker cap."""
    n = thread_count()
    items = list(items)
    if n <= 1 or len(items) < 2:
        return [func(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def _load_quadrature(path, tol=None) -> QuadratureSpec:
    spec = QuadratureSpec()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        for key, val in doc.items():
            if not hasattr(spec, key):
                raise SceneValidationError(f"unknown quadrature key {key!r}")
            setattr(spec, key, type(getattr(spec, key))(val))
    if tol is not None:
        spec.rel_tol = tol
    return spec


# -- subcommands -----------------------------------------------------------


def cmd_causality(args):
    from .flow import causality_map
    from .errors import AmbiguousTangency as Amb

    scene = load_scene(args.scene, skip_check=args.skip_check)
    charts = scene.domain.charts_by_role("inflow")
    rows = []

    def one(task):
        u, p = task
        try:
            pair = causality_map(scene, p)
        except Amb:
            return None
        return (u, pair)

    for ch in charts:
        U = ch.grid([args.grid] * ch.k)
        P = ch.map_many(U)
        for res in parallel_map(one, zip(U, P)):
            if res is None:
                continue
            u, pair = res
            rows.append(list(u) + list(pair.x_plus) + list(pair.x_minus)
                        + [pair.chord_time, "".join(map(str, pair.word))])
    out = args.out or "pairs.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        d = scene.dim
        k = charts[0].k if charts else 0
        hdr = [f"u{i}" for i in range(k)] \
            + [f"x_plus_{i}" for i in range(d)] \
            + [f"x_minus_{i}" for i in range(d)] + ["chord_time", "word"]
        w.writerow(hdr)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v
                        for v in row])
    print(f"wrote {len(rows)} causality pairs to {out}")
    return EXIT_OK


def cmd_strata(args):
    from .strata import stratum_charts, classify, stratum_positivity_scan

    scene = load_scene(args.scene, skip_check=args.skip_check)
    report = {"scene": scene.name, "strata": []}
    for j in range(2, 2 * scene.n + 2):
        if j in scene.domain.empty_strata:
            report["strata"].append({"depth": j, "empty": True})
            continue
        try:
            charts = stratum_charts(scene, j)
        except ReebHoloError:
            break
        for sc in charts:
            U = sc.chart.grid([max(8, args.grid)] * sc.chart.k)
            pts = sc.chart.map_many(U)
            report["strata"].append({
                "depth": j, "sign": sc.sign, "closed": sc.closed,
                "closure_error": sc.closure_error,
                "polyline": pts,
            })
        report[f"positivity_scan_{j}"] = stratum_positivity_scan(
            scene, j, resolution=max(16, args.grid))
    write_report(args.out or "strata.json", report)
    return EXIT_OK


def cmd_invariants(args):
    from .invariants import invariant_report

    scene = load_scene(args.scene, skip_check=args.skip_check)
    spec = _load_quadrature(args.spec, args.tol)
    spec.seed = args.seed if args.seed is not None else scene.seed
    rep = invariant_report(scene, spec)
    write_report(args.out or "report.json", rep.to_dict())
    return EXIT_OK


def cmd_contact_field(args):
    from .contact_fields import solve_w, verify_solution
    from .scene import sample_interior

    scene = load_scene(args.scene, skip_check=args.skip_check)
    grad = _builtin_h(scene, args.h)
    rng = np.random.default_rng(args.seed or scene.seed)
    P = sample_interior(scene.domain, args.grid * args.grid, rng)
    out = args.out or "field.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        d = scene.dim
        w.writerow([f"p{i}" for i in range(d)] + [f"w{i}" for i in range(d)])
        for p in P:
            wv = solve_w(scene, grad, p)
            w.writerow([format(v, ".17g") for v in list(p) + list(wv)])
    rep = verify_solution(scene, grad,
                          lambda q: solve_w(scene, grad, q),
                          n_samples=64, seed=args.seed or scene.seed)
    print(f"wrote {P.shape[0]} samples to {out}; residuals {rep}")
    return EXIT_OK


def _builtin_h(scene, spec_str):
    if spec_str in (None, "domain"):
        return scene.domain.grad_h
    if spec_str == "builtin:sphere":
        return lambda p: np.asarray(p, dtype=float)
    if spec_str == "builtin:z":
        def grad(p):
            out = np.zeros(scene.dim)
            out[0] = 1.0
            return out
        return grad
    raise SceneValidationError(f"unknown h spec {spec_str!r}; use domain, "
                               "builtin:sphere, or builtin:z")


def _parse_map(scene, text):
    from .holography import rotation_z

    if text.startswith("rotation:"):
        return rotation_z(float(text.split(":", 1)[1]), scene.dim)
    if text == "identity":
        from .holography import BoundaryDiffeo
        return BoundaryDiffeo(lambda p: np.asarray(p, dtype=float),
                              lambda p: np.asarray(p, dtype=float), "identity")
    raise SceneValidationError(f"unknown boundary map {text!r}")


def cmd_reconstruct(args):
    from .holography import extract_boundary_data, extend_diffeo, lyapunov_bullet
    from .scene import sample_interior

    scene = load_scene(args.scene, skip_check=args.skip_check)
    bmap = _parse_map(scene, args.map)
    bdata = extract_boundary_data(scene, grid=max(8, args.grid // 4))
    if args.bdata:
        write_report(args.bdata, {
            "points": bdata.points, "f_values": bdata.f_values,
            "depth": bdata.depth, "sign": bdata.sign,
            "beta": bdata.beta_values,
        })
    if args.probe:
        probes = np.loadtxt(args.probe, delimiter=",", ndmin=2)
    else:
        rng = np.random.default_rng(args.seed or scene.seed)
        probes = sample_interior(scene.domain, 16, rng)
    rows = []
    for p in probes:
        img = extend_diffeo(scene, bmap, p, tol=args.tol or 1e-6)
        rows.append({"probe": p, "image": img,
                     "f_probe": lyapunov_bullet(scene, p),
                     "f_image": lyapunov_bullet(scene, img)})
    write_report(args.out or "reconstruct.json", {
        "map": bmap.name, "residuals": bmap.residuals, "probes": rows})
    return EXIT_OK


def _load_patch(path):
    from .legendrian import LegendrianPatch, ball_arc, figure_eight, circle_dim5

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "ball-arc":
        return ball_arc(doc.get("r", 0.4), doc.get("t0", 0.0),
                        doc.get("t1", 1.2), doc.get("z0", 0.1))
    if kind == "figure-eight":
        return figure_eight(doc.get("r", 0.45), doc.get("z0", 0.0),
                            doc.get("x_center", 0.0))
    if kind == "circle-5d":
        return circle_dim5(doc.get("r", 0.3), doc.get("z0", 0.2))
    if kind == "polyline":
        pts = np.asarray(doc["points"], dtype=float)
        prm = np.asarray(doc["params"], dtype=float)

        def mp(T):
            T = np.asarray(T, dtype=float)
            t = np.atleast_1d(T[..., 0]).ravel()
            out = np.stack([np.interp(t, prm, pts[:, j])
                            for j in range(pts.shape[1])], axis=-1)
            return out.reshape(T.shape[:-1] + (pts.shape[1],))

        return LegendrianPatch(np.array([[prm[0], prm[-1]]]), mp,
                               name="polyline", closed=bool(doc.get("closed")))
    raise SceneValidationError(f"unknown legendrian kind {kind!r}")


def cmd_shadow(args):
    from .legendrian import shadow_project, shadow_reeb_lengths

    scene = load_scene(args.scene, skip_check=args.skip_check)
    patch = _load_patch(args.legendrian)
    sh = shadow_project(scene, patch, n_params=max(64, args.grid))
    lengths = shadow_reeb_lengths(scene, sh, stride=max(1, len(sh.params) // 32))
    write_report(args.out or "shadow.json", {
        "params": sh.params, "points": sh.points, "s": sh.s,
        "flags": sh.flags, "closed": sh.closed,
        "jump_params": sh.jump_params, "jump_sizes": sh.jump_sizes,
        "isotropy": patch.isotropy_residuals(scene.form),
        "reeb_chord_lengths": lengths,
    })
    return EXIT_OK


def cmd_lift(args):
    from .legendrian import lift_shadow

    scene = load_scene(args.scene, skip_check=args.skip_check)
    with open(args.shadow, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    params = np.asarray(doc["params"], dtype=float)
    points = np.asarray(doc["points"], dtype=float)
    rep = lift_shadow(scene, params, points, s0=args.s0,
                      closed=bool(doc.get("closed")))
    write_report(args.out or "lift.json", rep)
    return EXIT_OK


def cmd_squeeze(args):
    from .nonsqueezing import (inclusion, z_translation, anisotropic_scaling,
                               nonsqueezing_check)

    src = load_scene(args.source, skip_check=args.skip_check)
    tgt = load_scene(args.target, skip_check=args.skip_check)
    text = args.map or "identity"
    if text == "identity":
        emb = inclusion(src, tgt)
    elif text.startswith("z-translate:"):
        emb = z_translation(src, tgt, float(text.split(":", 1)[1]))
    elif text.startswith("scale:"):
        lam, mu = map(float, text.split(":")[1:3])
        emb = anisotropic_scaling(src, tgt, lam, mu)
    else:
        raise SceneValidationError(f"unknown embedding map {text!r}")
    spec = _load_quadrature(args.spec, args.tol)
    rep = nonsqueezing_check(emb, spec, grid=max(16, args.grid))
    write_report(args.out or "squeeze.json", rep.to_dict())
    return EXIT_OK


def cmd_selftest(args):
    """Fast identity checks over the builtin scenes."""
    import math
    from .forms import top_form_value
    from .scene import ContactScene, contact_check
    from .domains import Domain
    from .forms import ContactForm
    from .invariants import volume_X, kappa, reeb_diameter
    from .flow import causality_map

    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}: {name}")
        if not ok:
            failures.append(name)

    ball = ContactScene(1, Domain.ellipsoid([2, 2, 2]), ContactForm.darboux(1))
    check("darboux top form == 1",
          abs(top_form_value(ball.form, [0.1, 0.2, 0.3]) - 1.0) < 1e-12)
    check("contact check accepts the ball",
          contact_check(ball.form, ball.domain, 200, 0).accepted)
    spec = QuadratureSpec(column_radial=300, column_angular=16)
    v, _ = volume_X(ball, spec)
    check("ball volume ~ 4 pi / 3", abs(v - 4 * math.pi / 3) < 0.005 * v)
    check("ball kappa_2 ~ pi", abs(kappa(ball, 2, spec) - math.pi) < 1e-6)
    d, _ = reeb_diameter(ball, spec)
    check("ball diameter == 2", abs(d - 2.0) < 1e-4)
    pair = causality_map(ball, np.array([-0.8, 0.6, 0.0]))
    check("ball causality flips z",
          np.abs(pair.x_minus - np.array([0.8, 0.6, 0.0])).max() < 1e-8)
    if failures:
        print(f"{len(failures)} selftest failures")
        return 1
    print("selftest passed")
    return EXIT_OK


# -- entry point ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reeb-holo",
                description="Numerics for traversing Reeb flows on contact "
                            "manifolds with boundary.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scene=True):
        if scene:
            sp.add_argument("--scene", required=True, help="scene JSON file")
        sp.add_argument("--grid", type=int, default=32)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--spec", default=None, help="quadrature spec JSON")
        sp.add_argument("--skip-check", action="store_true",
                        help="skip the contact check at scene load")

    sp = sub.add_parser("causality", help="tabulate the causality map")
    common(sp)
    sp.set_defaults(func=cmd_causality)

    sp = sub.add_parser("strata", help="trace and classify boundary strata")
    common(sp)
    sp.set_defaults(func=cmd_strata)

    sp = sub.add_parser("invariants", help="volumes, kappas, inequalities")
    common(sp)
    sp.set_defaults(func=cmd_invariants)

    sp = sub.add_parser("contact-field", help="solve the contact field w")
    common(sp)
    sp.add_argument("--h", default="domain",
                    help="domain | builtin:sphere | builtin:z")
    sp.set_defaults(func=cmd_contact_field)

    sp = sub.add_parser("reconstruct", help="extend a boundary map to the bulk")
    common(sp)
    sp.add_argument("--map", default="identity",
                    help="identity | rotation:<theta>")
    sp.add_argument("--bdata", default=None,
                    help="write extracted boundary data JSON here")
    sp.add_argument("--probe", default=None, help="CSV of probe points")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("shadow", help="project a Legendrian patch")
    common(sp)
    sp.add_argument("--legendrian", required=True, help="patch JSON file")
    sp.set_defaults(func=cmd_shadow)

    sp = sub.add_parser("lift", help="lift a shadow path")
    common(sp)
    sp.add_argument("--shadow", required=True, help="shadow JSON file")
    sp.add_argument("--s0", type=float, required=True,
                    help="drop time at the base point")
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("squeeze", help="non-squeezing check of an embedding")
    common(sp, scene=False)
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--map", default="identity",
                    help="identity | z-translate:<c> | scale:<lam>:<mu>")
    sp.set_defaults(func=cmd_squeeze)

    sp = sub.add_parser("selftest", help="fast identity checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SceneValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (AmbiguousTangency, ResolutionTooLow) as exc:
        print(f"numerical ambiguity: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except ReebHoloError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
