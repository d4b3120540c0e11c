"""Command line front end.

Subcommands run the elliptic solves, beta sweeps, Monte Carlo
cross-checks, and mesh export, writing CSV/JSON/SVG artifacts into an
output directory together with the exact configuration that produced
them.  Exit codes: 0 success, 2 usage, 3 output collision, 4 numerical
failure, 5 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import contours, exitproblem, mc
from .domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    build_eddy_domain,
    build_jet_core_domain,
    make_disk_domain,
)
from .errors import JetExitError, ParameterError
from .exitproblem import Resolution, config_hash
from .flowfield import make_params
from .meshing import mesh_eddy, mesh_jet_core, mesh_quality, refine_uniform

USAGE_ERROR = 2
COLLISION_ERROR = 3
NUMERICAL_ERROR = 4
VALIDATION_ERROR = 5

# per-domain Euler-Maruyama defaults; the eddy needs the smaller step
# because its residence times are short enough for the positive exit
# bias to matter against tight statistical errors
MC_DT = {"eddy": 5e-4, "jet-core": 5e-3}


def _parse_res(text):
    try:
        a, b = text.lower().split("x")
        n, m = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}")
    if n < 2 or m < 2:
        raise argparse.ArgumentTypeError("resolution components must be >= 2")
    return n, m


def _parse_betas(text):
    """Comma list '0.1,0.2' or range 'lo:hi:n'."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo:hi:n' or comma list, got {text!r}")


def _add_output_flags(sp, required=True):
    sp.add_argument("--output", required=required, help="output directory")
    sp.add_argument("--force", action="store_true", help="overwrite an existing non-empty output directory")
    sp.add_argument("--dry-run", action="store_true", help="validate and print the resolved config, compute nothing")


def _add_resolution_flags(sp):
    sp.add_argument("--eddy-res", type=_parse_res, default=(24, 160), metavar="NxM",
                    help="eddy mesh resolution, radial x angular (default 24x160)")
    sp.add_argument("--core-res", type=_parse_res, default=(96, 40), metavar="NxM",
                    help="jet-core mesh resolution, nx x ny (default 96x40)")
    sp.add_argument("--refinements", type=int, default=1,
                    help="uniform refinement levels on top of the base mesh (default 1)")


def build_parser():
    p = argparse.ArgumentParser(
        prog="jetexit",
        description="Escape probabilities and residence times for a perturbed meandering jet",
    )
    p.add_argument("--version", action="version", version=f"jetexit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    se = sub.add_parser("solve-escape", help="escape probability field on one domain")
    se.add_argument("--beta", type=float, required=True)
    se.add_argument("--domain", choices=("eddy", "jet-core"), required=True)
    se.add_argument("--gamma", choices=("upper", "lower"), required=True,
                    help="absorbing boundary (the field is 1 there)")
    se.add_argument("--phase", choices=("trough", "crest"), default="trough")
    _add_resolution_flags(se)
    _add_output_flags(se)

    sm = sub.add_parser("solve-mrt", help="mean residence time field on one domain")
    sm.add_argument("--beta", type=float, required=True)
    sm.add_argument("--domain", choices=("eddy", "jet-core"), required=True)
    sm.add_argument("--phase", choices=("trough", "crest"), default="trough")
    _add_resolution_flags(sm)
    _add_output_flags(sm)

    sw = sub.add_parser("sweep", help="beta sweep with feature detection and summary plots")
    sw.add_argument("--betas", type=_parse_betas, default=None, metavar="SPEC",
                    help="'lo:hi:n' or comma list (default: 28 points on [0.01, 0.65])")
    sw.add_argument("--points", type=int, default=28,
                    help="point count of the default grid (ignored with --betas)")
    sw.add_argument("--phase", choices=("trough", "crest"), default="trough")
    sw.add_argument("--workers", type=int, default=None,
                    help="parallel sweep processes (default: JETEXIT_THREADS or 1)")
    sw.add_argument("--no-feature-refine", action="store_true",
                    help="skip the local grid refinement around detected features")
    _add_resolution_flags(sw)
    _add_output_flags(sw)

    mv = sub.add_parser("mc-validate", help="cross-check the solver against Monte Carlo probes")
    mv.add_argument("--beta", type=float, default=1.0 / 3.0)
    mv.add_argument("--domain", choices=("eddy", "jet-core", "both"), default="both")
    mv.add_argument("--phase", choices=("trough", "crest"), default="trough")
    mv.add_argument("--probes", type=int, default=10, help="probe points per domain")
    mv.add_argument("--paths", type=int, default=10_000, help="Monte Carlo paths per probe")
    mv.add_argument("--dt", type=float, default=None,
                    help="time step for all domains (default: per-domain, eddy 5e-4, core 5e-3)")
    mv.add_argument("--seed", type=int, default=0)
    mv.add_argument("--coarse", action="store_true",
                    help="use a deliberately coarse mesh (expected to fail the comparison)")
    _add_resolution_flags(mv)
    _add_output_flags(mv)

    me = sub.add_parser("mesh-export", help="write a domain mesh as CSV tables")
    me.add_argument("--beta", type=float, required=True)
    me.add_argument("--domain", choices=("eddy", "jet-core"), required=True)
    me.add_argument("--phase", choices=("trough", "crest"), default="trough")
    _add_resolution_flags(me)
    _add_output_flags(me)

    ds = sub.add_parser("disk-selftest", help="pure-diffusion disk against the analytic exit time")
    ds.add_argument("--radius", type=float, default=0.5)
    ds.add_argument("--epsilon", type=float, default=0.001)
    ds.add_argument("--resolution", type=_parse_res, default=(16, 48), metavar="NxM")
    ds.add_argument("--refinements", type=int, default=2)
    _add_output_flags(ds, required=False)

    return p


# ---------------------------------------------------------------------------
# output directory protocol


def _prepare_output(args):
    out = args.output
    if out is None:
        return None
    if os.path.isdir(out) and os.listdir(out) and not args.force:
        print(f"error: output directory {out!r} is not empty (use --force)", file=sys.stderr)
        return COLLISION_ERROR
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _run_config(args, **extra):
    cfg = {
        "command": args.command,
        "package_version": __version__,
        "solver_rtol": exitproblem.SOLVER_RTOL,
        "stabilization": exitproblem.STABILIZATION,
    }
    skip = {"output", "force", "dry_run", "command"}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(val, np.ndarray):
            val = [float(v) for v in val]
        elif isinstance(val, tuple):
            val = list(val)
        cfg[key.replace("_", "-")] = val
    cfg.update(extra)
    cfg["config_hash"] = config_hash(cfg)
    return cfg


def _finish(outdir, cfg):
    cfg = dict(cfg)
    cfg["created"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    _write_json(os.path.join(outdir, "runconfig.json"), cfg)


def _fail(outdir, code, err):
    report = {
        "error": type(err).__name__,
        "message": str(err),
        "exit_code": code,
    }
    print(f"error: {report['error']}: {report['message']}", file=sys.stderr)
    if outdir is not None and os.path.isdir(outdir):
        _write_json(os.path.join(outdir, "error.json"), report)
    return code


def _dry_run(cfg):
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return 0


def _build_domain(p, name, phase):
    if name == "eddy":
        return build_eddy_domain(p)
    return build_jet_core_domain(p, phase=phase)


def _resolution(args):
    return Resolution(eddy=args.eddy_res, core=args.core_res, refinements=args.refinements)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve_escape(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = _prepare_output(args)
    if isinstance(out, int):
        return out
    try:
        p = make_params(args.beta)
        domain = _build_domain(p, args.domain, args.phase)
        gamma = GAMMA_UPPER if args.gamma == "upper" else GAMMA_LOWER
        sol = exitproblem.solve_escape(p, domain, gamma, resolution=_resolution(args))
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    sol.field.save_csv(os.path.join(out, "field.csv"))
    svg = contours.field_svg(
        sol.field, domain=domain, levels=np.linspace(0.0, 1.0, 11),
        title=f"P(exit through {args.gamma}), {args.domain}, beta={args.beta:g}",
    )
    with open(os.path.join(out, "plot.svg"), "w") as f:
        f.write(svg)
    _write_json(os.path.join(out, "metadata.json"), {
        "average": sol.average,
        "stability": None if math.isnan(sol.stability) else sol.stability,
        "beta": sol.beta,
        "gamma": gamma,
        "domain": args.domain,
        "phase": args.phase,
        "domain_area": domain.area,
        "mesh_sha256": sol.field.mesh.sha256(),
        "n_vertices": sol.field.mesh.n_vertices,
    })
    _finish(out, cfg)
    print(f"average P({args.gamma}) = {sol.average:.6f}")
    return 0


def cmd_solve_mrt(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = _prepare_output(args)
    if isinstance(out, int):
        return out
    try:
        p = make_params(args.beta)
        domain = _build_domain(p, args.domain, args.phase)
        field = exitproblem.solve_mrt(p, domain, resolution=_resolution(args))
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    field.save_csv(os.path.join(out, "field.csv"))
    svg = contours.field_svg(
        field, domain=domain,
        title=f"mean residence time, {args.domain}, beta={args.beta:g}",
    )
    with open(os.path.join(out, "plot.svg"), "w") as f:
        f.write(svg)
    meta = dict(field.meta)
    meta["stability"] = None if math.isnan(meta["stability"]) else meta["stability"]
    meta.update({
        "domain": args.domain,
        "phase": args.phase,
        "mesh_sha256": field.mesh.sha256(),
        "n_vertices": field.mesh.n_vertices,
    })
    _write_json(os.path.join(out, "metadata.json"), meta)
    _finish(out, cfg)
    x, y = field.meta["argmax"]
    print(f"max MRT = {field.meta['max']:.6f} at ({x:.6f}, {y:.6f})")
    return 0


def _sweep_plots(out, table):
    betas = table.betas
    plots = {
        "eddy_escape_averages.svg": (
            {"upper": table.column("p_eddy_upper"), "lower": table.column("p_eddy_lower")},
            "average escape probability", "eddy escape averages", (0.0, 1.0),
        ),
        "core_escape_averages.svg": (
            {"upper": table.column("p_core_upper"), "lower": table.column("p_core_lower")},
            "average escape probability", "jet-core escape averages", (0.0, 1.0),
        ),
        "eddy_max_mrt.svg": (
            {"max MRT": table.column("max_mrt_eddy")},
            "max mean residence time", "eddy residence time", None,
        ),
        "core_max_mrt.svg": (
            {"max MRT": table.column("max_mrt_core")},
            "max mean residence time", "jet-core residence time", None,
        ),
    }
    for fname, (series, ylabel, title, yr) in plots.items():
        svg = contours.line_plot_svg(betas, series, xlabel="beta", ylabel=ylabel,
                                     title=title, y_range=yr)
        with open(os.path.join(out, fname), "w") as f:
            f.write(svg)


def _local_step(table, beta):
    """Grid spacing around a feature location, as its uncertainty."""
    betas = np.asarray(table.betas)
    if len(betas) < 2:
        return math.nan
    j = int(np.argmin(np.abs(betas - beta)))
    lo = betas[max(j - 1, 0)]
    hi = betas[min(j + 1, len(betas) - 1)]
    return 0.5 * (hi - lo)


def _print_features(table, features):
    def line(label, val):
        if val is None:
            reason = features.get("errors", {}).get(label, "not found")
            print(f"{label}: none ({reason})")
        elif isinstance(val, tuple):
            print(f"{label}: " + ", ".join(f"{v:.4f} +/- {_local_step(table, v):.4f}" for v in val))
        elif isinstance(val, str):
            print(f"{label}: {val}")
        else:
            print(f"{label}: {val:.4f} +/- {_local_step(table, val):.4f}")

    line("crossing_eddy", features.get("crossing_eddy"))
    line("band_core", features.get("band_core"))
    line("peak_p_eddy_lower", features.get("peak_p_eddy_lower"))
    line("peak_max_mrt_eddy", features.get("peak_max_mrt_eddy"))
    line("mrt_core_monotonic", features.get("mrt_core_monotonic"))


def cmd_sweep(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = _prepare_output(args)
    if isinstance(out, int):
        return out
    res = _resolution(args)
    try:
        if args.betas is not None:
            table = exitproblem.sweep_beta(args.betas, res, args.phase, args.workers)
            features = exitproblem.detect_features(table)
            if not args.no_feature_refine:
                spots = [features.get(k) for k in
                         ("crossing_eddy", "peak_p_eddy_lower", "peak_max_mrt_eddy")]
                band = features.get("band_core")
                if band:
                    spots.extend(band)
                extra = exitproblem.refine_grid_near(table, spots)
                if extra.size:
                    table = exitproblem.merge_tables(
                        table, exitproblem.sweep_beta(extra, res, args.phase, args.workers))
                    features = exitproblem.detect_features(table)
            table.meta["features"] = exitproblem._features_json(features)
        else:
            table, features = exitproblem.run_default_sweep(
                res, args.phase, args.workers, n_points=args.points)
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    table.save(os.path.join(out, "sweep.csv"))
    _sweep_plots(out, table)
    _finish(out, cfg)
    _print_features(table, features)

    failed = [r for r in table.rows if r.get("error")]
    if failed:
        for r in failed:
            print(f"row beta={r['beta']:.4f} failed: {r['error']}", file=sys.stderr)
        print(f"{len(failed)} of {len(table.rows)} sweep rows failed", file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


def _probe_rows(p, domain, suite, probes, dt, n_paths, seed):
    """FEM-vs-MC comparison rows at the given probe points."""
    rows = []
    cap = 15.0 * suite.mrt_max
    for i, (px, py) in enumerate(probes):
        stats = mc.simulate_first_exit(
            p, domain, (px, py), dt=dt, n_paths=n_paths, seed=seed + 7 * i, max_time=cap)
        fem_p = float(np.atleast_1d(suite.escape_upper.field.sample([(px, py)]))[0])
        fem_t = float(np.atleast_1d(suite.mrt.sample([(px, py)]))[0])
        mc_p = stats.probability(GAMMA_UPPER)
        se_p = max(stats.std_err_prob[GAMMA_UPPER], 1e-12)
        se_t = max(stats.std_err_time, 1e-12)
        rows.append({
            "x": px, "y": py,
            "fem_p_upper": fem_p, "mc_p_upper": mc_p, "se_p": se_p,
            "z_p": abs(fem_p - mc_p) / se_p,
            "fem_mrt": fem_t, "mc_mrt": stats.mean_exit_time, "se_t": se_t,
            "z_t": abs(fem_t - stats.mean_exit_time) / se_t,
        })
    return rows


def cmd_mc_validate(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = _prepare_output(args)
    if isinstance(out, int):
        return out

    res = _resolution(args)
    if args.coarse:
        res = Resolution(eddy=(6, 18), core=(16, 6), refinements=0)
    domains = ("eddy", "jet-core") if args.domain == "both" else (args.domain,)

    report = {"domains": {}, "verdict": None}
    all_ok = True
    try:
        p = make_params(args.beta)
        for name in domains:
            domain = _build_domain(p, name, args.phase)
            suite = exitproblem.solve_domain_suite(p, domain, res)
            dt = args.dt if args.dt is not None else MC_DT[name]
            xs, ys = mc.uniform_starts(domain, args.probes, seed=args.seed)
            rows = _probe_rows(p, domain, suite, list(zip(xs, ys)), dt, args.paths, args.seed)

            dts = [4.0 * dt, 2.0 * dt, dt]
            study = mc.dt_convergence_study(
                p, domain, (float(xs[0]), float(ys[0])), dts,
                n_paths=args.paths, seed=args.seed, max_time=15.0 * suite.mrt_max)

            worst = max(max(r["z_p"], r["z_t"]) for r in rows)
            ok = worst <= 3.0
            all_ok &= ok
            report["domains"][name] = {
                "dt": dt,
                "rows": rows,
                "worst_z": worst,
                "ok": ok,
                "dt_study": study,
            }
            print(f"{name}: {len(rows)} probes, worst |z| = {worst:.2f} "
                  f"-> {'ok' if ok else 'FAIL'} (dt {dt:g}, converged from {study['converged_dt']})")
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    report["verdict"] = "pass" if all_ok else "fail"
    _write_json(os.path.join(out, "validation.json"), report)
    _finish(out, cfg)
    if not all_ok:
        print("validation failed: at least one probe outside 3 standard errors", file=sys.stderr)
        return VALIDATION_ERROR
    return 0


def cmd_mesh_export(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = _prepare_output(args)
    if isinstance(out, int):
        return out
    try:
        p = make_params(args.beta)
        domain = _build_domain(p, args.domain, args.phase)
        if args.domain == "eddy":
            mesh = mesh_eddy(domain, *args.eddy_res)
        else:
            mesh = mesh_jet_core(domain, *args.core_res)
        for _ in range(args.refinements):
            mesh = refine_uniform(mesh, domain)
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    with open(os.path.join(out, "vertices.csv"), "w") as f:
        f.write("x,y,marker\n")
        for (x, y), m in zip(mesh.vertices, mesh.vertex_markers):
            f.write(f"{float(x)!r},{float(y)!r},{int(m)}\n")
    with open(os.path.join(out, "triangles.csv"), "w") as f:
        f.write("v0,v1,v2\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a},{b},{c}\n")
    with open(os.path.join(out, "periodic_pairs.csv"), "w") as f:
        f.write("left,right\n")
        for a, b in mesh.periodic_pairs:
            f.write(f"{a},{b}\n")
    q = mesh_quality(mesh)
    _write_json(os.path.join(out, "quality.json"), {
        "min_angle": q.min_angle, "max_angle": q.max_angle,
        "max_aspect": q.max_aspect, "h_max": q.h_max, "h_min": q.h_min,
        "total_area": q.total_area, "domain_area": domain.area,
        "n_vertices": q.n_vertices, "n_triangles": q.n_triangles,
    })
    _finish(out, cfg)
    print(f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles -> {args.output}")
    return 0


def cmd_disk_selftest(args):
    cfg = _run_config(args)
    if args.dry_run:
        return _dry_run(cfg)
    out = None
    if args.output is not None:
        out = _prepare_output(args)
        if isinstance(out, int):
            return out
    try:
        p = make_params(0.0, epsilon=args.epsilon)
        disk = make_disk_domain(radius=args.radius)
        res = Resolution(eddy=args.resolution, refinements=args.refinements)
        field = exitproblem.solve_mrt(p, disk, resolution=res)
        center = float(np.atleast_1d(field.sample([(0.0, 0.0)]))[0])
    except ParameterError as err:
        return _fail(out, USAGE_ERROR, err)
    except JetExitError as err:
        return _fail(out, NUMERICAL_ERROR, err)

    exact = args.radius**2 / (4.0 * args.epsilon)
    rel = abs(center - exact) / exact
    ok = rel < 0.01
    print(f"disk MRT at center: fem {center:.6f}, analytic {exact:.6f}, "
          f"relative error {rel:.2e} -> {'ok' if ok else 'FAIL'}")
    if out is not None:
        _write_json(os.path.join(out, "selftest.json"), {
            "fem_center": center, "analytic": exact,
            "relative_error": rel, "ok": ok,
        })
        _finish(out, cfg)
    return 0 if ok else VALIDATION_ERROR


_COMMANDS = {
    "solve-escape": cmd_solve_escape,
    "solve-mrt": cmd_solve_mrt,
    "sweep": cmd_sweep,
    "mc-validate": cmd_mc_validate,
    "mesh-export": cmd_mesh_export,
    "disk-selftest": cmd_disk_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the message; normalize the code
        return int(exc.code) if exc.code else 0
    return _COMMANDS[args.command](args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
