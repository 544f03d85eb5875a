"""Command-line entry points.

    inlslab evolve --config c.json --out run/ [--analyze] [--plots]
    inlslab ground-state --config c.json --out gs/
    inlslab analyze --run run/ [--out report.json] [--plots]
    inlslab sweep --config sweep.json --out sw/ [--workers K]
    inlslab campaign --kind ball_mass --count 100 [--config c.json] [--seed S] --out camp/

Exit codes: 0 for any normal stop (HorizonReached, BlowupThreshold,
StepUnderflow, BoundaryContamination) and completed analyses; 2 for config
errors; 1 for internal failures.  Blow-up is the object of study, not an
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ParseError, ValidationError, load_config, parse_config
from .params import derive_exponents

NORMAL_STOPS = ("HorizonReached", "BlowupThreshold", "StepUnderflow",
                "BoundaryContamination")


def _add_common(sp, config_required=True):
    sp.add_argument("--config", required=config_required, help="JSON config path")
    sp.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="inlslab",
                                 description="numerical laboratory for the "
                                             "inhomogeneous NLS in the intercritical window")
    sub = ap.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evolve", help="run one experiment")
    _add_common(ev)
    ev.add_argument("--analyze", action="store_true", help="also write report.json")
    ev.add_argument("--plots", action="store_true", help="render plot CSVs and figures")

    gs = sub.add_parser("ground-state", help="variational ground-state solve")
    _add_common(gs)

    an = sub.add_parser("analyze", help="post-process an existing run directory")
    an.add_argument("--run", required=True, help="run directory with series.csv")
    an.add_argument("--out", default=None, help="report path (default <run>/report.json)")
    an.add_argument("--plots", action="store_true", help="render plot CSVs and figures")

    sw = sub.add_parser("sweep", help="Cartesian parameter sweep")
    _add_common(sw)
    sw.add_argument("--workers", type=int, default=None, help="worker-pool cap "
                    "(default env INLSLAB_WORKERS, then min(4, cpus))")

    ca = sub.add_parser("campaign", help="random-profile inequality campaign")
    ca.add_argument("--kind", required=True, help="ball_mass|radial_gn|gn_sharp|farah_gn|rho_scaling")
    ca.add_argument("--config", default=None, help="JSON config for params/grid "
                    "(default reference parameters on a 64x4096 grid)")
    ca.add_argument("--count", type=int, default=100)
    ca.add_argument("--seed", type=int, default=0)
    ca.add_argument("--eta", type=float, default=0.5)
    ca.add_argument("--out", required=True, help="output directory")
    return ap


def _cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    from .runner import run_experiment
    result = run_experiment(cfg, args.out, analyze=args.analyze, plots=args.plots)
    print(f"{result.stop_reason} at t={result.t_stop:.6g} "
          f"after {result.steps} steps ({result.wall_time:.2f}s)")
    return 0 if result.stop_reason in NORMAL_STOPS else 1


def _cmd_ground_state(args) -> int:
    cfg = load_config(args.config)
    from .fieldio import write_field_csv
    from .grid import make_grid
    from .groundstate import minimize_weinstein
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = make_grid(cfg.rmax, cfg.n, cfg.p.N)
    gs = minimize_weinstein(cfg.p, g)
    write_field_csv(gs.profile, out / "ground_state.csv")
    payload = {
        "j_value": gs.j_value, "gn_constant": gs.gn_constant,
        "v_lsigmac": gs.v_lsigmac, "residual": gs.residual,
        "iterations": gs.iterations, "converged": gs.converged,
        "message": gs.message,
        "params": {"N": cfg.p.N, "b": cfg.p.b, "sigma": cfg.p.sigma},
        "grid": {"rmax": cfg.rmax, "n": cfg.n},
    }
    with open(out / "ground_state.json", "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    print(f"J={gs.j_value:.8g} converged={gs.converged} iters={gs.iterations}")
    return 0


def _cmd_analyze(args) -> int:
    rundir = Path(args.run)
    from .analysis import SeriesData
    from .runner import analysis_report  # shared with the evolve --analyze path
    with open(rundir / "summary.json") as f:
        summary = json.load(f)
    cfg = parse_config(summary["config"])
    series = SeriesData.from_csv(rundir / "series.csv", summary["stop_reason"])

    # reconstruct the minimum of a RunResult that analysis_report consumes
    from .fieldio import read_field_csv
    from .grid import make_grid
    g = make_grid(cfg.rmax, cfg.n, cfg.p.N)
    snapshots = []
    manifest_path = rundir / "snapshots" / "manifest.json"
    if manifest_path.exists():
        with open(manifest_path) as f:
            manifest = json.load(f)
        for entry in manifest:
            u = read_field_csv(rundir / "snapshots" / entry["file"], g)
            snapshots.append((entry["t"], u))

    rep = analysis_report(series, snapshots, cfg.p)
    out_path = Path(args.out) if args.out else rundir / "report.json"
    with open(out_path, "w") as f:
        json.dump(rep, f, indent=2)
        f.write("\n")
    if args.plots:
        from .plots import render_run_plots
        render_run_plots(rundir, series, cfg.p, rep)
    blow = rep.get("blowup")
    if blow:
        print(f"t_star={blow['t_star']:.6g} +- {blow['t_star_uncertainty']:.2g} "
              f"upper_slope={blow['upper_slope']:.4g}")
    else:
        print(f"no blow-up fits: {rep.get('blowup_error')}")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config) as f:
        spec = json.load(f)
    if not (isinstance(spec, dict) and "template" in spec and "axes" in spec):
        raise ValidationError(
            'sweep config must be {"template": {run config}, "axes": {dotted path: [values]}}')
    from .runner import sweep
    rows = sweep(spec["template"], spec["axes"], args.out, workers=args.workers)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} cells, {failed} failed; sweep.csv written to {args.out}")
    return 0 if failed < len(rows) else 1


def _cmd_campaign(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        p, rmax, n = cfg.p, cfg.rmax, cfg.n
    else:
        p, rmax, n = derive_exponents(3, 1.0, 0.8), 64.0, 4096
    from .grid import make_grid
    from .runner import property_campaign
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = make_grid(rmax, n, p.N)
    report = property_campaign(args.kind, p, g, args.count, args.seed, eta=args.eta)
    with open(out / "campaign.json", "w") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    print(f"{args.kind}: family_max={report['family_max']:.6g} "
          f"passed={report['passed']} ({report['case_errors']} case errors)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "evolve": _cmd_evolve,
        "ground-state": _cmd_ground_state,
        "analyze": _cmd_analyze,
        "sweep": _cmd_sweep,
        "campaign": _cmd_campaign,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, ValidationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # internal failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
