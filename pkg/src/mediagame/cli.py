"""Command-line front end.

Exit codes: 0 success, 1 usage error (bad flags, bad parameter values,
unreadable config), 2 runtime error.

Option precedence is flag > ``--config`` file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .abm import TIMESERIES_HEADER, AbmConfig, AgentPopulations, run_abm, run_replicates
from .equilibria import REPORT_HEADER, corner_census, format_table
from .io import FormatError, RunManifest, write_csv, write_kv
from .params import PARAM_NAMES, CreatorStrategy, GameParams, ParameterError, UserStrategy, load_config, params_from_mapping
from .payoff import PopulationState
from .replicator import (
    TRAJECTORY_HEADER,
    IntegrationError,
    IntegratorConfig,
    basin_census,
    classify_outcome,
    integrate,
)
from .sweep import SWEEP_HEADER, Axis, SweepSpec, run_sweep

log = logging.getLogger("mediagame")

# coarse integrator settings for the basin census; on a 0.1 grid they give
# the same classification counts as the default 0.01 / 10000 settings
CENSUS_PRESET = {"step_size": 0.1, "horizon": 1000.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {v!r}")


def _common(p, cfg):
    g = p.add_argument_group("game parameters")
    base = GameParams()
    for name in PARAM_NAMES:
        g.add_argument(f"--{name}", type=float, default=cfg.get(name, getattr(base, name)), metavar="X")
    p.add_argument("--seed", type=int, default=cfg.get("seed", 0), help="base random seed (default 0)")
    p.add_argument("--jobs", type=int, default=cfg.get("jobs", 1), help="worker processes")
    p.add_argument("--config", metavar="PATH", help="flat key = value file with defaults")
    p.add_argument("--out", default=cfg.get("out", "out"), help="output directory")
    p.add_argument("--no-png", dest="png", action="store_false", default=_bool(cfg.get("png", True)),
                   help="skip matplotlib PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def _integrator_args(p, cfg, step=None, horizon=None):
    p.add_argument("--step", type=float, default=cfg.get("step", step), help="RK4 step size")
    p.add_argument("--horizon", type=float, default=cfg.get("horizon", horizon), help="integration time")
    p.add_argument("--form", choices=("standard", "literal"), default=cfg.get("form", "standard"))
    p.add_argument("--eps", type=float, default=cfg.get("eps", 1e-6), help="convergence epsilon")


def _abm_args(p, cfg, generations, replicates):
    p.add_argument("--n-users", dest="n_users", type=int, default=cfg.get("n_users", 100))
    p.add_argument("--n-creators", dest="n_creators", type=int, default=cfg.get("n_creators", 50))
    p.add_argument("--beta-u", dest="beta_u", type=float, default=cfg.get("beta_u", 1.0))
    p.add_argument("--beta-c", dest="beta_c", type=float, default=cfg.get("beta_c", 1.0))
    p.add_argument("--mu-u", dest="mu_u", type=float, default=cfg.get("mu_u"), help="default 1/N_U")
    p.add_argument("--mu-c", dest="mu_c", type=float, default=cfg.get("mu_c"), help="default 1/N_C")
    p.add_argument("--generations", type=int, default=cfg.get("generations", generations))
    p.add_argument("--burn-in", dest="burn_in", type=float, default=cfg.get("burn_in", 0.1))
    p.add_argument("--replicates", type=int, default=cfg.get("replicates", replicates))
    p.add_argument("--unpaired", dest="paired", action="store_false", default=_bool(cfg.get("paired", True)),
                   help="one agent per step instead of one user and one creator")


def build_parser(cfg=None) -> argparse.ArgumentParser:
    cfg = cfg or {}
    root = _Parser(prog="mediagame", description="Creator/user/media evolutionary game experiments.")
    root.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rep = sub.add_parser("replicator", help="infinite-population dynamics")
    rsub = rep.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = rsub.add_parser("run", help="integrate one trajectory and classify it")
    _common(run, cfg)
    _integrator_args(run, cfg, 0.01, 10000.0)
    run.add_argument("--x0", default=cfg.get("x0", "0.25,0.25,0.25,0.25"), help="AllD,BMedia,GMedia,AllC")
    run.add_argument("--y0", type=float, default=cfg.get("y0", 0.5))
    run.add_argument("--stride", type=int, default=cfg.get("stride", 100), help="record every N steps")

    basin = rsub.add_parser("basin", help="basin-of-attraction census over a grid of starting states")
    _common(basin, cfg)
    _integrator_args(basin, cfg)
    basin.add_argument("--grid-step", dest="grid_step", type=float, default=cfg.get("grid_step", 0.04))
    basin.add_argument("--full", action="store_true", help="paper-scale grid step 0.02")
    basin.add_argument("--preset", choices=("census", "default"), default=cfg.get("preset", "census"),
                       help="census: step 0.1, horizon 1000; default: step 0.01, horizon 10000")

    eq = sub.add_parser("equilibria", help="stability of the eight corner states")
    _common(eq, cfg)
    eq.add_argument("--form", choices=("standard", "literal"), default=cfg.get("form", "standard"))

    abm = sub.add_parser("abm", help="finite-population agent-based model")
    asub = abm.add_subparsers(dest="action", required=True, parser_class=_Parser)
    arun = asub.add_parser("run", help="simulate and write per-generation strategy counts")
    _common(arun, cfg)
    _abm_args(arun, cfg, generations=500, replicates=1)
    arun.add_argument("--initial", choices=("uniform-random", "alld-d", "allc-c"),
                      default=cfg.get("initial", "uniform-random"))

    sw = sub.add_parser("sweep", help="eta heatmap over two parameters")
    _common(sw, cfg)
    sw.add_argument("--engine", choices=("replicator", "abm"), default=cfg.get("engine", "replicator"))
    sw.add_argument("--x", dest="axis_x", default=cfg.get("axis_x", "c_i:0:0.5:21"), help="name:lo:hi:steps")
    sw.add_argument("--y", dest="axis_y", default=cfg.get("axis_y", "c_c:0:0.5:21"), help="name:lo:hi:steps")
    sw.add_argument("--full", action="store_true", help="paper-scale R=100 replicates for the ABM engine")
    _integrator_args(sw, cfg, 0.01, 10000.0)
    _abm_args(sw, cfg, generations=500, replicates=20)

    rd = sub.add_parser("render", help="render a sweep or time-series CSV to SVG")
    rd.add_argument("csv", help="input CSV")
    rd.add_argument("--out-file", dest="out_file", help="output SVG (default: CSV path with .svg)")
    rd.add_argument("--color-scale", dest="color_scale", default="viridis",
                    choices=("viridis", "redgreen", "greys"))
    rd.add_argument("--png", action="store_true", help="also write a matplotlib PNG")
    rd.add_argument("--config", metavar="PATH")
    rd.add_argument("-v", "--verbose", action="store_true")
    return root


def _params(args):
    return params_from_mapping({k: getattr(args, k) for k in PARAM_NAMES}, GameParams())


def _figures(args, csv_path, kind):
    from . import svg

    out = [svg.render_heatmap(csv_path, csv_path.with_suffix(".svg")) if kind == "heatmap"
           else svg.render_timeseries(csv_path, csv_path.with_suffix(".svg"))]
    if getattr(args, "png", False):
        from . import plotting

        fn = plotting.heatmap_figure if kind == "heatmap" else plotting.timeseries_figure
        out.append(fn(csv_path, csv_path.with_suffix(".png")))
    return out


def _integrator(args, default_step=0.01, default_horizon=10000.0):
    return IntegratorConfig(
        step_size=args.step if args.step is not None else default_step,
        horizon=args.horizon if args.horizon is not None else default_horizon,
        record_stride=getattr(args, "stride", 100),
        convergence_epsilon=args.eps,
        form=args.form,
    )


def _abm_config(args, replicates=None):
    return AbmConfig(
        n_users=args.n_users, n_creators=args.n_creators,
        beta_u=args.beta_u, beta_c=args.beta_c,
        mu_u=args.mu_u, mu_c=args.mu_c,
        generations=args.generations, burn_in_fraction=args.burn_in,
        seed=args.seed, replicates=replicates or args.replicates,
        paired_updates=args.paired,
    )


def cmd_replicator_run(args, out):
    p = _params(args)
    cfg = _integrator(args)
    try:
        x0 = tuple(float(v) for v in args.x0.split(","))
        s0 = PopulationState(x0, args.y0)
    except ValueError as exc:
        raise UsageError(f"invalid initial state: {exc}") from exc
    traj = integrate(s0, p, cfg)
    outcome = classify_outcome(traj, cfg)
    csv_path = write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, traj.rows())
    summary = {
        "outcome": outcome.kind.value,
        "time_averaged_eta": outcome.time_averaged_eta,
        "defection_distance": outcome.defection_distance,
        "derivative_norm": outcome.derivative_norm,
        **{f"terminal_{n}": v for n, v in zip(TRAJECTORY_HEADER[1:6], traj.states[-1])},
    }
    kv = write_kv(out / "outcome.txt", summary)
    print(f"outcome: {outcome.kind.value}")
    print(f"time-averaged eta: {outcome.time_averaged_eta:.6f}")
    print(f"distance to (AllD, D): {outcome.defection_distance:.3e}")
    config = {**p.to_dict(), **cfg.to_dict(), "x0": args.x0, "y0": args.y0}
    return config, [csv_path, kv, *_figures(args, csv_path, "timeseries")]


def cmd_replicator_basin(args, out):
    p = _params(args)
    preset = CENSUS_PRESET if args.preset == "census" else {"step_size": 0.01, "horizon": 10000.0}
    cfg = _integrator(args, preset["step_size"], preset["horizon"])
    grid_step = 0.02 if args.full else args.grid_step
    census = basin_census(p, grid_step, cfg, jobs=args.jobs)
    rows = (
        (i, *map(float, s), o, float(e))
        for i, (s, o, e) in enumerate(zip(census.states, census.outcomes, census.etas))
    )
    csv_path = write_csv(out / "basin_states.csv", ("state_id", "x1", "x2", "x3", "x4", "y", "outcome", "eta_avg"), rows)
    summary = census.summary()
    kv = out / "basin_summary.json"
    kv.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"starting states: {census.total_states}")
    print(f"defection fraction: {census.defection_fraction:.4f}")
    print(f"mean eta: {census.mean_eta:.4f}")
    if census.failed:
        print(f"failed integrations excluded: {census.failed}")
    return {**p.to_dict(), **cfg.to_dict(), "grid_step": grid_step}, [csv_path, kv]


def cmd_equilibria(args, out):
    p = _params(args)
    reports = corner_census(p, args.form)
    rows = [tuple(r.row()[h] for h in REPORT_HEADER) for r in reports]
    csv_path = write_csv(out / "equilibria.csv", REPORT_HEADER, rows)
    print(format_table(reports))
    return {**p.to_dict(), "form": args.form}, [csv_path]


def _initial(name, cfg):
    if name == "alld-d":
        return AgentPopulations.homogeneous(UserStrategy.ALLD, CreatorStrategy.UNSAFE, cfg.n_users, cfg.n_creators)
    if name == "allc-c":
        return AgentPopulations.homogeneous(UserStrategy.ALLC, CreatorStrategy.SAFE, cfg.n_users, cfg.n_creators)
    return name


def cmd_abm_run(args, out):
    p = _params(args)
    cfg = _abm_config(args)
    initial = _initial(args.initial, cfg)
    artifacts = []
    meta = {**p.to_dict(), **cfg.to_dict(), "initial": args.initial}
    runs = run_replicates(p, cfg, initial, jobs=args.jobs) if cfg.replicates > 1 else [run_abm(p, cfg, initial)]
    first = runs[0]
    csv_path = write_csv(out / "abm_timeseries.csv", TIMESERIES_HEADER, first.rows())
    artifacts += [csv_path, write_kv(out / "abm_timeseries.csv.meta", {**meta, "run_seed": first.seed})]
    etas = np.array([r.post_burn_in_mean(cfg.burn_in_fraction) for r in runs])
    if len(runs) > 1:
        rep_path = write_csv(
            out / "abm_replicates.csv", ("replicate", "seed", "eta_post_burn_in", "max_eta"),
            ((i, r.seed, float(e), float(r.eta.max())) for i, (r, e) in enumerate(zip(runs, etas))),
        )
        artifacts += [rep_path, write_kv(out / "abm_replicates.csv.meta", meta)]
    print(f"replicates: {len(runs)}")
    print(f"mean eta after burn-in: {etas.mean():.4f}" + (f" (std {etas.std():.4f})" if len(runs) > 1 else ""))
    artifacts += _figures(args, csv_path, "timeseries")
    return meta, artifacts


def cmd_sweep(args, out):
    p = _params(args)
    try:
        ax, ay = Axis.parse(args.axis_x), Axis.parse(args.axis_y)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.engine == "replicator":
        ecfg = _integrator(args)
    else:
        ecfg = _abm_config(args, replicates=100 if args.full else args.replicates)
    try:
        spec = SweepSpec(ax, ay, p, args.engine, ecfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    result = run_sweep(spec, jobs=args.jobs)
    csv_path = write_csv(out / "sweep.csv", SWEEP_HEADER, result.rows())
    manifest = write_kv(out / "sweep.csv.meta", {**spec.describe(), "seed": args.seed})
    n_bad = int((~result.valid).sum())
    print(f"cells: {result.valid.size}  invalid: {n_bad}")
    print(f"eta range: [{np.nanmin(result.eta_mean):.3f}, {np.nanmax(result.eta_mean):.3f}]")
    return {**spec.describe(), "seed": args.seed}, [csv_path, manifest, *_figures(args, csv_path, "heatmap")]


def cmd_render(args, out=None):
    from . import svg

    src = Path(args.csv)
    dst = Path(args.out_file) if args.out_file else src.with_suffix(".svg")
    path = svg.render(src, dst, args.color_scale)
    outs = [path]
    if args.png:
        from . import plotting
        from .io import read_csv

        header, _ = read_csv(src)
        fn = plotting.heatmap_figure if tuple(header) == SWEEP_HEADER else plotting.timeseries_figure
        outs.append(fn(src, dst.with_suffix(".png")))
    for o in outs:
        print(o)
    return {}, outs


COMMANDS = {
    ("replicator", "run"): cmd_replicator_run,
    ("replicator", "basin"): cmd_replicator_basin,
    ("equilibria", None): cmd_equilibria,
    ("abm", "run"): cmd_abm_run,
    ("sweep", None): cmd_sweep,
    ("render", None): cmd_render,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        cfg = load_config(known.config) if known.config else {}
        args = build_parser(cfg).parse_args(argv)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    key = (args.command, getattr(args, "action", None))
    fn = COMMANDS[key]
    name = " ".join(k for k in key if k)
    t0 = time.perf_counter()
    out = Path(getattr(args, "out", ".") or ".")
    try:
        config, artifacts = fn(args, out)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command != "render":
        config = {**config, "seed": getattr(args, "seed", 0), "jobs": getattr(args, "jobs", 1)}
        manifest = RunManifest(name, argv, config, [str(a) for a in artifacts], time.perf_counter() - t0)
        manifest.write(out / "manifest.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
