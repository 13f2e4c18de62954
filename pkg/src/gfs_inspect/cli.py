"""Command line entry point: ``gfs-inspect {train,evaluate,simulate,montecarlo}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigurationError
from .ga import decode, encode, evolve
from .guidance import default_controller
from .harness import EpisodeConfig, default_workers, monte_carlo, run_episode
from .io import (load_controller, load_ga_config, load_scenario, load_scenario_set,
                 reference_controller_path, save_controller, write_rows_csv, write_summary_csv,
                 write_trajectory_csv)

log = logging.getLogger("gfs_inspect")

EXIT_CONFIG = 2


REFERENCE = "reference"


def _require_file(path, what):
    if path is not None and not Path(path).is_file():
        raise FileNotFoundError(f"{what} not found: {path}")


def _controller_path(path):
    # the literal name "reference" selects the controller shipped with the package
    return reference_controller_path() if path == REFERENCE else path


def cmd_train(args):
    _require_file(args.scenarios, "scenario set")
    _require_file(args.ga_config, "GA config")
    args.warm_start = _controller_path(args.warm_start)
    _require_file(args.warm_start, "warm-start controller")
    scenarios = load_scenario_set(args.scenarios)
    cfg, iterations = load_ga_config(args.ga_config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    elif cfg.workers == 1:
        cfg.workers = default_workers()
    start = load_controller(args.warm_start) if args.warm_start else default_controller()
    best = encode(start)
    rows = []
    result = None
    for it in range(iterations):
        # each iteration restarts the GA from the previous best
        it_cfg = type(cfg)(**{**cfg.to_dict(), "seed": cfg.seed + it})
        result = evolve(it_cfg, scenarios, init=best)
        best = result.best
        rows += [{"iteration": it, **h} for h in result.history]
        log.info("iteration %d best fitness %.4f", it, result.best_fitness)
    provenance = {"ga_config": cfg.to_dict(), "iterations": iterations, "seed": cfg.seed,
                  "fitness": result.best_fitness, "n_scenarios": len(scenarios)}
    save_controller(args.out, decode(best), provenance)
    hist = args.history or str(Path(args.out).with_suffix(".fitness.csv"))
    write_rows_csv(hist, rows, ["iteration", "generation", "best", "mean", "median"])
    print(f"best fitness {result.best_fitness:.4f}")
    print(f"controller written to {args.out}")
    print(f"fitness history written to {hist}")
    return 0


def _print_metrics(res):
    v = res.violations
    print(f"delta_v_mps      {res.delta_v:.3f}")
    print(f"insp_rate_pct    {res.insp_rate:.3f}")
    print(f"mean_dist_m      {res.mean_dist:.3f}")
    print(f"min_dist_m       {res.min_dist:.3f}")
    print(f"max_dist_m       {res.max_dist:.3f}")
    print(f"collision        {int(v['collision'])}")
    print(f"corridor         {int(v['corridor'])}")
    print(f"actuation        {int(v['actuation'])}")
    print(f"peak_force_N     {res.peak_force:.4f}")
    print(f"peak_torque_Nm   {res.peak_torque:.5f}")
    print(f"failed           {int(res.failed)}")


def cmd_evaluate(args):
    args.controller = _controller_path(args.controller)
    _require_file(args.controller, "controller file")
    _require_file(args.scenario, "scenario file")
    controller = load_controller(args.controller)
    cfg = load_scenario(args.scenario) if args.scenario else EpisodeConfig()
    res = run_episode(cfg, controller)
    _print_metrics(res)
    if args.export_trajectory:
        write_trajectory_csv(args.export_trajectory, res.trajectory)
        print(f"trajectory written to {args.export_trajectory}")
    return 0


def cmd_montecarlo(args):
    args.controller = _controller_path(args.controller)
    _require_file(args.controller, "controller file")
    _require_file(args.scenario, "scenario file")
    if args.runs < 1:
        raise ConfigurationError("--runs must be >= 1", key="runs")
    controller = load_controller(args.controller)
    base = load_scenario(args.scenario) if args.scenario else EpisodeConfig()
    mc = monte_carlo(base, controller, args.runs, args.seed, r_lo=args.r_min, r_hi=args.r_max,
                     workers=args.workers, keep_trajectories=False)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "runs.csv", mc.table())
    summary = mc.summary()
    write_summary_csv(out / "summary.csv", summary)
    print(f"{args.runs} runs, seed {args.seed}")
    for key, label in (("delta_v", "delta_v_mps"), ("insp_rate", "insp_rate_pct"),
                       ("mean_dist", "mean_dist_m")):
        print(f"{label:<15} mean {summary[key]['mean']:.3f}  std {summary[key]['std']:.3f}")
    print(f"results written to {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gfs-inspect",
                                description="Genetic-fuzzy spacecraft inspection toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="tune the guidance FISs with the GA")
    t.add_argument("scenarios", nargs="?", help="scenario-set JSON (default: 8 octant starts)")
    t.add_argument("ga_config", nargs="?", help="GA config JSON (default: nominal GA settings)")
    t.add_argument("-o", "--out", required=True, help="controller JSON to write")
    t.add_argument("--history", help="fitness CSV (default: <out>.fitness.csv)")
    t.add_argument("--seed", type=int)
    t.add_argument("--warm-start", help="controller JSON to start from, or 'reference'")
    t.add_argument("--workers", type=int)
    t.set_defaults(func=cmd_train)

    for name, export_required in (("evaluate", False), ("simulate", True)):
        e = sub.add_parser(name, help="fly one episode and report its metrics")
        e.add_argument("controller", help="controller JSON, or 'reference'")
        e.add_argument("scenario", nargs="?")
        e.add_argument("--export-trajectory", required=export_required, metavar="CSV")
        e.set_defaults(func=cmd_evaluate)

    m = sub.add_parser("montecarlo", help="random-start validation campaign")
    m.add_argument("controller", help="controller JSON, or 'reference'")
    m.add_argument("scenario", nargs="?")
    m.add_argument("--runs", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--r-min", type=float, default=50.0)
    m.add_argument("--r-max", type=float, default=100.0)
    m.add_argument("--workers", type=int)
    m.add_argument("-o", "--out-dir", required=True)
    m.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        print(f"error: {exc}{key}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
