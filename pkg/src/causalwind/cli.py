"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 invalid arguments or config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import Config, load_config
from .dynamics import simulate
from .errors import ConfigError
from .experiments import (CEM_SCENARIO, DIRECTION_SCENARIO, atomic_write, persist_cem, persist_results,
                          run_experiment, run_experiment_cem, trajectory_csv)
from .timeseries import kmeans, pairwise_distances, silhouette_from_distances

OUTPUT_ENV = "CAUSALWIND_OUTPUT_DIR"
log = logging.getLogger("causalwind")


def _default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", required=True, help="JSON scenario configuration")
    common.add_argument("--output", "-o", default=None,
                        help=f"output directory (default: ${OUTPUT_ENV} or ./results)")
    common.add_argument("--seed", type=int, default=None, help="override the master seed from the config")
    common.add_argument("--jobs", "-j", type=int, default=None,
                        help="worker processes (default: available processors); results do not depend on it")
    common.add_argument("--verbose", "-v", action="store_true",
                        help="log progress and dump per-loop trajectories")

    p = argparse.ArgumentParser(prog="causalwind", description="Curiosity-driven wind-condition discrimination.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("simulate", parents=[common], help="fly the configured schedule once and write trajectory.csv")
    c = sub.add_parser("cluster", parents=[common], help="cluster a directory of t,x,y,z trajectory CSVs")
    c.add_argument("directory", help="directory of trajectory CSV files")
    c.add_argument("--k", type=int, default=2, help="number of clusters (default 2)")
    e = sub.add_parser("experiment", parents=[common], help="run experiment 1-6")
    e.add_argument("number", type=int, choices=range(1, 7), metavar="N", help="experiment number 1-6")
    sub.add_parser("cem", parents=[common], help="run the CEM experiment (same as 'experiment 6')")
    sub.add_parser("validate-config", parents=[common], help="parse the config and print it fully resolved")
    return p


def _output_dir(args) -> Path:
    return Path(args.output or os.environ.get(OUTPUT_ENV) or "results")


def _extra(cfg: Config) -> dict:
    return {"master_seed": cfg.seed, "config": cfg.to_dict()}


def cmd_simulate(cfg: Config, args) -> int:
    traj = simulate(cfg.uav, cfg.schedule, cfg.wind, cfg.sim, seed=cfg.seed)
    out = _output_dir(args)
    atomic_write(out / "trajectory.csv", trajectory_csv(traj))
    summary = {"seed": cfg.seed, "n_samples": len(traj), "final_position": traj.positions[-1].tolist(),
               "config": cfg.to_dict()}
    atomic_write(out / "trajectory.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(out / "trajectory.csv")
    return 0


def read_trajectory_csv(path: Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 4:
        raise ValueError(f"{path}: expected columns t,x,y,z")
    return data[:, 1:]


def cmd_cluster(cfg: Config, args) -> int:
    files = sorted(Path(args.directory).glob("*.csv"))
    if len(files) < args.k:
        raise ValueError(f"need at least {args.k} trajectory CSVs in {args.directory}, found {len(files)}")
    series = [read_trajectory_csv(f) for f in files]
    cs = cfg.cluster
    model = kmeans(series, args.k, cs.metric, n_init=cs.n_init, max_iters=cs.max_iters, seed=cfg.seed,
                   barycenter_iters=cs.barycenter_iters)
    labels = [int(a) for a in model.assignments]
    sil = silhouette_from_distances(pairwise_distances(series, cs.metric), labels) if len(set(labels)) > 1 else None
    for f, a in zip(files, labels):
        print(f"{f.name},{a}")
    print(f"silhouette,{'undefined' if sil is None else repr(sil)}")
    return 0


def cmd_experiment(cfg: Config, args, number: int) -> int:
    settings = cfg.settings(jobs=args.jobs, keep_trajectories=args.verbose)
    out = _output_dir(args)
    if number == 6:
        res = run_experiment_cem(settings, CEM_SCENARIO)
        written = persist_cem(res, out, _extra(cfg))
        log.info("cem best %.3f vs random best %.3f", res.cem.history[-1]["best_so_far"], res.baseline.max)
    else:
        scenarios = {1: cfg.scenarios, 5: (DIRECTION_SCENARIO,)}.get(number, cfg.sweep_scenarios)
        results = run_experiment(number, settings, scenarios)
        for r in results:
            log.info("%s %s %s: max %.3f mean %.3f", r.experiment, r.scenario.name,
                     "" if r.sweep_value is None else r.sweep_value, r.max, r.mean)
        written = persist_results(results, out, _extra(cfg), verbose=args.verbose)
    for p in written:
        if p.suffix == ".json" or args.verbose:
            print(p)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.jobs is None:
        args.jobs = _default_jobs()
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        cfg = load_config(args.config, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "validate-config":
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
            return 0
        if args.command == "simulate":
            return cmd_simulate(cfg, args)
        if args.command == "cluster":
            return cmd_cluster(cfg, args)
        if args.command == "cem":
            return cmd_experiment(cfg, args, 6)
        return cmd_experiment(cfg, args, args.number)
    except (ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
