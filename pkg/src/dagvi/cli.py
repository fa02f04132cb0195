"""Command line interface: simulate, fit, sweep, experiment, metrics."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import experiments
from .fields import ConfigurationError, PenaltySpec
from .graphs import (GenerationError, dagness, enumerate_cycles,
                     generate_ground_truth, load_ground_truth,
                     save_ground_truth)
from .metrics import a_err, nu_err, shd
from .model import (FeasibilityError, ParamMatrix, TimeSeriesPanel,
                    extract_lag_matrix, get_link, simulate)
from .selection import DEFAULT_THRES, lambda_sweep, write_sweep_csv
from .solver import DivergenceError, SolverConfig, fit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INFEASIBLE = 4

PENALTY_NAMES = {
    "none": "none",
    "adaptive-linear": "adaptive_linear",
    "dag": "dag",
    "l1": "l1",
    "adaptive-l1": "adaptive_l1",
}


def _solver_config(args) -> SolverConfig:
    return SolverConfig(initial_lr=args.lr, halve_every=args.halve_every,
                        total_iters=args.iters)


def _add_solver_flags(p):
    p.add_argument("--lr", type=float, default=5e-3, help="initial learning rate")
    p.add_argument("--halve-every", type=int, default=2000,
                   help="halve the learning rate every N iterations")
    p.add_argument("--iters", type=int, default=6000, help="total iterations")


def _load_config(path) -> dict:
    with open(path) as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    for key in ("d1", "T", "link"):
        if key not in cfg:
            raise ConfigurationError(f"simulate config is missing {key!r}")
    d1, T = int(cfg["d1"]), int(cfg["T"])
    tau = int(cfg.get("tau", 1))
    link = get_link(cfg["link"])
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    init = cfg.get("init", "bernoulli")
    os.makedirs(args.out_dir, exist_ok=True)

    if "truth" in cfg:
        nu, mats = load_ground_truth(cfg["truth"])
    else:
        nu, mats = generate_ground_truth(d1, tau=tau, seed=seed)
    params = ParamMatrix.from_parts(nu, mats)
    panel = simulate(params, link, T, seed=seed, init=init)

    truth_path = os.path.join(args.out_dir, "truth.json")
    panel_path = os.path.join(args.out_dir, "panel.csv")
    save_ground_truth(truth_path, nu, mats, seed=seed)
    panel.to_csv(panel_path)
    print(f"wrote {panel_path} and {truth_path}")
    return EXIT_OK


def _metrics_row(theta: ParamMatrix, truth) -> dict:
    nu_true, mats = truth
    A_hat = extract_lag_matrix(theta, 1)
    return {"h": dagness(A_hat), "A_err": a_err(A_hat, mats[0]),
            "nu_err": nu_err(theta.nu, nu_true),
            "shd": shd(A_hat, mats[0])}


def _write_metrics_csv(path, row: dict) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(row.keys()))
        writer.writeheader()
        writer.writerow(row)


def cmd_fit(args) -> int:
    panel = TimeSeriesPanel.from_csv(args.data)
    link = get_link(args.link)
    kind = PENALTY_NAMES[args.penalty]
    config = _solver_config(args)
    truth = load_ground_truth(args.truth) if args.truth else None
    os.makedirs(args.out_dir, exist_ok=True)

    if kind == "none" or args.lam is not None:
        pilot = None
        spec = PenaltySpec(kind=kind, lam=args.lam or 0.0, floor=args.floor)
        if kind in ("adaptive_linear", "adaptive_l1"):
            pilot = fit(panel, link, PenaltySpec(), config).theta_hat
            spec.pilot = pilot
            if kind == "adaptive_linear":
                spec.cycles = enumerate_cycles(pilot, spec.edge_eps)
        result = fit(panel, link, spec, config)
    else:
        sweep = lambda_sweep(panel, link, kind, thres=args.thres, config=config,
                             floor=args.floor, truth=truth)
        result = sweep.selected_fit
        write_sweep_csv(os.path.join(args.out_dir, "sweep.csv"), sweep.points)

    fit_path = os.path.join(args.out_dir, "fit.json")
    result.to_json(fit_path)
    print(f"wrote {fit_path} (field norm {result.final_field_norm:.3e})")
    if truth is not None:
        row = _metrics_row(result.theta_hat, truth)
        _write_metrics_csv(os.path.join(args.out_dir, "metrics.csv"), row)
        print("metrics:", json.dumps(row))
    return EXIT_OK


def cmd_sweep(args) -> int:
    panel = TimeSeriesPanel.from_csv(args.data)
    link = get_link(args.link)
    kind = PENALTY_NAMES[args.penalty]
    if kind == "none":
        raise ConfigurationError("sweep needs a penalized field")
    grid = np.logspace(np.log10(args.grid_min), np.log10(args.grid_max),
                       args.grid_size)
    truth = load_ground_truth(args.truth) if args.truth else None
    sweep = lambda_sweep(panel, link, kind, grid=grid, thres=args.thres,
                         config=_solver_config(args), floor=args.floor,
                         truth=truth, early_exit=not args.full)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "sweep.csv")
    write_sweep_csv(path, sweep.points)
    status = "selected" if sweep.qualified else "no lambda qualified; largest kept"
    print(f"wrote {path} ({status}: lambda={sweep.selected_lam:g})")
    return EXIT_OK


def cmd_experiment(args) -> int:
    jobs = args.jobs if args.jobs else -1
    if args.name == "exp1":
        settings = ((args.d1, args.T),)
        links = (args.link,)
        experiments.run_exp1(args.out_dir, settings=settings, links=links,
                             n_trials=args.trials, thres=args.thres,
                             seed=args.seed or 0, jobs=jobs)
    elif args.name == "exp2":
        experiments.run_exp2(args.out_dir, d1=args.d1, T=args.T, link=args.link,
                             n_trials=args.trials, seed=args.seed or 0, jobs=jobs)
    elif args.name == "figure2":
        experiments.run_figure2(args.out_dir, d1=args.d1, T=args.T,
                                link=args.link, seed=args.seed or 0)
    else:  # unreachable behind argparse choices
        raise ConfigurationError(f"unknown experiment {args.name!r}")
    print(f"experiment {args.name} complete; outputs in {args.out_dir}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .solver import FitResult
    result = FitResult.from_json(args.fit)
    truth = load_ground_truth(args.truth)
    row = _metrics_row(result.theta_hat, truth)
    if args.out:
        _write_metrics_csv(args.out, row)
    print(json.dumps(row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagvi",
        description="Learn directed acyclic excitation graphs from binary time series.")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--out-dir", default=".")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a ground truth and a panel CSV")
    p.add_argument("--config", required=True, help="JSON config with d1, T, link")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a panel, optionally selecting lambda")
    p.add_argument("--data", required=True)
    p.add_argument("--link", default="exponential")
    p.add_argument("--penalty", choices=sorted(PENALTY_NAMES), default="none")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--thres", type=float, default=DEFAULT_THRES)
    p.add_argument("--floor", type=float, default=1e-3)
    p.add_argument("--truth", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="trace metrics along the lambda grid")
    p.add_argument("--data", required=True)
    p.add_argument("--link", default="exponential")
    p.add_argument("--penalty", choices=sorted(set(PENALTY_NAMES) - {"none"}),
                   default="adaptive-linear")
    p.add_argument("--thres", type=float, default=DEFAULT_THRES)
    p.add_argument("--floor", type=float, default=1e-3)
    p.add_argument("--grid-min", type=float, default=1e-5)
    p.add_argument("--grid-max", type=float, default=10.0)
    p.add_argument("--grid-size", type=int, default=40)
    p.add_argument("--full", action="store_true", help="evaluate every grid point")
    p.add_argument("--truth", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("experiment", help="run a batch study")
    p.add_argument("--name", choices=("exp1", "exp2", "figure2"), required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--d1", type=int, default=10)
    p.add_argument("--T", type=int, default=500)
    p.add_argument("--link", default="linear")
    p.add_argument("--thres", type=float, default=DEFAULT_THRES)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("metrics", help="compare a saved fit against a ground truth")
    p.add_argument("--fit", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, GenerationError, json.JSONDecodeError,
            FileNotFoundError, KeyError, ValueError) as exc:
        if isinstance(exc, FeasibilityError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
