"""Command-line front end.

Subcommands:
  simulate    draw snapshots for a configured scenario and save them (.npy)
  estimate    run one estimator on a saved covariance (or snapshot) file
  crb         print the per-angle root-CRB for a configured scenario
  experiment  Monte-Carlo sweep -> CSV table
  histogram   per-trial estimates for two estimators -> CSV table
  lambda-u    print the data-driven square-root-LASSO weight

Snapshot and covariance files use the NumPy .npy format (self-describing
binary with dtype and shape in the header): snapshots are complex (m, N),
covariances complex (m, m).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .arrays import manifold_matrix
from .experiments import (
    ExperimentConfig,
    config_from_yaml,
    histogram_to_csv,
    results_to_csv,
    run_experiment,
    run_histogram,
    write_csv,
    _make_estimator,
)
from .crb import crb_doa
from .simulate import sample_covariance, simulate_snapshots
from .solvers import lambda_u_rule


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise SystemExit("a --config file is required for this command")
    config = config_from_yaml(args.config)
    overrides = {}
    if getattr(args, "trials", None) is not None:
        overrides["n_trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if overrides:
        config = dataclasses.replace(config, **overrides)
    if getattr(args, "paper_scale", False):
        config = config.with_paper_scale()
    return config


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    if isinstance(config.num_snapshots, tuple):
        raise SystemExit("simulate needs a scalar num_snapshots")
    if isinstance(config.snr_db, tuple):
        raise SystemExit("simulate needs a scalar snr_db")
    scenario = config.scenario(float(config.snr_db))
    x = simulate_snapshots(scenario, config.noise_model(), config.geometry(),
                           int(config.num_snapshots), config.base_seed)
    np.save(args.out, x)
    print(f"wrote {x.shape[0]} x {x.shape[1]} snapshots to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    config = _load_config(args)
    data = np.load(args.input)
    if args.snapshots:
        rx = sample_covariance(data)
    else:
        rx = np.asarray(data, dtype=complex)
        if rx.ndim != 2 or rx.shape[0] != rx.shape[1]:
            raise SystemExit("covariance file must hold a square matrix "
                             "(use --snapshots for snapshot matrices)")
    estimator = _make_estimator(config, config.resolve_lambda_u())
    est = estimator(rx)
    for angle, power in zip(est.angles_deg, est.powers):
        print(f"{angle:.4f} deg  (power {power:.6g})")
    if est.shortfall:
        print("warning: fewer peaks than requested sources", file=sys.stderr)
    if args.out:
        lines = ["angle_index,angle_deg,power"]
        lines += [f"{k},{a:.12g},{p:.12g}"
                  for k, (a, p) in enumerate(zip(est.angles_deg, est.powers))]
        write_csv("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_crb(args) -> int:
    config = _load_config(args)
    if isinstance(config.num_snapshots, tuple) or isinstance(config.snr_db, tuple):
        raise SystemExit("crb needs scalar num_snapshots and snr_db")
    scenario = config.scenario(float(config.snr_db))
    crb = crb_doa(scenario, config.noise_model(), config.geometry(),
                  int(config.num_snapshots))
    for angle, c in zip(np.sort(config.angles_deg), np.sqrt(crb)):
        print(f"theta {angle:.4f} deg: sqrt(CRB) {c:.6g} deg")
    return 0


def _cmd_experiment(args) -> int:
    config = _load_config(args)
    rows = run_experiment(config)
    csv_text = results_to_csv(rows)
    if args.out:
        write_csv(csv_text, args.out)
        print(f"wrote {len(rows)} sweep points to {args.out}")
    else:
        print(csv_text, end="")
    return 0


def _cmd_histogram(args) -> int:
    config = _load_config(args)
    rows = run_histogram(config)
    csv_text = histogram_to_csv(rows)
    if args.out:
        write_csv(csv_text, args.out)
        print(f"wrote {len(rows)} estimate rows to {args.out}")
    else:
        print(csv_text, end="")
    return 0


def _cmd_lambda_u(args) -> int:
    config = _load_config(args)
    geom = config.geometry()
    a_tilde = manifold_matrix(geom, config.grid())
    value = lambda_u_rule(a_tilde, config.support_set(),
                          n_trials=args.trials or 300,
                          seed=args.seed if args.seed is not None
                          else config.base_seed)
    print(f"{value:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsedoa",
        description="DOA estimation in partially correlated noise via "
                    "low-rank plus sparse covariance decomposition.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--config", help="YAML experiment configuration")
        p.add_argument("--out", required=out_required, help="output file path")
        p.add_argument("--seed", type=int, help="override base seed")
        p.add_argument("--trials", type=int, help="override trial count")
        p.add_argument("--threads", type=int, help="trial worker threads")
        p.add_argument("--paper-scale", action="store_true",
                       help="apply the config's full-reproduction overrides")

    p = sub.add_parser("simulate", help="write snapshots to a .npy file")
    common(p, out_required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate DOAs from a saved matrix")
    common(p)
    p.add_argument("--input", required=True, help=".npy covariance file")
    p.add_argument("--snapshots", action="store_true",
                   help="input holds snapshots; form the sample covariance")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("crb", help="print per-angle sqrt(CRB)")
    common(p)
    p.set_defaults(func=_cmd_crb)

    p = sub.add_parser("experiment", help="run a Monte-Carlo sweep")
    common(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("histogram", help="per-trial estimates for comparison")
    common(p)
    p.set_defaults(func=_cmd_histogram)

    p = sub.add_parser("lambda-u", help="compute the square-root-LASSO weight")
    common(p)
    p.set_defaults(func=_cmd_lambda_u)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
