"""Command-line entry point for the study drivers.

Subcommands: solve, moment, err-study, res-study, expansion.  Options can
come from a JSON config file (keys mirror ExperimentConfig fields) and are
overridden by explicit flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .experiments import (
    DiffusionModel,
    ExperimentConfig,
    run_error_study,
    run_expansion_study,
    run_moment_study,
    run_solve,
)
from .moments import evaluate_moment, moment
from .reference import GRID_POINTS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeuq",
        description="Sparse-FFT surrogate studies for the random-coefficient two-point problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("solve", "solve the benchmark problem and write solution.coeffs"),
        ("moment", "solve, then write first and second moment curves"),
        ("err-study", "mean surrogate-vs-reference error curve (err.csv)"),
        ("res-study", "moment residuals vs Monte-Carlo references (res1.csv, res2.csv)"),
        ("expansion", "directional expansion of the re-detected surrogate (expansion.csv)"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="path.json", help="JSON config; flags override its keys")
        p.add_argument("--setting", choices=["I", "II", "III"], help="preset (N, s, theta, r)")
        p.add_argument("--backend", choices=["r1l", "mr1l"], help="lattice plan scheme")
        p.add_argument("--dxi", type=int, help="number of random variables (even)")
        p.add_argument("--ntest", type=int, help="reference draw count")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--out", metavar="dir", help="output directory")
        p.add_argument("--paper-scale", action="store_true", help="use 20000 reference draws")
        p.add_argument("--verbose", action="store_true", help="progress lines on stderr")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {
        "setting": args.setting,
        "backend": args.backend,
        "n_test": args.ntest,
        "seed": args.seed,
        "out_dir": args.out,
        "d_xi": args.dxi,
    }
    if args.paper_scale and args.ntest is None:
        overrides["n_test"] = 20000
    if args.verbose:
        overrides["verbose"] = True
    if args.config:
        return ExperimentConfig.from_json(args.config, **overrides)
    model = DiffusionModel(d_xi=args.dxi if args.dxi else 20)
    kwargs = {k: v for k, v in overrides.items() if v is not None and k != "d_xi"}
    return ExperimentConfig(model=model, **kwargs)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    os.makedirs(cfg.out_dir, exist_ok=True)

    if args.command == "solve":
        rep = run_solve(cfg)
        print(f"solution.coeffs written to {cfg.out_dir} "
              f"({rep.u1.n_terms}+{rep.u2.n_terms}+{len(rep.c1)} terms)")
        return 0

    if args.command == "moment":
        rep = run_solve(cfg)
        grid = np.linspace(*cfg.model.problem().spatial_bounds, GRID_POINTS)
        for n in (1, 2):
            mrep = moment(rep, n, None, cfg.sfft_config(10 + n))
            curve = evaluate_moment(mrep, grid)
            path = os.path.join(cfg.out_dir, f"moment{n}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(f"eta,moment_{n}\n")
                for e, v in zip(grid, curve):
                    fh.write(f"{float(e)!r},{float(v)!r}\n")
            print(f"moment{n}.csv written (value at 0.5: {curve[50]:.6f})")
        return 0

    if args.command == "err-study":
        curve = run_error_study(cfg)
        print(f"err.csv written; grid-mean {curve.values.mean():.3e}, "
              f"grid-max {curve.values.max():.3e}")
        return 0

    if args.command == "res-study":
        rep = run_solve(cfg)
        for n in (1, 2):
            curve = run_moment_study(cfg, n, rep=rep)
            print(f"res{n}.csv written; grid-max {curve.values.max():.3e}")
        return 0

    if args.command == "expansion":
        expansion = run_expansion_study(cfg)
        trailing = expansion[1:]
        print("expansion.csv written; spatial", int(expansion[0]),
              "leading random", trailing[:3].tolist())
        return 0

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
