#!/usr/bin/env python3
"""Tabulate per-stage sampling costs across parameter settings.

Runs the benchmark solve at each requested setting and prints the number of
function samples spent in every pipeline stage (the analogue of the sample
count tables accompanying the published studies).

Usage: scripts/sample_count_table.py [--dxi 20] [--backend mr1l] [--settings I II]
"""

import argparse
import time

from latticeuq.experiments import DiffusionModel, ExperimentConfig
from latticeuq.solver import solve


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dxi", type=int, default=20)
    parser.add_argument("--backend", choices=["r1l", "mr1l"], default="mr1l")
    parser.add_argument("--settings", nargs="+", default=["I"],
                        choices=["I", "II", "III"])
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    print(f"{'setting':>8} {'rhs':>8} {'v1':>14} {'v2':>14} {'c1':>12} "
          f"{'total':>14} {'seconds':>8}")
    for setting in args.settings:
        cfg = ExperimentConfig(
            model=DiffusionModel(d_xi=args.dxi),
            setting=setting,
            backend=args.backend,
            seed=args.seed,
        )
        smap, rmaps = cfg.maps()
        t0 = time.time()
        rep = solve(
            cfg.model.problem(), smap, rmaps,
            cfg.sfft_config(1), cfg_v2=cfg.sfft_config(2), cfg_c1=cfg.sfft_config(3),
        )
        elapsed = time.time() - t0
        s = rep.samples
        print(f"{setting:>8} {s['rhs']:>8} {s['v1']:>14} {s['v2']:>14} "
              f"{s['c1']:>12} {sum(s.values()):>14} {elapsed:>8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
