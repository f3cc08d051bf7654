"""Peeling-decoder block failure rate versus erasure probability for the examples.

Usage: python3 scripts/waterfall.py [--L 4] [--N 500] [--trials 200] [--seed 0]
"""

from __future__ import annotations

import argparse

import numpy as np

from arldpc.density_evolution import threshold
from arldpc.ensembles import preset
from arldpc.lifted_codes import simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=4)
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    print("family,L,N,epsilon_star,epsilon,block_failure_rate,ci_half_width")
    for ex in (1, 2, 3, 4):
        fam = preset(ex)
        eps_star = threshold(fam.terminated(args.L).protograph).epsilon
        for eps in np.round(np.arange(0.40, 0.601, 0.02), 4):
            r = simulate(fam, args.L, args.N, float(eps), args.trials, args.seed, args.jobs)
            print(f"{fam.name},{args.L},{args.N},{eps_star:.4f},{eps:.2f},{r.block_failure_rate:.4f},"
                  f"{r.half_width:.4f}")


if __name__ == "__main__":
    main()
