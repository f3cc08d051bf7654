"""Threshold and growth-rate curves against rate for the GCD families.

Usage: python3 scripts/growth_curves.py FIGURE [--L 3..30,50] [--growth-L 3..8]
FIGURE is 2 or 3 for the (J,2J) families and 4 for (3,9), (3,12), (4,6).
"""

from __future__ import annotations

import argparse

from arldpc.reports import figdata


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("figure", type=int, choices=(2, 3, 4))
    ap.add_argument("--L", default=None)
    ap.add_argument("--growth-L", default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    table, _ = figdata(args.figure, args.L, args.growth_L, workers=args.jobs)
    print(table.render("csv"))


if __name__ == "__main__":
    main()
