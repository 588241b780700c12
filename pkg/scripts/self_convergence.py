"""L(-1, 0) under mesh refinement, for both hole constructions."""

import argparse
import math

from confform.mesh import generate_torus_with_hole, generate_torus_with_round_hole
from confform.operators import build_operators
from confform.solver import CurvatureTarget, solve

FAMILIES = {
    "round": lambda n: generate_torus_with_round_hole(2.0, 0.7, n),
    "star": lambda n: generate_torus_with_hole(2.0, 0.7, n, n, 6),
    "block": lambda n: generate_torus_with_hole(2.0, 0.7, n, n, 8 * (n // 12) ** 2),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 24, 48])
    args = ap.parse_args()
    for name, gen in FAMILIES.items():
        Ls = []
        for n in args.sizes:
            ops = build_operators(gen(n))
            Ls.append(solve(ops, CurvatureTarget(-1.0, 0.0)).boundary_length)
        diffs = [abs(b - a) / abs(b) for a, b in zip(Ls, Ls[1:])]
        ratios = [d0 / d1 if d1 > 0 else math.inf for d0, d1 in zip(diffs, diffs[1:])]
        print(f"{name:6s} L = " + ", ".join(f"{x:.6f}" for x in Ls))
        print(f"{'':6s} rel. differences " + ", ".join(f"{d:.3e}" for d in diffs)
              + "  ratios " + ", ".join(f"{r:.2f}" for r in ratios))


if __name__ == "__main__":
    main()
