"""Sweep L(k, c) and A(k, c) over the admissible domain and plot the k-lines."""

import argparse
import time
from pathlib import Path

import numpy as np

from confform.atlas import sweep, write_csv
from confform.mesh import generate_torus_with_hole
from confform.operators import build_operators
from confform.plots import emit_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=24, help="grid size nu = nv")
    ap.add_argument("--out", default="runs/atlas")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ops = build_operators(generate_torus_with_hole(2.0, 0.7, args.n, args.n, 6))
    ks = [-4.0, -2.0, -1.0, -0.5, -0.25, 0.0]
    cs = np.concatenate([-np.geomspace(16, 0.125, 9), [0.0, 0.25, 0.5, 0.75, 0.95, 1.5]])
    t0 = time.perf_counter()
    rows = sweep(ops, ks, cs)
    print(f"{len(rows)} rows, {sum(r.converged for r in rows)} converged, {time.perf_counter() - t0:.1f} s")
    write_csv(rows, out / "atlas.csv")
    for k in ks:
        line = [r for r in rows if r.k == k]
        emit_plot(line, out / f"L_k{k:g}.svg", "L", title=f"k = {k:g}")
        emit_plot(line, out / f"L_hat_k{k:g}.svg", "L_hat", title=f"k = {k:g}")


if __name__ == "__main__":
    main()
