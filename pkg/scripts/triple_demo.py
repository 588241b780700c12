"""Match a triple junction spec and report the c_hat root and curvatures."""

import argparse
import time

from confform.junction import all_disk_case, check_compatibility, load_spec, match_junction, uniqueness_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("spec", nargs="?", default="configs/disk_two_tori.cfg")
    ap.add_argument("--probe", type=int, default=0)
    args = ap.parse_args()
    spec = load_spec(args.spec)
    t0 = time.perf_counter()
    r = all_disk_case(spec) if spec.all_disks else match_junction(spec)
    print(f"chi(M) = {spec.chi}, k = {r.k:g}, l0 = {r.l0:.10f}  ({time.perf_counter() - t0:.1f} s)")
    for comp, c, a in zip(spec.components, r.c, r.areas):
        print(f"  {comp.name or comp.kind:10s} c = {c:+.10f}  area = {a:.6f}")
    print(f"  sum c = {r.curvature_sum:.3e}, compatibility = {check_compatibility(spec, r):.3e}")
    if args.probe and not spec.all_disks:
        print(f"  uniqueness probe ({args.probe} reruns): {uniqueness_probe(spec, r, args.probe):.3e}")


if __name__ == "__main__":
    main()
