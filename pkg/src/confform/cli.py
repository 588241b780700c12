"""Command-line front end.

Exit codes: 0 success, 1 verification checks failed, 2 invalid input,
3 solver non-convergence, 4 topological rejection. Errors are also written to
stderr as one line of JSON.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import atlas, disk, junction
from .mesh import MeshError, load_mesh
from .operators import build_operators
from .plots import emit_plot
from .solver import (
    CurvatureTarget,
    InadmissibleTarget,
    SolverError,
    SolverOptions,
    dumps,
    residual,
    solve,
)

EXIT_OK, EXIT_CHECKS, EXIT_INPUT, EXIT_SOLVER, EXIT_TOPOLOGY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _diag("UsageError", message)
        raise SystemExit(EXIT_INPUT)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    args: argparse.Namespace

    @property
    def out(self) -> Path | None:
        out = getattr(self.args, "out", None)
        return None if out is None else Path(out)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol_residual=self.args.tol) if getattr(self.args, "tol", None) else SolverOptions()


def _diag(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="confform", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def positive(x):
        v = float(x)
        if not v > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    s = sub.add_parser("solve", help="solve for constant curvatures (k, c) on a mesh")
    s.add_argument("--mesh", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--tol", type=positive)
    s.add_argument("--seed", type=int, help="random initial state in [-1, 1] (default: u = 0)")

    a = sub.add_parser("atlas", help="tabulate L, A over a (k, c) grid")
    a.add_argument("--mesh", required=True)
    a.add_argument("--kmin", type=float, default=-1.0)
    a.add_argument("--kmax", type=float, default=-1.0)
    a.add_argument("--cmin", type=float, default=-4.0)
    a.add_argument("--cmax", type=float, default=0.5)
    a.add_argument("--steps", type=int, default=8)
    a.add_argument("--out", required=True)
    a.add_argument("--tol", type=positive)
    a.add_argument("--plot", action="store_true")

    d = sub.add_parser("disk", help="closed-form hyperbolic disk table as CSV")
    d.add_argument("--l", type=positive, action="append", help="boundary length (repeatable)")
    d.add_argument("--out")

    t = sub.add_parser("triple", help="weak uniformization of a triple junction spec")
    t.add_argument("--spec", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--tol", type=positive)
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--probe", type=int, default=0, help="uniqueness reruns")

    v = sub.add_parser("verify", help="discrete identities and solver checks on a mesh")
    v.add_argument("--mesh", required=True)
    v.add_argument("--k", type=float, default=-1.0)
    v.add_argument("--c", type=float, default=-1.0)
    v.add_argument("--tol", type=positive)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--out")
    return p


def _mkdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_solve(cfg: RunConfig) -> int:
    args = cfg.args
    ops = build_operators(load_mesh(args.mesh))
    init = None
    if args.seed is not None:
        init = np.random.default_rng(args.seed).uniform(-1, 1, ops.mesh.vertex_count)
    rep = solve(ops, CurvatureTarget(args.k, args.c), init, cfg.solver_options())
    out = _mkdir(cfg.out)
    (out / "report.json").write_text(rep.to_json() + "\n")
    print(dumps({k: v for k, v in rep.to_dict().items() if k != "u"}))
    return EXIT_OK


def cmd_atlas(cfg: RunConfig) -> int:
    args = cfg.args
    if args.steps < 1:
        raise ValueError("--steps must be at least 1")
    ops = build_operators(load_mesh(args.mesh))
    ks = np.linspace(args.kmin, args.kmax, args.steps if args.kmin != args.kmax else 1)
    cs = np.linspace(args.cmin, args.cmax, args.steps)
    rows = atlas.sweep(ops, ks, cs, cfg.solver_options())
    out = _mkdir(cfg.out)
    atlas.write_csv(rows, out / "atlas.csv")
    if args.plot:
        for k in sorted({r.k for r in rows}):
            line = [r for r in rows if r.k == k]
            if sum(r.converged for r in line) >= 2:
                emit_plot(line, out / f"L_k{k:g}.svg", "L", title=f"k = {k:g}")
                emit_plot(line, out / f"L_hat_k{k:g}.svg", "L_hat", title=f"k = {k:g}")
    print(f"{sum(r.converged for r in rows)}/{len(rows)} rows converged -> {out / 'atlas.csv'}")
    return EXIT_OK


def cmd_disk(cfg: RunConfig) -> int:
    ls = cfg.args.l or list(np.geomspace(0.1, 100.0, 13))
    lines = ["l,rho,L,kappa,c_hat"]
    for row in disk.disk_table(ls):
        lines.append(",".join(format(row[key], ".17g") for key in ("l", "rho", "L", "kappa", "c_hat")))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if cfg.args.out:
        out = Path(cfg.args.out)
        target = out / "disk.csv" if out.suffix != ".csv" else out
        _mkdir(target.parent)
        target.write_text(text)
    return EXIT_OK


def cmd_triple(cfg: RunConfig) -> int:
    args = cfg.args
    spec = junction.load_spec(args.spec)
    if spec.all_disks:
        result = junction.all_disk_case(spec)
    else:
        result = junction.match_junction(spec, cfg.solver_options())
    data = result.to_dict()
    data["compatibility_residual"] = junction.check_compatibility(spec, result)
    if args.probe and not spec.all_disks:
        data["uniqueness_deviation"] = junction.uniqueness_probe(
            spec, result, args.probe, cfg.solver_options(), seed=args.seed)
    out = _mkdir(cfg.out)
    (out / "match.json").write_text(dumps(data) + "\n")
    print(dumps({key: data[key] for key in ("k", "l0", "c", "c_sum", "compatibility_residual")}))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    args = cfg.args
    ops = build_operators(load_mesh(args.mesh))
    opts = cfg.solver_options()
    tol = opts.tolerance(ops)
    n = ops.mesh.vertex_count
    checks = {}
    checks["gauss_bonnet_defect"] = abs(ops.gauss_bonnet_defect())
    S = ops.stiffness
    checks["stiffness_kernel"] = float(np.abs(S @ np.ones(n)).max() / abs(S).sum(axis=1).max())
    target = CurvatureTarget(args.k, args.c)
    rep = solve(ops, target, None, opts)
    gb = abs(target.k * rep.area + target.c * rep.boundary_length - 2 * math.pi * ops.chi)
    checks["solution_gauss_bonnet"] = gb
    init = np.random.default_rng(args.seed).uniform(-1, 1, n)
    rep2 = solve(ops, target, init, opts)
    checks["uniqueness"] = float(np.abs(rep.state.u - rep2.state.u).max())
    checks["scaling"] = atlas.verify_scaling(ops, target.k, target.c, 2.0, opts) if target.k < 0 else 0.0
    checks["residual_sum_identity"] = abs(
        math.fsum(residual(ops, rep.state, target)) - (2 * math.pi * ops.chi - target.k * rep.area
                                                      - target.c * rep.boundary_length))
    limits = {"gauss_bonnet_defect": 1e-10, "stiffness_kernel": 1e-12,
              "solution_gauss_bonnet": 10 * tol * n, "uniqueness": 1e-8, "scaling": 1e-8,
              "residual_sum_identity": 1e-9}
    report = {"chi": ops.chi, "vertices": n, "quality": ops.quality_report(), "checks": {}}
    ok = True
    for name, val in checks.items():
        passed = val <= limits[name]
        ok &= passed
        report["checks"][name] = {"value": val, "limit": limits[name], "pass": passed}
        print(f"{'PASS' if passed else 'FAIL'} {name}: {val:.3e} (limit {limits[name]:.1e})")
    if args.out:
        out = _mkdir(Path(args.out))
        (out / "verify.json").write_text(dumps(report) + "\n")
    return EXIT_OK if ok else EXIT_CHECKS


COMMANDS = {"solve": cmd_solve, "atlas": cmd_atlas, "disk": cmd_disk, "triple": cmd_triple, "verify": cmd_verify}


def run(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    cfg = RunConfig(args.subcommand, args)
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except junction.TopologyError as exc:
        _diag(type(exc).__name__, str(exc))
        return EXIT_TOPOLOGY
    except SolverError as exc:
        if isinstance(exc, InadmissibleTarget):
            _diag(type(exc).__name__, str(exc))
            return EXIT_INPUT
        _diag(type(exc).__name__, str(exc))
        return EXIT_SOLVER
    except (MeshError, ValueError, OSError) as exc:
        _diag(type(exc).__name__, str(exc))
        return EXIT_INPUT


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
