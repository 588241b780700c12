"""Length/area maps over the admissible (k, c) domain and their inverses."""

from __future__ import annotations

import bisect
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .operators import ConformalState, DiscreteOperators
from .solver import (
    CurvatureTarget,
    NearBlowup,
    NonConvergence,
    SolveReport,
    SolverError,
    SolverOptions,
    _fmt,
    is_admissible,
    solve,
)


def worker_count() -> int:
    try:
        n = int(os.environ.get("CONFFORM_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class AtlasRow:
    k: float
    c: float
    L: float
    A: float
    L_hat: float
    A_hat: float
    converged: bool
    note: str = ""

    @classmethod
    def from_report(cls, rep: SolveReport) -> "AtlasRow":
        return cls(rep.k, rep.c, rep.boundary_length, rep.area,
                   rep.c * rep.boundary_length, rep.k * rep.area, rep.converged)

    @classmethod
    def marker(cls, k: float, c: float, note: str) -> "AtlasRow":
        nan = float("nan")
        return cls(k, c, nan, nan, nan, nan, False, note)


@dataclass(frozen=True)
class BoundaryCurve:
    """Samples (c, L(-1, c)) of one surface, increasing in both coordinates."""

    surface_id: str
    samples: tuple
    chi: int

    def __post_init__(self):
        cs = [s[0] for s in self.samples]
        ls = [s[1] for s in self.samples]
        if any(b <= a for a, b in zip(cs, cs[1:])) or any(b <= a for a, b in zip(ls, ls[1:])):
            raise ValueError("boundary curve samples must increase strictly in c and L")

    @classmethod
    def from_rows(cls, rows, surface_id: str, chi: int) -> "BoundaryCurve":
        pts = sorted((r.c, r.L) for r in rows if r.converged and r.k == -1.0)
        return cls(surface_id, tuple(pts), chi)


def _sweep_line(ops, k, c_values, opts):
    rows, state = [], None
    for c in sorted(c_values):
        if not is_admissible(k, c) or ops.chi >= 0:
            rows.append(AtlasRow.marker(k, c, "inadmissible"))
            continue
        try:
            rep = solve(ops, CurvatureTarget(k, c), state, opts)
        except (NonConvergence, NearBlowup) as exc:
            rows.append(AtlasRow.marker(k, c, type(exc).__name__))
            continue
        state = rep.state
        rows.append(AtlasRow.from_report(rep))
    return rows


def sweep(ops: DiscreteOperators, k_values, c_values, opts: SolverOptions | None = None) -> list[AtlasRow]:
    """Solve on the grid k_values x c_values, warm-starting along each k-line.

    Rows come back ordered by k, then increasing c. Inadmissible or failed
    pairs give marker rows with ``converged=False``.
    """
    opts = opts or SolverOptions()
    ks = sorted(set(float(k) for k in k_values))
    cs = [float(c) for c in c_values]
    with ThreadPoolExecutor(max_workers=min(worker_count(), max(1, len(ks)))) as pool:
        lines = list(pool.map(lambda k: _sweep_line(ops, k, cs, opts), ks))
    return [row for line in lines for row in line]


def write_csv(rows, path) -> None:
    lines = ["k,c,L,A,L_hat,A_hat,converged"]
    for r in rows:
        vals = [_fmt(v) for v in (r.k, r.c, r.L, r.A, r.L_hat, r.A_hat)]
        lines.append(",".join(vals + ["true" if r.converged else "false"]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class _Sample:
    c: float
    L: float
    report: SolveReport


@dataclass
class LengthInverter:
    """Inverse of the strictly increasing map c -> L(k, c) on one surface.

    Every forward solve is cached; bisection brackets are narrowed using the
    cache (monotonicity makes any cached sample a valid bracket end) and solves
    are warm-started from the nearest cached c.
    """

    ops: DiscreteOperators
    opts: SolverOptions = field(default_factory=SolverOptions)
    k: float = -1.0
    rel_tol: float = 1e-8
    c_top_margin: float = 1e-3
    c_floor: float = -1e6
    first_init: np.ndarray | None = None
    _samples: list = field(default_factory=list, repr=False)
    solves: int = 0

    def __post_init__(self):
        if self.k >= 0:
            raise ValueError("length inversion is defined for k < 0")

    @property
    def c_top(self) -> float:
        return math.sqrt(-self.k) * (1 - self.c_top_margin)

    def _nearest_state(self, c):
        if not self._samples:
            return None if self.first_init is None else ConformalState(self.first_init)
        cs = [s.c for s in self._samples]
        i = bisect.bisect_left(cs, c)
        cand = [j for j in (i - 1, i) if 0 <= j < len(cs)]
        j = min(cand, key=lambda j: abs(cs[j] - c))
        return self._samples[j].report.state

    def forward(self, c: float) -> SolveReport:
        for s in self._samples:
            if s.c == c:
                return s.report
        rep = solve(self.ops, CurvatureTarget(self.k, c), self._nearest_state(c), self.opts)
        self.solves += 1
        bisect.insort(self._samples, _Sample(c, rep.boundary_length, rep), key=lambda s: s.c)
        return rep

    def _cached_bracket(self, l):
        lo = hi = None
        for s in self._samples:
            if s.L < l:
                lo = s
            elif s.L > l and hi is None:
                hi = s
        return lo, hi

    def invert(self, l: float) -> tuple[float, SolveReport]:
        if not l > 0:
            raise ValueError("target length must be positive")
        for s in self._samples:
            if abs(s.L - l) <= self.rel_tol * l:
                return s.c, s.report
        lo, hi = self._cached_bracket(l)

        if lo is None:
            c = -1.0 if hi is None or hi.c > -1.0 else 2 * hi.c
            while True:
                rep = self.forward(c)
                if abs(rep.boundary_length - l) <= self.rel_tol * l:
                    return c, rep
                if rep.boundary_length < l:
                    c_lo = c
                    break
                c *= 2
                if c < self.c_floor:
                    raise SolverError(
                        f"length {l:.6g} is below the reachable range: L(k, {c / 2:.3g}) is still larger")
        else:
            c_lo = lo.c

        if hi is None:
            c_hi = self.c_top
            try:
                rep = self.forward(c_hi)
            except (NearBlowup, NonConvergence):
                rep = None  # length runs off to infinity before c_top: a valid upper end
            if rep is not None:
                if abs(rep.boundary_length - l) <= self.rel_tol * l:
                    return c_hi, rep
                if rep.boundary_length < l:
                    raise NearBlowup(
                        f"length {l:.6g} needs c above {c_hi:.6g} (L there is {rep.boundary_length:.6g})",
                        length=rep.boundary_length, c=c_hi)
        else:
            c_hi = hi.c

        best = None
        while True:
            mid = 0.5 * (c_lo + c_hi)
            if mid <= c_lo or mid >= c_hi:
                break
            rep = self.forward(mid)
            best = (mid, rep)
            err = rep.boundary_length - l
            if abs(err) <= self.rel_tol * l:
                return mid, rep
            if err < 0:
                c_lo = mid
            else:
                c_hi = mid
        if best is None:
            raise SolverError(f"bisection for length {l} collapsed without a sample")
        return best


def invert_length(ops: DiscreteOperators, target_length: float, opts: SolverOptions | None = None,
                  k: float = -1.0) -> float:
    """c with L(k, c) = target_length, to 1e-8 relative in length."""
    inv = LengthInverter(ops, opts or SolverOptions(), k=k)
    c, _ = inv.invert(target_length)
    return c


def c_hat(surface, l: float, opts: SolverOptions | None = None) -> float:
    """l * c(l): the total boundary curvature of the hyperbolic metric with length l.

    ``surface`` is DiscreteOperators, a LengthInverter, or the string "disk".
    """
    from .disk import disk_c_hat

    if isinstance(surface, str):
        if surface != "disk":
            raise ValueError(f"unknown surface descriptor {surface!r}")
        return disk_c_hat(l)
    inv = surface if isinstance(surface, LengthInverter) else LengthInverter(surface, opts or SolverOptions())
    c, _ = inv.invert(l)
    return l * c


def verify_scaling(ops: DiscreteOperators, k: float, c: float, lam: float,
                   opts: SolverOptions | None = None) -> float:
    """Max deviation from g_{k/lam^2, c/lam} = lam^2 g_{k,c}, from two cold solves."""
    opts = opts or SolverOptions()
    t = CurvatureTarget(k, c)
    a = solve(ops, t, None, opts)
    b = solve(ops, t.scaled(lam), None, opts)
    du = float(np.abs(b.state.u - a.state.u - math.log(lam)).max())
    dl = abs(b.boundary_length - lam * a.boundary_length) / (lam * a.boundary_length)
    da = abs(b.area - lam ** 2 * a.area) / (lam ** 2 * a.area)
    return max(du, dl, da)
