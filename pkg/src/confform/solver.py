"""Newton solver for prescribed constant curvature k and boundary curvature c.

Unknown: the log conformal factor u of the metric e^{2u} g. The nodal residual
(weak form against hat functions) is

    F(u) = S u + Kint - k M e^{2u} + [boundary] (Kgeo - c B e^{u})

with S the cotangent stiffness, M and B lumped area and boundary masses and
Kint, Kgeo the integrated base curvatures. Summing F over all vertices gives
2*pi*chi - k*A(u) - c*L(u), the discrete Gauss-Bonnet constraint.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .operators import ConformalState, DiscreteOperators, _as_u, conformal_measures

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class InadmissibleTarget(SolverError, ValueError):
    pass


class NonConvergence(SolverError):
    def __init__(self, msg, report=None, last_c=None):
        super().__init__(msg)
        self.report = report
        self.last_c = last_c


class NearBlowup(SolverError):
    def __init__(self, msg, length=None, c=None):
        super().__init__(msg)
        self.length = length
        self.c = c


def is_admissible(k: float, c: float) -> bool:
    if not (math.isfinite(k) and math.isfinite(c)):
        return False
    if k < 0:
        return c < math.sqrt(-k)
    if k == 0:
        return c < 0
    return False


@dataclass(frozen=True)
class CurvatureTarget:
    """Target curvatures (k, c).

    Admissible pairs: k < 0 with c < sqrt(-k), or k = 0 with c < 0. Pass
    ``strict=False`` to build an inadmissible pair for residual evaluation.
    """

    k: float
    c: float
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "c", float(self.c))
        if self.strict and not self.admissible:
            raise InadmissibleTarget(f"(k, c) = ({self.k}, {self.c}) is outside k <= 0, c < sqrt(-k)")

    @property
    def admissible(self) -> bool:
        return is_admissible(self.k, self.c)

    def scaled(self, lam: float) -> "CurvatureTarget":
        """Target of the metric lam^2 g_{k,c}: (k / lam^2, c / lam)."""
        return CurvatureTarget(self.k / lam ** 2, self.c / lam, strict=self.strict)


@dataclass(frozen=True)
class SolverOptions:
    tol_residual: float | None = None  # None: 1e-10 * (1 + max|integrated_gauss|)
    max_newton_iters: int = 100
    line_search: str = "residual-backtracking"  # or "energy-descent"
    continuation_step_c: float = 0.05
    blowup_factor: float = 1e6

    def __post_init__(self):
        if self.tol_residual is not None and not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be >= 1")
        if self.line_search not in ("residual-backtracking", "energy-descent"):
            raise ValueError(f"unknown line search {self.line_search!r}")
        if not 0 < self.continuation_step_c <= 0.5:
            raise ValueError("continuation_step_c must lie in (0, 0.5]")

    def tolerance(self, ops: DiscreteOperators) -> float:
        if self.tol_residual is not None:
            return self.tol_residual
        return 1e-10 * (1.0 + float(np.abs(ops.integrated_gauss).max(initial=0.0)))


@dataclass
class SolveReport:
    k: float
    c: float
    state: ConformalState
    iterations: int
    residual_inf_norm: float
    area: float
    boundary_length: float
    converged: bool
    continuation_steps: int = 0
    energy_history: list = field(default_factory=list, repr=False)

    @property
    def target(self) -> CurvatureTarget:
        return CurvatureTarget(self.k, self.c, strict=False)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "c": self.c,
            "iterations": self.iterations,
            "residual": self.residual_inf_norm,
            "area": self.area,
            "length": self.boundary_length,
            "converged": self.converged,
            "continuation_steps": self.continuation_steps,
            "u": [float(x) for x in self.state.u],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _fmt(x: float) -> str:
    return repr(float(x)) if not math.isfinite(x) else format(float(x), ".17g")


def dumps(obj) -> str:
    """JSON with every float written at 17 significant digits."""

    def enc(o):
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            if not math.isfinite(o):
                return json.dumps(str(float(o)))
            return _fmt(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {enc(v)}" for k, v in o.items()) + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj)


# -- residual, Jacobian, energy ----------------------------------------------

def _residual(ops: DiscreteOperators, u: np.ndarray, k: float, c: float) -> np.ndarray:
    F = ops.stiffness @ u + ops.integrated_gauss + ops.integrated_geodesic
    F -= k * ops.interior_mass * np.exp(2 * u)
    F -= c * ops.boundary_mass * np.exp(u)
    return F


def residual(ops: DiscreteOperators, state, target: CurvatureTarget) -> np.ndarray:
    u = _as_u(state, ops.mesh.vertex_count)
    return _residual(ops, u, target.k, target.c)


def _jacobian(ops, u, k, c) -> sp.csr_matrix:
    diag = -2 * k * ops.interior_mass * np.exp(2 * u) - c * ops.boundary_mass * np.exp(u)
    return (ops.stiffness + sp.diags(diag)).tocsr()


def jacobian(ops: DiscreteOperators, state, target: CurvatureTarget) -> sp.csr_matrix:
    u = _as_u(state, ops.mesh.vertex_count)
    return _jacobian(ops, u, target.k, target.c)


def _energy(ops, u, k, c) -> float:
    terms = np.concatenate([
        0.5 * u * (ops.stiffness @ u),
        (ops.integrated_gauss + ops.integrated_geodesic) * u,
        -0.5 * k * ops.interior_mass * np.exp(2 * u),
        -c * ops.boundary_mass * np.exp(u),
    ])
    return math.fsum(terms)


def discrete_energy(ops: DiscreteOperators, state, target: CurvatureTarget) -> float:
    """Functional whose gradient is the nodal residual; convex for k, c <= 0."""
    u = _as_u(state, ops.mesh.vertex_count)
    return _energy(ops, u, target.k, target.c)


# -- Newton ------------------------------------------------------------------

def _check_surface(ops: DiscreteOperators, target: CurvatureTarget) -> None:
    if not target.admissible:
        raise InadmissibleTarget(f"(k, c) = ({target.k}, {target.c}) is not admissible")
    if ops.chi >= 0:
        # with k, c <= 0 Gauss-Bonnet forces 2*pi*chi <= 0, and the c > 0 regime is
        # only established for chi < 0
        raise InadmissibleTarget(f"surface has chi = {ops.chi}; prescribed-curvature solves need chi < 0")


def _newton(ops, u0, k, c, opts: SolverOptions, line_search: str) -> SolveReport:
    tol = opts.tolerance(ops)
    cap = opts.blowup_factor * ops.base_length
    u = np.array(u0, dtype=float)
    F = _residual(ops, u, k, c)
    fnorm = np.abs(F).max()
    energies = [_energy(ops, u, k, c)] if line_search == "energy-descent" else []
    it = 0
    while fnorm > tol and it < opts.max_newton_iters:
        it += 1
        J = _jacobian(ops, u, k, c)
        try:
            d = splu(J.tocsc()).solve(-F)
        except RuntimeError as exc:  # exactly singular factor
            raise NonConvergence(f"singular Jacobian at iteration {it}: {exc}") from exc
        if not np.all(np.isfinite(d)):
            raise NonConvergence(f"non-finite Newton step at iteration {it}")

        u, F, fnorm, accepted = _line_search(ops, u, F, d, k, c, line_search, energies)
        if not accepted:
            break
        _, length = conformal_measures(ops, u)
        if length > cap:
            raise NearBlowup(
                f"boundary length {length:.3e} exceeds {opts.blowup_factor:.0e} x base length at "
                f"(k, c) = ({k}, {c})", length=length, c=c)

    if fnorm <= tol:
        # one extra full step takes the quadratically converging iterate to roundoff
        try:
            d = splu(_jacobian(ops, u, k, c).tocsc()).solve(-F)
            Fp = _residual(ops, u + d, k, c)
            if np.all(np.isfinite(Fp)) and np.abs(Fp).max() < fnorm:
                u, F, fnorm = u + d, Fp, np.abs(Fp).max()
                if energies:
                    energies.append(_energy(ops, u, k, c))
        except RuntimeError:
            pass

    area, length = conformal_measures(ops, u)
    report = SolveReport(k, c, ConformalState(u), it, float(fnorm), area, length,
                         bool(fnorm <= tol), energy_history=energies)
    log.debug("newton (k=%g, c=%g): %d iters, |F|=%.3e", k, c, it, fnorm)
    return report


def _line_search(ops, u, F, d, k, c, mode, energies):
    """Backtracking along the Newton direction.

    Returns the new (u, F, |F|_inf, accepted). Energy descent needs a descent
    direction (J positive definite); otherwise it falls back to the residual
    merit function.
    """
    phi0 = 0.5 * float(F @ F)
    slope = float(F @ d)
    use_energy = mode == "energy-descent" and slope < 0
    E0 = energies[-1] if energies else None
    alpha = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        while alpha > 1e-12:
            trial = u + alpha * d
            Ft = _residual(ops, trial, k, c)
            if np.all(np.isfinite(Ft)):
                phit = 0.5 * float(Ft @ Ft)
                if use_energy:
                    Et = _energy(ops, trial, k, c)
                    # near convergence energy changes sink below rounding of E itself
                    resolvable = abs(alpha * slope) > 1e-13 * (1.0 + abs(E0))
                    ok = (Et <= E0 + 1e-4 * alpha * slope) if resolvable else (phit < phi0 or phit == 0.0)
                    if ok:
                        energies.append(Et)
                        return trial, Ft, np.abs(Ft).max(), True
                elif phit <= (1 - 2e-4 * alpha) * phi0 or phit == 0.0:
                    if energies:
                        energies.append(_energy(ops, trial, k, c))
                    return trial, Ft, np.abs(Ft).max(), True
            alpha *= 0.5
    return u, F, np.abs(F).max(), False


def solve(ops: DiscreteOperators, target: CurvatureTarget, init=None,
          opts: SolverOptions | None = None) -> SolveReport:
    """Solve for the conformal metric with curvatures (target.k, target.c).

    For c <= 0 the problem is convex and Newton with backtracking converges
    from any start. For c > 0 a warm start is tried directly with energy
    descent; cold starts, or warm starts that fail, go through continuation
    in c from 0.
    """
    opts = opts or SolverOptions()
    _check_surface(ops, target)
    n = ops.mesh.vertex_count
    u0 = np.zeros(n) if init is None else _as_u(init, n)
    if target.c > 0:
        if init is not None:
            try:
                rep = _newton(ops, u0, target.k, target.c,
                              replace(opts, line_search="energy-descent"), "energy-descent")
                if rep.converged:
                    return rep
            except (NonConvergence, NearBlowup):
                pass
        return continuation_solve(ops, target, opts)
    rep = _newton(ops, u0, target.k, target.c, opts, opts.line_search)
    if not rep.converged:
        raise NonConvergence(
            f"no convergence at (k, c) = ({target.k}, {target.c}) after {rep.iterations} "
            f"iterations, residual {rep.residual_inf_norm:.3e}", report=rep)
    return rep


def continuation_solve(ops: DiscreteOperators, target: CurvatureTarget,
                       opts: SolverOptions | None = None, init=None) -> SolveReport:
    """Reach c > 0 by warm-started solves along c = 0, h, 2h, ... at fixed k."""
    opts = opts or SolverOptions()
    _check_surface(ops, target)
    if not (target.k < 0 and target.c > 0):
        raise InadmissibleTarget("continuation needs k < 0 and 0 < c < sqrt(-k)")
    k, c_goal = target.k, target.c
    h_max = opts.continuation_step_c * math.sqrt(-k)
    ed = replace(opts, line_search="energy-descent")

    rep = solve(ops, CurvatureTarget(k, 0.0), init, opts)
    c_cur, h, steps = 0.0, h_max, 0
    while c_cur < c_goal:
        c_next = min(c_goal, c_cur + h)
        try:
            nxt = _newton(ops, rep.state.u, k, c_next, ed, "energy-descent")
            ok = nxt.converged
        except (NonConvergence, NearBlowup) as exc:
            if isinstance(exc, NearBlowup) and h <= h_max / 64:
                raise NearBlowup(f"{exc} (last converged c = {c_cur})", length=exc.length, c=c_cur)
            ok = False
        if ok:
            rep, c_cur, steps = nxt, c_next, steps + 1
            h = min(h_max, 2 * h)
            continue
        h /= 2
        if h < h_max / 64:
            raise NonConvergence(
                f"continuation stalled at c = {c_cur} on the way to {c_goal} (k = {k})",
                report=rep, last_c=c_cur)
    rep.continuation_steps = steps
    return rep


def solve_linearized(ops: DiscreteOperators, base: SolveReport, target: CurvatureTarget | None = None) -> np.ndarray:
    """Derivative du/dc of the solution branch at fixed k.

    Solves J(u) w = b with b = B e^{u} on the boundary, i.e. minus the
    c-derivative of the residual.
    """
    target = target or base.target
    if not base.converged:
        raise ValueError("linearization needs a converged base solve")
    u = base.state.u
    J = _jacobian(ops, u, target.k, target.c)
    b = ops.boundary_mass * np.exp(u)
    try:
        w = splu(J.tocsc()).solve(b)
    except RuntimeError as exc:
        raise SolverError(f"singular linearized operator at ({target.k}, {target.c})") from exc
    return w


def length_derivative(ops: DiscreteOperators, base: SolveReport, w: np.ndarray | None = None) -> float:
    """dL/dc = sum over the boundary of B e^{u} w."""
    if w is None:
        w = solve_linearized(ops, base)
    b = ops.mesh.boundary_loop
    u = base.state.u
    return math.fsum(ops.boundary_mass[b] * np.exp(u[b]) * w[b])
