"""Weak uniformization of triple junction surfaces.

Three surfaces with one boundary loop each are glued along a single curve.
Each component i contributes the strictly increasing function
c_hat_i(l) = l * c_i(l), where c_i(l) is the boundary curvature of the unique
hyperbolic metric in its conformal class with boundary length l. The common
length l0 is the root of sum_i c_hat_i(l); curvatures c_i(l0) then sum to zero.
"""

from __future__ import annotations

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atlas import LengthInverter, worker_count
from .disk import DiskParameter, disk_c, disk_c_hat, disk_length, rho_from_length
from .mesh import TriangleMesh, euler_characteristic, generate_double_torus_with_hole, \
    generate_torus_with_hole, load_mesh
from .operators import ConformalState, DiscreteOperators, build_operators
from .solver import NearBlowup, SolverError, SolverOptions


class TopologyError(ValueError):
    pass


class PositiveEulerCharacteristic(TopologyError):
    def __init__(self, msg, infimum=None):
        super().__init__(msg)
        self.infimum = infimum


@dataclass(frozen=True, eq=False)
class SurfaceComponent:
    kind: str  # "mesh" or "disk"
    ops: DiscreteOperators | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("mesh", "disk"):
            raise ValueError(f"unknown component kind {self.kind!r}")
        if self.kind == "mesh" and self.ops is None:
            raise ValueError("mesh component needs operators")

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh, name: str = "") -> "SurfaceComponent":
        return cls("mesh", build_operators(mesh), name)

    @classmethod
    def disk(cls, name: str = "") -> "SurfaceComponent":
        return cls("disk", None, name)

    @property
    def chi(self) -> int:
        return 1 if self.kind == "disk" else euler_characteristic(self.ops.mesh)

    @property
    def boundary_vertex_count(self) -> int | None:
        return None if self.ops is None else len(self.ops.mesh.boundary_loop)


@dataclass(frozen=True)
class TripleJunctionSpec:
    components: tuple
    junction_samples: int = 64

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != 3:
            raise ValueError("a triple junction has exactly three components")
        if self.junction_samples < 16:
            raise ValueError("junction_samples must be at least 16")
        if self.chi % 2 != 1:
            # each component has one boundary loop, so each chi is odd
            raise TopologyError(f"chi(M) = {self.chi} is even; components must have one boundary loop")

    @property
    def chi(self) -> int:
        return sum(c.chi for c in self.components)

    @property
    def all_disks(self) -> bool:
        return all(c.kind == "disk" for c in self.components)


@dataclass
class MatchResult:
    l0: float
    c: tuple
    states: list  # ConformalState, DiskParameter, or "hemisphere"
    correspondences: list  # per component: (junction_samples, 3) array of (t, segment, coord)
    k: float = -1.0
    lengths: tuple = ()
    areas: tuple = ()
    chi: tuple = ()
    root_residual: float = 0.0
    bracket_history: list = field(default_factory=list, repr=False)

    @property
    def curvature_sum(self) -> float:
        return math.fsum(self.c)

    def to_dict(self) -> dict:
        states = []
        for s in self.states:
            if isinstance(s, ConformalState):
                states.append({"kind": "mesh", "u": [float(x) for x in s.u]})
            elif isinstance(s, DiskParameter):
                states.append({"kind": "disk", "rho": s.rho})
            else:
                states.append({"kind": str(s)})
        return {
            "k": self.k,
            "l0": self.l0,
            "c": list(self.c),
            "c_sum": self.curvature_sum,
            "lengths": list(self.lengths),
            "areas": list(self.areas),
            "chi": list(self.chi),
            "root_residual": self.root_residual,
            "states": states,
            "correspondences": [[[float(t), int(s), float(x)] for t, s, x in corr]
                                for corr in self.correspondences],
        }


# -- per-component c_hat evaluation ---------------------------------------------

class _ComponentCurve:
    def __init__(self, comp: SurfaceComponent, opts: SolverOptions, rel_tol: float, init=None):
        self.comp = comp
        self.inv = None
        if comp.kind == "mesh":
            if comp.chi > 0:
                raise TopologyError(f"mesh component {comp.name!r} has chi = {comp.chi} > 0")
            self.inv = LengthInverter(comp.ops, opts, rel_tol=rel_tol, first_init=init)
        self.cache: dict[float, float] = {}

    def c_hat(self, l: float) -> float:
        if l not in self.cache:
            if self.inv is None:
                self.cache[l] = disk_c_hat(l)
            else:
                try:
                    c, _ = self.inv.invert(l)
                    self.cache[l] = l * c
                except NearBlowup:
                    # l exceeds every length reachable below c = 1, where c_hat -> +inf
                    self.cache[l] = math.inf
        return self.cache[l]

    def finish(self, l: float):
        """(c, state, realized length, area) at length l."""
        if self.inv is None:
            p = rho_from_length(l)
            return disk_c(l), p, disk_length(p), 4 * math.pi * p.rho / (1 - p.rho)
        c, rep = self.inv.invert(l)
        return c, rep.state, rep.boundary_length, rep.area


def _curves(spec, opts, rel_tol, inits=None):
    # identical component objects share one cache
    shared = {}
    curves = []
    for i, comp in enumerate(spec.components):
        if id(comp) not in shared:
            init = None if inits is None else inits[i]
            shared[id(comp)] = _ComponentCurve(comp, opts, rel_tol, init)
        curves.append(shared[id(comp)])
    return curves


def _total(curves, l):
    uniq = list({id(c): c for c in curves}.values())
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(uniq))) as pool:
        vals = dict(zip([id(c) for c in uniq], pool.map(lambda cv: cv.c_hat(l), uniq)))
    return math.fsum(vals[id(c)] for c in curves)


def match_junction(spec: TripleJunctionSpec, opts: SolverOptions | None = None, *,
                   bracket_scale: tuple[float, float] = (1.0, 1.0), inits=None,
                   rel_tol: float = 1e-10, max_bisections: int = 200) -> MatchResult:
    """Common boundary length l0 and curvatures c_i with c_1 + c_2 + c_3 = 0, at k = -1."""
    opts = opts or SolverOptions()
    chi_m = spec.chi
    if chi_m > 0:
        if spec.all_disks:
            raise PositiveEulerCharacteristic(
                "chi(M) = 3: sum of c_hat exceeds 6 pi for every length; use all_disk_case",
                infimum=6 * math.pi)
        raise PositiveEulerCharacteristic(
            f"chi(M) = {chi_m} > 0 with a non-disk component: no hyperbolic weak uniformization "
            f"(sum of c_hat is bounded below by {2 * math.pi * chi_m:.6g})",
            infimum=2 * math.pi * chi_m)
    curves = _curves(spec, opts, rel_tol, inits)

    bases = [c.ops.base_length for c in spec.components if c.kind == "mesh"]
    l_mid = float(np.mean(bases)) if bases else 2 * math.pi
    l_lo, l_hi = l_mid * bracket_scale[0], l_mid * bracket_scale[1]
    f_lo = _total(curves, l_lo)
    while f_lo > 0:
        l_lo /= 2
        f_lo = _total(curves, l_lo)
        if l_lo < 1e-12 * l_mid:
            raise SolverError("no sign change found below the starting length")
    f_hi = _total(curves, l_hi)
    while f_hi < 0:
        l_hi *= 2
        f_hi = _total(curves, l_hi)
        if l_hi > 1e12 * l_mid:
            raise SolverError("no sign change found above the starting length")

    scale = 1 + abs(2 * math.pi * chi_m)
    history = [(l_lo, l_hi, f_lo, f_hi)]
    l0, f0 = (l_lo, f_lo) if abs(f_lo) <= abs(f_hi) else (l_hi, f_hi)
    for _ in range(max_bisections):
        if abs(f0) <= 1e-12 * scale or (l_hi - l_lo) <= 1e-12 * l_hi:
            break
        mid = 0.5 * (l_lo + l_hi)
        fm = _total(curves, mid)
        if fm < 0:
            l_lo, f_lo = mid, fm
        else:
            l_hi, f_hi = mid, fm
        history.append((l_lo, l_hi, f_lo, f_hi))
        l0, f0 = mid, fm

    finals = [cv.finish(l0) for cv in curves]
    cs = tuple(float(f[0]) for f in finals)
    states = [f[1] for f in finals]
    lengths = tuple(float(f[2]) for f in finals)
    areas = tuple(float(f[3]) for f in finals)
    corr = [boundary_correspondence(comp, st, spec.junction_samples)
            for comp, st in zip(spec.components, states)]
    return MatchResult(l0, cs, states, corr, -1.0, lengths, areas,
                       tuple(c.chi for c in spec.components), float(f0), history)


def all_disk_case(spec: TripleJunctionSpec) -> MatchResult:
    """Three disks: hemispheres glued along their equators (k = +1, geodesic boundary)."""
    if not spec.all_disks:
        raise TopologyError("all_disk_case needs three disk components")
    n = spec.junction_samples
    t = np.arange(n) / n
    corr = [np.stack([t, -np.ones(n), 2 * math.pi * t], axis=1) for _ in range(3)]
    return MatchResult(2 * math.pi, (0.0, 0.0, 0.0), ["hemisphere"] * 3, corr, 1.0,
                       (2 * math.pi,) * 3, (2 * math.pi,) * 3, (1, 1, 1), 0.0)


def boundary_correspondence(comp: SurfaceComponent, state, samples: int) -> np.ndarray:
    """Constant-speed map from the junction parameter t in [0, 1) to the boundary.

    Rows are (t, segment, coord). For meshes, segment i is the boundary edge
    from loop[i] to loop[i+1] and coord is the barycentric position along it;
    the map starts at loop[0] and follows the mesh orientation. For disks,
    segment is -1 and coord is the polar angle.
    """
    t = np.arange(samples) / samples
    if comp.kind == "disk":
        return np.stack([t, -np.ones(samples), 2 * math.pi * t], axis=1)
    mesh = comp.ops.mesh
    loop = mesh.boundary_loop
    eu = np.exp(state.u[loop])
    seg = mesh.boundary_edge_lengths() * 0.5 * (eu + np.roll(eu, -1))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = t * cum[-1]
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    coord = (s - cum[idx]) / seg[idx]
    return np.stack([t, idx.astype(float), coord], axis=1)


def uniqueness_probe(spec: TripleJunctionSpec, result: MatchResult, n_perturb: int,
                     opts: SolverOptions | None = None, seed: int = 42) -> float:
    """Rerun the matcher from randomized brackets and initial states; max relative change in l0."""
    if n_perturb < 1:
        raise ValueError("n_perturb must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_perturb):
        scale = tuple(sorted(rng.uniform(0.25, 4.0, size=2)))
        inits = [None if c.kind == "disk" else rng.uniform(-1, 1, c.ops.mesh.vertex_count)
                 for c in spec.components]
        other = match_junction(spec, opts, bracket_scale=scale, inits=inits)
        worst = max(worst, abs(other.l0 - result.l0) / result.l0)
    return worst


# -- compatibility ------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryMetric:
    """Geodesic curvature density along a boundary, sampled at arclength fractions."""

    length: float
    positions: np.ndarray  # increasing, in [0, 1)
    curvature: np.ndarray

    @classmethod
    def constant(cls, c: float, length: float) -> "BoundaryMetric":
        return cls(float(length), np.array([0.0]), np.array([float(c)]))

    @classmethod
    def from_state(cls, ops: DiscreteOperators, state, k: float = 0.0) -> "BoundaryMetric":
        """Lumped geodesic curvature of e^{2u} g at the boundary vertices.

        Uses the boundary rows of the curvature equation, so a solution with
        constant curvatures (k, c) reads back exactly c.
        """
        u = state.u if isinstance(state, ConformalState) else np.asarray(state)
        loop = ops.mesh.boundary_loop
        num = (ops.stiffness @ u)[loop] + ops.integrated_geodesic[loop] \
            - k * ops.interior_mass[loop] * np.exp(2 * u[loop])
        dens = num / (ops.boundary_mass[loop] * np.exp(u[loop]))
        eu = np.exp(u[loop])
        seg = ops.mesh.boundary_edge_lengths() * 0.5 * (eu + np.roll(eu, -1))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return cls(float(cum[-1]), cum[:-1] / cum[-1], dens)

    def at(self, t: np.ndarray) -> np.ndarray:
        if len(self.positions) == 1:
            return np.full_like(np.asarray(t, dtype=float), self.curvature[0])
        return np.interp(t, self.positions, self.curvature, period=1.0)


def check_compatibility(spec: TripleJunctionSpec, metrics) -> float:
    """max_t |sum_i kappa_i(t)| over the junction samples.

    ``metrics`` is a MatchResult or three BoundaryMetric objects.
    """
    if isinstance(metrics, MatchResult):
        metrics = [BoundaryMetric.constant(c, l) for c, l in zip(metrics.c, metrics.lengths)]
    metrics = list(metrics)
    if len(metrics) != 3:
        raise ValueError("need one boundary metric per component")
    lens = [m.length for m in metrics]
    if max(lens) - min(lens) > 1e-6 * max(lens):
        raise ValueError(f"unequal boundary lengths {lens}; match lengths before comparing curvature")
    t = np.arange(spec.junction_samples) / spec.junction_samples
    total = sum(m.at(t) for m in metrics)
    return float(np.abs(total).max())


# -- spec files ----------------------------------------------------------------------

def _component_from_section(name, sec, base_dir: Path) -> SurfaceComponent:
    kind = sec.get("kind", "").strip()
    if kind == "disk":
        return SurfaceComponent.disk(name)
    if kind != "mesh":
        raise ValueError(f"[{name}] kind must be mesh or disk")
    if "path" in sec:
        p = Path(sec["path"])
        return SurfaceComponent.from_mesh(load_mesh(p if p.is_absolute() else base_dir / p), name)
    gen = sec.get("generator", "torus")
    if gen == "torus":
        mesh = generate_torus_with_hole(
            sec.getfloat("major_radius", 2.0), sec.getfloat("minor_radius", 0.7),
            sec.getint("nu", 24), sec.getint("nv", 12), sec.getint("hole_faces", 6))
    elif gen == "double_torus":
        mesh = generate_double_torus_with_hole(
            sec.getfloat("major_radius", 2.0), sec.getfloat("minor_radius", 0.7),
            sec.getint("nu", 16), sec.getint("nv", 8))
    else:
        raise ValueError(f"[{name}] unknown generator {gen!r}")
    return SurfaceComponent.from_mesh(mesh, name)


def load_spec(path) -> TripleJunctionSpec:
    """Read a key-value spec file: a [junction] section and three component sections.

    Components given by identical settings share one SurfaceComponent (and so
    one solve cache).
    """
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not cp.read(path):
        raise ValueError(f"cannot read spec file {path}")
    samples = cp.getint("junction", "junction_samples", fallback=64)
    built: dict = {}
    comps = []
    for name in cp.sections():
        if name == "junction":
            continue
        sec = cp[name]
        key = tuple(sorted((k, v) for k, v in sec.items()))
        if key not in built:
            built[key] = _component_from_section(name, sec, path.parent)
        comps.append(built[key])
    return TripleJunctionSpec(tuple(comps), samples)
