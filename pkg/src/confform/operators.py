"""Cotangent stiffness, lumped masses and angle-defect curvatures.

Curvatures are stored integrated per vertex, never as densities, so that

    sum(integrated_gauss) + sum(integrated_geodesic) == 2*pi*chi

holds as a combinatorial identity and the nodal residual of the curvature
equation sums to the discrete Gauss-Bonnet constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import MeshError, TriangleMesh, euler_characteristic


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """Discretization of the base metric on a fixed mesh.

    Per-vertex arrays have length V. ``boundary_mass`` and
    ``integrated_geodesic`` are zero at interior vertices; ``integrated_gauss``
    is zero at boundary vertices.
    """

    mesh: TriangleMesh
    stiffness: sp.csr_matrix
    interior_mass: np.ndarray
    boundary_mass: np.ndarray
    integrated_gauss: np.ndarray
    integrated_geodesic: np.ndarray
    corner_angles: np.ndarray  # (F, 3)
    triangle_areas: np.ndarray

    @property
    def chi(self) -> int:
        return euler_characteristic(self.mesh)

    @property
    def is_boundary(self) -> np.ndarray:
        return self.mesh.is_boundary

    @property
    def base_area(self) -> float:
        return math.fsum(self.interior_mass)

    @property
    def base_length(self) -> float:
        return math.fsum(self.boundary_mass)

    def gauss_bonnet_defect(self) -> float:
        total = math.fsum(self.integrated_gauss) + math.fsum(self.integrated_geodesic)
        return total - 2 * math.pi * self.chi

    def quality_report(self) -> dict:
        """Minimum angle and count of negative cotangent weights.

        Negative weights are allowed; they only mean the discrete maximum
        principle may fail on this mesh.
        """
        off = sp.triu(self.stiffness, k=1).tocoo()
        negative = int(np.sum(off.data > 0))  # weight w_ij = -S_ij
        return {
            "min_angle_deg": float(np.degrees(self.corner_angles.min())),
            "max_angle_deg": float(np.degrees(self.corner_angles.max())),
            "negative_weights": negative,
            "edges": int(self.mesh.edge_count),
        }


def _triangle_areas(la, lb, lc):
    # Kahan's stable Heron formula
    s = np.sort(np.stack([la, lb, lc], axis=1), axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def build_operators(mesh: TriangleMesh) -> DiscreteOperators:
    lengths = mesh.corner_lengths  # column k: edge opposite corner k
    areas = _triangle_areas(lengths[:, 0], lengths[:, 1], lengths[:, 2])
    mean = areas.mean()
    tiny = areas < 1e-14 * mean
    if tiny.any():
        f = int(np.flatnonzero(tiny)[0])
        raise MeshError(
            f"degenerate triangle {f}: area {areas[f]:.3e} below 1e-14 of mean {mean:.3e}; "
            f"vertices {mesh.triangles[f].tolist()}, lengths {lengths[f].tolist()}"
        )

    sq = lengths ** 2
    # b^2 + c^2 - a^2 for the corner opposite a
    num = sq[:, [1, 2, 0]] + sq[:, [2, 0, 1]] - sq
    angles = np.arctan2(4 * areas[:, None], num)
    cot = num / (4 * areas[:, None])

    t = mesh.triangles
    nv = mesh.vertex_count
    # edge opposite corner k joins corners k+1 and k+2
    i = t[:, [1, 2, 0]].ravel()
    j = t[:, [2, 0, 1]].ravel()
    w = 0.5 * cot.ravel()
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    stiffness = sp.csr_matrix((vals, (rows, cols)), shape=(nv, nv))
    stiffness.sum_duplicates()

    interior_mass = np.bincount(t.ravel(), weights=np.repeat(areas / 3, 3), minlength=nv)
    angle_sum = np.bincount(t.ravel(), weights=angles.ravel(), minlength=nv)

    bmask = mesh.is_boundary
    loop = mesh.boundary_loop
    blen = mesh.boundary_edge_lengths()
    boundary_mass = np.zeros(nv)
    boundary_mass[loop] += 0.5 * blen
    boundary_mass[np.roll(loop, -1)] += 0.5 * blen

    integrated_gauss = np.where(bmask, 0.0, 2 * math.pi - angle_sum)
    integrated_geodesic = np.where(bmask, math.pi - angle_sum, 0.0)

    return DiscreteOperators(mesh, stiffness, interior_mass, boundary_mass,
                             integrated_gauss, integrated_geodesic, angles, areas)


@dataclass(frozen=True)
class ConformalState:
    """Log conformal factor u per vertex: the metric is e^{2u} times the base."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ValueError("conformal factor must be a 1-d array")
        if not np.all(np.isfinite(u)):
            raise ValueError("conformal factor must be finite at every vertex")
        object.__setattr__(self, "u", u)

    @classmethod
    def zeros(cls, n: int) -> "ConformalState":
        return cls(np.zeros(n))

    def shifted(self, t: float) -> "ConformalState":
        return ConformalState(self.u + t)


def _as_u(state, n: int) -> np.ndarray:
    u = state.u if isinstance(state, ConformalState) else np.asarray(state, dtype=float)
    if u.shape != (n,):
        raise ValueError(f"state has shape {u.shape}, mesh has {n} vertices")
    return u


def conformal_measures(ops: DiscreteOperators, state) -> tuple[float, float]:
    """Area and boundary length of the metric e^{2u} g."""
    u = _as_u(state, ops.mesh.vertex_count)
    area = math.fsum(ops.interior_mass * np.exp(2 * u))
    b = ops.mesh.boundary_loop
    length = math.fsum(ops.boundary_mass[b] * np.exp(u[b]))
    return area, length
