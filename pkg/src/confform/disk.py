"""Closed forms for the hyperbolic disk family 4 rho |dz|^2 / (1 - rho |z|^2)^2.

For 0 < rho < 1 this metric on the unit disk has curvature -1, boundary length
4 pi sqrt(rho) / (1 - rho) and boundary geodesic curvature (1 + rho) / (2 sqrt(rho)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DiskParameter:
    rho: float

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


def _rho(rho) -> float:
    return rho.rho if isinstance(rho, DiskParameter) else DiskParameter(float(rho)).rho


def disk_length(rho) -> float:
    r = _rho(rho)
    return 4 * math.pi * math.sqrt(r) / (1 - r)


def disk_curvature(rho) -> float:
    r = _rho(rho)
    return (1 + r) / (2 * math.sqrt(r))


def disk_area(rho) -> float:
    # Gauss-Bonnet with k = -1: c_hat - A = 2 pi
    r = _rho(rho)
    return 4 * math.pi * r / (1 - r)


def rho_from_length(l: float) -> DiskParameter:
    """Invert disk_length: sqrt(rho) is the positive root of l s^2 + 4 pi s - l = 0."""
    if not l > 0:
        raise ValueError("length must be positive")
    # (sqrt(4 pi^2 + l^2) - 2 pi) / l, rewritten to avoid cancellation at small l
    s = l / (math.sqrt(4 * math.pi ** 2 + l * l) + 2 * math.pi)
    return DiskParameter(s * s)


def disk_c(l: float) -> float:
    """Boundary curvature of the hyperbolic disk with boundary length l; in (1, inf)."""
    return disk_curvature(rho_from_length(l))


def disk_c_hat(l: float) -> float:
    r = rho_from_length(l).rho
    return 2 * math.pi * (1 + r) / (1 - r)


def disk_c_hat_direct(l: float) -> float:
    """Same quantity via c_hat^2 - l^2 = 4 pi^2."""
    return math.sqrt(4 * math.pi ** 2 + l * l)


def disk_table(lengths) -> list[dict]:
    rows = []
    for l in lengths:
        p = rho_from_length(l)
        rows.append({"l": l, "rho": p.rho, "L": disk_length(p), "kappa": disk_curvature(p),
                     "c_hat": disk_c_hat(l)})
    return rows
