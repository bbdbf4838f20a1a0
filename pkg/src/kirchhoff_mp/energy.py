"""Kirchhoff energy family and its derivatives.

    J_rho(u) = a/2 e + b/4 e^2 - rho/p * int |u|^p,   e = int |grad u|^2

The nonlocal coefficient ``a + b e`` is recomputed from ``u`` on every call.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any

import numpy as np

from .grid import Field, Grid, grad_values_sq, laplacian_values, check_same_grid


@dataclass(frozen=True, slots=True)
class ProblemParams:
    a: float
    b: float
    c: float
    p: float
    rho: float
    grid: Grid

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.b < 0:
            raise ValueError(f"b must be nonnegative, got {self.b}")
        if self.c <= 0:
            raise ValueError(f"mass c must be positive, got {self.c}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        check_exponent(self.p, self.grid.dim)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def with_(self, **changes: Any) -> "ProblemParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {"a": self.a, "b": self.b, "c": self.c, "p": self.p, "rho": self.rho, "grid": self.grid.to_dict()}


def check_exponent(p: float, dim: int) -> None:
    lower = 2.0 + 8.0 / dim
    if p <= lower:
        raise ValueError(f"p={p} is not mass supercritical in dimension {dim} (need p > {lower:.6g})")
    if dim >= 3 and p >= 2.0 * dim / (dim - 2):
        raise ValueError(f"p={p} is Sobolev critical or above in dimension {dim}")


@dataclass(slots=True)
class EnergyReport:
    e: float
    J: float
    Jrho: float
    lp: float

    def to_dict(self) -> dict[str, float]:
        return {"e": self.e, "J": self.J, "Jrho": self.Jrho, "lp": self.lp}


def power_term(values: np.ndarray, p: float) -> np.ndarray:
    """``|u|^(p-2) u`` without touching fractional powers of negatives."""
    return np.sign(values) * np.abs(values) ** (p - 1.0)


def energy_values(params: ProblemParams, values: np.ndarray) -> EnergyReport:
    g = params.grid
    e = grad_values_sq(values, g.h)
    lp = g.cell_volume * float(np.sum(np.abs(values) ** params.p))
    kinetic = 0.5 * params.a * e + 0.25 * params.b * e * e
    return EnergyReport(e=e, J=kinetic - lp / params.p, Jrho=kinetic - params.rho * lp / params.p, lp=lp)


def energy(params: ProblemParams, u: Field) -> EnergyReport:
    check_same_grid(params.grid, u)
    return energy_values(params, u.values)


def gradient_values(params: ProblemParams, values: np.ndarray) -> np.ndarray:
    h = params.grid.h
    coeff = params.a + params.b * grad_values_sq(values, h)
    return -coeff * laplacian_values(values, h) - params.rho * power_term(values, params.p)


def gradient(params: ProblemParams, u: Field) -> Field:
    check_same_grid(params.grid, u)
    return Field(u.grid, gradient_values(params, u.values))


def hessian_values(params: ProblemParams, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    g = params.grid
    lap_u = laplacian_values(u, g.h)
    coeff = params.a + params.b * grad_values_sq(u, g.h)
    # int grad u . grad v, evaluated as <v, -Delta u>
    cross = -g.cell_volume * float(np.vdot(v, lap_u))
    nonlinear = params.rho * (params.p - 1.0) * np.abs(u) ** (params.p - 2.0)
    return -coeff * laplacian_values(v, g.h) - 2.0 * params.b * cross * lap_u - nonlinear * v


def hessian_apply(params: ProblemParams, u: Field, v: Field) -> Field:
    check_same_grid(params.grid, u, v)
    return Field(u.grid, hessian_values(params, u.values, v.values))
