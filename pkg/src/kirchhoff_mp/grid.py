"""Uniform tensor grids with homogeneous Dirichlet data.

All integrals use the nodal sum ``prod(h) * sum(values)``. With zero boundary
values this is the trapezoid rule, and it is the quadrature for which the
discrete gradient of the discrete energy is exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy import fft

from .errors import GridMismatchError

logger = logging.getLogger(__name__)

MIN_NODES = 16


@dataclass(frozen=True, slots=True)
class Grid:
    extents: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.extents) != len(self.n):
            raise ValueError("extents and n must have the same length")
        if len(self.n) not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {len(self.n)}")
        if any(L <= 0 for L in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")
        if any(k < MIN_NODES for k in self.n):
            raise ValueError(f"each axis needs at least {MIN_NODES} interior nodes, got {self.n}")
        object.__setattr__(self, "extents", tuple(float(L) for L in self.extents))
        object.__setattr__(self, "n", tuple(int(k) for k in self.n))

    @classmethod
    def interval(cls, length: float, n: int) -> "Grid":
        return cls(extents=(length,), n=(n,))

    @classmethod
    def rectangle(cls, lx: float, ly: float, nx: int, ny: int) -> "Grid":
        return cls(extents=(lx, ly), n=(nx, ny))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / (k + 1) for L, k in zip(self.extents, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(L / 2.0 for L in self.extents)

    def axes(self) -> list[np.ndarray]:
        return [step * np.arange(1, k + 1) for step, k in zip(self.h, self.n)]

    def padded_axes(self) -> list[np.ndarray]:
        """Node coordinates including the two boundary nodes per axis."""
        return [step * np.arange(0, k + 2) for step, k in zip(self.h, self.n)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def to_dict(self) -> dict[str, Any]:
        return {"dim": self.dim, "extent": list(self.extents), "n": list(self.n), "h": list(self.h)}


class Field:
    """Immutable grid function, zero on the boundary."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray):
        arr = np.array(values, dtype=float).reshape(grid.shape)
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        return cls(grid, fn(*grid.mesh()))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def padded(self) -> np.ndarray:
        return np.pad(self.values, 1)

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def __abs__(self) -> "Field":
        return Field(self.grid, np.abs(self.values))

    def __repr__(self) -> str:
        return f"Field(grid={self.grid.n}, max={float(np.max(np.abs(self.values))):.4g})"


def check_same_grid(g: Grid, *fields: Field) -> None:
    for f in fields:
        if f.grid != g:
            raise GridMismatchError(f"field on grid {f.grid.n} used with grid {g.n}")


def laplacian_values(values: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    padded = np.pad(values, 1)
    center = tuple(slice(1, -1) for _ in h)
    out = np.zeros(values.shape)
    for axis, step in enumerate(h):
        fwd = list(center)
        bwd = list(center)
        fwd[axis] = slice(2, None)
        bwd[axis] = slice(None, -2)
        out += (padded[tuple(fwd)] - 2.0 * values + padded[tuple(bwd)]) / step**2
    return out


def laplacian_apply(g: Grid, u: Field) -> Field:
    check_same_grid(g, u)
    return Field(g, laplacian_values(u.values, g.h))


def inner_l2(g: Grid, u: Field, v: Field) -> float:
    check_same_grid(g, u, v)
    return g.cell_volume * float(np.vdot(u.values, v.values))


def norm_l2_sq(g: Grid, u: Field) -> float:
    return inner_l2(g, u, u)


def grad_values_sq(values: np.ndarray, h: tuple[float, ...]) -> float:
    padded = np.pad(values, 1)
    total = 0.0
    for axis, step in enumerate(h):
        diffs = np.diff(padded, axis=axis) / step
        # keep the interior rows of every other axis; all n+1 edges of this one
        sel = tuple(slice(None) if k == axis else slice(1, -1) for k in range(len(h)))
        total += float(np.sum(diffs[sel] ** 2))
    return float(np.prod(h)) * total


def grad_norm_sq(g: Grid, u: Field) -> float:
    check_same_grid(g, u)
    return grad_values_sq(u.values, g.h)


def h1_norm_sq(g: Grid, u: Field) -> float:
    return norm_l2_sq(g, u) + grad_norm_sq(g, u)


def lp_integral(g: Grid, u: Field, q: float) -> float:
    if q < 1:
        raise ValueError(f"lp_integral needs q >= 1, got {q}")
    check_same_grid(g, u)
    return g.cell_volume * float(np.sum(np.abs(u.values) ** q))


class DirichletSolver:
    """Solves ``(alpha * (-Delta) + sigma) x = f`` in the discrete sine basis.

    The DST-I diagonalizes the Dirichlet Laplacian exactly, so this is the
    exact inverse of the shifted operator, not an approximation.
    """

    __slots__ = ("grid", "symbol")

    def __init__(self, grid: Grid):
        self.grid = grid
        parts = []
        for axis, (step, k) in enumerate(zip(grid.h, grid.n)):
            j = np.arange(1, k + 1)
            mu = (4.0 / step**2) * np.sin(np.pi * j / (2.0 * (k + 1))) ** 2
            shape = [1] * grid.dim
            shape[axis] = k
            parts.append(mu.reshape(shape))
        symbol = parts[0]
        for extra in parts[1:]:
            symbol = symbol + extra
        symbol = np.broadcast_to(symbol, grid.shape).copy()
        symbol.setflags(write=False)
        self.symbol = symbol

    def forward(self, values: np.ndarray) -> np.ndarray:
        return fft.dstn(values, type=1)

    def backward(self, coeffs: np.ndarray) -> np.ndarray:
        return fft.idstn(coeffs, type=1)

    def solve_values(self, rhs: np.ndarray, *, alpha: float = 1.0, sigma: float = 0.0) -> np.ndarray:
        denom = alpha * self.symbol + sigma
        if np.any(denom <= 0):
            raise ValueError("shifted Dirichlet operator is not positive definite")
        return self.backward(self.forward(rhs.reshape(self.grid.shape)) / denom)

    def solve(self, rhs: Field, *, alpha: float = 1.0, sigma: float = 0.0) -> Field:
        check_same_grid(self.grid, rhs)
        return Field(self.grid, self.solve_values(rhs.values, alpha=alpha, sigma=sigma))


def field_rows(u: Field) -> tuple[list[str], list[list[float]]]:
    """CSV layout ``x[,y],u`` over interior nodes."""
    g = u.grid
    names = ["x", "y"][: g.dim] + ["u"]
    coords = [axis.ravel() for axis in g.mesh()]
    rows = [[*(float(c[i]) for c in coords), float(u.flat[i])] for i in range(g.size)]
    return names, rows
