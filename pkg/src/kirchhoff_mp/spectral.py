"""Dirichlet eigenpairs and the constrained Morse index.

Both routines hand ARPACK's Lanczos iteration (``scipy.sparse.linalg.eigsh``)
matrix-free operators. The exact DST inverse of the shifted Laplacian serves
as the shift-invert operator for the eigenpairs and as the mass-matrix
inverse for the Morse problem.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .energy import ProblemParams, hessian_values
from .errors import ConvergenceError
from .grid import DirichletSolver, Field, Grid, laplacian_values
from .types import SolutionRecord

logger = logging.getLogger(__name__)

MAX_EIGS = 10
MORSE_WINDOW = 6


@dataclass(slots=True)
class EigenPair:
    value: float
    vector: Field


@dataclass(slots=True)
class MorseReport:
    index: int
    theta: float
    eigenvalues: list[float] = field(default_factory=list)
    norm: str = "h1"
    saturated: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "theta": self.theta,
            "eigenvalues": list(self.eigenvalues),
            "norm": self.norm,
            "saturated": self.saturated,
        }


def _start_vector(n: int) -> np.ndarray:
    # fixed, with components along every symmetry class
    return np.random.default_rng(20240607).uniform(0.5, 1.5, size=n)


def _orient(vec: np.ndarray) -> np.ndarray:
    return -vec if vec[int(np.argmax(np.abs(vec)))] < 0 else vec


def dirichlet_eigs(g: Grid, k: int, *, tol: float = 0.0, maxiter: int | None = None) -> list[EigenPair]:
    if not 1 <= k <= MAX_EIGS:
        raise ValueError(f"k must be in [1, {MAX_EIGS}], got {k}")
    if k >= g.size - 1:
        raise ValueError("grid too small for the requested number of eigenpairs")
    n = g.size
    solver = DirichletSolver(g)

    def neg_lap(x: np.ndarray) -> np.ndarray:
        return -laplacian_values(np.asarray(x).reshape(g.shape), g.h).ravel()

    def inverse(x: np.ndarray) -> np.ndarray:
        return solver.solve_values(np.asarray(x).reshape(g.shape)).ravel()

    op = LinearOperator((n, n), matvec=neg_lap, dtype=float)
    op_inv = LinearOperator((n, n), matvec=inverse, dtype=float)
    try:
        values, vectors = eigsh(
            op, k=k, sigma=0.0, which="LM", OPinv=op_inv, v0=_start_vector(n), tol=tol, maxiter=maxiter
        )
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge for k={k}: {exc}") from exc

    order = np.argsort(values)
    pairs = []
    for idx in order:
        vec = _orient(vectors[:, idx])
        vec = vec / np.sqrt(g.cell_volume * float(vec @ vec))
        pairs.append(EigenPair(value=float(values[idx]), vector=Field(g, vec)))
    logger.debug("dirichlet eigenvalues %s", [p.value for p in pairs])
    return pairs


class _TangentOperators:
    """Projected second-order form and H1 mass on the tangent space at u."""

    def __init__(self, params: ProblemParams, record: SolutionRecord):
        self.params = params
        self.grid = params.grid
        self.u = np.array(record.u.flat)
        self.uu = float(self.u @ self.u)
        self.lam = record.lambda_
        self.solver = DirichletSolver(self.grid)
        coeff = params.a + params.b * record.e
        # parks the normal direction above the low window
        self.kappa = 2.0 * (params.a + 3.0 * params.b * record.e + abs(record.lambda_)) + coeff + 1.0
        self._s_inv_u = self.solver.solve_values(self.u.reshape(self.grid.shape), sigma=1.0).ravel()

    def normal_part(self, x: np.ndarray) -> float:
        return float(self.u @ x) / self.uu

    def project(self, x: np.ndarray) -> np.ndarray:
        return x - self.normal_part(x) * self.u

    def form(self, x: np.ndarray) -> np.ndarray:
        t = self.project(np.asarray(x).ravel())
        hv = hessian_values(self.params, self.u.reshape(self.grid.shape), t.reshape(self.grid.shape)).ravel()
        return self.project(hv + self.lam * t)

    def form_shifted(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x).ravel()
        return self.form(x) + self.kappa * self.normal_part(x) * self.u

    def mass(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x).ravel()
        t = self.project(x)
        s_t = t - laplacian_values(t.reshape(self.grid.shape), self.grid.h).ravel()
        return self.project(s_t) + self.normal_part(x) * self.u

    def mass_inverse(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w).ravel()
        wt = self.project(w)
        y = self.solver.solve_values(wt.reshape(self.grid.shape), sigma=1.0).ravel()
        tau = float(self.u @ y) / float(self.u @ self._s_inv_u)
        return (y - tau * self._s_inv_u) + self.normal_part(w) * self.u


def projected_form(params: ProblemParams, record: SolutionRecord) -> LinearOperator:
    """``v -> P(H_u v + lambda v)`` with P the tangent projection at ``record.u``."""
    ops = _TangentOperators(params, record)
    n = params.grid.size
    return LinearOperator((n, n), matvec=ops.form, dtype=float)


def morse_index(
    params: ProblemParams,
    record: SolutionRecord,
    theta: float = 0.0,
    *,
    window: int = MORSE_WINDOW,
    strict: bool = True,
) -> MorseReport:
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if strict:
        record.check()
    ops = _TangentOperators(params, record)
    n = params.grid.size
    a_op = LinearOperator((n, n), matvec=ops.form_shifted, dtype=float)
    m_op = LinearOperator((n, n), matvec=ops.mass, dtype=float)
    m_inv = LinearOperator((n, n), matvec=ops.mass_inverse, dtype=float)
    try:
        values = eigsh(
            a_op, k=window, M=m_op, Minv=m_inv, which="SA", v0=_start_vector(n), return_eigenvectors=False
        )
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Morse eigenproblem did not converge: {exc}") from exc
    values = sorted(float(v) for v in values)
    index = sum(1 for v in values if v < -theta)
    report = MorseReport(index=index, theta=float(theta), eigenvalues=values, saturated=index == window)
    logger.info("morse index %d at theta=%g, low spectrum %s", index, theta, values)
    return report
