from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import ProblemParams, gradient_values, hessian_values
from .errors import NotTangentError, OffSphereError, ZeroFieldError
from .grid import Field, check_same_grid

SPHERE_RTOL = 1e-8
TANGENT_RTOL = 1e-6


@dataclass(frozen=True, slots=True)
class SphereOps:
    """Operations on the mass sphere ``S_c = {u : ||u||^2 = c}``."""

    params: ProblemParams

    def __post_init__(self) -> None:
        if self.params.c <= 0:
            raise ValueError("sphere mass must be positive")

    @property
    def c(self) -> float:
        return self.params.c

    def _mass(self, values: np.ndarray) -> float:
        return self.params.grid.cell_volume * float(np.vdot(values, values))

    def _inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.params.grid.cell_volume * float(np.vdot(u, v))

    def normalize_values(self, values: np.ndarray) -> np.ndarray:
        mass = self._mass(values)
        if mass <= 0.0 or not math.isfinite(mass):
            raise ZeroFieldError("cannot normalize a zero field")
        return values * math.sqrt(self.c / mass)

    def normalize(self, u: Field) -> Field:
        check_same_grid(self.params.grid, u)
        return Field(u.grid, self.normalize_values(u.values))

    def on_sphere(self, u: Field, rtol: float = SPHERE_RTOL) -> bool:
        return abs(self._mass(u.values) - self.c) <= rtol * self.c

    def _require_on_sphere(self, values: np.ndarray) -> None:
        mass = self._mass(values)
        if abs(mass - self.c) > SPHERE_RTOL * self.c:
            raise OffSphereError(f"field mass {mass:.12g} is off the sphere c={self.c:.12g}")

    def project_values(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v - (self._inner(u, v) / self.c) * u

    def project_tangent(self, u: Field, v: Field) -> Field:
        check_same_grid(self.params.grid, u, v)
        self._require_on_sphere(u.values)
        return Field(u.grid, self.project_values(u.values, v.values))

    def rayleigh_multiplier(self, u: Field) -> float:
        """lambda with ``gradient(u) + lambda u`` tangent at u."""
        g = gradient_values(self.params, u.values)
        return -self._inner(g, u.values) / self.c

    def constrained_gradient(self, u: Field) -> Field:
        check_same_grid(self.params.grid, u)
        self._require_on_sphere(u.values)
        g = gradient_values(self.params, u.values)
        return Field(u.grid, self.project_values(u.values, g))

    def residual(self, u: Field) -> float:
        r = self.constrained_gradient(u).values
        return math.sqrt(self._mass(r))

    def d2_form(self, u: Field, v: Field) -> float:
        check_same_grid(self.params.grid, u, v)
        self._require_on_sphere(u.values)
        vv = self._inner(v.values, v.values)
        overlap = abs(self._inner(u.values, v.values))
        if overlap > TANGENT_RTOL * math.sqrt(self.c * vv):
            raise NotTangentError(f"direction is not tangent: |<u,v>|={overlap:.3g}")
        hv = hessian_values(self.params, u.values, v.values)
        g = gradient_values(self.params, u.values)
        return self._inner(hv, v.values) - (self._inner(g, u.values) / self.c) * vv
