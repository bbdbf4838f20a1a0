"""Explicit mountain-pass geometry on the mass sphere.

The certificate computes the first Dirichlet eigenpair, an empirical
Gagliardo-Nirenberg constant, the mass threshold ``cstar``, the radius
``alpha0`` of the separating set ``{||grad u||^2 = c alpha0}``, the level
``c beta`` on it, and the path endpoints ``w1`` (a compressed eigenfunction
inside the set) and ``w2`` (a concentrated bump outside it with negative
energy). Each inequality is checked numerically and its margin recorded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize
from scipy.interpolate import RegularGridInterpolator

from .energy import ProblemParams, energy_values
from .errors import CertificateViolation, GeometryNotCertified, ZeroFieldError
from .grid import DirichletSolver, Field, Grid, grad_values_sq
from .pool import map_ordered
from .spectral import dirichlet_eigs
from .sphere import SphereOps
from .types import PathState

logger = logging.getLogger(__name__)

GN_SAFETY = 2.0
MIN_GN_TRIALS = 200
MIN_BOUNDARY_SAMPLES = 100
MIN_PATH_SAMPLES = 17


def gn_exponents(dim: int, p: float) -> tuple[float, float]:
    """(mass exponent, gradient exponent) of the Gagliardo-Nirenberg bound."""
    return (2.0 * dim - p * (dim - 2.0)) / 4.0, dim * (p - 2.0) / 4.0


def gn_ratio(params: ProblemParams, values: np.ndarray) -> float:
    g = params.grid
    mass = g.cell_volume * float(np.vdot(values, values))
    e = grad_values_sq(values, g.h)
    if mass <= 0.0 or e <= 0.0:
        return 0.0
    theta_mass, theta_grad = gn_exponents(g.dim, params.p)
    lp = g.cell_volume * float(np.sum(np.abs(values) ** params.p))
    return lp / (mass**theta_mass * e**theta_grad)


def bump(r2: np.ndarray) -> np.ndarray:
    """exp(-1/(1-|x|^2)) on the unit ball, zero outside."""
    inside = r2 < 1.0
    out = np.zeros_like(r2, dtype=float)
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def _bump_values(grid: Grid, center: tuple[float, ...], radius: float) -> np.ndarray:
    r2 = sum((x - x0) ** 2 for x, x0 in zip(grid.mesh(), center)) / radius**2
    return bump(r2)


def _smooth_random(solver: DirichletSolver, rng: np.random.Generator, decay: float) -> np.ndarray:
    grid = solver.grid
    index = sum(np.meshgrid(*[np.arange(1, k + 1) for k in grid.n], indexing="ij"))
    coeffs = rng.standard_normal(grid.shape) / index.astype(float) ** decay
    return solver.backward(coeffs)


@dataclass(slots=True)
class GNEstimate:
    Cp: float
    theta_mass: float
    theta_grad: float
    max_ratio: float
    trials: int
    width_factor: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "Cp": self.Cp,
            "theta_mass": self.theta_mass,
            "theta_grad": self.theta_grad,
            "max_ratio": self.max_ratio,
            "trials": self.trials,
            "width_factor": self.width_factor,
        }


def _gn_trial_fields(
    params: ProblemParams, phi1: Field, rng: np.random.Generator, trials: int
) -> tuple[list[np.ndarray], int]:
    grid = params.grid
    solver = DirichletSolver(grid)
    half = min(grid.extents) / 2.0
    n_width = max(1, int(0.3 * trials))
    n_offset = max(1, int(0.15 * trials))
    n_power = max(1, int(0.15 * trials))
    n_random = max(1, trials - n_width - n_offset - n_power)

    fields: list[np.ndarray] = []
    for radius in np.geomspace(half, half / 100.0, n_width):
        fields.append(_bump_values(grid, grid.center, float(radius)))
    for _ in range(n_offset):
        radius = float(rng.uniform(0.02, 0.5)) * half
        center = tuple(float(rng.uniform(radius, L - radius)) for L in grid.extents)
        fields.append(_bump_values(grid, center, radius))
    base = np.clip(phi1.values, 0.0, None)
    for q in np.linspace(1.0, 8.0, n_power):
        fields.append(base**q)
    for _ in range(n_random):
        fields.append(_smooth_random(solver, rng, float(rng.uniform(1.0, 3.0))))
    return fields, n_width


def estimate_gn_constant(
    params: ProblemParams,
    *,
    seed: int = 0,
    threads: int = 1,
    trials: int = 260,
    phi1: Field | None = None,
) -> GNEstimate:
    if trials < MIN_GN_TRIALS:
        raise ValueError(f"need at least {MIN_GN_TRIALS} trial fields, got {trials}")
    if phi1 is None:
        phi1 = dirichlet_eigs(params.grid, 1)[0].vector
    rng = np.random.default_rng(seed)
    fields, n_width = _gn_trial_fields(params, phi1, rng, trials)
    ratios = map_ordered(lambda v: gn_ratio(params, v), fields, threads)
    width_ratios = [r for r in ratios[:n_width] if r > 0.0]
    theta_mass, theta_grad = gn_exponents(params.dim, params.p)
    max_ratio = max(ratios)
    estimate = GNEstimate(
        Cp=GN_SAFETY * max_ratio,
        theta_mass=theta_mass,
        theta_grad=theta_grad,
        max_ratio=max_ratio,
        trials=len(fields),
        width_factor=max(width_ratios) / min(width_ratios) if width_ratios else 1.0,
    )
    logger.info("GN estimate Cp=%.6g over %d trials (width factor %.4g)", estimate.Cp, estimate.trials, estimate.width_factor)
    return estimate


def mass_threshold(params: ProblemParams, lambda1: float, Cp: float) -> float:
    """cstar: the largest mass for which alpha0 >= 4 lambda1."""
    dim, p = params.dim, params.p
    k = params.a * p / (2.0 * Cp)
    return (8.0 * lambda1) ** ((dim * (p - 2.0) - 4.0) / (2.0 * (2.0 - p))) * k ** (2.0 / (p - 2.0))


def separating_radius(params: ProblemParams, Cp: float, c: float | None = None) -> float:
    """alpha0(c); the separating set is ``{||grad u||^2 = c alpha0}``."""
    dim, p = params.dim, params.p
    mass = params.c if c is None else c
    d = dim * (p - 2.0) - 4.0
    k = params.a * p / (2.0 * Cp)
    return 0.5 * k ** (4.0 / d) * mass ** (2.0 * (2.0 - p) / d)


@dataclass(slots=True)
class GeometryCertificate:
    params: ProblemParams
    lambda1: float
    phi1: Field
    Cp: float
    alpha0: float
    beta: float
    cstar: float
    w1: Field
    w2: Field
    k0: float
    x1: tuple[float, ...]
    gn: GNEstimate
    w1_alpha: float
    margins: dict[str, float] = field(default_factory=dict)
    boundary_samples: int = 0
    certified: bool = True
    violations: list[str] = field(default_factory=list)

    @property
    def c_beta(self) -> float:
        return self.params.c * self.beta

    def level_floor(self, params: ProblemParams | None = None) -> float:
        """Lower bound ``c beta`` on the mountain-pass level of ``params``.

        alpha0 does not depend on b or rho, so the bound is re-evaluated for
        the b of ``params``; for rho below 1 the rho = 1 bound still holds.
        """
        if params is None:
            return self.c_beta
        alpha0 = separating_radius(params, self.Cp)
        return params.c * (0.25 * params.a * alpha0 + 0.25 * params.b * params.c * alpha0**2)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda1": self.lambda1,
            "Cp": self.Cp,
            "alpha0": self.alpha0,
            "beta": self.beta,
            "c_beta": self.c_beta,
            "cstar": self.cstar,
            "c": self.params.c,
            "k0": self.k0,
            "x1": list(self.x1),
            "w1_alpha": self.w1_alpha,
            "gn": self.gn.to_dict(),
            "margins": dict(self.margins),
            "boundary_samples": self.boundary_samples,
            "certified": self.certified,
            "violations": list(self.violations),
        }


def scaled_eigenfunction(params: ProblemParams, phi1: Field, lambda1: float, alpha: float) -> Field:
    """phi_alpha: phi1 compressed about the domain centre by sqrt(alpha/lambda1), mass c."""
    grid = params.grid
    s = math.sqrt(alpha / lambda1)
    if s < 1.0:
        raise ValueError("phi_alpha needs alpha >= lambda1 so its support stays inside the domain")
    interp = RegularGridInterpolator(
        grid.padded_axes(), phi1.padded(), method="cubic", bounds_error=False, fill_value=0.0
    )
    mapped = [x0 + s * (x - x0) for x, x0 in zip(grid.mesh(), grid.center)]
    points = np.stack([m.ravel() for m in mapped], axis=-1)
    values = np.clip(interp(points), 0.0, None).reshape(grid.shape)
    values *= math.sqrt(params.c) * (alpha / lambda1) ** (grid.dim / 4.0)
    return SphereOps(params).normalize(Field(grid, values))


def _concentrated_bump(params: ProblemParams, alpha0: float) -> tuple[Field, float]:
    grid = params.grid
    sphere = SphereOps(params)
    half = min(grid.extents) / 2.0
    k = 2.0 ** math.ceil(math.log2(1.0 / half))
    finest = 2.0 / min(grid.h)
    half_rho = params.with_(rho=0.5)
    while True:
        raw = math.sqrt(params.c) * k ** (grid.dim / 2.0) * _bump_values(grid, grid.center, 1.0 / k)
        w2 = sphere.normalize(Field(grid, raw))
        report = energy_values(half_rho, w2.values)
        if report.e > 2.0 * params.c * alpha0 and report.Jrho < 0.0:
            return w2, k
        if k > finest:
            raise CertificateViolation("w2_construction", margin=-report.Jrho)
        k *= 2.0


def _tau_family_root(coeffs: np.ndarray, symbol: np.ndarray, target: float) -> float | None:
    """tau with Rayleigh quotient of ``coeffs * symbol**tau`` equal to target.

    The quotient is nondecreasing in tau, from the lowest to the highest
    active mode.
    """
    power = coeffs**2
    active = power > 0.0
    if not np.any(active):
        return None
    logw = np.log(power[active])
    logmu = np.log(symbol[active])
    mu = symbol[active]

    def gap(tau: float) -> float:
        z = logw + 2.0 * tau * logmu
        w = np.exp(z - z.max())
        return float(np.sum(w * mu) / np.sum(w)) - target

    lo, hi = -1.0, 1.0
    for _ in range(12):
        if gap(lo) < 0.0 < gap(hi):
            return float(optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14))
        lo, hi = 2.0 * lo, 2.0 * hi
    return None


def _boundary_bases(solver: DirichletSolver, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    grid = solver.grid
    half = min(grid.extents) / 2.0
    bases = []
    for i in range(count):
        if i % 2 == 0:
            bases.append(_smooth_random(solver, rng, float(rng.uniform(0.5, 2.5))))
        else:
            radius = float(rng.uniform(0.05, 0.9)) * half
            center = tuple(float(rng.uniform(radius, L - radius)) for L in grid.extents)
            bases.append(_bump_values(grid, center, radius))
    return bases


def _boundary_sample(params: ProblemParams, solver: DirichletSolver, alpha0: float, base: np.ndarray) -> float | None:
    coeffs = solver.forward(base)
    tau = _tau_family_root(coeffs, solver.symbol, alpha0)
    if tau is None:
        return None
    logmu = np.log(solver.symbol)
    anchor = logmu.max() if tau > 0 else logmu.min()
    values = solver.backward(coeffs * np.exp(tau * (logmu - anchor)))
    try:
        values = SphereOps(params).normalize_values(values)
    except ZeroFieldError:
        return None
    return energy_values(params, values).J


def certify_geometry(
    params: ProblemParams,
    *,
    exploratory: bool = False,
    seed: int = 0,
    threads: int = 1,
    gn_trials: int = 260,
    boundary_samples: int = 120,
    gn: GNEstimate | None = None,
) -> GeometryCertificate:
    """Compute the mountain-pass constants for ``params`` and check every inequality.

    ``gn`` reuses a Gagliardo-Nirenberg estimate from an earlier call; it depends
    only on the grid and p, so mass sweeps pass it along.
    """
    if boundary_samples < MIN_BOUNDARY_SAMPLES:
        raise ValueError(f"need at least {MIN_BOUNDARY_SAMPLES} boundary samples")
    grid = params.grid
    c = params.c
    eig = dirichlet_eigs(grid, 1)[0]
    lambda1, phi1 = eig.value, eig.vector
    if gn is None:
        gn = estimate_gn_constant(params, seed=seed, threads=threads, trials=gn_trials, phi1=phi1)
    cstar = mass_threshold(params, lambda1, gn.Cp)
    if c > cstar and not exploratory:
        raise GeometryNotCertified(c, cstar)

    alpha0 = separating_radius(params, gn.Cp)
    beta = 0.25 * params.a * alpha0 + 0.25 * params.b * c * alpha0**2
    c_beta = c * beta

    w1_alpha = max(alpha0 / 4.0, lambda1)
    w1 = scaled_eigenfunction(params, phi1, lambda1, w1_alpha)
    w2, k0 = _concentrated_bump(params, alpha0)

    half_rho = params.with_(rho=0.5)
    w1_half = energy_values(half_rho, w1.values)
    w2_half = energy_values(half_rho, w2.values)

    rng = np.random.default_rng(seed + 1)
    solver = DirichletSolver(grid)
    # oversample: fields whose tau family cannot reach the target are dropped
    bases = _boundary_bases(solver, rng, 2 * boundary_samples)
    levels = [
        level
        for level in map_ordered(lambda base: _boundary_sample(params, solver, alpha0, base), bases, threads)
        if level is not None
    ][:boundary_samples]
    if len(levels) < MIN_BOUNDARY_SAMPLES:
        raise CertificateViolation("boundary_sampling", margin=float(len(levels)))

    scale = max(1.0, abs(c_beta))
    margins = {
        "alpha0_vs_4lambda1": alpha0 - 4.0 * lambda1,
        "w1_level": 0.5 * c_beta - w1_half.Jrho,
        "w2_level": -w2_half.Jrho,
        "w2_gradient": w2_half.e - 2.0 * c * alpha0,
        "boundary_infimum": min(levels) - c_beta,
    }
    violations = [
        name
        for name, margin in margins.items()
        if margin < 0.0 and not (name == "alpha0_vs_4lambda1" and margin >= -1e-12 * scale)
    ]
    cert = GeometryCertificate(
        params=params,
        lambda1=lambda1,
        phi1=phi1,
        Cp=gn.Cp,
        alpha0=alpha0,
        beta=beta,
        cstar=cstar,
        w1=w1,
        w2=w2,
        k0=k0,
        x1=grid.center,
        gn=gn,
        w1_alpha=w1_alpha,
        margins=margins,
        boundary_samples=len(levels),
        certified=not violations and c <= cstar,
        violations=violations,
    )
    if violations and not exploratory:
        worst = violations[0]
        raise CertificateViolation(worst, margin=margins[worst])
    for name in violations:
        logger.warning("exploratory run: certificate inequality %s fails (margin %.6g)", name, margins[name])
    logger.info("certified geometry: lambda1=%.8g cstar=%.6g alpha0=%.6g c*beta=%.6g", lambda1, cstar, alpha0, c_beta)
    return cert


def initial_path(cert: GeometryCertificate, m: int, params: ProblemParams | None = None) -> PathState:
    """Normalized straight segment from w1 to w2, energies under ``params``."""
    if m < MIN_PATH_SAMPLES:
        raise ValueError(f"path needs at least {MIN_PATH_SAMPLES} samples, got {m}")
    params = params or cert.params
    sphere = SphereOps(params)
    samples = [cert.w1]
    for t in np.linspace(0.0, 1.0, m)[1:-1]:
        mix = (1.0 - t) * cert.w1.values + t * cert.w2.values
        samples.append(Field(params.grid, sphere.normalize_values(mix)))
    samples.append(cert.w2)
    energies = [energy_values(params, s.values).Jrho for s in samples]
    return PathState.from_samples(samples, energies)
