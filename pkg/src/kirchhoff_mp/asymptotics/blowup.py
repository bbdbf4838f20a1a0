"""Concentration diagnostics for a converged solution.

Around the maximum point P the solution is rescaled as

    U(y) = A^-1 u(P + eps sqrt(e) y),   A = (lambda / rho)^(1/(p-2)),  eps = lambda^(-1/2)

and compared with the whole-space ground state. With a + b e in front of the
Laplacian the rescaled profile solves ``-(a/e + b) Delta U + U = U^(p-1)``
exactly, so two comparisons are reported: against the limit soliton of
coefficient b, and against the soliton of coefficient a/e + b.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from ..energy import ProblemParams
from ..errors import InvariantViolation
from ..geometry import bump
from ..grid import grad_values_sq, laplacian_values
from ..types import SolutionRecord
from .soliton import SolitonProfile

logger = logging.getLogger(__name__)

MAX_POINT_RTOL = 1e-6
DECAY_FLOOR = 1e-12
PEAK_FLOOR = 1e-3
SAMPLES_1D = 241
SAMPLES_2D = 61


@dataclass(slots=True)
class BlowupProfile:
    P: tuple[float, ...]
    P_index: tuple[int, ...]
    radius: float
    epsilon: float
    scale: float
    amplitude: float
    y: np.ndarray
    rescaled: np.ndarray
    soliton_values: np.ndarray
    sup_distance: float
    finite_e_distance: float
    decay_rate: float | None
    decay_constant: float | None
    decay_band: float
    max_point_margin: float
    boundary_anomaly: bool
    local_maxima: int
    e2_over_lambda: float
    predicted_ratio: float | None
    virial_ratio: float | None
    mass_ratio: float | None
    local_form: float | None
    boundary_ratio: float
    bounds: dict[str, float] = field(default_factory=dict)

    @property
    def ratio_gap(self) -> float | None:
        """Relative gap of e^2/lambda to 4c/(b(p-4))."""
        if self.predicted_ratio is None:
            return None
        return abs(self.e2_over_lambda - self.predicted_ratio) / self.e2_over_lambda

    def rows(self) -> tuple[list[str], list[list[float]]]:
        names = ["y", "y2"][: self.y.shape[1]] + ["u_rescaled", "u_soliton"]
        rows = [
            [*map(float, point), float(a), float(s)]
            for point, a, s in zip(self.y, self.rescaled, self.soliton_values)
        ]
        return names, rows

    def to_dict(self) -> dict[str, Any]:
        return {
            "P": list(self.P),
            "P_index": list(self.P_index),
            "radius": self.radius,
            "epsilon": self.epsilon,
            "scale": self.scale,
            "amplitude": self.amplitude,
            "sup_distance": self.sup_distance,
            "finite_e_distance": self.finite_e_distance,
            "decay_rate": self.decay_rate,
            "decay_constant": self.decay_constant,
            "decay_band": self.decay_band,
            "max_point_margin": self.max_point_margin,
            "boundary_anomaly": self.boundary_anomaly,
            "local_maxima": self.local_maxima,
            "e2_over_lambda": self.e2_over_lambda,
            "predicted_ratio": self.predicted_ratio,
            "virial_ratio": self.virial_ratio,
            "ratio_gap": self.ratio_gap,
            "mass_ratio": self.mass_ratio,
            "local_form": self.local_form,
            "boundary_ratio": self.boundary_ratio,
            "bounds": dict(self.bounds),
        }


def _sample_points(dim: int, radius: float) -> np.ndarray:
    if dim == 1:
        return np.linspace(-radius, radius, SAMPLES_1D).reshape(-1, 1)
    axis = np.linspace(-radius, radius, SAMPLES_2D)
    pts = np.stack([m.ravel() for m in np.meshgrid(axis, axis, indexing="ij")], axis=-1)
    return pts[np.linalg.norm(pts, axis=1) <= radius]


def count_local_maxima(values: np.ndarray, floor: float = PEAK_FLOOR) -> int:
    """Nodes not exceeded by any axis neighbour and above ``floor * max``."""
    footprint = ndimage.generate_binary_structure(values.ndim, 1)
    neighbourhood = ndimage.maximum_filter(values, footprint=footprint, mode="constant", cval=0.0)
    peaks = (values >= neighbourhood) & (values > floor * float(values.max()))
    return int(ndimage.label(peaks, structure=footprint)[1])


def _decay_fit(distance: np.ndarray, values: np.ndarray, amplitude: float, scale: float, radius: float):
    mask = (values > DECAY_FLOOR * float(values.max())) & (distance > radius * scale)
    if int(mask.sum()) < 3:
        return None, None
    slope, intercept = np.polyfit(distance[mask] / scale, np.log(values[mask] / amplitude), 1)
    return float(-slope), float(math.exp(intercept))


def _local_form(params: ProblemParams, record: SolutionRecord, distance: np.ndarray, cutoff: float) -> float | None:
    """Normalized ``(a+be)|grad phi|^2 + int (lambda - rho(p-1)u^(p-2)) phi^2`` for phi = chi u."""
    g = params.grid
    u = record.u.values
    phi = bump((distance / cutoff) ** 2) * u
    vol = g.cell_volume
    grad = grad_values_sq(phi, g.h)
    mass = vol * float(np.vdot(phi, phi))
    if mass + grad <= 0.0:
        return None
    potential = record.lambda_ - params.rho * (params.p - 1.0) * np.abs(u) ** (params.p - 2.0)
    value = (params.a + params.b * record.e) * grad + vol * float(np.sum(potential * phi**2))
    return value / (mass + grad)


def blowup_diagnose(
    params: ProblemParams,
    record: SolutionRecord,
    soliton: SolitonProfile,
    R: float = 3.0,
) -> BlowupProfile:
    if record.lambda_ <= 0.0:
        raise ValueError(f"blow-up rescaling needs lambda > 0, got {record.lambda_:.6g}")
    if params.rho <= 0.0:
        raise ValueError("blow-up rescaling needs rho > 0")
    if R <= 0.0:
        raise ValueError("R must be positive")
    g = params.grid
    u = record.u.values
    lam, e, p, c = record.lambda_, record.e, params.p, params.c

    idx = tuple(int(i) for i in np.unravel_index(int(np.argmax(u)), g.shape))
    P = tuple(float(axis[i]) for axis, i in zip(g.axes(), idx))
    boundary_anomaly = any(i in (0, k - 1) for i, k in zip(idx, g.n))
    if boundary_anomaly:
        logger.warning("maximum of u sits on the boundary ring at %s", P)

    threshold = (lam / params.rho) ** (1.0 / (p - 2.0))
    margin = float(u[idx]) - threshold
    curvature = float(laplacian_values(u, g.h)[idx])
    if curvature <= 0.0 and margin < -MAX_POINT_RTOL * threshold:
        raise InvariantViolation(
            f"u(P)={u[idx]:.12g} below (lambda/rho)^(1/(p-2))={threshold:.12g}",
            names=["max_point_inequality"],
        )

    epsilon = lam**-0.5
    scale = epsilon * math.sqrt(e)
    amplitude = threshold

    y = _sample_points(g.dim, R)
    points = np.asarray(P) + scale * y
    interp = RegularGridInterpolator(
        g.padded_axes(), record.u.padded(), method="linear", bounds_error=False, fill_value=0.0
    )
    rescaled = interp(points) / amplitude
    radii = np.linalg.norm(y, axis=1)
    soliton_values = soliton(radii)
    sup_distance = float(np.max(np.abs(rescaled - soliton_values)))
    finite = soliton.with_b(params.a / e + params.b)
    finite_e_distance = float(np.max(np.abs(rescaled - finite(radii))))

    distance = np.sqrt(sum((x - x0) ** 2 for x, x0 in zip(g.mesh(), P)))
    decay_rate, decay_constant = _decay_fit(distance, u, amplitude, scale, R)

    e2_over_lambda = e * e / lam
    predicted = 4.0 * c / (params.b * (p - 4.0)) if params.b > 0.0 and p > 4.0 else None
    gamma = g.dim * (p - 2.0) / (2.0 * p)
    virial = gamma * c / (params.b * (1.0 - gamma)) if params.b > 0.0 and gamma < 1.0 else None

    ball = distance <= R * scale
    scaled_mass = g.cell_volume * float(np.sum(u[ball] ** 2)) / (amplitude**2 * scale**g.dim)
    soliton_mass = soliton.ball_integral(R, 2.0)
    mass_ratio = scaled_mass / soliton_mass if soliton_mass > 0.0 else None

    to_boundary = min(min(x, L - x) for x, L in zip(P, g.extents))
    profile = BlowupProfile(
        P=P,
        P_index=idx,
        radius=float(R),
        epsilon=epsilon,
        scale=scale,
        amplitude=amplitude,
        y=y,
        rescaled=rescaled,
        soliton_values=soliton_values,
        sup_distance=sup_distance,
        finite_e_distance=finite_e_distance,
        decay_rate=decay_rate,
        decay_constant=decay_constant,
        decay_band=1.0 / (2.0 * math.sqrt(1.0 + params.b)),
        max_point_margin=margin,
        boundary_anomaly=boundary_anomaly,
        local_maxima=count_local_maxima(u),
        e2_over_lambda=e2_over_lambda,
        predicted_ratio=predicted,
        virial_ratio=virial,
        mass_ratio=mass_ratio,
        local_form=_local_form(params, record, distance, R * scale),
        boundary_ratio=scale / to_boundary,
        bounds={"lambda": lam, "e": e, "lp": record.lp, "level": record.level},
    )
    logger.info(
        "blow-up at P=%s: eps=%.4g scale=%.4g sup|U-Q|=%.3e e^2/lambda=%.6g (predicted %s)",
        P,
        epsilon,
        scale,
        sup_distance,
        e2_over_lambda,
        "n/a" if predicted is None else f"{predicted:.6g}",
    )
    return profile
