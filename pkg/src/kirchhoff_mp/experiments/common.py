from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Any

from ..config import RunConfig, build_params
from ..energy import ProblemParams
from ..geometry import GeometryCertificate, GNEstimate, certify_geometry, estimate_gn_constant, mass_threshold
from ..spectral import dirichlet_eigs
from ..types import SolutionRecord

logger = logging.getLogger(__name__)

# placeholder mass while c* is unknown; c* itself does not depend on c
UNIT_MASS = 1.0


def _stable_hash(parts: list[str]) -> str:
    payload = "|".join(parts).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:24]


@dataclass(slots=True)
class ResolvedProblem:
    params: ProblemParams
    gn: GNEstimate
    cstar: float
    lambda1: float

    def to_dict(self) -> dict[str, Any]:
        return {"params": self.params.to_dict(), "cstar": self.cstar, "lambda1": self.lambda1, "gn": self.gn.to_dict()}


def resolve_problem(cfg: RunConfig) -> ResolvedProblem:
    """Fix the mass, computing c* first when it is given as a fraction of c*."""
    unit = build_params(cfg, UNIT_MASS)
    eig = dirichlet_eigs(unit.grid, 1)[0]
    gn = estimate_gn_constant(
        unit, seed=cfg.seed, threads=cfg.threads, trials=cfg.solver.gn_trials, phi1=eig.vector
    )
    cstar = mass_threshold(unit, eig.value, gn.Cp)
    fraction = cfg.problem.c_fraction_of_cstar
    c = cfg.problem.c if fraction is None else fraction * cstar
    logger.info("c*=%.8g, running at c=%.8g", cstar, c)
    return ResolvedProblem(params=unit.with_(c=c), gn=gn, cstar=cstar, lambda1=eig.value)


def certify(cfg: RunConfig, resolved: ResolvedProblem) -> GeometryCertificate:
    return certify_geometry(
        resolved.params,
        exploratory=cfg.solver.exploratory,
        seed=cfg.seed,
        threads=cfg.threads,
        gn_trials=cfg.solver.gn_trials,
        boundary_samples=cfg.solver.boundary_samples,
        gn=resolved.gn,
    )


def morse_theta(cfg: RunConfig) -> float | None:
    return cfg.solver.morse.theta if cfg.solver.morse.enabled else None


def record_lines(record: SolutionRecord) -> list[str]:
    return [
        f"level: {record.level:.12g}",
        f"lambda: {record.lambda_:.12g}",
        f"e: {record.e:.12g}",
        f"residual: {record.residual:.3e}",
        f"morse_index: {record.morse_index}",
    ]
