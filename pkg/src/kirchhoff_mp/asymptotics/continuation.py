"""Parameter continuation of mountain-pass solutions in rho, b and c.

Every step first tries a bordered Newton solve warm-started from the previous
accepted solution. The warm record is kept only if it passes the record checks
and sits on the mountain-pass branch: level at least c beta and Morse index at
least 1. Otherwise the step runs the full mountain-pass solve. A step that
fails both ways is logged and skipped; the next step starts from the last
success.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..energy import ProblemParams
from ..errors import ConvergenceError, InvariantViolation, KirchhoffError
from ..geometry import GeometryCertificate, GNEstimate, certify_geometry
from ..grid import Field, Grid, h1_norm_sq
from ..solve import SolverConfig, mountain_pass_solve, mountain_pass_violations, refine_newton
from ..spectral import morse_index
from ..types import SolutionRecord
from .blowup import BlowupProfile, blowup_diagnose
from .soliton import SolitonProfile, solve_soliton

logger = logging.getLogger(__name__)

LEVEL_SLACK = 1e-6
TREND_POINTS = 3

STEP_COLUMNS = [
    "param",
    "status",
    "warm_start",
    "level",
    "lambda",
    "e",
    "b_e",
    "morse",
    "residual",
    "constraint",
    "multiplier_identity",
    "energy_identity",
    "lambda_consistency",
    "h1_dist_prev",
    "h1_dist_limit",
]
BLOWUP_COLUMNS = ["sup_distance", "finite_e_distance", "e2_over_lambda", "predicted_ratio", "ratio_gap", "decay_rate"]


def h1_distance(u: Field, v: Field) -> float:
    return math.sqrt(h1_norm_sq(u.grid, u - v))


@dataclass(slots=True)
class ContinuationStep:
    param: float
    record: SolutionRecord | None = None
    warm_start: bool = False
    morse: int | None = None
    h1_dist_prev: float | None = None
    h1_dist_limit: float | None = None
    blowup: BlowupProfile | None = None
    error: str | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.record is not None and self.error is None

    def row(self, with_blowup: bool = False) -> list[Any]:
        rec = self.record
        defects = rec.defects if rec is not None else {}
        row = [
            self.param,
            "ok" if self.ok else "failed",
            int(self.warm_start),
            None if rec is None else rec.level,
            None if rec is None else rec.lambda_,
            None if rec is None else rec.e,
            None if rec is None else rec.b * rec.e,
            self.morse,
            None if rec is None else rec.residual,
            defects.get("constraint"),
            defects.get("multiplier_identity"),
            defects.get("energy_identity"),
            defects.get("lambda_consistency"),
            self.h1_dist_prev,
            self.h1_dist_limit,
        ]
        if with_blowup:
            blow = self.blowup
            row += [None if blow is None else getattr(blow, name) for name in BLOWUP_COLUMNS]
        return row

    def to_dict(self) -> dict[str, Any]:
        return {
            "param": self.param,
            "ok": self.ok,
            "warm_start": self.warm_start,
            "morse": self.morse,
            "h1_dist_prev": self.h1_dist_prev,
            "h1_dist_limit": self.h1_dist_limit,
            "error": self.error,
            "violations": list(self.violations),
            "record": None if self.record is None else self.record.to_dict(),
            "blowup": None if self.blowup is None else self.blowup.to_dict(),
        }


@dataclass(slots=True)
class ContinuationRecord:
    axis: str
    steps: list[ContinuationStep] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    anomalies: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [s.param for s in self.steps]

    def accepted(self) -> list[ContinuationStep]:
        return [s for s in self.steps if s.ok]

    def rows(self) -> tuple[list[str], list[list[Any]]]:
        with_blowup = any(s.blowup is not None for s in self.steps)
        names = [self.axis] + STEP_COLUMNS[1:] + (BLOWUP_COLUMNS if with_blowup else [])
        return names, [s.row(with_blowup) for s in self.steps]

    def to_dict(self) -> dict[str, Any]:
        return {
            "axis": self.axis,
            "values": self.values,
            "violations": list(self.violations),
            "anomalies": list(self.anomalies),
            "summary": dict(self.summary),
            "steps": [s.to_dict() for s in self.steps],
        }


def _check(record: SolutionRecord, cert: GeometryCertificate, params: ProblemParams) -> None:
    failed = mountain_pass_violations(record, cert, params)
    if failed:
        raise InvariantViolation(f"solution record fails: {', '.join(failed)}", names=failed)


def _solve_step(
    params: ProblemParams,
    cert: GeometryCertificate,
    cfg: SolverConfig,
    start: tuple[Field, float] | None,
    morse_theta: float | None = None,
) -> tuple[SolutionRecord, bool]:
    if start is not None:
        u0, lam0 = start
        try:
            record = refine_newton(params, u0, lam0, cfg)
            failed = mountain_pass_violations(record, cert, params)
            if not failed and morse_theta is not None:
                record.morse_index = morse_index(params, record, morse_theta).index
                if record.morse_index == 0:
                    failed = ["morse_index_zero"]
        except ConvergenceError as exc:
            logger.info("warm start failed (%s); running the full mountain-pass solve", exc)
        else:
            if not failed:
                return record, True
            logger.info(
                "warm start landed on a record failing %s (level %.6g, lambda %.6g); running the full solve",
                failed,
                record.level,
                record.lambda_,
            )
    record, _ = mountain_pass_solve(params, cert, cfg)
    return record, False


def _run(
    axis: str,
    values: list[float],
    make_params: Callable[[float], ProblemParams],
    make_cert: Callable[[ProblemParams], GeometryCertificate],
    cfg: SolverConfig,
    *,
    morse_theta: float | None,
    warm_start: Callable[[SolutionRecord, ProblemParams], tuple[Field, float] | None] | None = None,
    diagnose: Callable[[ProblemParams, SolutionRecord], BlowupProfile | None] | None = None,
) -> ContinuationRecord:
    out = ContinuationRecord(axis=axis)
    last: SolutionRecord | None = None
    for value in values:
        step = ContinuationStep(param=float(value))
        out.steps.append(step)
        try:
            params = make_params(value)
            cert = make_cert(params)
            start = None
            if last is not None:
                start = warm_start(last, params) if warm_start else (last.u, last.lambda_)
            record, warm = _solve_step(params, cert, cfg, start, morse_theta)
            _check(record, cert, params)
            step.record, step.warm_start = record, warm
            if morse_theta is not None:
                if record.morse_index is None:
                    record.morse_index = morse_index(params, record, morse_theta).index
                step.morse = record.morse_index
                _check(record, cert, params)
            if diagnose is not None:
                step.blowup = diagnose(params, record)
        except KirchhoffError as exc:
            step.error = str(exc)
            if isinstance(exc, InvariantViolation):
                step.violations = list(exc.names)
            logger.warning("%s=%g: step failed: %s", axis, value, exc)
            continue
        if last is not None and last.u.grid == record.u.grid:
            step.h1_dist_prev = h1_distance(record.u, last.u)
            if step.h1_dist_prev > cfg.jump_threshold:
                note = f"{axis}={value:g}: H1 jump {step.h1_dist_prev:.4g} exceeds {cfg.jump_threshold:g}"
                logger.warning(note)
                out.anomalies.append(note)
        logger.info(
            "%s=%g: level=%.12g lambda=%.10g e=%.10g%s",
            axis,
            value,
            record.level,
            record.lambda_,
            record.e,
            " (warm)" if step.warm_start else "",
        )
        last = record

    failed = [s for s in out.steps if not s.ok]
    if len(failed) == len(out.steps):
        raise ConvergenceError(f"every {axis} continuation step failed; first error: {failed[0].error}")
    if failed:
        out.violations.append("step_failure")
        for s in failed:
            out.violations += [name for name in s.violations if name not in out.violations]
    return out


def _levels_nonincreasing(steps: list[ContinuationStep]) -> bool:
    levels = [s.record.level for s in steps]
    return all(b <= a + LEVEL_SLACK for a, b in zip(levels[:-1], levels[1:]))


def _strictly_decreasing(values: list[float]) -> bool:
    return all(b < a for a, b in zip(values[:-1], values[1:]))


def continue_rho(
    params: ProblemParams,
    cert: GeometryCertificate,
    rho_grid: list[float],
    cfg: SolverConfig | None = None,
    *,
    morse_theta: float | None = 0.0,
) -> ContinuationRecord:
    """Levels along an ascending rho grid in [1/2, 1]; they must not increase."""
    cfg = cfg or SolverConfig()
    grid = [float(r) for r in rho_grid]
    if not grid:
        raise ValueError("rho_grid is empty")
    if any(r < 0.5 or r > 1.0 for r in grid):
        raise ValueError("rho_grid must lie in [1/2, 1]")
    if any(b < a for a, b in zip(grid[:-1], grid[1:])):
        raise ValueError("rho_grid must be ascending")

    out = _run("rho", grid, lambda rho: params.with_(rho=rho), lambda _: cert, cfg, morse_theta=morse_theta)
    accepted = out.accepted()
    monotone = _levels_nonincreasing(accepted)
    if not monotone:
        out.violations.append("level_monotonicity")
        logger.warning("mountain-pass levels increase along the rho grid")
    out.summary = {"levels_nonincreasing": monotone, "accepted": len(accepted), "steps": len(out.steps)}
    return out


def fit_convergence_order(params_: list[float], distances: list[float]) -> dict[str, Any] | None:
    """Least-squares ``log d = log C + q log b`` over the positive pairs."""
    pairs = [(x, d) for x, d in zip(params_, distances) if x is not None and d is not None and x > 0 and d > 0]
    if len(pairs) < 2:
        return None
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    order, log_c = np.polyfit(x, y, 1)
    return {"order": float(order), "constant": float(math.exp(log_c)), "points": len(pairs)}


def continue_b(
    params: ProblemParams,
    cert: GeometryCertificate,
    b_grid: list[float],
    cfg: SolverConfig | None = None,
    *,
    morse_theta: float | None = 0.0,
) -> ContinuationRecord:
    """Descend b to 0; the b = 0 record solves the local problem directly."""
    cfg = cfg or SolverConfig()
    grid = [float(b) for b in b_grid]
    if not grid:
        raise ValueError("b_grid is empty")
    if any(b < 0.0 for b in grid) or not _strictly_decreasing(grid):
        raise ValueError("b_grid must be strictly descending and nonnegative")
    if grid[-1] != 0.0:
        raise ValueError("b_grid must end at 0")

    out = _run("b", grid, lambda b: params.with_(b=b), lambda _: cert, cfg, morse_theta=morse_theta)
    accepted = out.accepted()
    monotone = _levels_nonincreasing(accepted)
    if not monotone:
        out.violations.append("level_monotonicity")
        logger.warning("mountain-pass levels increase as b decreases")

    limit = out.steps[-1]
    fit = None
    tail_monotone = None
    if limit.ok:
        for step in accepted:
            step.h1_dist_limit = h1_distance(step.record.u, limit.record.u)
        positive = [s for s in accepted if s.param > 0.0]
        fit = fit_convergence_order([s.param for s in positive], [s.h1_dist_limit for s in positive])
        tail = [s.h1_dist_limit for s in positive[-TREND_POINTS:]]
        tail_monotone = len(tail) == TREND_POINTS and _strictly_decreasing(tail)
    else:
        out.anomalies.append("b=0 limit step failed; no distances to the limit")

    # the two regimes of the vanishing-b analysis: b e settling down or growing
    products = [s.record.b * s.record.e for s in accepted if s.param > 0.0][-TREND_POINTS:]
    if len(products) >= 2:
        regime = "bounded" if all(b <= a for a, b in zip(products[:-1], products[1:])) else "growing"
    else:
        regime = None
    out.summary = {
        "levels_nonincreasing": monotone,
        "accepted": len(accepted),
        "steps": len(out.steps),
        "convergence_fit": fit,
        "limit_distance_tail_decreasing": tail_monotone,
        "b_e_regime": regime,
    }
    return out


def continue_c(
    params: ProblemParams,
    c_grid: list[float],
    cfg: SolverConfig | None = None,
    *,
    grids: list[Grid] | None = None,
    soliton: SolitonProfile | None = None,
    radius: float = 3.0,
    morse_theta: float | None = 0.0,
    exploratory: bool = False,
    seed: int = 0,
    threads: int = 1,
    gn_trials: int = 260,
    boundary_samples: int = 120,
    gn: GNEstimate | None = None,
) -> ContinuationRecord:
    """Mass sweep toward concentration, certifying the geometry at every c.

    ``grids`` gives one grid per mass so the concentrating solution stays
    resolved; a step on a new grid gets its own Gagliardo-Nirenberg estimate
    and starts from the full mountain-pass solve. ``gn`` belongs to
    ``params.grid``.
    """
    cfg = cfg or SolverConfig()
    masses = [float(c) for c in c_grid]
    if not masses or any(c <= 0.0 for c in masses):
        raise ValueError("c_grid must be nonempty and positive")
    if len(set(masses)) != len(masses):
        raise ValueError("c_grid entries must be distinct")
    if params.b <= 0.0:
        raise ValueError("the mass sweep compares against the soliton of coefficient b and needs b > 0")
    grids = list(grids) if grids is not None else [params.grid] * len(masses)
    if len(grids) != len(masses):
        raise ValueError(f"need one grid per mass, got {len(grids)} grids for {len(masses)} masses")
    if any(g.dim != params.dim for g in grids):
        raise ValueError("every grid must have the dimension of params.grid")
    soliton = soliton or solve_soliton(params.b, params.p, params.dim)
    estimates: dict[Grid, GNEstimate] = {} if gn is None else {params.grid: gn}
    grid_for = dict(zip(masses, grids))

    def make_cert(p: ProblemParams) -> GeometryCertificate:
        cert = certify_geometry(
            p,
            exploratory=exploratory,
            seed=seed,
            threads=threads,
            gn_trials=gn_trials,
            boundary_samples=boundary_samples,
            gn=estimates.get(p.grid),
        )
        estimates[p.grid] = cert.gn
        return cert

    def diagnose(p: ProblemParams, record: SolutionRecord) -> BlowupProfile | None:
        if record.lambda_ <= 0.0:
            logger.warning("c=%g: lambda=%.6g is not positive, no blow-up rescaling", p.c, record.lambda_)
            return None
        return blowup_diagnose(p, record, soliton, radius)

    def rescale(last: SolutionRecord, p: ProblemParams) -> tuple[Field, float] | None:
        if last.u.grid != p.grid:
            logger.info("c=%g: grid refined to n=%s, no warm start", p.c, p.grid.n)
            return None
        return last.u * math.sqrt(p.c / last.c), last.lambda_

    out = _run(
        "c",
        masses,
        lambda c: params.with_(c=c, grid=grid_for[c]),
        make_cert,
        cfg,
        morse_theta=morse_theta,
        warm_start=rescale,
        diagnose=diagnose,
    )
    profiles = [s.blowup for s in out.accepted() if s.blowup is not None]
    lambdas = [b.bounds["lambda"] for b in profiles]
    gaps = [b.ratio_gap for b in profiles[-TREND_POINTS:]]
    sups = [b.sup_distance for b in profiles[-TREND_POINTS:]]
    out.summary = {
        "accepted": len(out.accepted()),
        "steps": len(out.steps),
        "lambda_decades": math.log10(max(lambdas) / min(lambdas)) if lambdas else None,
        "ratio_gap_decreasing": len(gaps) == TREND_POINTS and None not in gaps and _strictly_decreasing(gaps),
        "soliton_distance_decreasing": len(sups) == TREND_POINTS and _strictly_decreasing(sups),
        "boundary_anomalies": sum(1 for b in profiles if b.boundary_anomaly),
        "multi_peak": sum(1 for b in profiles if b.local_maxima > 1),
    }
    for b in profiles:
        if b.boundary_anomaly:
            out.anomalies.append(f"maximum on the boundary ring at {b.P}")
    return out
