"""Mountain-pass solver: path deformation, climbing image, bordered Newton.

Descent directions are Sobolev gradients: the L2 gradient is preconditioned by
``(a + b e)(-Delta) + sigma`` (solved exactly with the DST) and then made
tangent to the sphere in that metric. Path samples move only across the path;
the motion along it is removed, and for the climbing image it is reflected.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .energy import ProblemParams, energy_values, gradient_values, hessian_values
from .errors import CertificateViolation, ConvergenceError, SingularJacobianError
from .geometry import GeometryCertificate, initial_path
from .grid import DirichletSolver, Field, grad_values_sq, laplacian_values
from .pool import map_ordered
from .sphere import SphereOps
from .types import PathState, SolutionRecord

logger = logging.getLogger(__name__)

QUADRATIC_STEPS = 3
NEWTON_QUADRATIC_BOUND = 1e6
LEVEL_FLOOR_RTOL = 1e-10


@dataclass(slots=True)
class SolverConfig:
    path_samples: int = 33
    path_step: float = 0.4
    path_max_sweeps: int = 5000
    path_tolerance: float = 1e-10
    residual_target: float = 1e-3
    max_samples: int = 129
    refine_fraction: float = 0.01
    reparam_ratio: float = 1.5
    climb_trigger: float = 1e-4
    max_backtracks: int = 30
    armijo: float = 1e-4
    newton_tol: float = 1e-10
    newton_max_iters: int = 50
    krylov_tol: float = 1e-10
    krylov_restart: int = 200
    krylov_max_cycles: int = 20
    jump_threshold: float = 1.0
    threads: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


class _Stepper:
    """Sobolev-preconditioned constrained steps for one parameter set."""

    def __init__(self, params: ProblemParams, cfg: SolverConfig):
        self.params = params
        self.cfg = cfg
        self.grid = params.grid
        self.vol = params.grid.cell_volume
        self.solver = DirichletSolver(params.grid)
        self.mu_min = float(self.solver.symbol.min())
        self.sphere = SphereOps(params)

    def _metric(self, u: np.ndarray, g: np.ndarray) -> tuple[float, float]:
        coeff = self.params.a + self.params.b * grad_values_sq(u, self.grid.h)
        lam = -float(np.vdot(g, u)) * self.vol / self.params.c
        return coeff, abs(lam) + coeff * self.mu_min

    def _apply_metric(self, x: np.ndarray, coeff: float, sigma: float) -> np.ndarray:
        return -coeff * laplacian_values(x, self.grid.h) + sigma * x

    def direction(self, u: np.ndarray, tangent: np.ndarray | None = None, reflect: bool = False):
        """(direction G, gradient g) with G tangent at u and <g, G> >= 0."""
        g = gradient_values(self.params, u)
        coeff, sigma = self._metric(u, g)
        pg = self.solver.solve_values(g, alpha=coeff, sigma=sigma)
        pu = self.solver.solve_values(u, alpha=coeff, sigma=sigma)
        G = pg - (float(np.vdot(pg, u)) / float(np.vdot(pu, u))) * pu
        if tangent is not None:
            t = self.sphere.project_values(u, tangent)
            tt = float(np.vdot(t, self._apply_metric(t, coeff, sigma)))
            if tt > 0.0:
                factor = 2.0 if reflect else 1.0
                G = G - factor * (float(np.vdot(g, t)) / tt) * t
        return G, g

    def descend(self, u: np.ndarray, energy0: float, tangent: np.ndarray | None) -> tuple[np.ndarray, float]:
        G, g = self.direction(u, tangent)
        slope = self.vol * float(np.vdot(g, G))
        if slope <= 0.0:
            return u, energy0
        tau = self.cfg.path_step
        for _ in range(self.cfg.max_backtracks):
            trial = self.sphere.normalize_values(u - tau * G)
            value = energy_values(self.params, trial).Jrho
            if value <= energy0 - self.cfg.armijo * tau * slope:
                return trial, value
            tau *= 0.5
        return u, energy0

    def climb(self, u: np.ndarray, tangent: np.ndarray) -> tuple[np.ndarray, float]:
        G, _ = self.direction(u, tangent, reflect=True)
        step = self.cfg.path_step * G
        size = math.sqrt(self.vol * float(np.vdot(step, step)))
        cap = 0.05 * math.sqrt(self.params.c)
        if size > cap:
            step *= cap / size
        trial = self.sphere.normalize_values(u - step)
        return trial, energy_values(self.params, trial).Jrho

    def residual(self, u: np.ndarray) -> float:
        """L2 norm of the tangent part of the gradient, not scaled by ||g||."""
        g = gradient_values(self.params, u)
        r = self.sphere.project_values(u, g)
        return math.sqrt(self.vol * float(np.vdot(r, r)))


def _redistribute(samples: list[np.ndarray], count: int, sphere: SphereOps, vol: float) -> list[np.ndarray]:
    """``count`` points equally spaced in L2 arclength along the polygon."""
    if count == len(samples) and count <= 2:
        return list(samples)
    gaps = [math.sqrt(vol * float(np.vdot(b - a, b - a))) for a, b in zip(samples[:-1], samples[1:])]
    arclength = np.concatenate([[0.0], np.cumsum(gaps)])
    total = arclength[-1]
    if total <= 0.0:
        return [samples[0]] * count
    out = [samples[0]]
    for target in np.linspace(0.0, total, count)[1:-1]:
        j = min(int(np.searchsorted(arclength, target, side="right")) - 1, len(gaps) - 1)
        w = (target - arclength[j]) / gaps[j] if gaps[j] > 0.0 else 0.0
        out.append(sphere.normalize_values((1.0 - w) * samples[j] + w * samples[j + 1]))
    out.append(samples[-1])
    return out


def _reparametrize(samples: list[np.ndarray], pinned: int, count: int, sphere: SphereOps, vol: float):
    """Equal arclength on each side of ``pinned``, keeping that sample in place."""
    left_count = max(2, round(pinned * (count - 1) / (len(samples) - 1)) + 1)
    left_count = min(left_count, count - 1)
    left = _redistribute(samples[: pinned + 1], left_count, sphere, vol)
    right = _redistribute(samples[pinned:], count - left_count + 1, sphere, vol)
    return left + right[1:], left_count - 1


def _spacing_ratio(samples: list[np.ndarray], vol: float) -> float:
    gaps = [math.sqrt(vol * float(np.vdot(b - a, b - a))) for a, b in zip(samples[:-1], samples[1:])]
    smallest = min(gaps)
    return math.inf if smallest <= 0.0 else max(gaps) / smallest


def equalize_path(params: ProblemParams, path: PathState) -> PathState:
    """Same endpoints and sample count, equal L2 spacing along the polygon."""
    sphere = SphereOps(params)
    values = _redistribute([s.values for s in path.samples], len(path.samples), sphere, params.grid.cell_volume)
    samples = [path.samples[0]] + [Field(params.grid, v) for v in values[1:-1]] + [path.samples[-1]]
    energies = [path.energies[0]] + [energy_values(params, v).Jrho for v in values[1:-1]] + [path.energies[-1]]
    return PathState.from_samples(
        samples, energies, sweeps=path.sweeps, max_history=list(path.max_history), resets=list(path.resets)
    )


def deform_path(
    params: ProblemParams,
    path: PathState,
    cfg: SolverConfig,
    *,
    climb: bool = False,
    c_beta: float | None = None,
) -> PathState:
    stepper = _Stepper(params, cfg)
    vol = stepper.vol
    values = [s.values for s in path.samples]
    m = len(values)
    k = path.argmax
    if k in (0, m - 1):
        raise CertificateViolation("path_endpoints")
    old_max = path.max_energy

    def step(i: int) -> tuple[np.ndarray, float]:
        tangent = values[i + 1] - values[i - 1]
        if climb and i == k:
            return stepper.climb(values[i], tangent)
        return stepper.descend(values[i], path.energies[i], tangent)

    moved = map_ordered(step, range(1, m - 1), cfg.threads)
    new_values = [values[0]] + [v for v, _ in moved] + [values[-1]]
    energies = [path.energies[0]] + [e for _, e in moved] + [path.energies[-1]]
    resets = list(path.resets)
    pinned = k if climb else int(np.argmax(energies))

    slack = cfg.path_tolerance * max(1.0, abs(old_max))
    if _spacing_ratio(new_values, vol) > cfg.reparam_ratio and 0 < pinned < m - 1:
        candidate, _ = _reparametrize(new_values, pinned, m, stepper.sphere, vol)
        cand_energies = [energy_values(params, v).Jrho for v in candidate]
        # reparametrization must not raise the path maximum
        if climb or max(cand_energies) <= max(energies) + slack:
            new_values, energies = candidate, cand_energies

    refined = False
    top = int(np.argmax(energies))
    if c_beta is not None and not climb and m < cfg.max_samples and 0 < top < m - 1:
        jump = max(abs(energies[top] - energies[top - 1]), abs(energies[top] - energies[top + 1]))
        if jump > cfg.refine_fraction * abs(c_beta):
            new_values, _ = _reparametrize(new_values, top, 2 * m - 1, stepper.sphere, vol)
            energies = [energy_values(params, v).Jrho for v in new_values]
            refined = True

    samples = [path.samples[0]] + [Field(params.grid, v) for v in new_values[1:-1]] + [path.samples[-1]]
    state = PathState.from_samples(
        samples, energies, sweeps=path.sweeps + 1, max_history=list(path.max_history), resets=resets
    )
    if climb:
        # the climbing image keeps the lead unless another sample has clearly overtaken it
        state.argmax = k if energies[k] >= state.max_energy - slack else state.argmax
    if state.argmax in (0, len(samples) - 1):
        raise CertificateViolation("path_endpoints", margin=state.max_energy - max(energies[1:-1]))
    if refined or climb:
        resets.append(len(state.max_history))
    state.max_history.append(state.max_energy)
    if not climb and not refined and state.max_energy > old_max + slack:
        logger.warning("path maximum rose from %.12g to %.12g", old_max, state.max_energy)
    logger.debug("sweep %d: max %.12g at %d/%d", state.sweeps, state.max_energy, state.argmax, len(samples))
    return state


def solution_defects(params: ProblemParams, u: np.ndarray, lam: float) -> dict[str, float]:
    g = params.grid
    report = energy_values(params, u)
    a, b, c, p, rho = params.a, params.b, params.c, params.p, params.rho
    e, lp, level = report.e, report.lp, report.Jrho
    mass = g.cell_volume * float(np.vdot(u, u))
    grad = gradient_values(params, u)
    lam_rayleigh = -g.cell_volume * float(np.vdot(grad, u)) / c

    mult_terms = [lam * c, rho * lp, a * e, b * e * e]
    energy_lhs = (0.5 - 1.0 / p) * a * e + (0.25 - 1.0 / p) * b * e * e
    energy_rhs = c * lam / p + level
    energy_terms = [(0.5 - 1.0 / p) * a * e, (0.25 - 1.0 / p) * b * e * e, c * lam / p, level]
    tiny = np.finfo(float).tiny
    return {
        "constraint": abs(mass - c) / c,
        "multiplier_identity": abs(lam * c - (rho * lp - a * e - b * e * e)) / max(tiny, *map(abs, mult_terms)),
        "energy_identity": abs(energy_lhs - energy_rhs) / max(tiny, *map(abs, energy_terms)),
        "lambda_consistency": abs(lam - lam_rayleigh) / max(tiny, abs(lam)),
    }


def build_record(params: ProblemParams, u: np.ndarray, lam: float, history: list[float] | None = None) -> SolutionRecord:
    g = params.grid
    u = np.asarray(u).reshape(g.shape)
    sphere = SphereOps(params)
    report = energy_values(params, u)
    grad = gradient_values(params, u)
    r = sphere.project_values(u, grad)
    return SolutionRecord(
        u=Field(g, u),
        lambda_=float(lam),
        e=report.e,
        level=report.Jrho,
        residual=math.sqrt(g.cell_volume * float(np.vdot(r, r))),
        rho=params.rho,
        b=params.b,
        mass=g.cell_volume * float(np.vdot(u, u)),
        c=params.c,
        lp=report.lp,
        gradient_norm=math.sqrt(g.cell_volume * float(np.vdot(grad, grad))),
        positivity_ok=bool(np.min(u) > 0.0),
        defects=solution_defects(params, u, lam),
        newton_history=list(history or []),
    )


class _BorderedSystem:
    """Jacobian of ``F(u, lam) = (g(u) + lam u, (||u||^2 - c) / (2 vol))``.

    The mass row is scaled so the bordered matrix is symmetric.
    """

    def __init__(self, params: ProblemParams, solver: DirichletSolver, u: np.ndarray, lam: float):
        self.params = params
        self.grid = params.grid
        self.n = params.grid.size
        self.u = u.ravel()
        self.lam = lam
        self.solver = solver
        self.coeff = params.a + params.b * grad_values_sq(u.reshape(self.grid.shape), self.grid.h)
        self.sigma = abs(lam) + self.coeff * float(solver.symbol.min())
        self._p_inv_u = self._p_inv(self.u)
        self.schur = float(self.u @ self._p_inv_u)

    def _p_inv(self, x: np.ndarray) -> np.ndarray:
        return self.solver.solve_values(x.reshape(self.grid.shape), alpha=self.coeff, sigma=self.sigma).ravel()

    def matvec(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z).ravel()
        du, dl = z[: self.n], z[self.n]
        shape = self.grid.shape
        top = hessian_values(self.params, self.u.reshape(shape), du.reshape(shape)).ravel() + self.lam * du + dl * self.u
        return np.concatenate([top, [float(self.u @ du)]])

    def precondition(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z).ravel()
        return np.concatenate([self._p_inv(z[: self.n]), [z[self.n] / self.schur]])

    def operators(self) -> tuple[LinearOperator, LinearOperator]:
        size = self.n + 1
        return (
            LinearOperator((size, size), matvec=self.matvec, dtype=float),
            LinearOperator((size, size), matvec=self.precondition, dtype=float),
        )


def quadratic_constant(history: list[float], floor: float, steps: int = QUADRATIC_STEPS) -> float | None:
    """Largest ``r_{k+1} / r_k^2`` over the last ``steps`` Newton steps.

    Steps that land at or below ``floor`` are skipped: there the residual is
    set by the stopping rule and roundoff. None when no step qualifies.
    """
    tail = history[-steps - 1 :]
    ratios = [after / before**2 for before, after in zip(tail[:-1], tail[1:]) if after > floor and before > 0.0]
    return max(ratios) if ratios else None


def refine_newton(
    params: ProblemParams,
    u0: Field,
    lambda0: float | None = None,
    cfg: SolverConfig | None = None,
) -> SolutionRecord:
    cfg = cfg or SolverConfig()
    g = params.grid
    vol, c = g.cell_volume, params.c
    solver = DirichletSolver(g)
    u = np.array(u0.values, dtype=float)
    lam = SphereOps(params).rayleigh_multiplier(u0) if lambda0 is None else float(lambda0)

    def residual(u_: np.ndarray, lam_: float) -> tuple[np.ndarray, float, float, float]:
        grad = gradient_values(params, u_)
        f1 = (grad + lam_ * u_).ravel()
        mass = vol * float(np.vdot(u_, u_))
        f2 = (mass - c) / (2.0 * vol)
        merit = vol * float(f1 @ f1) + (mass - c) ** 2
        scale = max(1.0, math.sqrt(vol * float(np.vdot(grad, grad))))
        return f1, f2, merit, math.sqrt(vol * float(f1 @ f1)) / scale

    history: list[float] = []
    for iteration in range(cfg.newton_max_iters + 1):
        f1, f2, merit, rel = residual(u, lam)
        history.append(rel)
        mass_defect = abs(vol * float(np.vdot(u, u)) - c) / c
        logger.debug("newton %d: residual %.3e mass defect %.3e", iteration, rel, mass_defect)
        if rel <= cfg.newton_tol and mass_defect <= 1e-12:
            break
        if iteration == cfg.newton_max_iters:
            raise ConvergenceError(f"Newton did not converge in {cfg.newton_max_iters} iterations (residual {rel:.3e})")

        system = _BorderedSystem(params, solver, u, lam)
        jac, prec = system.operators()
        rhs = -np.concatenate([f1, [f2]])
        step, info = gmres(
            jac,
            rhs,
            rtol=cfg.krylov_tol,
            atol=0.0,
            restart=cfg.krylov_restart,
            maxiter=cfg.krylov_max_cycles,
            M=prec,
        )
        if info != 0:
            achieved = float(np.linalg.norm(jac.matvec(step) - rhs)) / max(float(np.linalg.norm(rhs)), 1e-300)
            estimate = float(np.linalg.norm(step)) / max(float(np.linalg.norm(rhs)), 1e-300) / max(achieved, 1e-16)
            raise SingularJacobianError("bordered Newton system did not solve", condition_estimate=estimate)
        du = step[:-1].reshape(g.shape)
        dl = float(step[-1])

        t = 1.0
        for _ in range(cfg.max_backtracks):
            trial_u = u + t * du
            if vol * float(np.vdot(trial_u, trial_u)) <= 0.0:
                raise ConvergenceError("line search produced a field with nonpositive mass")
            _, _, trial_merit, _ = residual(trial_u, lam + t * dl)
            if trial_merit <= (1.0 - 2.0 * cfg.armijo * t) * merit:
                break
            t *= 0.5
        else:
            raise ConvergenceError(f"Newton line search failed at iteration {iteration} (residual {rel:.3e})")
        u, lam = trial_u, lam + t * dl

    record = build_record(params, u, lam, history)
    record.newton_constant = quadratic_constant(history, cfg.newton_tol)
    if record.newton_constant is not None and record.newton_constant > NEWTON_QUADRATIC_BOUND:
        logger.warning(
            "newton tail is not quadratic: r_k+1 / r_k^2 reaches %.3e over the last %d steps",
            record.newton_constant,
            QUADRATIC_STEPS,
        )
    logger.info(
        "newton converged in %d steps: lambda=%.12g level=%.12g residual=%.3e",
        len(history) - 1,
        record.lambda_,
        record.level,
        record.residual,
    )
    return record


def descend_to_minimum(params: ProblemParams, u0: Field, cfg: SolverConfig | None = None) -> Field:
    """Plain constrained Sobolev descent from ``u0`` until the residual target."""
    cfg = cfg or SolverConfig()
    stepper = _Stepper(params, cfg)
    u = stepper.sphere.normalize_values(u0.values)
    level = energy_values(params, u).Jrho
    for sweep in range(cfg.path_max_sweeps):
        if stepper.residual(u) <= cfg.residual_target:
            return Field(params.grid, u)
        new, new_level = stepper.descend(u, level, None)
        if new is u:
            break
        u, level = new, new_level
    raise ConvergenceError(f"constrained descent stalled at residual {stepper.residual(u):.3e}")


def mountain_pass_solve(
    params: ProblemParams,
    cert: GeometryCertificate,
    cfg: SolverConfig | None = None,
) -> tuple[SolutionRecord, PathState]:
    cfg = cfg or SolverConfig()
    stepper = _Stepper(params, cfg)
    path = equalize_path(params, initial_path(cert, cfg.path_samples, params))
    climb = False
    residual = math.inf
    for _ in range(cfg.path_max_sweeps):
        previous = path.max_energy
        path = deform_path(params, path, cfg, climb=climb, c_beta=cert.c_beta)
        residual = stepper.residual(path.samples[path.argmax].values)
        if residual <= cfg.residual_target:
            break
        change = abs(path.max_energy - previous) / max(1.0, abs(previous))
        if not climb and change < cfg.climb_trigger:
            logger.info("path stalled at max %.10g after %d sweeps; climbing", path.max_energy, path.sweeps)
            climb = True
    else:
        raise ConvergenceError(
            f"path deformation reached {cfg.path_max_sweeps} sweeps with argmax residual {residual:.3e}"
        )
    logger.info(
        "path converged after %d sweeps: max %.12g, argmax residual %.3e, %d samples",
        path.sweeps,
        path.max_energy,
        residual,
        len(path.samples),
    )
    start = abs(path.samples[path.argmax])
    record = refine_newton(params, start, None, cfg)
    if "level_below_c_beta" in mountain_pass_violations(record, cert, params):
        logger.warning("newton left the mountain-pass level: %.10g < c beta = %.10g", record.level, cert.level_floor(params))
    return record, path


def mountain_pass_violations(
    record: SolutionRecord,
    cert: GeometryCertificate,
    params: ProblemParams | None = None,
) -> list[str]:
    """``record.violations()`` plus ``level_below_c_beta``.

    Any critical point on the sphere passes the record checks; only the level
    tells a mountain-pass solution from the local minimizer inside the
    separating sphere.
    """
    failed = record.violations()
    floor = cert.level_floor(params)
    if not record.level >= floor - LEVEL_FLOOR_RTOL * max(1.0, abs(floor)):
        failed.append("level_below_c_beta")
    return failed
