from __future__ import annotations

from dataclasses import dataclass

from ..asymptotics import ContinuationRecord, continue_b, continue_c, continue_rho, solve_soliton
from ..config import RunConfig, build_c_grids, build_solver_config
from ..types import Result, Task
from .common import certify, morse_theta, resolve_problem


def _result(task: Task, payload: dict, record: ContinuationRecord) -> Result:
    accepted = record.accepted()
    tables = {"continuation": record.rows()}
    for i, step in enumerate(record.steps):
        if step.blowup is not None:
            tables[f"blowup_{i:02d}"] = step.blowup.rows()
    summary = [f"steps: {len(record.steps)}", f"accepted: {len(accepted)}"]
    summary += [f"{k}: {v}" for k, v in sorted(record.summary.items()) if not isinstance(v, dict)]
    summary += [f"anomaly: {note}" for note in record.anomalies]
    return Result(
        task_id=task.task_id,
        status="ok" if not record.violations else "violated",
        payload={**payload, "continuation": record.to_dict()},
        violations=list(record.violations),
        exit_code=1 if record.violations else 0,
        tables=tables,
        summary=summary,
    )


@dataclass(slots=True)
class SweepRhoExperiment:
    config: RunConfig
    name: str = "sweep_rho"

    def handle(self, task: Task) -> Result:
        resolved = resolve_problem(self.config)
        cert = certify(self.config, resolved)
        record = continue_rho(
            resolved.params,
            cert,
            self.config.experiment.rho_grid,
            build_solver_config(self.config),
            morse_theta=morse_theta(self.config),
        )
        return _result(task, {"problem": resolved.to_dict(), "certificate": cert.to_dict()}, record)


@dataclass(slots=True)
class SweepBExperiment:
    config: RunConfig
    name: str = "sweep_b"

    def handle(self, task: Task) -> Result:
        resolved = resolve_problem(self.config)
        cert = certify(self.config, resolved)
        record = continue_b(
            resolved.params,
            cert,
            self.config.experiment.b_grid,
            build_solver_config(self.config),
            morse_theta=morse_theta(self.config),
        )
        return _result(task, {"problem": resolved.to_dict(), "certificate": cert.to_dict()}, record)


@dataclass(slots=True)
class SweepCExperiment:
    config: RunConfig
    name: str = "sweep_c"

    def handle(self, task: Task) -> Result:
        cfg = self.config
        resolved = resolve_problem(cfg)
        params = resolved.params
        soliton = solve_soliton(params.b, params.p, params.dim, dr=cfg.experiment.soliton_dr)
        c_grid = [f * resolved.cstar for f in cfg.experiment.c_fractions]
        grids = build_c_grids(cfg)
        record = continue_c(
            params,
            c_grid,
            build_solver_config(cfg),
            grids=grids,
            soliton=soliton,
            radius=cfg.experiment.blowup_radius,
            morse_theta=morse_theta(cfg),
            exploratory=cfg.solver.exploratory,
            seed=cfg.seed,
            threads=cfg.threads,
            gn_trials=cfg.solver.gn_trials,
            boundary_samples=cfg.solver.boundary_samples,
            gn=resolved.gn,
        )
        payload = {
            "problem": resolved.to_dict(),
            "c_grid": c_grid,
            "grid_n": [list(g.n) for g in grids] if grids is not None else None,
            "soliton": soliton.to_dict(),
        }
        return _result(task, payload, record)
