from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from .errors import InvariantViolation
from .grid import Field

UTC = timezone.utc

RESIDUAL_RTOL = 1e-8
MASS_RTOL = 1e-10
IDENTITY_RTOL = 1e-8
MORSE_BOUND = 2


def utc_now() -> datetime:
    return datetime.now(tz=UTC)


TIE_ATOL = 1e-12


def tracked_argmax(energies: list[float]) -> int:
    """Index of the largest energy; ties within TIE_ATOL go to the smallest index."""
    top = max(energies)
    for i, value in enumerate(energies):
        if value >= top - TIE_ATOL:
            return i
    return 0


@dataclass(slots=True)
class PathState:
    samples: list[Field]
    energies: list[float]
    argmax: int
    sweeps: int = 0
    max_history: list[float] = field(default_factory=list)
    resets: list[int] = field(default_factory=list)

    @classmethod
    def from_samples(cls, samples: list[Field], energies: list[float], **extra: Any) -> "PathState":
        return cls(samples=list(samples), energies=list(energies), argmax=tracked_argmax(energies), **extra)

    @property
    def max_energy(self) -> float:
        return self.energies[self.argmax]

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": len(self.samples),
            "argmax": self.argmax,
            "max_energy": self.max_energy,
            "sweeps": self.sweeps,
            "resets": list(self.resets),
            "energies": list(self.energies),
        }


@dataclass(slots=True)
class SolutionRecord:
    u: Field
    lambda_: float
    e: float
    level: float
    residual: float
    rho: float
    b: float
    mass: float
    c: float
    lp: float
    gradient_norm: float
    positivity_ok: bool
    defects: dict[str, float] = field(default_factory=dict)
    newton_history: list[float] = field(default_factory=list)
    morse_index: int | None = None
    newton_constant: float | None = None

    def violations(self) -> list[str]:
        failed = []
        if not self.residual <= RESIDUAL_RTOL * max(1.0, self.gradient_norm):
            failed.append("residual")
        if not abs(self.mass - self.c) <= MASS_RTOL * self.c:
            failed.append("constraint")
        for name in ("multiplier_identity", "energy_identity", "lambda_consistency"):
            value = self.defects.get(name, math.inf)
            if not value <= IDENTITY_RTOL:
                failed.append(name)
        if not self.positivity_ok:
            failed.append("positivity")
        if self.morse_index is not None and self.morse_index > MORSE_BOUND:
            failed.append("morse_bound")
        return failed

    def check(self) -> "SolutionRecord":
        failed = self.violations()
        if failed:
            raise InvariantViolation(f"solution record fails: {', '.join(failed)}", names=failed)
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lambda_,
            "e": self.e,
            "level": self.level,
            "residual": self.residual,
            "rho": self.rho,
            "b": self.b,
            "c": self.c,
            "mass": self.mass,
            "lp": self.lp,
            "b_e": self.b * self.e,
            "positivity_ok": self.positivity_ok,
            "morse_index": self.morse_index,
            "defects": dict(self.defects),
            "newton_history": list(self.newton_history),
            "newton_constant": self.newton_constant,
        }


@dataclass(slots=True)
class Task:
    task_id: str
    task_type: str
    payload: dict[str, Any]
    created_at: str = field(default_factory=lambda: utc_now().isoformat())

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "task_type": self.task_type,
            "payload": self.payload,
            "created_at": self.created_at,
        }


@dataclass(slots=True)
class Result:
    task_id: str
    status: str
    payload: dict[str, Any] = field(default_factory=dict)
    error: str | None = None
    violations: list[str] = field(default_factory=list)
    exit_code: int = 0
    tables: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "status": self.status,
            "payload": self.payload,
            "error": self.error,
            "violations": list(self.violations),
            "exit_code": self.exit_code,
        }


@dataclass(slots=True)
class RunRecord:
    run_id: str
    experiment: str
    task_id: str
    started_at: str
    finished_at: str
    duration_ms: int
    status: str
    error: str | None
    threads: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "experiment": self.experiment,
            "task_id": self.task_id,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "duration_ms": self.duration_ms,
            "status": self.status,
            "error": self.error,
            "threads": self.threads,
        }
