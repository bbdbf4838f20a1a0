"""Run configuration: one JSON document validated by pydantic.

The numeric modules never see these models; ``build_grid``,
``build_params`` and ``build_solver_config`` turn a validated ``RunConfig``
into the plain dataclasses the solver works with.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .energy import ProblemParams, check_exponent
from .errors import ConfigError
from .grid import Grid
from .solve import SolverConfig

ExperimentKind = Literal["certify", "solve", "sweep_rho", "sweep_b", "sweep_c", "soliton"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemConfig(_Strict):
    a: float = Field(1.0, gt=0)
    b: float = Field(1.0, ge=0)
    c: float | None = Field(None, gt=0)
    c_fraction_of_cstar: float | None = Field(None, gt=0)
    p: float = 12.0
    rho: float = Field(1.0, ge=0.5, le=1.0)

    @model_validator(mode="after")
    def _one_mass(self) -> "ProblemConfig":
        if (self.c is None) == (self.c_fraction_of_cstar is None):
            raise ValueError("give exactly one of c and c_fraction_of_cstar")
        return self


class GridConfig(_Strict):
    dim: Literal[1, 2] = 1
    extent: float | list[float] = 10.0
    n: int | list[int] = 511

    def extents(self) -> tuple[float, ...]:
        return _per_axis(self.extent, self.dim, "extent")

    def counts(self) -> tuple[int, ...]:
        return _per_axis(self.n, self.dim, "n")

    @model_validator(mode="after")
    def _shape(self) -> "GridConfig":
        if any(L <= 0 for L in self.extents()):
            raise ValueError("grid.extent must be positive")
        if any(k < 16 for k in self.counts()):
            raise ValueError("grid.n must be at least 16 per axis")
        return self


def _per_axis(value: Any, dim: int, name: str) -> tuple:
    values = list(value) if isinstance(value, list) else [value] * dim
    if len(values) != dim:
        raise ValueError(f"grid.{name} needs {dim} entries, got {len(values)}")
    return tuple(values)


class PathConfig(_Strict):
    samples: int = Field(33, ge=17)
    step: float = Field(0.4, gt=0)
    max_sweeps: int = Field(5000, ge=1)
    tolerance: float = Field(1e-10, gt=0)
    residual_target: float = Field(1e-3, gt=0)
    max_samples: int = Field(129, ge=17)
    refine_fraction: float = Field(0.01, gt=0)
    reparam_ratio: float = Field(1.5, gt=1)
    climb_trigger: float = Field(1e-4, gt=0)


class NewtonConfig(_Strict):
    tol: float = Field(1e-10, gt=0)
    max_iters: int = Field(50, ge=1)
    krylov_tol: float = Field(1e-10, gt=0)
    restart: int = Field(200, ge=1)
    max_cycles: int = Field(20, ge=1)


class MorseConfig(_Strict):
    enabled: bool = True
    theta: float = Field(0.0, ge=0)


class SolverSection(_Strict):
    path: PathConfig = Field(default_factory=PathConfig)
    newton: NewtonConfig = Field(default_factory=NewtonConfig)
    morse: MorseConfig = Field(default_factory=MorseConfig)
    exploratory: bool = False
    gn_trials: int = Field(260, ge=200)
    boundary_samples: int = Field(120, ge=100)
    jump_threshold: float = Field(1.0, gt=0)


class ExperimentConfig(_Strict):
    kind: ExperimentKind
    rho_grid: list[float] = Field(default_factory=lambda: [0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    b_grid: list[float] = Field(default_factory=lambda: [1.0, 0.1, 0.01, 1e-3, 1e-4, 0.0])
    c_fractions: list[float] = Field(default_factory=lambda: [0.9, 0.8, 0.7, 0.6])
    c_grid_n: list[int] | None = None
    soliton_b: float = Field(1.0, gt=0)
    soliton_p: float | None = None
    soliton_dim: Literal[1, 2, 3] | None = None
    soliton_dr: float = Field(1e-2, gt=0)
    blowup_radius: float = Field(3.0, gt=0)

    @field_validator("rho_grid")
    @classmethod
    def _rho_range(cls, value: list[float]) -> list[float]:
        if not value or any(r < 0.5 or r > 1.0 for r in value):
            raise ValueError("rho_grid must be nonempty and inside [0.5, 1]")
        if any(b < a for a, b in zip(value[:-1], value[1:])):
            raise ValueError("rho_grid must be ascending")
        return value

    @field_validator("b_grid")
    @classmethod
    def _b_descending(cls, value: list[float]) -> list[float]:
        if not value or value[-1] != 0.0 or any(b >= a for a, b in zip(value[:-1], value[1:])):
            raise ValueError("b_grid must be strictly descending and end at 0")
        return value

    @field_validator("c_fractions")
    @classmethod
    def _fractions(cls, value: list[float]) -> list[float]:
        if not value or any(f <= 0.0 for f in value):
            raise ValueError("c_fractions must be nonempty and positive")
        if len(set(value)) != len(value):
            raise ValueError("c_fractions must be distinct")
        return value

    @model_validator(mode="after")
    def _grid_per_mass(self) -> "ExperimentConfig":
        if self.c_grid_n is not None:
            if len(self.c_grid_n) != len(self.c_fractions):
                raise ValueError("c_grid_n needs one node count per entry of c_fractions")
            if any(k < 16 for k in self.c_grid_n):
                raise ValueError("c_grid_n entries must be at least 16")
        return self


class RunConfig(_Strict):
    problem: ProblemConfig = Field(default_factory=lambda: ProblemConfig(c_fraction_of_cstar=0.9))
    grid: GridConfig = Field(default_factory=GridConfig)
    solver: SolverSection = Field(default_factory=SolverSection)
    experiment: ExperimentConfig
    output_dir: str = "out"
    seed: int = 0
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _exponent(self) -> "RunConfig":
        if self.experiment.kind == "soliton":
            check_exponent(self.soliton_p(), self.soliton_dim())
        else:
            check_exponent(self.problem.p, self.grid.dim)
        if self.experiment.kind == "sweep_c" and self.problem.b <= 0:
            raise ValueError("sweep_c compares against the soliton of coefficient b and needs b > 0")
        return self

    def soliton_p(self) -> float:
        return self.experiment.soliton_p if self.experiment.soliton_p is not None else self.problem.p

    def soliton_dim(self) -> int:
        return self.experiment.soliton_dim if self.experiment.soliton_dim is not None else self.grid.dim


def _set_dotted(raw: dict[str, Any], dotted: str, value: Any) -> None:
    *parents, leaf = dotted.split(".")
    node = raw
    for key in parents:
        child = node.get(key)
        if not isinstance(child, dict):
            child = node[key] = {}
        node = child
    node[leaf] = value


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read and validate a run config; every failure becomes ``ConfigError``."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(raw, dotted, value)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(extents=cfg.grid.extents(), n=cfg.grid.counts())


def build_c_grids(cfg: RunConfig) -> list[Grid] | None:
    """One grid per mass fraction, same box, ``c_grid_n`` interior nodes per axis."""
    counts = cfg.experiment.c_grid_n
    if counts is None:
        return None
    return [Grid(extents=cfg.grid.extents(), n=(k,) * cfg.grid.dim) for k in counts]


def build_params(cfg: RunConfig, c: float) -> ProblemParams:
    pc = cfg.problem
    return ProblemParams(a=pc.a, b=pc.b, c=c, p=pc.p, rho=pc.rho, grid=build_grid(cfg))


def build_solver_config(cfg: RunConfig) -> SolverConfig:
    path, newton = cfg.solver.path, cfg.solver.newton
    return SolverConfig(
        path_samples=path.samples,
        path_step=path.step,
        path_max_sweeps=path.max_sweeps,
        path_tolerance=path.tolerance,
        residual_target=path.residual_target,
        max_samples=path.max_samples,
        refine_fraction=path.refine_fraction,
        reparam_ratio=path.reparam_ratio,
        climb_trigger=path.climb_trigger,
        newton_tol=newton.tol,
        newton_max_iters=newton.max_iters,
        krylov_tol=newton.krylov_tol,
        krylov_restart=newton.restart,
        krylov_max_cycles=newton.max_cycles,
        jump_threshold=cfg.solver.jump_threshold,
        threads=cfg.threads,
    )
