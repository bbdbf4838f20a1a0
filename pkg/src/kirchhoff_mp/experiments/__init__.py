"""Experiment kinds runnable from a config file."""

from __future__ import annotations

import json

from ..config import RunConfig
from ..runner import Experiment
from ..types import Task
from .certify import CertifyExperiment
from .common import _stable_hash
from .mountain_pass import SolveExperiment
from .soliton import SolitonExperiment
from .sweeps import SweepBExperiment, SweepCExperiment, SweepRhoExperiment

EXPERIMENTS = {
    "certify": CertifyExperiment,
    "solve": SolveExperiment,
    "sweep_rho": SweepRhoExperiment,
    "sweep_b": SweepBExperiment,
    "sweep_c": SweepCExperiment,
    "soliton": SolitonExperiment,
}


def build_experiment(cfg: RunConfig) -> Experiment:
    return EXPERIMENTS[cfg.experiment.kind](config=cfg)


# run-environment fields, left out of the task id
RUN_ONLY_FIELDS = {"threads", "output_dir"}


def task_for(cfg: RunConfig) -> Task:
    resolved = cfg.model_dump(mode="json")
    identity = cfg.model_dump(mode="json", exclude=RUN_ONLY_FIELDS)
    task_id = _stable_hash([cfg.experiment.kind, json.dumps(identity, sort_keys=True)])
    return Task(task_id=task_id, task_type=cfg.experiment.kind, payload=resolved)


__all__ = [
    "EXPERIMENTS",
    "CertifyExperiment",
    "SolitonExperiment",
    "SolveExperiment",
    "SweepBExperiment",
    "SweepCExperiment",
    "SweepRhoExperiment",
    "build_experiment",
    "task_for",
]
