from __future__ import annotations

import logging
from dataclasses import dataclass

from ..config import RunConfig, build_solver_config
from ..grid import field_rows
from ..solve import mountain_pass_solve, mountain_pass_violations
from ..spectral import morse_index
from ..types import Result, Task
from .common import certify, morse_theta, record_lines, resolve_problem

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class SolveExperiment:
    config: RunConfig
    name: str = "solve"

    def handle(self, task: Task) -> Result:
        resolved = resolve_problem(self.config)
        params = resolved.params
        cert = certify(self.config, resolved)
        record, path = mountain_pass_solve(params, cert, build_solver_config(self.config))
        violations = mountain_pass_violations(record, cert)

        morse = None
        theta = morse_theta(self.config)
        if theta is not None and not violations:
            morse = morse_index(params, record, theta)
            record.morse_index = morse.index
            violations = mountain_pass_violations(record, cert)
        elif violations:
            logger.warning("skipping the Morse index: record fails %s", ", ".join(violations))

        reset_sweeps = set(path.resets)
        return Result(
            task_id=task.task_id,
            status="ok" if not violations else "violated",
            payload={
                "problem": resolved.to_dict(),
                "certificate": cert.to_dict(),
                "solution": record.to_dict(),
                "path": path.to_dict(),
                "morse": None if morse is None else morse.to_dict(),
            },
            violations=violations,
            exit_code=1 if violations else 0,
            tables={
                "solution": field_rows(record.u),
                "path": (["sample", "energy"], [[i, e] for i, e in enumerate(path.energies)]),
                "max_history": (
                    ["sweep", "max_energy", "reset"],
                    [[i, m, int(i in reset_sweeps)] for i, m in enumerate(path.max_history)],
                ),
            },
            summary=[f"sweeps: {path.sweeps}", f"path_samples: {len(path.samples)}", *record_lines(record)],
        )
