from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..asymptotics import closed_form_1d, solve_soliton
from ..config import RunConfig
from ..types import Result, Task


@dataclass(slots=True)
class SolitonExperiment:
    config: RunConfig
    name: str = "soliton"

    def handle(self, task: Task) -> Result:
        exp = self.config.experiment
        b, p, dim = exp.soliton_b, self.config.soliton_p(), self.config.soliton_dim()
        profile = solve_soliton(b, p, dim, dr=exp.soliton_dr)
        payload = {"soliton": profile.to_dict(), "residual": profile.residual()}
        columns, rows = profile.rows()
        if dim == 1:
            exact = closed_form_1d(b, p, profile.r)
            payload["closed_form_sup_error"] = float(np.max(np.abs(profile.U - exact)))
            payload["closed_form_U0_error"] = abs(profile.U0 - float(exact[0]))
            columns = columns + ["U_closed_form"]
            rows = [row + [float(x)] for row, x in zip(rows, exact)]
        summary = [f"{k}: {v:.6g}" for k, v in sorted(payload.items()) if isinstance(v, float)]
        return Result(
            task_id=task.task_id,
            status="ok",
            payload=payload,
            tables={"soliton": (columns, rows)},
            summary=[f"U0: {profile.U0:.15g}", *summary],
        )
