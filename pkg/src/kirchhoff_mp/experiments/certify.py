from __future__ import annotations

from dataclasses import dataclass

from ..config import RunConfig
from ..grid import field_rows
from ..types import Result, Task
from .common import certify, resolve_problem


@dataclass(slots=True)
class CertifyExperiment:
    config: RunConfig
    name: str = "certify"

    def handle(self, task: Task) -> Result:
        resolved = resolve_problem(self.config)
        cert = certify(self.config, resolved)
        status = "ok" if cert.certified else "uncertified"
        return Result(
            task_id=task.task_id,
            status=status,
            payload={"problem": resolved.to_dict(), "certificate": cert.to_dict()},
            violations=list(cert.violations),
            tables={
                "margins": (["inequality", "margin"], [[k, v] for k, v in sorted(cert.margins.items())]),
                "w1": field_rows(cert.w1),
                "w2": field_rows(cert.w2),
            },
            summary=[
                f"cstar: {cert.cstar:.10g}",
                f"c: {cert.params.c:.10g}",
                f"alpha0: {cert.alpha0:.10g}",
                f"c_beta: {cert.c_beta:.10g}",
                *(f"margin {k}: {v:.6g}" for k, v in sorted(cert.margins.items())),
            ],
        )
