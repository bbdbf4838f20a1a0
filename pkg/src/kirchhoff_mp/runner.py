from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Protocol
from uuid import uuid4

from .errors import KirchhoffError
from .store import RunStore
from .types import Result, RunRecord, Task, utc_now

logger = logging.getLogger(__name__)


class Experiment(Protocol):
    name: str

    def handle(self, task: Task) -> Result:
        ...


@dataclass(slots=True)
class RunnerConfig:
    threads: int = 1
    resolved_config: dict[str, Any] | None = None


class ExperimentRunner:
    """Runs one experiment task and persists everything it produced.

    Exceptions never escape: they become an error ``Result`` whose exit code
    comes from the exception class, and the run record is written either way.
    """

    def __init__(self, *, store: RunStore, experiment: Experiment, config: RunnerConfig | None = None):
        self.store = store
        self.experiment = experiment
        self.config = config or RunnerConfig()

    def run(self, task: Task) -> Result:
        self.store.prepare()
        if self.config.resolved_config is not None:
            self.store.write_resolved_config(self.config.resolved_config)
        started = utc_now()
        try:
            result = self.experiment.handle(task)
            if result.task_id != task.task_id:
                result.task_id = task.task_id
        except KirchhoffError as exc:
            logger.error("%s failed: %s", self.experiment.name, exc)
            result = Result(
                task_id=task.task_id,
                status="error",
                error=f"{type(exc).__name__}: {exc}",
                violations=list(getattr(exc, "names", [])),
                exit_code=exc.exit_code,
            )
        except Exception as exc:
            logger.exception("%s crashed", self.experiment.name)
            result = Result(task_id=task.task_id, status="error", error=f"{type(exc).__name__}: {exc}", exit_code=1)
        finally:
            finished = utc_now()

        self._persist(result)
        self.store.write_run_record(
            RunRecord(
                run_id=uuid4().hex,
                experiment=self.experiment.name,
                task_id=task.task_id,
                started_at=started.isoformat(),
                finished_at=finished.isoformat(),
                duration_ms=int((finished - started).total_seconds() * 1000),
                status=result.status,
                error=result.error,
                threads=self.config.threads,
            )
        )
        return result

    def _persist(self, result: Result) -> None:
        report = {"experiment": self.experiment.name, **result.to_dict()}
        self.store.write_report(report)
        for name, (columns, rows) in sorted(result.tables.items()):
            self.store.write_table(name, columns, rows)
        lines = [
            f"experiment: {self.experiment.name}",
            f"status: {result.status}",
            f"exit_code: {result.exit_code}",
        ]
        if result.violations:
            lines.append(f"violations: {', '.join(result.violations)}")
        if result.error:
            lines.append(f"error: {result.error}")
        self.store.write_summary(lines + list(result.summary))
