from __future__ import annotations

import csv
import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from .types import RunRecord


def _ts_for_name(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc).replace(microsecond=0)
    return dt.strftime("%Y-%m-%dT%H%M%SZ")


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in {"-", "_", "."} else "_" for ch in name)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


class RunStore:
    """Owns one output directory.

    ``report.json`` and the CSV sidecars depend only on the config and seed;
    wall-clock data goes to ``runs/<timestamp>__run_<id>.json``.
    """

    def __init__(self, output_dir: str | Path):
        self.root = Path(output_dir)
        self.runs_dir = self.root / "runs"
        self._io_lock = threading.RLock()

    def prepare(self) -> None:
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    @property
    def report_path(self) -> Path:
        return self.root / "report.json"

    def write_report(self, payload: dict[str, Any]) -> Path:
        return self._write_json(self.report_path, payload)

    def write_resolved_config(self, payload: dict[str, Any]) -> Path:
        return self._write_json(self.root / "config.resolved.json", payload)

    def write_table(self, name: str, columns: list[str], rows: list[list[Any]]) -> Path:
        path = self.root / f"{_safe_name(name)}.csv"
        with self._io_lock, path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        return path

    def write_summary(self, lines: list[str]) -> Path:
        path = self.root / "summary.txt"
        with self._io_lock:
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def write_run_record(self, record: RunRecord) -> Path:
        name = f"{_ts_for_name(datetime.now(timezone.utc))}__run_{record.run_id}.json"
        return self._write_json(self.runs_dir / name, record.to_dict())

    def run_records(self) -> list[Path]:
        return sorted(self.runs_dir.glob("*.json"))

    def _write_json(self, path: Path, payload: dict[str, Any]) -> Path:
        with self._io_lock, path.open("w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=True, sort_keys=True, indent=2, default=_json_default)
            f.write("\n")
        return path

    @staticmethod
    def read_json(path: Path) -> dict[str, Any]:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
