from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError
from .experiments import build_experiment, task_for
from .runner import ExperimentRunner, RunnerConfig
from .store import RunStore

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchhoff")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Run the experiment a config file describes")
    run_p.add_argument("config", help="Path to a JSON run config")
    run_p.add_argument("--out", default=None, help="Output directory (overrides output_dir)")
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--exploratory", action="store_true", help="Record certificate failures instead of stopping")
    run_p.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS)

    validate_p = sub.add_parser("validate", help="Validate a config and print it fully resolved")
    validate_p.add_argument("config")
    validate_p.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS)
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)

    overrides = {}
    if args.command == "run":
        overrides = {
            "output_dir": args.out,
            "threads": args.threads,
            "solver.exploratory": True if args.exploratory else None,
        }
    try:
        cfg = load_config(Path(args.config), overrides)
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "error": str(exc), "exit_code": exc.exit_code}))
        return exc.exit_code

    resolved = cfg.model_dump(mode="json")
    if args.command == "validate":
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return 0

    store = RunStore(cfg.output_dir)
    runner = ExperimentRunner(
        store=store,
        experiment=build_experiment(cfg),
        config=RunnerConfig(threads=cfg.threads, resolved_config=resolved),
    )
    result = runner.run(task_for(cfg))
    print(
        json.dumps(
            {
                "experiment": cfg.experiment.kind,
                "status": result.status,
                "exit_code": result.exit_code,
                "violations": result.violations,
                "output_dir": str(store.root),
            }
        )
    )
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
