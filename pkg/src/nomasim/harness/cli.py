"""Command line entry point: ``nomasim run|validate|list-experiments``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiments import run
from .output import write_csv
from .scenario import Experiment, ScenarioError, parse_scenario

log = logging.getLogger("nomasim")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _load(path: str, seed: int | None):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read config {path}: {e.strerror}") from None
    return parse_scenario(text, seed=seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nomasim", description="NOMA link-level experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write CSV")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--workers", type=int, default=1)

    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")

    sub.add_parser("list-experiments", help="print the known experiment names")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )

    if args.command == "list-experiments":
        for e in Experiment:
            print(e.value)
        return EXIT_OK

    try:
        scenario = _load(args.config, getattr(args, "seed", None))
        if args.command == "run" and args.workers < 1:
            raise ScenarioError("--workers must be >= 1")
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(f"ok: {scenario.experiment.value} (hash {scenario.hash})")
        for d in scenario.defaults:
            print(f"  default {d}")
        return EXIT_OK

    try:
        log.info("running %s with %d worker(s)", scenario.experiment.value, args.workers)
        table = run(scenario, workers=args.workers)
        size = write_csv(table, args.out)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %d bytes to %s", size, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
