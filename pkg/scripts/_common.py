"""Shared plumbing for the figure scripts: load a shipped config, apply
command-line overrides, run it and write the CSV."""

import argparse
import json
from pathlib import Path

from nomasim.harness import parse_scenario, run, write_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out-dir", default="results", help="directory for CSV output")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--trials", type=int, default=None, help="override the trial count")
    ap.add_argument("--workers", type=int, default=1)
    return ap


def run_config(name: str, args: argparse.Namespace) -> Path:
    doc = json.loads((CONFIGS / name).read_text())
    if args.trials is not None:
        doc["trials"] = args.trials
    scenario = parse_scenario(json.dumps(doc), seed=args.seed)
    table = run(scenario, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / name.replace(".json", ".csv")
    size = write_csv(table, out)
    print(f"{scenario.experiment.value}: {len(table.rows)} rows, {size} bytes -> {out}")
    for key in ("diversity_coop", "diversity_noncoop"):
        if key in table.metadata:
            print(f"  {key} = {table.metadata[key]}")
    return out
