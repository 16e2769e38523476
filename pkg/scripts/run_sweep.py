"""Sweep the perturbation index n on a small grid and print the inflation ratios.

Usage: python3 scripts/run_sweep.py [--out DIR] [--threads K]
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from vilab.cli import main

CONFIG = {
    "construction": {"N": 1},
    "grid": {"n": 256},
    "experiments": {"x_star": "manual", "n_list": [1, 2]},
    "sweep": {"n_pert": [1, 2]},
    "checks": ["inflation", "products"],
}


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/sweep"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    cfg = args.out / "sweep_config.json"
    cfg.write_text(json.dumps(CONFIG, indent=2))
    code = main(["sweep", "--config", str(cfg), "--threads", str(args.threads), "--out", str(args.out)])
    lines = [ln for ln in (args.out / "sweep.csv").read_text().splitlines() if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        if row["check"] in ("inflation_ratio", "inflation_skipped"):
            print(row["check"], row["params"], row["measured"])
    return code


if __name__ == "__main__":
    sys.exit(run())
