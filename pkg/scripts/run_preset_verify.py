"""Run every check on the preset configuration and print the verdict summary.

Usage: python3 scripts/run_preset_verify.py [--out DIR] [--threads K]
"""

import argparse
import json
import sys
from pathlib import Path

from vilab.cli import main


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/preset_verify"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    code = main(["verify", "--check", "all", "--threads", str(args.threads), "--out", str(args.out), "-v"])
    verdict = json.loads((args.out / "report_verdict.json").read_text())
    print(json.dumps(verdict["counts"]), "violated:", [v["check"] for v in verdict["violated"]])
    return code


if __name__ == "__main__":
    sys.exit(run())
