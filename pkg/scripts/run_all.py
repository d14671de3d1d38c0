"""Run every figure preset into a results directory.

Example: python scripts/run_all.py results --trials 200 --workers 4
"""

import argparse
import sys
from pathlib import Path

from corrdiv.cli import main
from corrdiv.experiments import PRESETS


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", type=Path)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    status = 0
    for fig in PRESETS:
        if fig == "custom":
            continue
        extra = ["--seed", str(args.seed), "--workers", str(args.workers),
                 "--out", str(args.outdir / f"{fig}.csv")]
        if args.trials is not None:
            extra += ["--trials", str(args.trials)]
        print(f"running {fig}", file=sys.stderr)
        status = max(status, main(["figure", fig, *extra]))
    return status


if __name__ == "__main__":
    sys.exit(run())
