"""Regenerate the fig_fq preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig_fq.py --out results/fig_fq.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig_fq", *sys.argv[1:]]))
