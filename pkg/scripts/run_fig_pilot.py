"""Regenerate the fig_pilot preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig_pilot.py --out results/fig_pilot.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig_pilot", *sys.argv[1:]]))
