"""Regenerate the fig2 preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig2.py --out results/fig2.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig2", *sys.argv[1:]]))
