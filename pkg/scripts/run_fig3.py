"""Regenerate the fig3 preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig3.py --out results/fig3.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig3", *sys.argv[1:]]))
