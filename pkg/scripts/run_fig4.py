"""Regenerate the fig4 preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig4.py --out results/fig4.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig4", *sys.argv[1:]]))
