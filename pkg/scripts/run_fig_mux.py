"""Regenerate the fig_mux preset; extra arguments go to `corrdiv figure`.

Example: python scripts/run_fig_mux.py --out results/fig_mux.csv
"""

import sys

from corrdiv.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure", "fig_mux", *sys.argv[1:]]))
