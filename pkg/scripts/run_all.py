"""Run every suite with the default (or given) config; exit 0 iff all pass.

Usage: python scripts/run_all.py [--config cfg.json] [--seed N] [--out DIR]
"""

import sys

from hjflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["all", *sys.argv[1:]]))
