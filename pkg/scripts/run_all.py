"""Run every experiment layer and the report into one directory.

    python3 scripts/run_all.py --out results
"""

import sys

from pmm_density.harness.cli import main

if __name__ == "__main__":
    sys.exit(main(["all", *sys.argv[1:]]))
