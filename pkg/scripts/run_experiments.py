#!/usr/bin/env python3
"""Run the two bundled experiments and print a one-line verdict for each.

Artifacts land under out/<experiment>/ exactly as the CLI would place
them; this script is a thin convenience wrapper around `multiscat run`.
"""

import sys
from pathlib import Path

from multiscat.cli import main

CONFIGS = ["nonoverlap_wells.yaml", "overlap_gaussians.yaml"]


def run_all() -> int:
    root = Path(__file__).resolve().parent.parent / "configs"
    worst = 0
    for name in CONFIGS:
        status = main(["--verbose", "run", str(root / name)])
        print(f"{name}: {'PASS' if status == 0 else 'FAIL'} (exit {status})")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    sys.exit(run_all())
