"""Write the (x, y) data behind the standard plots into one directory per figure.

Usage: python3 scripts/figure_data.py [--out figure_data] [--seed 0]
"""

import argparse
import sys
from pathlib import Path

from diffraction_lab.cli import main as cli_main

FIGURES = {
    "cantor": ["cantor", "--depth", "20", "--grid", "4096"],
    "thue_morse": ["tm", "--iterations", "12", "--grid", "4096"],
    "gue": ["gue", "--matrix-size", "200", "--samples", "400", "--workers", "8", "--bandwidth", "0.05"],
    "fibonacci_perfect": ["fibonacci", "--mode", "perfect", "--steps", "24", "--kmax", "3"],
    "fibonacci_random": ["fibonacci", "--mode", "random", "--tiles", "1e5", "--kmax", "3", "--clip", "20"],
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figure_data")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--only", choices=sorted(FIGURES), action="append")
    args = ap.parse_args(argv)
    for name in args.only or FIGURES:
        rc = cli_main(FIGURES[name] + ["--seed", str(args.seed), "--out", str(Path(args.out) / name)])
        if rc:
            print(f"{name}: exit code {rc}", file=sys.stderr)
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
