"""Five-seed LTC run on the UCI occupancy data (downloads on first use).

Usage: python3 scripts/real_occupancy.py [--epochs 100] [--jobs 5] [--out runs/occupancy]
"""
import argparse
import os
import sys

from ltcse.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=min(5, os.cpu_count() or 1))
    ap.add_argument("--out", default="runs/occupancy")
    args = ap.parse_args()
    return cli_main(["train", "--task", "occupancy", "--model", "ltc", "--hidden", "32",
                     "--epochs", str(args.epochs), "--repeats", "5", "--jobs", str(args.jobs),
                     "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
