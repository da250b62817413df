"""Memory, parameter and op comparison across all cell kinds, with a bar chart.

Usage: python3 scripts/memory_compare.py [--n 32] [--k 5] [--out runs/bench]
"""
import argparse
import sys
from pathlib import Path

from ltcse.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--out", default="runs/bench")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    models = [flag for kind in ("ltc", "ct-rnn", "ode-rnn", "ct-gru", "lstm", "gru")
              for flag in ("--model", kind)]
    code = cli_main(["bench", "memory", *models, "--n", str(args.n), "--k", str(args.k),
                     "--m", "8", "--out", str(out / "memory.csv")])
    if code:
        return code
    return cli_main(["plot", "--bench", str(out / "memory.csv"), "--out", str(out)])


if __name__ == "__main__":
    sys.exit(main())
