"""Parameter-count table at n=128, k=8 (m=128): formula, printed value, implementation count."""
import sys

from ltcse.bench import FORMULA_TEXT, format_bench_csv, table1_report


def main() -> int:
    rows = table1_report()
    sys.stdout.write(format_bench_csv(rows))
    for r in rows:
        flag = "DISCREPANCY" if r.discrepancy else "ok"
        print(f"{r.kind:8s} {FORMULA_TEXT[r.kind]:28s} formula {r.formula_count:>6} "
              f"printed {r.table1_printed:>6} actual {r.actual_count:>6}  {flag}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
