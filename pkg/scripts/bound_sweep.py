"""Sweep q for a two-colour urn and print exact tails next to the Chernoff bound.

    python3 scripts/bound_sweep.py --urn 20,20 --n 10 --q 0:0.5:0.05
"""

import argparse
import csv
import sys
from fractions import Fraction

from coupling_lab.bounds import ComparisonRow, compare_tails


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--urn", default="20,20")
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--q", default="0:0.5:0.05", help="start:stop:step")
    args = ap.parse_args()

    a, b = (int(x) for x in args.urn.split(","))
    start, stop, step = (Fraction(x) for x in args.q.split(":"))
    writer = csv.writer(sys.stdout)
    writer.writerow(ComparisonRow.CSV_COLUMNS + ("slack_hyper",))
    bad = 0
    q = start
    while q <= stop:
        row = compare_tails(a, b, args.n, float(q))
        writer.writerow(row.csv_fields() + [repr(row.chernoff_bound - row.hyper_exact)])
        bad += not row.valid
        q += step
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
