"""Monte Carlo suite for all three couplings on one population.

    python3 scripts/mc_suite.py --urn 5,5 --n 4 --trials 1000000 --seed 7
"""

import argparse
import json
import sys
import time

from coupling_lab.cli import monte_carlo_suite
from coupling_lab.coupling import CouplingModel
from coupling_lab.population import parse_values, two_color_urn
from coupling_lab.reports import format_table


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--urn", default="5,5")
    ap.add_argument("--values")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    pop = parse_values(args.values) if args.values else two_color_urn(*map(int, args.urn.split(",")))
    models = [CouplingModel.replacement(), CouplingModel.kfold(args.k),
              CouplingModel.surreplacement(args.d)]
    results, ok = {}, True
    for model in models:
        t0 = time.perf_counter()
        reports = monte_carlo_suite(pop, model, args.n, args.trials, args.seed)
        ok &= all(r.passed for r in reports)
        results[str(model)] = [r.to_dict() for r in reports]
        if not args.json:
            print(f"== {model}  ({time.perf_counter() - t0:.1f}s)")
            print(format_table(reports))
    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
