"""Exact checks over small populations and every coupling model."""

import itertools
import sys

from coupling_lab.coupling import CouplingModel
from coupling_lab.errors import InstanceTooLarge
from coupling_lab.oracle import exact_suite
from coupling_lab.population import from_values

POPS = [[0, 1], [0, 1, 2], [0, 1, 3], [0, 0, 1, 5]]
MODELS = [CouplingModel.replacement(), CouplingModel.kfold(2),
          CouplingModel.surreplacement(2), CouplingModel.surreplacement(3)]


def main() -> int:
    failed = 0
    for vals, model in itertools.product(POPS, MODELS):
        pop = from_values(vals)
        for n in range(1, min(3, pop.size) + 1):
            try:
                _, reports = exact_suite(pop, model, n)
            except InstanceTooLarge as exc:
                print(f"{vals} {model} n={n}: skipped ({exc})")
                continue
            bad = [r.name for r in reports if not r.passed]
            failed += bool(bad)
            print(f"{str(vals):<14} {str(model):<22} n={n}  {'ok' if not bad else 'FAIL ' + ','.join(bad)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
