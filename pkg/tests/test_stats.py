import json
import math
from fractions import Fraction

import numpy as np
import pytest

from coupling_lab.coupling import CouplingModel
from coupling_lab.errors import SupportMismatch
from coupling_lab.oracle import (
    enumerate_joint,
    exact_marginal_T,
    exact_with_replacement,
    exact_without_replacement,
    hinge_expectation,
)
from coupling_lab.population import from_values
from coupling_lab.stats import (
    EmpiricalJoint,
    bin_key,
    collect,
    convex_function_test,
    marginal_gof_test,
    martingale_test,
    means_test,
    surreplacement_law_test,
)

REPL = CouplingModel.replacement()
POP3 = from_values([0, 1, 2])


@pytest.fixture(scope="module")
def repl_emp():
    return collect(POP3, REPL, 2, 1_000_000, 3)


@pytest.mark.parametrize("model", [REPL, CouplingModel.kfold(2), CouplingModel.surreplacement(3)], ids=str)
def test_collect_singleton(model):
    emp = collect(from_values([7]), model, 1, 1000, 0)
    assert emp.counts == {(7.0, 7.0): 1000}


def test_collect_deterministic_and_worker_independent():
    pop = from_values([0, 1, 2, 4])
    a = collect(pop, CouplingModel.surreplacement(2), 3, 200_000, 99, workers=1)
    b = collect(pop, CouplingModel.surreplacement(2), 3, 200_000, 99, workers=4)
    assert a.counts == b.counts and a.to_csv() == b.to_csv()
    assert sum(a.counts.values()) == 200_000


def test_collect_matches_oracle_joint(repl_emp):
    joint = enumerate_joint(POP3, REPL, 2)
    M = repl_emp.trials
    assert len(repl_emp.counts) <= len(joint.support)
    for (s, t), p in joint.support.items():
        p = float(p)
        freq = repl_emp.counts.get((float(s), float(t)), 0) / M
        assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / M)


def test_martingale_test(repl_emp):
    assert martingale_test(repl_emp).passed
    degenerate = collect(from_values([3]), REPL, 1, 500, 1)
    rep = martingale_test(degenerate)
    assert rep.passed and all(r["mean_T"] == r["s"] for r in rep.rows[:-1])
    shifted = EmpiricalJoint({(s, s + 1.0): c for (s, _), c in repl_emp.counts.items()},
                             repl_emp.trials, 0, REPL, 2, POP3.values)
    merged: dict = {}
    for key, c in shifted.counts.items():
        merged[key] = merged.get(key, 0) + c
    shifted.counts = merged
    assert not martingale_test(shifted).passed


def test_marginal_gof(repl_emp):
    S = exact_without_replacement(POP3, 2)
    T = exact_with_replacement(POP3, 2)
    assert marginal_gof_test(repl_emp, S, T).passed
    wrong = collect(POP3, CouplingModel.kfold(1), 2, 1_000_000, 3)
    # kfold with k=1 draws T without replacement: P(T=0) is 0 instead of 1/9
    assert not marginal_gof_test(wrong, S, T).passed
    single = collect(from_values([4]), REPL, 1, 100, 0)
    assert marginal_gof_test(single, exact_without_replacement(from_values([4]), 1),
                             exact_with_replacement(from_values([4]), 1)).passed


def test_marginal_gof_support_mismatch(repl_emp):
    S = exact_without_replacement(POP3, 2)
    with pytest.raises(SupportMismatch):
        marginal_gof_test(repl_emp, S, S)


def test_convex_function_test(repl_emp):
    rep = convex_function_test(repl_emp)
    assert rep.passed
    linear = convex_function_test(repl_emp, [("x", lambda x: x), ("-x", lambda x: -x)])
    assert linear.passed
    assert all(abs(r["z"]) < 4 for r in linear.rows)
    square = convex_function_test(repl_emp, [("x^2", lambda x: x * x)]).rows[0]
    # E[T^2] - E[S^2] = 16/3 - 14/3 on this instance
    S = exact_without_replacement(POP3, 2)
    T = exact_with_replacement(POP3, 2)
    want = T.expect(lambda x: x * x) - S.expect(lambda x: x * x)
    assert want == Fraction(2, 3)
    assert abs(square["mean_diff"] - float(want)) <= 4 * square["se"]
    hinge = convex_function_test(repl_emp, [("h2", lambda x: np.maximum(x - 2, 0))]).rows[0]
    want_h = hinge_expectation(T, 2) - hinge_expectation(S, 2)
    assert want_h == Fraction(4, 9) - Fraction(1, 3)
    assert abs(hinge["mean_diff"] - float(want_h)) <= 4 * hinge["se"]


def test_means_test(repl_emp):
    assert means_test(repl_emp).passed


def test_surreplacement_law_cells():
    rep = surreplacement_law_test(from_values([0, 1]), 2, 2, 200_000, 5)
    assert rep.passed
    cell = next(r for r in rep.rows if r["step"] == 2 and r["prior_hits"] == 1)
    assert cell["expected"] == Fraction(2, 3)
    rep3 = surreplacement_law_test(from_values([0, 1, 2]), 3, 2, 200_000, 5)
    assert rep3.passed
    cell = next(r for r in rep3.rows if r["step"] == 2 and r["prior_hits"] == 0)
    assert cell["expected"] == Fraction(1, 5)
    rep1 = surreplacement_law_test(from_values([0, 1, 2]), 1, 3, 100_000, 5)
    assert rep1.passed and all(r["expected"] == Fraction(1, 3) for r in rep1.rows)


@pytest.mark.parametrize("model", [REPL, CouplingModel.kfold(2), CouplingModel.surreplacement(2)], ids=str)
def test_suite_on_noninteger_population(model):
    pop = from_values(["0", "0.1", "0.7", "1.3"])
    emp = collect(pop, model, 3, 300_000, 21)
    assert not emp.integral
    assert martingale_test(emp).passed
    assert marginal_gof_test(emp, exact_without_replacement(pop, 3), exact_marginal_T(pop, model, 3)).passed
    assert convex_function_test(emp).passed


def test_bin_key():
    assert bin_key(0.1 + 0.2, False) == bin_key(0.3, False)
    assert bin_key(3.0, True) == 3.0


def test_report_json_and_csv(repl_emp):
    text = martingale_test(repl_emp).to_json()
    assert json.loads(text)["name"] == "mc_martingale"
    lines = repl_emp.to_csv().splitlines()
    assert lines[0] == "s,t,count" and len(lines) - 1 == len(repl_emp.counts) <= 15
