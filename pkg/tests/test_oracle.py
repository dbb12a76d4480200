"""Exact oracle checks. Expected laws come from brute-force enumeration over
itertools product/permutations, independent of the DP code paths."""

import itertools
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupling_lab.coupling import CouplingModel
from coupling_lab.errors import InstanceTooLarge, InvalidArgument
from coupling_lab.oracle import (
    Dist,
    JointDist,
    binom_tail,
    check_martingale,
    convex_order_check,
    enumerate_joint,
    exact_kfold_sample,
    exact_marginal_T,
    exact_surreplacement_sample,
    exact_with_replacement,
    exact_without_replacement,
    fraction_to_decimal,
    hinge_expectation,
    hypergeom_tail,
    mgf_ordering_check,
)
from coupling_lab.population import from_values, multiply, two_color_urn

F = Fraction
REPL = CouplingModel.replacement()
SMALL_MODELS = [REPL, CouplingModel.kfold(2), CouplingModel.surreplacement(2),
                CouplingModel.surreplacement(3)]


def law_of(sums):
    out = {}
    total = 0
    for s, w in sums:
        out[F(s)] = out.get(F(s), 0) + w
        total += w
    return Dist({k: F(v, total) for k, v in out.items()})


def brute_without(vals, n):
    return law_of((sum(p[:n]), 1) for p in itertools.permutations(vals))


def brute_with(vals, n):
    return law_of((sum(p), 1) for p in itertools.product(vals, repeat=n))


def brute_kfold(vals, k, n):
    return brute_without([v for v in vals for _ in range(k)], n)


def brute_surreplacement(vals, d, n):
    """Walk every sequence of labels with its Polya-urn probability."""
    N = len(vals)
    law = {}
    for seq in itertools.product(range(N), repeat=n):
        p = F(1)
        for i, j in enumerate(seq):
            p *= F(1 + seq[:i].count(j) * (d - 1), N + i * (d - 1))
        t = F(sum(vals[j] for j in seq))
        law[t] = law.get(t, 0) + p
    return Dist(law)


def test_enumerate_replacement_example():
    joint = enumerate_joint(from_values([0, 1, 2]), REPL, 2)
    assert joint.marginal_S == Dist({1: F(1, 3), 2: F(1, 3), 3: F(1, 3)})
    assert joint.marginal_T == Dist({0: F(1, 9), 1: F(2, 9), 2: F(3, 9), 3: F(2, 9), 4: F(1, 9)})
    assert joint.total() == 1


@pytest.mark.parametrize("model", SMALL_MODELS, ids=str)
def test_enumerate_singleton_point_mass(model):
    joint = enumerate_joint(from_values(["2.5"]), model, 1)
    assert joint.support == {(F(5, 2), F(5, 2)): F(1)}


def test_enumerate_kfold_example():
    joint = enumerate_joint(from_values([0, 1]), CouplingModel.kfold(2), 2)
    assert joint.marginal_T.prob(1) == F(2, 3)


def test_enumerate_rejects_floats_and_large():
    with pytest.raises(InvalidArgument):
        enumerate_joint(from_values([0.5, 1.0]), REPL, 1)
    with pytest.raises(InstanceTooLarge):
        enumerate_joint(two_color_urn(20, 20), REPL, 10)
    with pytest.raises(InstanceTooLarge):
        enumerate_joint(from_values(range(6)), REPL, 6, budget=1000)
    with pytest.raises(InvalidArgument):
        enumerate_joint(from_values([0, 1]), REPL, 3)


def test_check_martingale_examples():
    assert check_martingale(enumerate_joint(from_values([0, 1, 2]), REPL, 2)).value == 0
    assert check_martingale(JointDist({(F(3), F(3)): F(1)})).passed
    bad = check_martingale(JointDist({(F(0), F(1)): F(1, 2), (F(1), F(0)): F(1, 2)}))
    assert not bad.passed and bad.value == 1


def test_without_replacement_examples():
    assert exact_without_replacement(from_values([0, 1, 2]), 2) == Dist({1: F(1, 3), 2: F(1, 3), 3: F(1, 3)})
    assert exact_without_replacement(from_values([1, 4, 9]), 3) == Dist({14: 1})
    assert exact_without_replacement(two_color_urn(2, 2), 2) == Dist({0: F(1, 6), 1: F(4, 6), 2: F(1, 6)})


def test_with_replacement_examples():
    assert exact_with_replacement(from_values([0, 1, 2]), 2) == brute_with([0, 1, 2], 2)
    assert exact_with_replacement(from_values([3, 3, 5]), 1) == Dist({3: F(2, 3), 5: F(1, 3)})
    binom = Dist({j: F(math.comb(3, j), 8) for j in range(4)})
    assert exact_with_replacement(two_color_urn(1, 1), 3) == binom


def test_kfold_sample_examples():
    pop = from_values([0, 1, 3])
    assert exact_kfold_sample(pop, 1, 2) == exact_without_replacement(pop, 2)
    assert exact_kfold_sample(from_values([0, 1]), 2, 2) == Dist({0: F(1, 6), 1: F(4, 6), 2: F(1, 6)})
    assert exact_kfold_sample(pop, 2, 6) == Dist({8: 1})


def test_surreplacement_sample_examples():
    pop = from_values([0, 1, 2])
    assert exact_surreplacement_sample(pop, 1, 3) == exact_with_replacement(pop, 3)
    assert exact_surreplacement_sample(from_values([0, 1]), 2, 2) == Dist({0: F(1, 3), 1: F(1, 3), 2: F(1, 3)})
    for d in (1, 2, 5):
        assert exact_surreplacement_sample(pop, d, 1) == Dist({0: F(1, 3), 1: F(1, 3), 2: F(1, 3)})


small_vals = st.lists(st.integers(-3, 4), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(small_vals, st.data())
def test_marginal_laws_match_brute_force(vals, data):
    pop = from_values(vals)
    n = data.draw(st.integers(1, len(vals)))
    k = data.draw(st.integers(1, 2))
    d = data.draw(st.integers(1, 3))
    assert exact_without_replacement(pop, n) == brute_without(vals, n)
    assert exact_with_replacement(pop, n) == brute_with(vals, n)
    assert exact_kfold_sample(pop, k, n) == brute_kfold(vals, k, n)
    assert exact_surreplacement_sample(pop, d, n) == brute_surreplacement(vals, d, n)


@settings(max_examples=40, deadline=None)
@given(small_vals, st.sampled_from(SMALL_MODELS), st.data())
def test_joint_properties(vals, model, data):
    pop = from_values(vals)
    n = data.draw(st.integers(1, len(vals)))
    joint = enumerate_joint(pop, model, n)
    assert joint.total() == 1
    assert check_martingale(joint).passed
    assert joint.marginal_S == exact_without_replacement(pop, n)
    assert joint.marginal_T == exact_marginal_T(pop, model, n)
    assert convex_order_check(joint.marginal_S, joint.marginal_T).passed


@settings(max_examples=25, deadline=None)
@given(small_vals, st.sampled_from(SMALL_MODELS), st.randoms(use_true_random=False), st.data())
def test_joint_permutation_invariance(vals, model, rnd, data):
    n = data.draw(st.integers(1, len(vals)))
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    a = enumerate_joint(from_values(vals), model, n)
    b = enumerate_joint(from_values(shuffled), model, n)
    assert a.support == b.support


def test_tails():
    assert binom_tail(3, F(1, 2), 3) == F(1, 8)
    assert hypergeom_tail(2, 2, 2, 2) == F(1, 6)
    for n in (0, 4, 9):
        assert binom_tail(n, F(1, 3), 0) == 1
    assert binom_tail(4, F(1, 2), 5) == 0
    with pytest.raises(InvalidArgument):
        binom_tail(3, F(3, 2), 1)
    with pytest.raises(InvalidArgument):
        hypergeom_tail(2, 2, 5, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.data())
def test_hypergeom_tail_matches_urn_law(a, b, data):
    if a + b == 0:
        return
    n = data.draw(st.integers(1, a + b))
    w = data.draw(st.integers(-1, n + 1))
    subsets = list(itertools.combinations([1] * a + [0] * b, n))
    want = F(sum(1 for c in subsets if sum(c) >= w), len(subsets))
    assert hypergeom_tail(a, b, n, w) == want


def test_hinge_and_convex_order():
    S = exact_without_replacement(from_values([0, 1, 2]), 2)
    T = exact_with_replacement(from_values([0, 1, 2]), 2)
    assert convex_order_check(S, S).passed
    assert all(r["margin"] == 0 for r in convex_order_check(S, S).rows)
    assert convex_order_check(S, T).passed
    assert hinge_expectation(S, 2) == F(1, 3)
    assert hinge_expectation(T, 2) == F(4, 9)
    point, spread = Dist({1: 1}), Dist({0: F(1, 2), 2: F(1, 2)})
    assert convex_order_check(point, spread).passed
    assert not convex_order_check(spread, point).passed


def test_mgf_ordering():
    S = exact_without_replacement(from_values([0, 1, 2]), 2)
    T = exact_with_replacement(from_values([0, 1, 2]), 2)
    r0 = mgf_ordering_check(S, T, [0])
    assert r0.rows[0]["M_S"] == 1.0 and r0.rows[0]["M_T"] == 1.0
    assert mgf_ordering_check(S, T, [-2, -1, 1, 2]).passed
    same = mgf_ordering_check(T, T, [-2, -1, 1, 2])
    assert same.passed and all(abs(r["relative_margin"]) < 1e-12 for r in same.rows)
    assert not mgf_ordering_check(T, S, [1]).passed


def test_joint_json_roundtrip():
    joint = enumerate_joint(from_values(["0", "0.5", "1.25"]), CouplingModel.kfold(2), 2)
    data = json.loads(joint.to_json())
    assert data["n"] == 2 and data["model"] == {"kind": "kfold", "k": 2}
    row = data["support"][0]
    assert set(row) == {"s", "t", "num", "den"}
    assert JointDist.from_dict(data).support == joint.support


def test_fraction_to_decimal():
    assert fraction_to_decimal(F(5, 2)) == "2.5"
    assert fraction_to_decimal(F(-1, 8)) == "-0.125"
    assert fraction_to_decimal(F(3)) == "3"
    assert fraction_to_decimal(F(1, 3)) == "1/3"


def test_kfold_multiply_consistency():
    pop = from_values([0, 2, 5])
    assert exact_kfold_sample(pop, 2, 3) == exact_without_replacement(multiply(pop, 2), 3)
