"""Exact rational ground truth for the coupling processes and sampling laws.

Everything here works on :class:`fractions.Fraction`. Population values must
carry exact rationals (integers, Fractions or decimal strings); float-only
populations are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import mpmath

from .coupling import CouplingModel
from .errors import InstanceTooLarge, InvalidArgument
from .population import Population, two_color_urn
from .reports import ExactReport

DEFAULT_BUDGET = 10**7


def fraction_to_decimal(x: Fraction) -> str:
    """Exact decimal text for terminating fractions, ``"p/q"`` otherwise."""
    x = Fraction(x)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(twos, fives)
    scaled = x * 10**places
    assert scaled.denominator == 1
    num = scaled.numerator
    sign = "-" if num < 0 else ""
    digits = str(abs(num)).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


@dataclass
class Dist:
    """Finite law: value -> exact probability."""

    support: dict[Fraction, Fraction]

    def __post_init__(self):
        self.support = {Fraction(k): Fraction(v) for k, v in self.support.items() if v}

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def mean(self) -> Fraction:
        return sum((x * p for x, p in self.support.items()), Fraction(0))

    def expect(self, f: Callable[[Fraction], Fraction]) -> Fraction:
        return sum((f(x) * p for x, p in self.support.items()), Fraction(0))

    def prob(self, x) -> Fraction:
        return self.support.get(Fraction(x), Fraction(0))

    def items(self):
        return sorted(self.support.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, Dist) and self.support == other.support


@dataclass
class JointDist:
    """Exact joint law of (S_n, T_n) for one coupling model."""

    support: dict[tuple[Fraction, Fraction], Fraction]
    model: CouplingModel | None = None
    n: int | None = None
    marginal_S: Dist = field(init=False)
    marginal_T: Dist = field(init=False)

    def __post_init__(self):
        s: dict[Fraction, Fraction] = {}
        t: dict[Fraction, Fraction] = {}
        for (a, b), p in self.support.items():
            s[a] = s.get(a, Fraction(0)) + p
            t[b] = t.get(b, Fraction(0)) + p
        self.marginal_S = Dist(s)
        self.marginal_T = Dist(t)

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "model": self.model.describe() if self.model else None,
            "n": self.n,
            "support": [
                {
                    "s": fraction_to_decimal(s),
                    "t": fraction_to_decimal(t),
                    "num": str(p.numerator),
                    "den": str(p.denominator),
                }
                for (s, t), p in sorted(self.support.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "JointDist":
        support = {
            (Fraction(row["s"]), Fraction(row["t"])): Fraction(int(row["num"]), int(row["den"]))
            for row in data["support"]
        }
        model = CouplingModel(**data["model"]) if data.get("model") else None
        return cls(support, model=model, n=data.get("n"))


# enumeration of the truncated coupling process ------------------------------


def enumerate_joint(
    pop: Population, model: CouplingModel, n: int, budget: int = DEFAULT_BUDGET
) -> JointDist:
    c = pop.require_exact()
    N = len(c)
    if not 1 <= n <= N:
        raise InvalidArgument(f"n must satisfy 1 <= n <= N={N}, got {n}")
    if N**n > budget:
        raise InstanceTooLarge(N**n, budget)

    out: dict[tuple[Fraction, Fraction], Fraction] = {}
    nodes = 0
    kind, k, d = model.kind, model.k, model.d

    def tick():
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise InstanceTooLarge(nodes, budget)

    def complete(remaining: tuple[int, ...], S: Fraction, need: int, T: Fraction, p: Fraction):
        tick()
        if need == 0:
            key = (S, T)
            out[key] = out.get(key, Fraction(0)) + p
            return
        q = p / len(remaining)
        for idx, label in enumerate(remaining):
            complete(remaining[:idx] + remaining[idx + 1 :], S + c[label], need - 1, T, q)

    def step(i: int, remaining: tuple[int, ...], xi: tuple[int, ...], weights: tuple[int, ...],
             S: Fraction, T: Fraction, p: Fraction):
        tick()
        if i == n:
            complete(remaining, S, n - len(xi), T, p)
            return
        L = len(xi)
        if kind == "kfold":
            unlabelled, total = k * (N - L), k * N - i
        else:
            unlabelled, total = N - L, N + i * (d - 1)
        if unlabelled:
            q = p * Fraction(unlabelled, total) / len(remaining)
            fresh_weight = k - 1 if kind == "kfold" else 1
            for idx, label in enumerate(remaining):
                step(i + 1, remaining[:idx] + remaining[idx + 1 :], xi + (label,),
                     weights + (fresh_weight,), S + c[label], T + c[label], q)
        for pos, w in enumerate(weights):
            if kind == "kfold":
                balls, new_w = w, w - 1
            elif kind == "surreplacement":
                balls, new_w = 1 + w * (d - 1), w + 1
            else:
                balls, new_w = 1, w
            if balls == 0:
                continue
            new_weights = weights[:pos] + (new_w,) + weights[pos + 1 :]
            step(i + 1, remaining, xi, new_weights, S, T + c[xi[pos]], p * Fraction(balls, total))

    step(0, tuple(range(N)), (), (), Fraction(0), Fraction(0), Fraction(1))
    return JointDist(out, model=model, n=n)


def check_martingale(joint: JointDist) -> ExactReport:
    """E[T | S = s] == s exactly for every s in the support of S."""
    cond: dict[Fraction, Fraction] = {}
    for (s, t), p in joint.support.items():
        cond[s] = cond.get(s, Fraction(0)) + t * p
    worst = Fraction(0)
    rows = []
    for s, ps in joint.marginal_S.items():
        m = cond[s] / ps
        dev = abs(m - s)
        worst = max(worst, dev)
        rows.append({"s": s, "P(S=s)": ps, "E[T|S=s]": m, "deviation": dev})
    return ExactReport("exact_martingale", worst == 0, value=worst, threshold=Fraction(0), rows=rows)


# marginal laws --------------------------------------------------------------


def _guard(work: int, budget: int) -> None:
    if work > budget:
        raise InstanceTooLarge(work, budget)


def exact_without_replacement(pop: Population, n: int, budget: int = DEFAULT_BUDGET) -> Dist:
    """Law of the sum of a uniform random n-subset, by subset-sum counting."""
    c = pop.require_exact()
    N = len(c)
    if not 1 <= n <= N:
        raise InvalidArgument(f"n must satisfy 1 <= n <= N={N}, got {n}")
    # ways[j][s] = number of j-subsets of the items seen so far with sum s
    ways: list[dict[Fraction, int]] = [{Fraction(0): 1}] + [{} for _ in range(n)]
    work = 0
    for value in c:
        for j in range(min(n, N) - 1, -1, -1):
            for s, w in ways[j].items():
                key = s + value
                ways[j + 1][key] = ways[j + 1].get(key, 0) + w
                work += 1
        _guard(work, budget)
    denom = math.comb(N, n)
    return Dist({s: Fraction(w, denom) for s, w in ways[n].items()})


def _single_draw(c: Iterable[Fraction]) -> dict[Fraction, Fraction]:
    c = list(c)
    law: dict[Fraction, Fraction] = {}
    for v in c:
        law[v] = law.get(v, Fraction(0)) + Fraction(1, len(c))
    return law


def exact_with_replacement(pop: Population, n: int, budget: int = DEFAULT_BUDGET) -> Dist:
    c = pop.require_exact()
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    one = _single_draw(c)
    law = dict(one)
    work = 0
    for _ in range(n - 1):
        nxt: dict[Fraction, Fraction] = {}
        for s, p in law.items():
            for v, q in one.items():
                nxt[s + v] = nxt.get(s + v, Fraction(0)) + p * q
        work += len(law) * len(one)
        _guard(work, budget)
        law = nxt
    return Dist(law)


def exact_kfold_sample(pop: Population, k: int, n: int, budget: int = DEFAULT_BUDGET) -> Dist:
    """Sum of n draws without replacement from the k-fold population."""
    c = pop.require_exact()
    N = len(c)
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if not 1 <= n <= k * N:
        raise InvalidArgument(f"n must satisfy 1 <= n <= kN={k * N}, got {n}")
    # ways[j][s]: weighted count of ways to take j balls with sum s so far
    ways: list[dict[Fraction, int]] = [{Fraction(0): 1}] + [{} for _ in range(n)]
    work = 0
    for value in c:
        nxt: list[dict[Fraction, int]] = [dict(level) for level in ways]
        for j in range(n + 1):
            for s, w in ways[j].items():
                for m in range(1, min(k, n - j) + 1):
                    key = s + m * value
                    nxt[j + m][key] = nxt[j + m].get(key, 0) + w * math.comb(k, m)
                    work += 1
        _guard(work, budget)
        ways = nxt
    denom = math.comb(k * N, n)
    return Dist({s: Fraction(w, denom) for s, w in ways[n].items()})


def exact_surreplacement_sample(
    pop: Population, d: int, n: int, budget: int = DEFAULT_BUDGET
) -> Dist:
    """Law of T_n when a label hit k times before step i is drawn w.p.
    (1 + k(d-1)) / (N + (i-1)(d-1))."""
    c = pop.require_exact()
    N = len(c)
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    states: dict[tuple[int, ...], Fraction] = {(0,) * N: Fraction(1)}
    work = 0
    for i in range(n):
        total = N + i * (d - 1)
        nxt: dict[tuple[int, ...], Fraction] = {}
        for hits, p in states.items():
            for j in range(N):
                q = p * Fraction(1 + hits[j] * (d - 1), total)
                key = hits[:j] + (hits[j] + 1,) + hits[j + 1 :]
                nxt[key] = nxt.get(key, Fraction(0)) + q
            work += N
        _guard(work, budget)
        states = nxt
    law: dict[Fraction, Fraction] = {}
    for hits, p in states.items():
        t = sum((h * v for h, v in zip(hits, c)), Fraction(0))
        law[t] = law.get(t, Fraction(0)) + p
    return Dist(law)


def exact_marginal_T(pop: Population, model: CouplingModel, n: int,
                     budget: int = DEFAULT_BUDGET) -> Dist:
    if model.kind == "replacement":
        return exact_with_replacement(pop, n, budget)
    if model.kind == "kfold":
        return exact_kfold_sample(pop, model.k, n, budget)
    return exact_surreplacement_sample(pop, model.d, n, budget)


# exact tails ----------------------------------------------------------------


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _ceil_threshold(w) -> int:
    return math.ceil(_as_fraction(w))


def binomial_tails(n: int, p) -> list[Fraction]:
    """``tails[w] = P(Bin(n, p) >= w)`` for w = 0..n+1."""
    p = _as_fraction(p)
    if not 0 <= p <= 1:
        raise InvalidArgument("p must lie in [0, 1]")
    if n < 0:
        raise InvalidArgument("n must be >= 0")
    pmf = [math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(n + 1)]
    tails = [Fraction(0)] * (n + 2)
    for j in range(n, -1, -1):
        tails[j] = tails[j + 1] + pmf[j]
    return tails


def hypergeometric_tails(a: int, b: int, n: int) -> list[Fraction]:
    """``tails[w] = P(S >= w)`` for w = 0..n+1, S = red balls among n drawn."""
    if a < 0 or b < 0 or not 0 <= n <= a + b:
        raise InvalidArgument("need a, b >= 0 and 0 <= n <= a + b")
    denom = math.comb(a + b, n)
    counts = [math.comb(a, j) * math.comb(b, n - j) for j in range(n + 1)]
    tails = [Fraction(0)] * (n + 2)
    acc = 0
    for j in range(n, -1, -1):
        acc += counts[j]
        tails[j] = Fraction(acc, denom)
    return tails


def _tail_at(tails: list[Fraction], w) -> Fraction:
    wi = _ceil_threshold(w)
    if wi <= 0:
        return Fraction(1)
    if wi >= len(tails):
        return Fraction(0)
    return tails[wi]


def binom_tail(n: int, p, w) -> Fraction:
    return _tail_at(binomial_tails(n, p), w)


def hypergeom_tail(a: int, b: int, n: int, w) -> Fraction:
    return _tail_at(hypergeometric_tails(a, b, n), w)


# convex order ---------------------------------------------------------------


def hinge_expectation(dist: Dist, a) -> Fraction:
    a = Fraction(a)
    return dist.expect(lambda x: max(x - a, Fraction(0)))


def convex_order_check(distS: Dist, distT: Dist) -> ExactReport:
    """S <=_C T on finite supports: equal means and E(S-a)+ <= E(T-a)+ at every
    support point a of either law."""
    mean_gap = distT.mean() - distS.mean()
    rows = []
    worst = None
    for a in sorted(set(distS.support) | set(distT.support)):
        hs, ht = hinge_expectation(distS, a), hinge_expectation(distT, a)
        margin = ht - hs
        worst = margin if worst is None else min(worst, margin)
        rows.append({"a": a, "E(S-a)+": hs, "E(T-a)+": ht, "margin": margin})
    passed = mean_gap == 0 and worst >= 0
    return ExactReport(
        "exact_convex_order",
        passed,
        value=worst,
        threshold=Fraction(0),
        rows=rows,
        note=f"mean(T) - mean(S) = {mean_gap}",
    )


def mgf(dist: Dist, u) -> mpmath.mpf:
    u = mpmath.mpf(u)
    return mpmath.fsum(mpmath.mpf(p.numerator) / p.denominator * mpmath.exp(u * mpmath.mpf(x.numerator) / x.denominator)
                       for x, p in dist.support.items())


def mgf_ordering_check(distS: Dist, distT: Dist, u_grid: Iterable[float],
                       rel_tol: float = 1e-12) -> ExactReport:
    """M_S(u) <= M_T(u) (1 + rel_tol) at each grid point, evaluated at 40 digits."""
    rows = []
    passed = True
    worst = math.inf
    with mpmath.workdps(40):
        for u in u_grid:
            ms, mt = mgf(distS, u), mgf(distT, u)
            rel = float((mt - ms) / mt)
            ok = ms <= mt * (1 + mpmath.mpf(rel_tol))
            passed &= bool(ok)
            worst = min(worst, rel)
            rows.append({"u": float(u), "M_S": float(ms), "M_T": float(mt),
                         "relative_margin": rel, "ok": bool(ok)})
    return ExactReport("mgf_ordering", passed, value=worst, threshold=-rel_tol, rows=rows)


# bundled exact verification -------------------------------------------------


def exact_suite(pop: Population, model: CouplingModel, n: int,
                budget: int = DEFAULT_BUDGET,
                u_grid: Iterable[float] = (-2, -1, -0.5, 0.5, 1, 2)) -> tuple[JointDist, list[ExactReport]]:
    """Enumerate the coupling and run every exact check on it."""
    joint = enumerate_joint(pop, model, n, budget)
    want_S = exact_without_replacement(pop, n, budget)
    want_T = exact_marginal_T(pop, model, n, budget)
    reports = [
        ExactReport("exact_total_mass", joint.total() == 1, value=joint.total(), threshold=Fraction(1)),
        check_martingale(joint),
        ExactReport("exact_marginal_S", joint.marginal_S == want_S),
        ExactReport("exact_marginal_T", joint.marginal_T == want_T, note=str(model)),
        convex_order_check(joint.marginal_S, joint.marginal_T),
        mgf_ordering_check(joint.marginal_S, joint.marginal_T, u_grid),
    ]
    return joint, reports


def hypergeometric_dist(a: int, b: int, n: int) -> Dist:
    return exact_without_replacement(two_color_urn(a, b), n)
