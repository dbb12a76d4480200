"""Monte Carlo collection and the statistical checks run on it.

Trials are simulated in fixed-size chunks of consecutive stream ids, so the
aggregated integer counts (and every report computed from them) do not
depend on how many worker threads ran the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .coupling import CouplingModel, simulate_batch
from .errors import InvalidArgument, SupportMismatch
from .population import Population
from .reports import TestReport

CHUNK = 1 << 16
Z = 4.0
ALPHA = 1e-6
MIN_BIN = 100
MIN_EXPECTED = 5.0


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("COUPLING_LAB_THREADS")
    n = requested or min(os.cpu_count() or 1, 8)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def bin_key(x: float, integral: bool) -> float:
    """Sums are binned exactly for integer populations, else at 12 significant digits."""
    if integral:
        return float(x)
    return float(f"{x:.12g}")


def _fmt_value(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass
class EmpiricalJoint:
    counts: dict[tuple[float, float], int]
    trials: int
    master_seed: int
    model: CouplingModel
    n: int
    population: tuple[float, ...] = ()
    integral: bool = True

    def marginal(self, which: str) -> dict[float, int]:
        idx = 0 if which == "S" else 1
        out: dict[float, int] = {}
        for key, c in self.counts.items():
            out[key[idx]] = out.get(key[idx], 0) + c
        return out

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        keys = sorted(self.counts)
        s = np.array([k[0] for k in keys], dtype=float)
        t = np.array([k[1] for k in keys], dtype=float)
        w = np.array([self.counts[k] for k in keys], dtype=float)
        return s, t, w

    def to_csv(self) -> str:
        lines = ["s,t,count"]
        for s, t in sorted(self.counts):
            lines.append(f"{_fmt_value(s)},{_fmt_value(t)},{self.counts[(s, t)]}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        s, t, w = self.arrays()
        m = w.sum()
        return {
            "trials": self.trials,
            "mean_S": float((w * s).sum() / m),
            "mean_T": float((w * t).sum() / m),
            "var_S": float((w * (s - (w * s).sum() / m) ** 2).sum() / m),
            "var_T": float((w * (t - (w * t).sum() / m) ** 2).sum() / m),
            "cells": len(self.counts),
        }


def _chunks(trials: int, chunk: int):
    return [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]


def _map_chunks(fn, trials: int, workers: int | None):
    spans = _chunks(trials, CHUNK)
    nw = worker_count(workers)
    if nw == 1 or len(spans) == 1:
        return [fn(lo, hi) for lo, hi in spans]
    with ThreadPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(lambda span: fn(*span), spans))


def collect(pop: Population, model: CouplingModel, n: int, trials: int,
            master_seed: int, workers: int | None = None) -> EmpiricalJoint:
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    integral = pop.is_integral

    def run_chunk(lo, hi):
        b = simulate_batch(pop, model, n, master_seed, np.arange(lo, hi, dtype=np.uint64))
        pairs, cnt = np.unique(np.stack([b.S, b.T], axis=1), axis=0, return_counts=True)
        return [((float(s), float(t)), int(c)) for (s, t), c in zip(pairs, cnt)]

    counts: dict[tuple[float, float], int] = {}
    for part in _map_chunks(run_chunk, trials, workers):
        for (s, t), c in part:
            key = (bin_key(s, integral), bin_key(t, integral))
            counts[key] = counts.get(key, 0) + c
    return EmpiricalJoint(counts, trials, master_seed, model, n,
                          population=tuple(pop.values), integral=integral)


def _within(dev: float, se: float, scale: float, z: float = Z) -> bool:
    if se > 0:
        return abs(dev) <= z * se
    return abs(dev) <= 1e-9 * max(1.0, abs(scale))


def martingale_test(emp: EmpiricalJoint, z: float = Z, min_bin: int = MIN_BIN) -> TestReport:
    """Per S-bin mean of T against s, plus a pooled test of E[T - S] = 0."""
    if not emp.counts:
        raise InvalidArgument("empty EmpiricalJoint")
    s, t, w = emp.arrays()
    rows = []
    passed = True
    worst = 0.0
    for sv in np.unique(s):
        sel = s == sv
        cnt = w[sel].sum()
        mt = (w[sel] * t[sel]).sum() / cnt
        var = (w[sel] * (t[sel] - mt) ** 2).sum() / (cnt - 1) if cnt > 1 else 0.0
        se = math.sqrt(var / cnt)
        dev = mt - sv
        mandatory = cnt >= min_bin
        ok = _within(dev, se, sv, z)
        if mandatory:
            passed &= ok
            worst = max(worst, abs(dev) / se if se > 0 else (0.0 if ok else math.inf))
        rows.append({"s": float(sv), "count": int(cnt), "mean_T": float(mt),
                     "se": se, "z": dev / se if se > 0 else 0.0,
                     "mandatory": mandatory, "ok": ok})
    diff = t - s
    m = w.sum()
    md = (w * diff).sum() / m
    vd = (w * (diff - md) ** 2).sum() / (m - 1) if m > 1 else 0.0
    sed = math.sqrt(vd / m)
    pooled_ok = _within(md, sed, float(np.abs(s).max()), z)
    passed &= pooled_ok
    rows.append({"s": "pooled T-S", "count": int(m), "mean_T": float(md), "se": sed,
                 "z": md / sed if sed > 0 else 0.0, "mandatory": True, "ok": pooled_ok})
    return TestReport("mc_martingale", bool(passed), value=worst, threshold=z, rows=rows,
                      note=str(emp.model))


def _chi_square(observed: dict[float, int], expected: dict[float, float], total: int,
                min_expected: float) -> tuple[float, int, float, list[dict]]:
    groups: list[tuple[list[float], float, int]] = []
    cur_keys: list[float] = []
    cur_e = 0.0
    cur_o = 0
    for key in sorted(expected):
        cur_keys.append(key)
        cur_e += expected[key] * total
        cur_o += observed.get(key, 0)
        if cur_e >= min_expected:
            groups.append((cur_keys, cur_e, cur_o))
            cur_keys, cur_e, cur_o = [], 0.0, 0
    if cur_keys:
        if groups:
            k, e, o = groups.pop()
            groups.append((k + cur_keys, e + cur_e, o + cur_o))
        else:
            groups.append((cur_keys, cur_e, cur_o))
    stat = sum((o - e) ** 2 / e for _, e, o in groups if e > 0)
    df = len(groups) - 1
    pval = float(sps.chi2.sf(stat, df)) if df > 0 else 1.0
    rows = [{"values": [float(x) for x in k], "expected": e, "observed": o} for k, e, o in groups]
    return stat, df, pval, rows


def marginal_gof_test(emp: EmpiricalJoint, expected_S, expected_T, alpha: float = ALPHA,
                      min_expected: float = MIN_EXPECTED) -> TestReport:
    """Chi-square goodness of fit of both empirical marginals; cells pooled to
    expected count >= ``min_expected``."""
    rows = []
    passed = True
    worst_p = 1.0
    for which, dist in (("S", expected_S), ("T", expected_T)):
        expected = {bin_key(float(x), emp.integral): float(p) for x, p in dist.support.items()}
        observed = emp.marginal(which)
        stray = sorted(set(observed) - set(expected))
        if stray:
            raise SupportMismatch(f"empirical {which} values {stray} outside expected support")
        stat, df, pval, groups = _chi_square(observed, expected, emp.trials, min_expected)
        ok = pval >= alpha
        passed &= ok
        worst_p = min(worst_p, pval)
        rows.append({"marginal": which, "chi2": stat, "df": df, "p_value": pval, "ok": ok,
                     "cells": groups})
    return TestReport("mc_marginal_gof", bool(passed), value=worst_p, threshold=alpha, rows=rows,
                      note=str(emp.model))


ConvexFn = tuple[str, Callable[[np.ndarray], np.ndarray]]


def default_convex_functions(emp: EmpiricalJoint) -> list[ConvexFn]:
    s, t, _ = emp.arrays()
    fns: list[ConvexFn] = []
    for a in np.unique(s):
        fns.append((f"hinge(x-{_fmt_value(a)})", lambda x, a=a: np.maximum(x - a, 0.0)))
    fns.append(("x^2", lambda x: x * x))
    span = float(max(s.max(), t.max()) - min(s.min(), t.min())) or 1.0
    for sign in (1, -1):
        u = sign / span
        fns.append((f"exp({u:.6g}x)", lambda x, u=u: np.exp(u * x)))
    return fns


def convex_function_test(emp: EmpiricalJoint, functions: Sequence[ConvexFn] | None = None,
                         z: float = Z) -> TestReport:
    """One-sided paired test of mean f(T) - f(S) >= 0 for each convex f."""
    fns = list(functions) if functions is not None else default_convex_functions(emp)
    if not fns:
        raise InvalidArgument("need at least one test function")
    s, t, w = emp.arrays()
    m = w.sum()
    rows = []
    passed = True
    worst = math.inf
    for name, f in fns:
        diff = f(t) - f(s)
        md = (w * diff).sum() / m
        vd = (w * (diff - md) ** 2).sum() / (m - 1) if m > 1 else 0.0
        se = math.sqrt(vd / m)
        scale = float(np.abs(f(s)).max()) if len(s) else 1.0
        ok = md >= -z * se if se > 0 else md >= -1e-9 * max(1.0, scale)
        passed &= ok
        zval = md / se if se > 0 else 0.0
        worst = min(worst, zval)
        rows.append({"function": name, "mean_diff": float(md), "se": se, "z": zval, "ok": ok})
    return TestReport("mc_convex_functions", bool(passed), value=worst, threshold=-z, rows=rows,
                      note=str(emp.model))


def means_test(emp: EmpiricalJoint, z: float = Z) -> TestReport:
    """Empirical means of S and of T each within z SE of n * mean(pop)."""
    target = emp.n * math.fsum(emp.population) / len(emp.population)
    s, t, w = emp.arrays()
    m = w.sum()
    rows = []
    passed = True
    for which, x in (("S", s), ("T", t)):
        mx = (w * x).sum() / m
        var = (w * (x - mx) ** 2).sum() / (m - 1) if m > 1 else 0.0
        se = math.sqrt(var / m)
        ok = _within(mx - target, se, target, z)
        passed &= ok
        rows.append({"marginal": which, "mean": float(mx), "target": target, "se": se, "ok": ok})
    return TestReport("mc_means", bool(passed), value=target, threshold=z, rows=rows,
                      note=str(emp.model))


def surreplacement_law_test(pop: Population, d: int, n: int, trials: int, master_seed: int,
                            z: float = Z, min_samples: int = MIN_BIN,
                            workers: int | None = None) -> TestReport:
    """Per (step i, prior hit count k) frequency of drawing a given label,
    against (1 + k(d-1)) / (N + (i-1)(d-1)).

    At each step every label with k prior hits is one opportunity; a trial
    contributes ``c`` opportunities and one hit at most, so the hit count of
    a cell is a sum of independent Bernoulli(c p) draws with variance
    sum(c p (1 - c p)).
    """
    model = CouplingModel.surreplacement(d)
    N = pop.size

    def run_chunk(lo, hi):
        b = simulate_batch(pop, model, n, master_seed, np.arange(lo, hi, dtype=np.uint64),
                           law_tally=True)
        return b.law_hits, b.law_opportunities, b.law_opportunities_sq

    hits = np.zeros((n, n), dtype=np.int64)
    opps = np.zeros((n, n), dtype=np.int64)
    opps_sq = np.zeros((n, n), dtype=np.int64)
    for h, o, o2 in _map_chunks(run_chunk, trials, workers):
        hits += h
        opps += o
        opps_sq += o2

    rows = []
    passed = True
    worst = 0.0
    for i in range(n):
        for k in range(i + 1):
            if opps[i, k] == 0:
                continue
            p = Fraction(1 + k * (d - 1), N + i * (d - 1))
            pf = float(p)
            mean = pf * opps[i, k]
            var = pf * opps[i, k] - pf * pf * opps_sq[i, k]
            sd = math.sqrt(max(var, 0.0))
            dev = hits[i, k] - mean
            mandatory = opps[i, k] >= min_samples
            ok = _within(dev, sd, mean, z)
            if mandatory:
                passed &= ok
                if sd > 0:
                    worst = max(worst, abs(dev) / sd)
            rows.append({"step": i + 1, "prior_hits": k, "opportunities": int(opps[i, k]),
                         "frequency": float(hits[i, k] / opps[i, k]), "expected": p,
                         "z": dev / sd if sd > 0 else 0.0, "mandatory": mandatory, "ok": ok})
    return TestReport("mc_surreplacement_law", bool(passed), value=worst, threshold=z, rows=rows,
                      note=f"d={d}")
