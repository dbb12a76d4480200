"""Chernoff upper-tail bounds for binomial sums and their hypergeometric transfer.

All bound arithmetic is done on the log scale and exponentiated last, so
``(...)**n`` does not underflow for large n.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

from .errors import DomainError, InvalidArgument

# p + q within this distance of 1 is treated as exactly 1 (lattice sweeps
# such as 0.35 + 0.65 do not land on 1.0 in binary64)
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ChernoffResult:
    u_star: float
    log_bound: float
    bound: float
    tail_empty: bool = False


@dataclass(frozen=True)
class BinomialParams:
    n: int
    p: float
    q: float


def mgf_binomial(n: int, p: float, u: float) -> float:
    """(p e^u + 1 - p)^n."""
    if not 0 <= p <= 1:
        raise InvalidArgument("p must lie in [0, 1]")
    return math.exp(n * math.log1p(p * math.expm1(u)))


def log_mgf_binomial(n: int, p: float, u: float) -> float:
    return n * math.log1p(p * math.expm1(u))


def chernoff_generic(
    mgf: Callable[[float], float],
    w: float,
    u_max: float = 50.0,
    tol: float = 1e-12,
    log_mgf: Callable[[float], float] | None = None,
) -> ChernoffResult:
    """Minimise -u w + log M(u) over [0, u_max] by ternary search.

    The objective is convex in u (log M is convex by Hölder), so ternary
    search converges to the global minimiser. If the interior search does not
    beat u = 0, u_star is reported as 0 and the bound is 1.
    """
    if not u_max > 0:
        raise InvalidArgument("u_max must be positive")

    def g(u: float) -> float:
        try:
            val = log_mgf(u) if log_mgf is not None else None
            m = mgf(u) if log_mgf is None else None
        except OverflowError as exc:
            raise DomainError(f"mgf overflows at u={u}") from exc
        if val is None:
            if not math.isfinite(m) or m <= 0:
                raise DomainError(f"mgf({u}) = {m} is not a positive finite number")
            val = math.log(m)
        if not math.isfinite(val):
            raise DomainError(f"log mgf({u}) = {val} is not finite")
        return -u * w + val

    lo, hi = 0.0, float(u_max)
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
        if m1 == lo and m2 == hi:  # interval can no longer shrink in binary64
            break
    u = (lo + hi) / 2
    g0, gu = g(0.0), g(u)
    if not gu < g0 - 1e-15:
        return ChernoffResult(u_star=0.0, log_bound=min(g0, 0.0), bound=min(math.exp(g0), 1.0))
    log_bound = min(gu, 0.0)
    return ChernoffResult(u_star=u, log_bound=log_bound, bound=math.exp(log_bound))


def _xlogy(x: float, y: float) -> float:
    """x * log(y) with the 0 * log(anything) = 0 convention."""
    if x == 0:
        return 0.0
    if y == 0:
        return -math.inf
    return x * math.log(y)


def chernoff_binomial_closed(params: BinomialParams) -> ChernoffResult:
    """Optimised Chernoff bound on P(T_n >= (p+q) n) for T_n ~ Bin(n, p):

        [ (p/(p+q))^(p+q) * ((1-p)/(1-p-q))^(1-p-q) ]^n
    """
    n, p, q = params.n, float(params.p), float(params.q)
    if not 0 <= p <= 1 or q < 0 or q > 1:
        raise InvalidArgument("need 0 <= p <= 1 and 0 <= q <= 1")
    if n < 0:
        raise InvalidArgument("n must be non-negative")
    r = p + q
    if r > 1 + EDGE_TOL:
        return ChernoffResult(u_star=math.inf, log_bound=-math.inf, bound=0.0, tail_empty=True)
    if q == 0:
        return ChernoffResult(u_star=0.0, log_bound=0.0, bound=1.0)
    at_edge = abs(1 - r) <= EDGE_TOL
    rest = 0.0 if at_edge else 1 - r  # 1 - p - q
    r = 1.0 if at_edge else r
    per_draw = _xlogy(r, p / r) + (_xlogy(rest, (1 - p) / rest) if rest else 0.0)
    log_bound = min(n * per_draw, 0.0)
    if at_edge or p == 0:
        u_star = math.inf
    else:
        u_star = math.log(r * (1 - p) / (rest * p))
    return ChernoffResult(u_star=u_star, log_bound=log_bound, bound=math.exp(log_bound))


def hypergeometric_transfer_bound(a: int, b: int, n: int, q: float) -> ChernoffResult:
    """The binomial bound with p = a/(a+b), valid for the hypergeometric tail
    P(S_n >= (p+q) n) through M_S(u) <= M_T(u)."""
    if a < 0 or b < 0 or a + b < 1:
        raise InvalidArgument("need a, b >= 0 and a + b >= 1")
    if not 1 <= n <= a + b:
        raise InvalidArgument("need 1 <= n <= a + b")
    if q < 0:
        raise InvalidArgument("q must be non-negative")
    return chernoff_binomial_closed(BinomialParams(n, a / (a + b), q))


@dataclass(frozen=True)
class ComparisonRow:
    a: int
    b: int
    n: int
    q: float
    p: float
    w: int
    hyper_exact: float
    binom_exact: float
    chernoff_bound: float
    hyper_ok: bool
    binom_ok: bool
    mgf_ok: bool

    @property
    def valid(self) -> bool:
        return self.hyper_ok and self.binom_ok and self.mgf_ok

    CSV_COLUMNS = ("a", "b", "n", "q", "p", "w", "hyper_exact", "binom_exact", "chernoff_bound")

    def csv_fields(self) -> list[str]:
        d = asdict(self)
        return [repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in self.CSV_COLUMNS]


def threshold(a: int, b: int, n: int, q) -> int:
    """ceil((p + q) n) computed exactly; float q is read as its shortest decimal."""
    qf = Fraction(repr(q)) if isinstance(q, float) else Fraction(q)
    return math.ceil((Fraction(a, a + b) + qf) * n)


def compare_tails(a: int, b: int, n: int, q: float, slack: float = 1e-12,
                  u_grid=(-2, -1, -0.5, 0.5, 1, 2)) -> ComparisonRow:
    """Exact hypergeometric and binomial tails at w = ceil((p+q)n) next to the bound."""
    from . import oracle

    res = hypergeometric_transfer_bound(a, b, n, q)
    w = threshold(a, b, n, q)
    p = Fraction(a, a + b)
    hyper = oracle.hypergeom_tail(a, b, n, w)
    binom = oracle.binom_tail(n, p, w)
    bound = res.bound
    dS = oracle.hypergeometric_dist(a, b, n)
    dT = oracle.Dist(dict(enumerate(_binomial_pmf(n, p))))
    mgf_report = oracle.mgf_ordering_check(dS, dT, u_grid)
    return ComparisonRow(
        a=a, b=b, n=n, q=float(q), p=float(p), w=w,
        hyper_exact=float(hyper), binom_exact=float(binom), chernoff_bound=bound,
        hyper_ok=hyper <= Fraction(bound + slack),
        binom_ok=binom <= Fraction(bound + slack),
        mgf_ok=mgf_report.passed,
    )


def _binomial_pmf(n: int, p: Fraction) -> list[Fraction]:
    return [math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(n + 1)]
