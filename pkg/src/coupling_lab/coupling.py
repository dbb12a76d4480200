"""Simulation of the three two-urn coupling processes.

Urn X holds the N labelled balls and is sampled without replacement; urn Y
starts with N unlabelled balls (kN for the k-fold model) and a Y-ball gets
its label from the next X-draw the first time it is drawn. Only the first n
Y-steps matter for (S_n, T_n); after them, xi(1..n) is completed with
further uniform X-draws.

Both urns are stored as counts. The Y-urn is laid out as "unlabelled balls
first, then the labelled balls grouped by assignment order", one uniform
integer picks a ball in that layout, and a triggered X-draw picks the r-th
remaining label in increasing label order. Labels are 0-based indices into
the population.

``run_*`` simulate one trajectory on a scalar :class:`RngStream`;
:func:`simulate_batch` runs many trials at once with numpy and consumes each
trial's stream identically, so both paths give the same trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidArgument
from .population import Population
from .rng import BatchRng, RngStream

Kind = Literal["replacement", "kfold", "surreplacement"]


@dataclass(frozen=True)
class CouplingModel:
    kind: Kind
    k: int = 1
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("replacement", "kfold", "surreplacement"):
            raise InvalidArgument(f"unknown model kind {self.kind!r}")
        if self.k < 1:
            raise InvalidArgument("k must be >= 1")
        if self.d < 1:
            raise InvalidArgument("d must be >= 1")

    @classmethod
    def replacement(cls) -> "CouplingModel":
        return cls("replacement")

    @classmethod
    def kfold(cls, k: int) -> "CouplingModel":
        return cls("kfold", k=k)

    @classmethod
    def surreplacement(cls, d: int) -> "CouplingModel":
        return cls("surreplacement", d=d)

    def describe(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "kfold":
            out["k"] = self.k
        elif self.kind == "surreplacement":
            out["d"] = self.d
        return out

    def __str__(self) -> str:
        if self.kind == "kfold":
            return f"kfold(k={self.k})"
        if self.kind == "surreplacement":
            return f"surreplacement(d={self.d})"
        return "replacement"


@dataclass(frozen=True)
class Trajectory:
    xi_prefix: tuple[int, ...]
    eta: tuple[int, ...]
    x_draw_count: int
    S: float
    T: float
    n: int
    seed: tuple[int, int]

    def check(self, pop: Population) -> None:
        """Assert the structural invariants of a coupled run."""
        assert len(self.xi_prefix) == self.n and len(self.eta) == self.n
        assert len(set(self.xi_prefix)) == self.n, "xi prefix repeats a label"
        for i, label in enumerate(self.eta):
            assert label in self.xi_prefix[: i + 1], "eta(i) not among xi(1..i)"
        assert self.S == _seq_sum(pop.values, self.xi_prefix)
        assert self.T == _seq_sum(pop.values, self.eta)


def coupled_sums(traj: Trajectory) -> tuple[float, float]:
    return traj.S, traj.T


def _seq_sum(values, labels) -> float:
    total = 0.0
    for j in labels:
        total += values[j]
    return total


def _check_n(pop: Population, n: int) -> None:
    if not 1 <= n <= pop.size:
        raise InvalidArgument(f"n must satisfy 1 <= n <= N={pop.size}, got {n}")


def _draw_x(remaining: list[int], rng: RngStream) -> int:
    return remaining.pop(rng.below(len(remaining)))


def _finish(pop, n, rng, xi, eta, remaining) -> Trajectory:
    x_draws = len(xi)
    while len(xi) < n:
        xi.append(_draw_x(remaining, rng))
    return Trajectory(
        xi_prefix=tuple(xi),
        eta=tuple(eta),
        x_draw_count=x_draws,
        S=_seq_sum(pop.values, xi),
        T=_seq_sum(pop.values, eta),
        n=n,
        seed=(rng.master_seed, rng.stream_id),
    )


def run_replacement(pop: Population, n: int, rng: RngStream) -> Trajectory:
    _check_n(pop, n)
    N = pop.size
    remaining = list(range(N))
    xi: list[int] = []
    eta: list[int] = []
    for _ in range(n):
        unlabelled = N - len(xi)
        v = rng.below(N)
        if v < unlabelled:
            xi.append(_draw_x(remaining, rng))
            eta.append(xi[-1])
        else:
            eta.append(xi[v - unlabelled])
    return _finish(pop, n, rng, xi, eta, remaining)


def run_surreplacement(pop: Population, d: int, n: int, rng: RngStream) -> Trajectory:
    """Y-urn with surreplacement: every draw returns the ball plus d-1 copies.

    A label drawn k times so far owns 1 + k(d-1) balls; step i (1-based) sees
    N + (i-1)(d-1) balls in total.
    """
    _check_n(pop, n)
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    N = pop.size
    remaining = list(range(N))
    xi: list[int] = []
    eta: list[int] = []
    hits: list[int] = []
    for i in range(n):
        unlabelled = N - len(xi)
        v = rng.below(N + i * (d - 1))
        if v < unlabelled:
            xi.append(_draw_x(remaining, rng))
            hits.append(1)
            eta.append(xi[-1])
            continue
        v -= unlabelled
        for pos, h in enumerate(hits):
            weight = 1 + h * (d - 1)
            if v < weight:
                break
            v -= weight
        hits[pos] += 1
        eta.append(xi[pos])
    return _finish(pop, n, rng, xi, eta, remaining)


def run_kfold(pop: Population, k: int, n: int, rng: RngStream) -> Trajectory:
    """Y-urn is kC drawn without replacement; a cohort is labelled on first touch."""
    _check_n(pop, n)
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    N = pop.size
    remaining = list(range(N))
    xi: list[int] = []
    eta: list[int] = []
    left: list[int] = []  # balls still in the urn for each touched cohort
    for i in range(n):
        unlabelled = k * (N - len(xi))
        v = rng.below(k * N - i)
        if v < unlabelled:
            xi.append(_draw_x(remaining, rng))
            left.append(k - 1)
            eta.append(xi[-1])
            continue
        v -= unlabelled
        for pos, r in enumerate(left):
            if v < r:
                break
            v -= r
        left[pos] -= 1
        eta.append(xi[pos])
    return _finish(pop, n, rng, xi, eta, remaining)


def run(pop: Population, model: CouplingModel, n: int, rng: RngStream) -> Trajectory:
    if model.kind == "replacement":
        return run_replacement(pop, n, rng)
    if model.kind == "kfold":
        return run_kfold(pop, model.k, n, rng)
    return run_surreplacement(pop, model.d, n, rng)


# batch simulation ----------------------------------------------------------


@dataclass
class Batch:
    """Results of :func:`simulate_batch`; row b is the trial on stream ``stream_ids[b]``."""

    xi: np.ndarray
    eta: np.ndarray
    x_draw_count: np.ndarray
    S: np.ndarray
    T: np.ndarray
    # surreplacement law tallies indexed [step, prior hits]; None unless requested
    law_hits: np.ndarray | None = None
    law_opportunities: np.ndarray | None = None
    law_opportunities_sq: np.ndarray | None = None


def _pick_nth_true(mask: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Column index of the r-th (0-based) True entry in each row."""
    return np.argmax(np.cumsum(mask, axis=1) > r[:, None], axis=1)


def _batch_draw_x(rng: BatchRng, avail, L, active) -> np.ndarray:
    N = avail.shape[1]
    r = rng.below(np.maximum(N - L, 1), active)
    labels = _pick_nth_true(avail, r)
    rows = np.flatnonzero(active)
    avail[rows, labels[rows]] = False
    return labels


def simulate_batch(
    pop: Population,
    model: CouplingModel,
    n: int,
    master_seed: int,
    stream_ids: np.ndarray,
    law_tally: bool = False,
) -> Batch:
    _check_n(pop, n)
    N = pop.size
    B = len(stream_ids)
    c = np.asarray(pop.values, dtype=np.float64)
    rng = BatchRng(master_seed, stream_ids)

    avail = np.ones((B, N), dtype=bool)
    xi = np.zeros((B, n), dtype=np.int64)
    eta = np.zeros((B, n), dtype=np.int64)
    L = np.zeros(B, dtype=np.int64)
    # per assignment position: hit count (replacement/surreplacement) or balls left (kfold)
    weight_state = np.zeros((B, n), dtype=np.int64)
    slot = np.arange(n)

    if law_tally:
        hits = np.zeros((n, n), dtype=np.int64)
        opps = np.zeros((n, n), dtype=np.int64)
        opps_sq = np.zeros((n, n), dtype=np.int64)

    d = model.d if model.kind == "surreplacement" else 1
    k = model.k if model.kind == "kfold" else 1

    for i in range(n):
        assigned = slot[None, :] < L[:, None]
        if model.kind == "kfold":
            unlabelled = k * (N - L)
            total = k * N - i
            weights = np.where(assigned, weight_state, 0)
        else:
            unlabelled = N - L
            total = N + i * (d - 1)
            weights = np.where(assigned, 1 + weight_state * (d - 1), 0)
        v = rng.below(np.full(B, total))
        fresh = v < unlabelled

        if law_tally:
            prior = np.where(assigned, weight_state, -1)
            for kk in range(i + 1):
                per_row = (prior == kk).sum(axis=1)
                if kk == 0:
                    per_row = per_row + (N - L)
                opps[i, kk] += per_row.sum()
                opps_sq[i, kk] += (per_row * per_row).sum()
            old = np.where(fresh, 0, -1)

        labels = _batch_draw_x(rng, avail, L, fresh)
        fr = np.flatnonzero(fresh)
        xi[fr, L[fr]] = labels[fr]
        eta[fr, i] = labels[fr]
        weight_state[fr, L[fr]] = k - 1 if model.kind == "kfold" else 1
        L[fr] += 1

        lb = np.flatnonzero(~fresh)
        if len(lb):
            r = v[lb] - unlabelled[lb]
            pos = np.argmax(np.cumsum(weights[lb], axis=1) > r[:, None], axis=1)
            if law_tally:
                old[lb] = weight_state[lb, pos]
            if model.kind == "kfold":
                weight_state[lb, pos] -= 1
            else:
                weight_state[lb, pos] += 1
            eta[lb, i] = xi[lb, pos]

        if law_tally:
            hits[i] += np.bincount(old, minlength=n)[:n]

    x_draws = L.copy()
    for _ in range(n):
        need = L < n
        if not need.any():
            break
        labels = _batch_draw_x(rng, avail, L, need)
        nd = np.flatnonzero(need)
        xi[nd, L[nd]] = labels[nd]
        L[nd] += 1

    S = np.zeros(B)
    T = np.zeros(B)
    for i in range(n):
        S += c[xi[:, i]]
        T += c[eta[:, i]]
    out = Batch(xi=xi, eta=eta, x_draw_count=x_draws, S=S, T=T)
    if law_tally:
        out.law_hits, out.law_opportunities, out.law_opportunities_sq = hits, opps, opps_sq
    return out
