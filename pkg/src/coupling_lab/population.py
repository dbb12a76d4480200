"""Finite populations c_1..c_N and the derived populations sampled from."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .errors import InvalidArgument, InvalidPopulation


def _exact(value) -> Fraction | None:
    """Exact rational for ints, Fractions and decimal strings; None for floats."""
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidPopulation(f"cannot parse value {value!r}") from exc
    return None


@dataclass(frozen=True)
class Population:
    """An ordered list of real values; repeats are allowed.

    ``values`` holds binary64 floats for the simulation paths. ``exact``
    holds the same values as Fractions when every input was an integer,
    Fraction or decimal string, and is None otherwise.
    """

    values: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if len(self.values) == 0:
            raise InvalidPopulation("population must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidPopulation("population values must be finite")
        if self.exact is not None and len(self.exact) != len(self.values):
            raise InvalidPopulation("exact and float values disagree in length")

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def is_integral(self) -> bool:
        return all(float(v).is_integer() for v in self.values)

    def require_exact(self) -> tuple[Fraction, ...]:
        if self.exact is None:
            raise InvalidArgument(
                "exact computations need integer, Fraction or decimal-string values"
            )
        return self.exact

    def __len__(self) -> int:
        return len(self.values)


def from_values(values: Iterable) -> Population:
    values = list(values)
    if not values:
        raise InvalidPopulation("population must be non-empty")
    exact = [_exact(v) for v in values]
    try:
        floats = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise InvalidPopulation(str(exc)) from exc
    has_exact = all(e is not None for e in exact)
    return Population(floats, tuple(exact) if has_exact else None)


def parse_values(text: str) -> Population:
    """Parse a comma-separated list of decimal literals such as ``"0,1,2.5"``."""
    parts = [p.strip() for p in text.split(",")]
    if any(p == "" for p in parts):
        raise InvalidPopulation(f"malformed value list {text!r}")
    return from_values(parts)


def multiply(pop: Population, k: int) -> Population:
    """k-fold multiplication: k copies of each value, grouped by cohort."""
    if k < 1:
        raise InvalidArgument("k must be a positive integer")
    floats = tuple(v for v in pop.values for _ in range(k))
    exact = None
    if pop.exact is not None:
        exact = tuple(v for v in pop.exact for _ in range(k))
    return Population(floats, exact)


def two_color_urn(a: int, b: int) -> Population:
    """``a`` ones (red balls) followed by ``b`` zeros (blue balls)."""
    if a < 0 or b < 0:
        raise InvalidPopulation("ball counts must be non-negative")
    if a + b == 0:
        raise InvalidPopulation("urn must contain at least one ball")
    return from_values([1] * a + [0] * b)


def mean(pop: Population) -> float:
    if pop.exact is not None:
        return float(exact_mean(pop))
    return math.fsum(pop.values) / pop.size


def exact_mean(pop: Population) -> Fraction:
    ex = pop.require_exact()
    return sum(ex, Fraction(0)) / len(ex)

