"""Keyed SplitMix64 streams.

Every trial owns one stream identified by ``(master_seed, stream_id)``. The
stream is a plain SplitMix64 sequence (Steele, Lea & Flood 2014) whose
starting state is

    key = mix64(mix64(master_seed) ^ stream_id)

so the j-th output (j = 0, 1, ...) is ``mix64(key + (j + 1) * GAMMA)``.
Because the output depends only on the key and the counter, a scalar stream
and a numpy batch of streams produce bit-identical draws.

Uniform integers on ``{0..m-1}`` use bitmask rejection on the top bits of
each output: no modulo reduction is ever applied. Each attempt consumes one
output; ``m == 1`` still consumes one output so that draw counts do not depend
on the urn size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(master_seed: int, stream_id: int) -> int:
    return mix64(mix64(master_seed & MASK64) ^ (stream_id & MASK64))


@dataclass
class RngStream:
    master_seed: int
    stream_id: int
    counter: int = 0
    _key: int = field(init=False, repr=False)

    def __post_init__(self):
        self._key = stream_key(self.master_seed, self.stream_id)

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self._key + self.counter * GAMMA)

    def below(self, m: int) -> int:
        """Uniform integer in ``[0, m)``."""
        if m < 1:
            raise ValueError("m must be positive")
        bits = (m - 1).bit_length()
        while True:
            x = self.next_u64()
            if bits == 0:
                return 0
            v = x >> (64 - bits)
            if v < m:
                return v


# numpy batch version -------------------------------------------------------

_GAMMA_U = np.uint64(GAMMA)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1_U
    z = z ^ (z >> np.uint64(27))
    z = z * _M2_U
    return z ^ (z >> np.uint64(31))


class BatchRng:
    """One keyed stream per row; ``below`` advances only the rows in ``active``."""

    def __init__(self, master_seed: int, stream_ids: np.ndarray):
        master = np.full(1, mix64(master_seed & MASK64), dtype=np.uint64)
        ids = np.asarray(stream_ids, dtype=np.uint64)
        self.keys = mix64_array(master ^ ids)
        self.counters = np.zeros(len(ids), dtype=np.uint64)

    def __len__(self) -> int:
        return len(self.keys)

    def below(self, m: np.ndarray, active: np.ndarray | None = None) -> np.ndarray:
        """Uniform integers in ``[0, m[i])`` for each active row (others get 0)."""
        size = len(self.keys)
        m = np.broadcast_to(np.asarray(m, dtype=np.int64), (size,))
        out = np.zeros(size, dtype=np.int64)
        pending = np.ones(size, dtype=bool) if active is None else active.copy()
        if np.any(m[pending] < 1):
            raise ValueError("m must be positive")
        bits = np.zeros(size, dtype=np.uint64)
        mm1 = (m - 1).astype(np.uint64)
        # bit_length of m-1, vectorised
        while True:
            grow = mm1 >> bits
            more = grow > 0
            if not more.any():
                break
            bits[more] += np.uint64(1)
        shift = np.where(bits == 0, np.uint64(63), np.uint64(64) - bits)
        while pending.any():
            idx = np.flatnonzero(pending)
            self.counters[idx] += np.uint64(1)
            x = mix64_array(self.keys[idx] + self.counters[idx] * _GAMMA_U)
            v = (x >> shift[idx]).astype(np.int64)
            v[bits[idx] == 0] = 0
            ok = v < m[idx]
            out[idx[ok]] = v[ok]
            pending[idx[ok]] = False
        return out
