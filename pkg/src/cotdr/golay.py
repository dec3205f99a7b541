"""Golay complementary sequence pairs.

A complementary pair (a, b) of +/-1 sequences has the property that the
aperiodic autocorrelations of a and b sum to a delta: 2N at lag zero and
exactly 0 everywhere else.  Correlating a received trace with both
sequences and summing therefore doubles the peak while cancelling every
sidelobe, which is what makes weak echoes recoverable from noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError

MAX_ORDER = 20  # 2^20 chips; resource guard


@dataclass(frozen=True)
class GolayPair:
    """Complementary pair of +/-1 chip sequences of length 2**order."""

    a: np.ndarray
    b: np.ndarray
    order: int

    def __post_init__(self):
        n = 1 << self.order
        if len(self.a) != n or len(self.b) != n:
            raise ValueError(f"sequence length must be 2**order = {n}")
        for seq in (self.a, self.b):
            if not np.all(np.abs(seq) == 1):
                raise ValueError("chips must be +1 or -1")

    @property
    def length(self) -> int:
        return 1 << self.order


def generate_pair(order: int) -> GolayPair:
    """Build a complementary pair by recursive concatenation doubling.

    Starting from a = b = [+1], each step maps (a, b) -> (a||b, a||-b),
    which preserves complementarity and doubles the length.  order 11
    gives the 2048-chip pair used by the measurement defaults.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if order > MAX_ORDER:
        raise SizeLimitError(f"order {order} exceeds guard ({MAX_ORDER})")
    a = np.array([1], dtype=np.int64)
    b = np.array([1], dtype=np.int64)
    for _ in range(order):
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    a.setflags(write=False)
    b.setflags(write=False)
    return GolayPair(a=a, b=b, order=order)


def autocorrelation(seq: np.ndarray) -> np.ndarray:
    """Aperiodic autocorrelation over lags -(N-1)..(N-1), exact integers."""
    s = np.asarray(seq, dtype=np.int64)
    return np.correlate(s, s, mode="full")


def summed_autocorrelation(pair: GolayPair) -> np.ndarray:
    """autocorr(a) + autocorr(b); 2N at the center lag, 0 elsewhere."""
    return autocorrelation(pair.a) + autocorrelation(pair.b)


def pair_to_text(pair: GolayPair) -> str:
    """Two lines of "+1"/"-1" tokens (debug export)."""

    def fmt(seq):
        return " ".join("+1" if c > 0 else "-1" for c in seq)

    return fmt(pair.a) + "\n" + fmt(pair.b) + "\n"
