"""Correlation of averaged traces with the transmitted sequences.

Each trace family (A or B) is mean-subtracted and correlated with its
own bipolar +/-1 chip reference, upsampled by sample-hold to the trace
rate; the two correlograms are summed so the complementary sidelobes
cancel and the peak doubles.  Correlation is circular over the packet
("same"-mode): lag m of the correlogram reads directly as arrival time
t0 + m / sample_rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Trace
from .errors import ConfigError, DegeneratePeakError, PeakEdgeError, ShapeError
from .golay import GolayPair
from .waveform import ProbeConfig

PEAK_HALF_WINDOW = 3  # 7-point fitting neighborhood


@dataclass(frozen=True)
class Correlogram:
    """Summed correlation of the A/B traces on the trace time grid."""

    values: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def time_of(self, index: int) -> float:
        return self.t0 + index / self.sample_rate


@dataclass(frozen=True)
class PeakLocation:
    """Coarse (grid-resolution) location of one reflection peak.

    window_times are trace-relative (no t0), matching the convention
    that the refined arrival is corr.t0 + fitted center.
    """

    index: int
    coarse_time: float     # t0 + index / sample_rate
    amplitude: float
    window_times: np.ndarray
    window_values: np.ndarray

    @property
    def window(self) -> list[tuple[float, float]]:
        return list(zip(self.window_times, self.window_values))


def reference_waveform(seq: np.ndarray, samples_per_chip: int) -> np.ndarray:
    """Bipolar +/-1 chips upsampled by sample-hold (the matched-filter
    reference; deliberately not the band-limited transmit shape)."""
    return np.repeat(np.asarray(seq, dtype=float), samples_per_chip)


def circular_correlate(x: np.ndarray, ref: np.ndarray,
                       method: str = "fft") -> np.ndarray:
    """Circular cross-correlation C[m] = sum_j ref[j] * x[(m+j) mod N].

    "fft" and "direct" must agree to 1e-9 relative; "direct" is the
    O(N*M) oracle and only sensible for small inputs.
    """
    n = len(x)
    m = len(ref)
    if m > n:
        raise ShapeError("reference longer than trace")
    if method == "fft":
        ref_padded = np.zeros(n)
        ref_padded[:m] = ref
        return np.fft.irfft(np.fft.rfft(x) * np.conj(np.fft.rfft(ref_padded)), n)
    if method == "direct":
        extended = np.concatenate([x, x[: m - 1]])
        return np.correlate(extended, ref, mode="valid")
    raise ConfigError(f"unknown correlation method {method!r}")


def correlate_pair(trace_a: Trace, trace_b: Trace, pair: GolayPair,
                   cfg: ProbeConfig, method: str = "fft") -> Correlogram:
    """Sum of the two matched-filter correlograms.

    Both traces are mean-subtracted first, which removes the DC pedestal
    of the unipolar chip mapping (and any receiver offset).
    """
    if trace_a.sample_rate != trace_b.sample_rate:
        raise ShapeError("traces must share a sample rate")
    if len(trace_a.samples) != len(trace_b.samples) or trace_a.t0 != trace_b.t0:
        raise ShapeError("traces must share length and t0")
    ratio = trace_a.sample_rate / cfg.bit_rate
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError("trace rate must be an integer multiple of bit_rate")
    spc = round(ratio)

    corr = np.zeros(len(trace_a.samples))
    for trace, seq in ((trace_a, pair.a), (trace_b, pair.b)):
        x = trace.samples - np.mean(trace.samples)
        corr += circular_correlate(x, reference_waveform(seq, spc), method)
    corr.setflags(write=False)
    return Correlogram(values=corr, sample_rate=trace_a.sample_rate,
                       t0=trace_a.t0)


def find_peak(corr: Correlogram, search_window: tuple[float, float]) -> PeakLocation:
    """Global maximum within [lo, hi] arrival-time seconds, with its
    7-point neighborhood.  Ties break toward the earlier index."""
    lo, hi = search_window
    fs = corr.sample_rate
    i_lo = max(0, int(np.ceil((lo - corr.t0) * fs - 1e-9)))
    i_hi = min(len(corr.values) - 1, int(np.floor((hi - corr.t0) * fs + 1e-9)))
    if i_hi - i_lo + 1 < 2 * PEAK_HALF_WINDOW + 1:
        raise ShapeError(
            f"search window holds {max(0, i_hi - i_lo + 1)} samples; need at least 7")
    segment = corr.values[i_lo: i_hi + 1]
    rel = int(np.argmax(segment))  # first occurrence -> earlier index on ties
    idx = i_lo + rel
    if rel < PEAK_HALF_WINDOW or rel > len(segment) - 1 - PEAK_HALF_WINDOW:
        raise PeakEdgeError(
            f"peak at index {idx} is within {PEAK_HALF_WINDOW} samples of the "
            "window edge; widen the search window")
    sl = slice(idx - PEAK_HALF_WINDOW, idx + PEAK_HALF_WINDOW + 1)
    window_values = np.array(corr.values[sl])
    if np.all(window_values == window_values[0]):
        raise DegeneratePeakError("flat window around peak")
    window_times = np.arange(idx - PEAK_HALF_WINDOW, idx + PEAK_HALF_WINDOW + 1) / fs
    return PeakLocation(index=idx, coarse_time=corr.time_of(idx),
                        amplitude=float(corr.values[idx]),
                        window_times=window_times, window_values=window_values)
