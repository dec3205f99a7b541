"""Probe packet construction.

A chip sequence is transmitted as a 2 Gbit/s NRZ burst at the start of a
1 ms packet; the rest of the packet is zero so the receiver record covers
the full round trip of a 100 km link.  Chips map to intensity levels
unipolarly (+1 -> modulation_depth, -1 -> 0): an intensity modulator
cannot emit negative light, and the DC pedestal this creates is removed
later by mean-subtracting the received trace before correlation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ProbeConfig:
    """Transmit-side parameters (defaults: 2 Gbit/s, 10 GS/s, 1 ms packet)."""

    bit_rate: float = 2e9
    sample_rate: float = 10e9
    packet_duration: float = 1e-3
    optical_wavelength: float = 1550e-9
    modulation_depth: float = 1.0

    def __post_init__(self):
        if self.bit_rate <= 0 or self.sample_rate <= 0:
            raise ConfigError("bit_rate and sample_rate must be positive")
        if self.packet_duration <= 0:
            raise ConfigError("packet_duration must be positive")
        if not 0 < self.modulation_depth <= 1:
            raise ConfigError("modulation_depth must be in (0, 1]")
        ratio = self.sample_rate / self.bit_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError(
                f"sample_rate must be an integer multiple of bit_rate "
                f"(got ratio {ratio})"
            )

    @property
    def samples_per_chip(self) -> int:
        return round(self.sample_rate / self.bit_rate)

    @property
    def packet_samples(self) -> int:
        return round(self.packet_duration * self.sample_rate)


@dataclass(frozen=True)
class ProbePacket:
    """Sampled transmit intensity envelope for one sequence of a pair."""

    samples: np.ndarray
    sample_rate: float
    source_sequence_id: str  # "a" or "b"
    wavelength: float = 1550e-9


def burst_duration(seq_len: int, cfg: ProbeConfig) -> float:
    """Duration of the coded burst in seconds: seq_len / bit_rate."""
    if seq_len < 0:
        raise ValueError("seq_len must be non-negative")
    return seq_len / cfg.bit_rate


def build_packet(seq: np.ndarray, cfg: ProbeConfig, sequence_id: str = "a") -> ProbePacket:
    """NRZ-encode a +/-1 chip sequence into a zero-padded packet.

    Each chip is held for sample_rate/bit_rate samples; +1 chips emit
    modulation_depth, -1 chips emit 0.
    """
    seq = np.asarray(seq)
    n_packet = cfg.packet_samples
    spc = cfg.samples_per_chip
    if len(seq) * spc > n_packet:
        raise ConfigError(
            f"sequence of {len(seq)} chips does not fit in a "
            f"{cfg.packet_duration * 1e3:g} ms packet at {cfg.bit_rate:g} bit/s"
        )
    levels = np.where(seq > 0, cfg.modulation_depth, 0.0)
    samples = np.zeros(n_packet)
    samples[: len(seq) * spc] = np.repeat(levels, spc)
    samples.setflags(write=False)
    return ProbePacket(samples=samples, sample_rate=cfg.sample_rate,
                       source_sequence_id=sequence_id,
                       wavelength=cfg.optical_wavelength)


class PacketCoverageWarning(UserWarning):
    """Packet is shorter than the link round trip; echoes will be clipped."""


def check_round_trip_coverage(cfg: ProbeConfig, round_trip: float,
                              seq_len: int = 0, extra_delay: float = 0.0) -> bool:
    """Warn when the packet cannot cover the last echo of the burst."""
    needed = round_trip + extra_delay + burst_duration(seq_len, cfg)
    if cfg.packet_duration <= needed:
        warnings.warn(
            f"packet duration {cfg.packet_duration:g} s does not cover the "
            f"round trip ({needed:g} s needed)",
            PacketCoverageWarning,
            stacklevel=2,
        )
        return False
    return True
