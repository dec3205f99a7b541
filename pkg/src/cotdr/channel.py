"""Round-trip optical channel simulation.

Models the measurement path: circulator launch, an air-gap reference
reflector at the fiber start, the fiber itself (attenuation, chromatic
dispersion, temperature-dependent group delay), a strong end reflector,
and the receiver (bandwidth limit, additive noise, sampling clock error,
optional ADC quantization).

Conventions fixed here and relied on downstream:

* Delays are realized as frequency-domain linear phase ramps, so
  sub-sample (picosecond) delays are exact for the band-limited signal.
* Dispersion acts on the amplitude envelope (square root of the launch
  intensity); the detector squares the magnitude.  Applying it directly
  to intensity would break the all-pass energy identity.
* The receiver low-pass is the magnitude response of a 4th-order Bessel
  filter applied with zero phase, so it adds no group delay of its own;
  it is applied identically to every echo.
* A sampling clock error eps multiplies every arrival time by (1 + eps).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as _sig

from .errors import ConfigError, ShapeError
from .waveform import ProbePacket

SPEED_OF_LIGHT = 299792458.0  # m/s

# Group index calibrated so that a 100 km round trip is exactly 990.537 us
# (the default link this toolkit reproduces); 1.4848 to display precision.
DEFAULT_GROUP_INDEX = 1.4847776098497303


@dataclass(frozen=True)
class FiberLink:
    """Physical description of the fiber under test."""

    length: float = 100e3            # m
    group_index: float = DEFAULT_GROUP_INDEX
    attenuation: float = 0.2         # dB/km
    dispersion: float = 17.0         # ps/(nm km)
    tdc: float = 7e-6                # fractional delay change per kelvin
    reference_temperature: float = 293.15  # K

    def __post_init__(self):
        if self.length < 0:
            raise ConfigError("length must be non-negative")
        if not 1.0 <= self.group_index <= 2.0:
            raise ConfigError("group_index must be in [1.0, 2.0]")
        if self.attenuation < 0:
            raise ConfigError("attenuation must be non-negative")
        if self.tdc < 0:
            raise ConfigError("tdc must be non-negative")


@dataclass(frozen=True)
class Reflector:
    """Discrete reflection point along the link."""

    position: float      # m from the launch connector
    reflectance: float   # intensity reflection factor in [0, 1]
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.reflectance <= 1.0:
            raise ConfigError("reflectance must be in [0, 1]")


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver chain: bandwidth, noise, sampling clock, quantizer."""

    bandwidth: float = 2e9
    noise_rms: float = 0.0       # trace units per single shot
    sample_rate: float = 10e9
    clock_error: float = 0.0     # fractional offset; 0.5 ppm -> 0.5e-6
    adc_bits: int | None = None  # None = ideal
    adc_range: float = 1.0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.bandwidth > self.sample_rate / 2:
            raise ConfigError("bandwidth must not exceed Nyquist (sample_rate/2)")
        if self.noise_rms < 0:
            raise ConfigError("noise_rms must be non-negative")
        if self.adc_bits is not None and self.adc_bits < 1:
            raise ConfigError("adc_bits must be a positive integer or None")


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled receiver record."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0           # time of first sample relative to launch trigger
    shots_averaged: int = 1

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.shots_averaged < 1:
            raise ConfigError("shots_averaged must be >= 1")


def validate_reflectors(reflectors: list[Reflector], link: FiberLink) -> None:
    """Positions must be strictly increasing and lie on the link."""
    last = -np.inf
    for r in reflectors:
        if not 0.0 <= r.position <= link.length:
            raise ValueError(
                f"reflector {r.label!r} at {r.position} m is outside the link"
            )
        if r.position <= last:
            raise ConfigError("reflector positions must be strictly increasing")
        last = r.position


def round_trip_delay(link: FiberLink, position: float,
                     temperature_offset: float = 0.0) -> float:
    """Round-trip group delay to a reflector: 2 n_g z / c, scaled by
    (1 + tdc * dT) for a temperature excursion dT from the reference."""
    if not 0.0 <= position <= link.length:
        raise ValueError(f"position {position} m outside link [0, {link.length}]")
    return (2.0 * link.group_index * position / SPEED_OF_LIGHT
            * (1.0 + link.tdc * temperature_offset))


def one_way_delay(link: FiberLink, temperature_offset: float = 0.0) -> float:
    """Single-pass group delay over the full link length."""
    return (link.group_index * link.length / SPEED_OF_LIGHT
            * (1.0 + link.tdc * temperature_offset))


def attenuation_factor(link: FiberLink, path_length: float) -> float:
    """Linear intensity scale for propagation over path_length meters."""
    return 10.0 ** (-link.attenuation * (path_length / 1e3) / 10.0)


def dispersion_phase(freqs: np.ndarray, dispersion: float, path_length: float,
                     wavelength: float) -> np.ndarray:
    """All-pass spectral phase of chromatic dispersion on the baseband
    envelope: phi(f) = (pi lambda^2 D L / c) f^2, D in ps/(nm km)."""
    d_si = dispersion * 1e-6  # s/m^2
    return (np.pi * wavelength**2 * d_si * path_length / SPEED_OF_LIGHT) * freqs**2


def apply_dispersion(samples: np.ndarray, sample_rate: float, link: FiberLink,
                     path_length: float, wavelength: float) -> np.ndarray:
    """Disperse an amplitude-envelope over path_length meters of fiber.

    Returns the input unchanged when D * L == 0; otherwise returns the
    complex envelope (the detector takes |.|^2).  Energy sum(|x|^2) is
    preserved exactly up to FFT round-off.
    """
    if path_length < 0:
        raise ValueError("path_length must be non-negative")
    if link.dispersion == 0.0 or path_length == 0.0:
        return samples
    x = np.asarray(samples)
    freqs = np.fft.fftfreq(len(x), d=1.0 / sample_rate)
    phase = dispersion_phase(freqs, link.dispersion, path_length, wavelength)
    return np.fft.ifft(np.fft.fft(x) * np.exp(1j * phase))


def dispersion_broadening(dispersion: float, path_length: float,
                          wavelength: float, bandwidth: float) -> float:
    """Closed-form pulse-spread estimate D * L * dlambda with
    dlambda = lambda^2 df / c; used to sanity-check chip-rate choices."""
    dlambda = wavelength**2 * bandwidth / SPEED_OF_LIGHT
    return dispersion * 1e-6 * path_length * dlambda


@lru_cache(maxsize=8)
def _bessel_prototype() -> tuple[np.ndarray, np.ndarray]:
    # Analog 4th-order Bessel low-pass, -3 dB at omega = 1.
    b, a = _sig.bessel(4, 1.0, btype="low", analog=True, norm="mag")
    return b, a


def receiver_lowpass_gain(freqs: np.ndarray, bandwidth: float,
                          sample_rate: float) -> np.ndarray | None:
    """Zero-phase receiver gain |H(f)|; None means bypass (bandwidth at
    Nyquist leaves band limiting to the simulation grid itself)."""
    if bandwidth >= sample_rate / 2:
        return None
    b, a = _bessel_prototype()
    s = 1j * (np.asarray(freqs) / bandwidth)
    return np.abs(np.polyval(b, s) / np.polyval(a, s))


@dataclass(frozen=True)
class EchoPath:
    """One propagation path: delay, intensity scale, dispersion length."""

    delay: float
    intensity_scale: float
    dispersion_length: float
    label: str = ""


def reflector_paths(link: FiberLink, reflectors: list[Reflector],
                    temperature_offset: float = 0.0) -> list[EchoPath]:
    """Round-trip echo paths for a set of discrete reflectors."""
    validate_reflectors(reflectors, link)
    return [
        EchoPath(
            delay=round_trip_delay(link, r.position, temperature_offset),
            intensity_scale=r.reflectance * attenuation_factor(link, 2.0 * r.position),
            dispersion_length=2.0 * r.position,
            label=r.label,
        )
        for r in reflectors
    ]


def transmission_path(link: FiberLink,
                      temperature_offset: float = 0.0) -> EchoPath:
    """Single-pass path through the full link (launch at one end,
    detection at the other; no reflectors)."""
    return EchoPath(
        delay=one_way_delay(link, temperature_offset),
        intensity_scale=attenuation_factor(link, link.length),
        dispersion_length=link.length,
        label="through",
    )


def synthesize_clean(packet: ProbePacket, paths: list[EchoPath],
                     link: FiberLink, rx: ReceiverConfig,
                     extra_delay: float = 0.0) -> np.ndarray:
    """Deterministic receiver record for a set of echo paths (no noise).

    Every path delay, plus the common pre-fiber instrument delay, is
    stretched by (1 + clock_error) so the record reads in receiver-clock
    time.  Dispersion acts per path on the field; detected intensities
    add (single-bounce, incoherent summation); one shared zero-phase
    low-pass models the receiver bandwidth.
    """
    if packet.sample_rate != rx.sample_rate:
        raise ConfigError("packet and receiver sample rates must match")
    n = len(packet.samples)
    fs = rx.sample_rate
    stretch = 1.0 + rx.clock_error

    needs_field = link.dispersion != 0.0 and any(
        p.dispersion_length > 0 for p in paths)
    if needs_field and np.min(packet.samples) < 0:
        raise ConfigError("dispersion model needs non-negative intensity samples")

    out = np.zeros(n)
    if needs_field:
        field = np.sqrt(packet.samples)
        spec = np.fft.fft(field)
        freqs = np.fft.fftfreq(n, d=1.0 / fs)
        for p in paths:
            tau = (p.delay + extra_delay) * stretch
            phase = dispersion_phase(freqs, link.dispersion,
                                     p.dispersion_length, packet.wavelength)
            shifted = np.fft.ifft(
                spec * np.exp(1j * phase - 2j * np.pi * freqs * tau))
            out += p.intensity_scale * np.abs(shifted) ** 2
    else:
        # No dispersion: delaying the field and squaring equals delaying
        # the intensity, so everything stays in one real FFT pass.
        spec = np.fft.rfft(packet.samples)
        freqs = np.fft.rfftfreq(n, d=1.0 / fs)
        acc = np.zeros_like(spec)
        for p in paths:
            tau = (p.delay + extra_delay) * stretch
            acc += p.intensity_scale * np.exp(-2j * np.pi * freqs * tau)
        out = np.fft.irfft(spec * acc, n)

    gain = receiver_lowpass_gain(np.fft.rfftfreq(n, d=1.0 / fs),
                                 rx.bandwidth, fs)
    if gain is not None:
        out = np.fft.irfft(np.fft.rfft(out) * gain, n)
    return out


def _quantize(samples: np.ndarray, rx: ReceiverConfig) -> np.ndarray:
    if rx.adc_bits is None:
        return samples
    step = 2.0 * rx.adc_range / (2 ** rx.adc_bits)
    clipped = np.clip(samples, -rx.adc_range, rx.adc_range - step)
    return np.round(clipped / step) * step


def _finish_trace(clean: np.ndarray, rx: ReceiverConfig, rng: np.random.Generator,
                  noise_scale: float, shots: int) -> Trace:
    samples = clean
    sigma = rx.noise_rms * noise_scale
    if sigma > 0:
        samples = samples + rng.normal(0.0, sigma, size=len(samples))
    samples = _quantize(samples, rx)
    samples = np.asarray(samples)
    samples.setflags(write=False)
    return Trace(samples=samples, sample_rate=rx.sample_rate, t0=0.0,
                 shots_averaged=shots)


def simulate_shot(packet: ProbePacket, link: FiberLink,
                  reflectors: list[Reflector], rx: ReceiverConfig,
                  rng_seed, temperature_offset: float = 0.0,
                  extra_delay: float = 0.0, noise_scale: float = 1.0) -> Trace:
    """One receiver record of the reflective (round-trip) setup.

    rng_seed is anything numpy's default_rng accepts.  noise_scale
    rescales noise_rms (fast-average mode passes 1/sqrt(K)).
    """
    paths = reflector_paths(link, reflectors, temperature_offset)
    clean = synthesize_clean(packet, paths, link, rx, extra_delay)
    rng = np.random.default_rng(rng_seed)
    return _finish_trace(clean, rx, rng, noise_scale, shots=1)


def simulate_transmission(packet: ProbePacket, link: FiberLink,
                          rx: ReceiverConfig, rng_seed,
                          temperature_offset: float = 0.0,
                          extra_delay: float = 0.0,
                          noise_scale: float = 1.0) -> Trace:
    """One receiver record of the single-pass setup (fed in at one end,
    detected at the other)."""
    path = transmission_path(link, temperature_offset)
    clean = synthesize_clean(packet, [path], link, rx, extra_delay)
    rng = np.random.default_rng(rng_seed)
    return _finish_trace(clean, rx, rng, noise_scale, shots=1)


def average_traces(shots: list[Trace]) -> Trace:
    """Pointwise mean of receiver records sharing one sampling grid."""
    if not shots:
        raise ShapeError("no traces to average")
    first = shots[0]
    for t in shots[1:]:
        if (t.sample_rate != first.sample_rate or len(t.samples) != len(first.samples)
                or t.t0 != first.t0):
            raise ShapeError("traces must share sample_rate, length, and t0")
    mean = np.mean([t.samples for t in shots], axis=0)
    mean.setflags(write=False)
    return Trace(samples=mean, sample_rate=first.sample_rate, t0=first.t0,
                 shots_averaged=sum(t.shots_averaged for t in shots))


def simulate_averaged(packet: ProbePacket, link: FiberLink,
                      reflectors: list[Reflector], rx: ReceiverConfig,
                      n_shots: int, rng_seed, mode: str = "fast",
                      temperature_offset: float = 0.0,
                      extra_delay: float = 0.0) -> Trace:
    """Average of n_shots receiver records.

    mode "fast" draws a single noise realization with std noise_rms /
    sqrt(n_shots) -- distributionally identical to averaging n_shots
    white-noise records and much cheaper.  mode "full" actually runs and
    averages n_shots independent records.
    """
    if n_shots < 1:
        raise ConfigError("n_shots must be >= 1")
    if mode == "fast":
        trace = simulate_shot(packet, link, reflectors, rx, rng_seed,
                              temperature_offset, extra_delay,
                              noise_scale=1.0 / np.sqrt(n_shots))
        return Trace(samples=trace.samples, sample_rate=trace.sample_rate,
                     t0=trace.t0, shots_averaged=n_shots)
    if mode == "full":
        seeds = np.random.SeedSequence(rng_seed).spawn(n_shots)
        shots = [simulate_shot(packet, link, reflectors, rx, s,
                               temperature_offset, extra_delay)
                 for s in seeds]
        return average_traces(shots)
    raise ConfigError(f"unknown averaging mode {mode!r}")
