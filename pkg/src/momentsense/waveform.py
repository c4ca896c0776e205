"""Baseband sample generation.

Constellations and the continuous-uniform source, circularly symmetric
Gaussian noise, square-root raised cosine (SRRC) shaping with oversampling,
AWGN / block Rayleigh channels, noise-variance uncertainty and receiver
timing offsets.  All randomness comes from :class:`RngStream`.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from scipy import signal as sps

from .stats_core import SignalModel, db_to_linear, discrete_uniform_moment

if TYPE_CHECKING:
    from .montecarlo import TrialConfig


class Hypothesis(str, Enum):
    H0 = "H0"
    H1 = "H1"


class ChannelKind(str, Enum):
    AWGN = "awgn"
    RAYLEIGH_BLOCK = "rayleigh"


class SyncMode(str, Enum):
    SYNCHRONIZED = "synchronized"
    ASYNCHRONOUS = "asynchronous"


def parse_enum(cls, text: str):
    key = text.strip().lower()
    for member in cls:
        if member.value.lower() == key or member.name.lower() == key:
            return member
    choices = ", ".join(m.value for m in cls)
    raise ValueError(f"invalid {cls.__name__} {text!r} (expected one of: {choices})")


_COMPONENTS = {"symbols": 0, "noise": 1, "variance": 2, "gain": 3, "offset": 4}


def mix_seed(*parts) -> int:
    """Stable 64-bit seed derived from arbitrary printable parts."""
    digest = hashlib.blake2b("|".join(map(repr, parts)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """Random source for one trial.

    Each pipeline stage draws from its own child generator, so e.g. enabling
    timing offsets does not shift the noise realisation of the same trial.
    """

    seed: int
    stream: int = 0

    def generator(self, component: str) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, _COMPONENTS[component]))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class UncertaintyModel:
    delta_db: float = 0.0

    def __post_init__(self):
        if not self.delta_db >= 0:
            raise ValueError(f"uncertainty must be >= 0 dB, got {self.delta_db!r}")

    @property
    def epsilon(self) -> float:
        return float(db_to_linear(self.delta_db))


def component_bound(model: SignalModel) -> float:
    """Largest per-component amplitude b giving unit average symbol power."""
    if model is SignalModel.NOISE_ONLY:
        raise ValueError("noise-only model has no constellation")
    if model is SignalModel.CONTINUOUS_UNIFORM:
        return math.sqrt(1.5)
    dims = 2 if model.complex_valued else 1
    return 1.0 / math.sqrt(dims * discrete_uniform_moment(model.levels, 1.0, 2))


def generate_symbols(model: SignalModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. unit-average-power source samples."""
    if model is SignalModel.NOISE_ONLY:
        raise ValueError("noise-only model emits no symbols")
    if count < 1:
        raise ValueError("count must be positive")
    b = component_bound(model)
    dims = 2 if model.complex_valued else 1
    if model is SignalModel.CONTINUOUS_UNIFORM:
        parts = rng.uniform(-b, b, size=(dims, count))
    else:
        P = model.levels
        parts = (2.0 * rng.integers(0, P, size=(dims, count)) - (P - 1)) * (b / (P - 1))
    if dims == 1:
        return parts[0].astype(np.complex128)
    return parts[0] + 1j * parts[1]


def generate_noise(count: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """ZMCSCG noise with per-component variance ``sigma2``."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    return math.sqrt(sigma2) * rng.standard_normal(2 * count).view(np.complex128)


def srrc_taps(rolloff: float, S: int, L: int) -> np.ndarray:
    """Unit-energy SRRC impulse response, ``S`` samples per symbol, ``L`` taps."""
    if not 0 < rolloff <= 1:
        raise ValueError("roll-off must lie in (0, 1]")
    if S < 1:
        raise ValueError("oversampling must be positive")
    if L < 1 or L % 2 == 0:
        raise ValueError(f"tap count must be odd, got {L}")
    # |t| keeps the response exactly even.
    t = np.abs(np.arange(L) - (L - 1) // 2) / S
    a = rolloff
    h = np.empty(L)
    centre = t == 0
    edge = np.isclose(4 * a * t, 1.0, rtol=0, atol=1e-12)
    rest = ~(centre | edge)
    h[centre] = 1.0 - a + 4.0 * a / math.pi
    h[edge] = (a / math.sqrt(2.0)) * (
        (1 + 2 / math.pi) * math.sin(math.pi / (4 * a))
        + (1 - 2 / math.pi) * math.cos(math.pi / (4 * a))
    )
    tr = t[rest]
    h[rest] = (
        np.sin(math.pi * tr * (1 - a)) + 4 * a * tr * np.cos(math.pi * tr * (1 + a))
    ) / (math.pi * tr * (1 - (4 * a * tr) ** 2))
    return h / math.sqrt(np.sum(h * h))


@dataclass(frozen=True)
class PulseShape:
    rolloff: float = 0.2
    oversampling: int = 4
    length: int | None = None
    taps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.length is None:
            object.__setattr__(self, "length", 4 * self.oversampling + 1)
        object.__setattr__(self, "taps", srrc_taps(self.rolloff, self.oversampling, self.length))

    @property
    def edge_symbols(self) -> int:
        """Symbols lost at each end to filter transients."""
        return -(-(self.length - 1) // self.oversampling)

    def symbol_rate_power(self, offset: int = 0) -> float:
        """Signal power at the matched-filter output, sampled ``offset`` off the ideal phase.

        Assumes i.i.d. unit-power symbols.
        """
        g = np.convolve(self.taps, self.taps)
        return float(np.sum(g[(self.length - 1 + offset) % self.oversampling :: self.oversampling] ** 2))


def shape_and_upsample(symbols: np.ndarray, pulse: PulseShape) -> np.ndarray:
    """Zero-stuff by S and filter; scaled for unit power at the ideal sampling phase."""
    symbols = np.asarray(symbols)
    if symbols.size == 0:
        raise ValueError("need at least one symbol")
    out = sps.upfirdn(pulse.taps, symbols, up=pulse.oversampling)
    out = out[: (symbols.size - 1) * pulse.oversampling + pulse.length]
    return out / math.sqrt(pulse.symbol_rate_power(0))


def matched_filter_and_sample(
    samples: np.ndarray, pulse: PulseShape, offset: int = 0
) -> np.ndarray:
    """Receive SRRC filter and decimate at symbol rate.

    ``samples`` is a transmit-filter output (``(M-1)*S + L`` samples for M
    symbols).  Symbols whose response is cut by either record edge are
    dropped, so the result holds ``M - 2*edge - 1`` identically distributed
    samples.
    """
    S, L = pulse.oversampling, pulse.length
    if not 0 <= offset < S:
        raise ValueError(f"offset must lie in [0, {S}), got {offset}")
    samples = np.asarray(samples)
    symbols = (samples.size - L) // S + 1
    edge = pulse.edge_symbols
    count = symbols - 2 * edge - 1
    if count < 1:
        raise ValueError("record too short for the filter transients")
    # Output sample j sits at full-convolution index (edge + j)*S + L - 1 + offset.
    first = edge * S + L - 1 + offset
    out = np.zeros(count, dtype=np.complex128)
    for l, tap in enumerate(pulse.taps):
        start = first - l
        out += tap * samples[start : start + (count - 1) * S + 1 : S]
    return out


def draw_actual_variance(
    nominal_sigma2: float, model: UncertaintyModel, rng: np.random.Generator
) -> float:
    """One per-observation noise variance, uniform on [sigma2/eps, eps*sigma2]."""
    if nominal_sigma2 <= 0:
        raise ValueError("nominal variance must be positive")
    if model.delta_db == 0:
        return float(nominal_sigma2)
    eps = model.epsilon
    return float(rng.uniform(nominal_sigma2 / eps, nominal_sigma2 * eps))


def rayleigh_gain(rng: np.random.Generator, size: int | None = None):
    """Unit-mean-power ZMCSCG channel gain; one per observation."""
    if size is None:
        g = rng.standard_normal(2) / math.sqrt(2.0)
        return complex(g[0], g[1])
    return rng.standard_normal(2 * size).view(np.complex128) / math.sqrt(2.0)


def synthesize_observation(config: "TrialConfig", rng: RngStream) -> np.ndarray:
    """One received record of ``config.n`` samples at the detector input."""
    n = config.n
    signal_on = config.hypothesis is Hypothesis.H1
    sigma2 = draw_actual_variance(config.sigma2, config.uncertainty, rng.generator("variance"))
    amp = math.sqrt(2.0 * config.sigma2 * float(db_to_linear(config.snr_db))) if signal_on else 0.0
    if signal_on and config.channel is ChannelKind.RAYLEIGH_BLOCK:
        amp = amp * rayleigh_gain(rng.generator("gain"))

    if not config.pulse_shaping:
        y = generate_noise(n, sigma2, rng.generator("noise"))
        if signal_on:
            y += amp * generate_symbols(config.model, n, rng.generator("symbols"))
        return y

    pulse = config.pulse
    offset = 0
    if config.sync is SyncMode.ASYNCHRONOUS:
        offset = int(rng.generator("offset").integers(0, pulse.oversampling))
    symbols = n + 2 * pulse.edge_symbols + 1
    length = (symbols - 1) * pulse.oversampling + pulse.length
    x = generate_noise(length, sigma2, rng.generator("noise"))
    if signal_on:
        s = generate_symbols(config.model, symbols, rng.generator("symbols"))
        # Keep the detector-input SNR at its configured value for every phase.
        gain = math.sqrt(pulse.symbol_rate_power(0) / pulse.symbol_rate_power(offset))
        x += (amp * gain) * shape_and_upsample(s, pulse)
    return matched_filter_and_sample(x, pulse, offset)
