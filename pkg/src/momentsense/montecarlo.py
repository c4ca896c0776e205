"""Seeded, parallel Monte Carlo runner for both detectors.

Every trial owns an :class:`~momentsense.waveform.RngStream` keyed by the
cell seed and the trial index, so results do not depend on how trials are
split across workers.  Workers return per-trial statistics; decisions are
counted afterwards in trial order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .detectors import (
    DegenerateInputError,
    Detector,
    energy_statistic,
    energy_threshold,
    moment_statistic,
    moment_threshold,
    remove_mean,
)
from .stats_core import SignalModel, db_to_linear, theoretical_pd
from .waveform import (
    ChannelKind,
    Hypothesis,
    PulseShape,
    RngStream,
    SyncMode,
    UncertaintyModel,
    mix_seed,
    synthesize_observation,
)

log = logging.getLogger(__name__)

__all__ = [
    "EnergyCalibration",
    "SweepAxis",
    "TrialConfig",
    "CurvePoint",
    "TrialStatistics",
    "PROFILES",
    "simulate_statistics",
    "run_cell",
    "sweep",
    "cell_seed",
    "moment_theory",
]

# (n, trials)
PROFILES = {"desk": (2**12, 2000), "paper": (2**16, 10_000)}


class EnergyCalibration(str, Enum):
    """Noise variance the energy detector's threshold is designed for."""

    NOMINAL = "nominal"
    WORST_CASE = "worst_case"


class SweepAxis(str, Enum):
    SNR_DB = "snr_db"
    N = "n"
    DELTA_DB = "delta_db"


@dataclass(frozen=True)
class TrialConfig:
    hypothesis: Hypothesis = Hypothesis.H1
    model: SignalModel = SignalModel.QPSK
    snr_db: float = -10.0
    n: int = PROFILES["desk"][0]
    channel: ChannelKind = ChannelKind.AWGN
    uncertainty: UncertaintyModel = field(default_factory=UncertaintyModel)
    pulse_shaping: bool = False
    pulse: PulseShape = field(default_factory=PulseShape)
    sync: SyncMode = SyncMode.SYNCHRONIZED
    target_pf: float = 0.1
    trials: int = PROFILES["desk"][1]
    seed: int = 0
    sigma2: float = 1.0
    energy_calibration: EnergyCalibration = EnergyCalibration.WORST_CASE
    remove_mean: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not 0 < self.target_pf < 1:
            raise ValueError("target_pf must lie in (0, 1)")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.sync is SyncMode.ASYNCHRONOUS and not self.pulse_shaping:
            raise ValueError("asynchronous reception requires pulse shaping")
        if self.hypothesis is Hypothesis.H1 and self.model is SignalModel.NOISE_ONLY:
            raise ValueError("H1 needs a signal model other than noise")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit value")

    @property
    def beta(self) -> float:
        return float(db_to_linear(self.snr_db))

    @property
    def energy_sigma2(self) -> float:
        if self.energy_calibration is EnergyCalibration.WORST_CASE:
            return self.sigma2 * self.uncertainty.epsilon
        return self.sigma2


@dataclass(frozen=True)
class CurvePoint:
    sweep_value: float
    p_hat: float
    std_error: float
    theoretical: float | None
    detector: Detector
    trials: int
    failures: int = 0


@dataclass
class TrialStatistics:
    """Per-trial statistics of one cell, in trial order (NaN marks a failed trial)."""

    moment: np.ndarray
    energy: np.ndarray

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(np.isnan(self.moment)))


def _trial_block(config: TrialConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    moment = np.empty(stop - start)
    energy = np.empty(stop - start)
    for i, t in enumerate(range(start, stop)):
        y = synthesize_observation(config, RngStream(config.seed, t))
        if config.remove_mean:
            y = remove_mean(y)
        try:
            moment[i] = moment_statistic(y)
        except DegenerateInputError:
            moment[i] = math.nan
        energy[i] = energy_statistic(y)
    return moment, energy


def _blocks(trials: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, -(-trials // (4 * workers)))
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def simulate_statistics(config: TrialConfig, threads: int = 1) -> TrialStatistics:
    if threads <= 1:
        moment, energy = _trial_block(config, 0, config.trials)
        return TrialStatistics(moment, energy)
    blocks = _blocks(config.trials, threads)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_trial_block, [config] * len(blocks), *zip(*blocks)))
    return TrialStatistics(
        np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    )


def _gauss_legendre_mean(fn, lo: float, hi: float, order: int = 64) -> float:
    x, w = np.polynomial.legendre.leggauss(order)
    pts = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return float(0.5 * np.sum(w * fn(pts)))


def moment_theory(config: TrialConfig) -> float | None:
    """Asymptotic Pf / Pd of the moment detector, where the closed form applies.

    That is AWGN without pulse shaping.  With variance uncertainty the
    per-observation SNR varies, so the prediction is averaged over the
    uniform variance draw.
    """
    if config.channel is not ChannelKind.AWGN or config.pulse_shaping:
        return None
    lam = moment_threshold(config.target_pf)
    if config.hypothesis is Hypothesis.H0:
        return config.target_pf
    beta = config.beta
    eps = config.uncertainty.epsilon
    if eps == 1.0:
        return float(theoretical_pd(config.model, beta, config.n, lam))
    # beta is relative to the nominal variance; the draw scales it by sigma2/actual.
    return _gauss_legendre_mean(
        lambda v: theoretical_pd(config.model, beta / v, config.n, lam), 1.0 / eps, eps
    )


def _point(hits: int, valid: int, value: float, theory, detector: Detector, failures: int):
    p = hits / valid if valid else math.nan
    se = math.sqrt(p * (1.0 - p) / valid) if valid else math.nan
    return CurvePoint(value, p, se, theory, detector, valid, failures)


def run_cell(
    config: TrialConfig, threads: int = 1, sweep_value: float | None = None
) -> tuple[CurvePoint, CurvePoint]:
    """Empirical H1-decision frequency of (moment, energy) detectors for one scenario."""
    stats = simulate_statistics(config, threads)
    value = config.snr_db if sweep_value is None else sweep_value
    ok = ~np.isnan(stats.moment)
    failures = stats.failures
    if failures:
        log.warning("%d degenerate trials in cell %r", failures, value)
    lam_m = moment_threshold(config.target_pf)
    lam_e = energy_threshold(config.target_pf, config.energy_sigma2, config.n)
    moment = _point(
        int(np.count_nonzero(stats.moment[ok] >= lam_m)),
        int(ok.sum()),
        value,
        moment_theory(config),
        Detector.MOMENT,
        failures,
    )
    energy = _point(
        int(np.count_nonzero(stats.energy >= lam_e)),
        config.trials,
        value,
        None,
        Detector.ENERGY,
        0,
    )
    return moment, energy


def cell_seed(seed: int, axis: SweepAxis, value: float) -> int:
    return mix_seed(int(seed), SweepAxis(axis).value, float(value))


def apply_axis(base: TrialConfig, axis: SweepAxis, value: float) -> TrialConfig:
    axis = SweepAxis(axis)
    if axis is SweepAxis.SNR_DB:
        return replace(base, snr_db=float(value))
    if axis is SweepAxis.N:
        if value != int(value):
            raise ValueError(f"sample count must be an integer, got {value!r}")
        return replace(base, n=int(value))
    return replace(base, uncertainty=UncertaintyModel(float(value)))


def sweep(
    base: TrialConfig, axis: SweepAxis, values, threads: int = 1
) -> list[CurvePoint]:
    """One cell per value; returns moment and energy points interleaved."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    axis = SweepAxis(axis)
    out: list[CurvePoint] = []
    for value in values:
        cfg = replace(apply_axis(base, axis, value), seed=cell_seed(base.seed, axis, value))
        out.extend(run_cell(cfg, threads, sweep_value=float(value)))
    return out
