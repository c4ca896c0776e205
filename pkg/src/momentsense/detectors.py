"""Decision rules: the moment-ratio detector and the energy-detector baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .stats_core import q_inverse, threshold_for_pf


class Detector(str, Enum):
    MOMENT = "moment"
    ENERGY = "energy"


class DegenerateInputError(ValueError):
    """Raised when a record carries no power and the moment ratio is undefined."""


@dataclass(frozen=True)
class DetectorOutcome:
    statistic: float
    threshold: float
    decide_h1: bool
    detector: Detector


def remove_mean(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("empty record")
    return samples - samples.mean()


def _power(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples)
    return samples.real**2 + samples.imag**2


def sample_absolute_moment(samples: np.ndarray, k: int) -> float:
    """``mean(|y|**k)`` for k in {2, 4}."""
    if k not in (2, 4):
        raise ValueError(f"only k=2 and k=4 are supported, got {k}")
    p = _power(samples)
    if p.size == 0:
        raise ValueError("empty record")
    return float(np.mean(p if k == 2 else p * p))


def moment_statistic(samples: np.ndarray) -> float:
    """``sqrt(N) * (2 - M4_hat / M2_hat**2)``; invariant to any complex scaling."""
    p = _power(samples)
    n = p.size
    if n < 2:
        raise ValueError("need at least two samples")
    m2 = p.mean()
    if not m2 > 0:
        raise DegenerateInputError("record has zero power")
    m4 = np.mean(p * p)
    return float(math.sqrt(n) * (2.0 - m4 / (m2 * m2)))


def moment_threshold(pf: float) -> float:
    return threshold_for_pf(pf)


def energy_statistic(samples: np.ndarray) -> float:
    p = _power(samples)
    if p.size == 0:
        raise ValueError("empty record")
    return float(p.mean())


def energy_threshold(pf: float, assumed_sigma2: float, n: int) -> float:
    """Gaussian-approximation threshold ``2 s2 (1 + Q^-1(pf) / sqrt(n))``."""
    if assumed_sigma2 <= 0:
        raise ValueError("assumed noise variance must be positive")
    if n < 1:
        raise ValueError("need at least one sample")
    return 2.0 * assumed_sigma2 * (1.0 + q_inverse(pf) / math.sqrt(n))


def decide(statistic: float, threshold: float) -> bool:
    return statistic >= threshold


def moment_detect(samples: np.ndarray, pf: float, demean: bool = False) -> DetectorOutcome:
    if demean:
        samples = remove_mean(samples)
    stat, lam = moment_statistic(samples), moment_threshold(pf)
    return DetectorOutcome(stat, lam, decide(stat, lam), Detector.MOMENT)


def energy_detect(
    samples: np.ndarray, pf: float, assumed_sigma2: float, demean: bool = False
) -> DetectorOutcome:
    if demean:
        samples = remove_mean(samples)
    stat = energy_statistic(samples)
    lam = energy_threshold(pf, assumed_sigma2, np.asarray(samples).size)
    return DetectorOutcome(stat, lam, decide(stat, lam), Detector.ENERGY)
