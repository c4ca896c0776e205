"""Analytic layer of the moment-ratio detector.

Everything here is a pure function of its arguments: raw moments of the
source distributions, absolute moments of the received sample, the ratio
``T = -M4 / M2**2``, its asymptotic variance, the Q-function and the
resulting false-alarm / detection probabilities.

The moments are written in terms of the per-component noise variance
``sigma2`` (so ``E|w|**2 = 2 * sigma2``) and the linear SNR
``beta = E|s|**2 / E|w|**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import special

__all__ = [
    "SignalModel",
    "MomentSet",
    "discrete_uniform_moment",
    "continuous_uniform_moment",
    "gaussian_moment",
    "analytic_m2",
    "analytic_m4",
    "theoretical_ratio",
    "delta_method_variance",
    "closed_form_variance",
    "q_function",
    "q_inverse",
    "threshold_for_pf",
    "theoretical_mu",
    "theoretical_pd",
    "db_to_linear",
]


class SignalModel(str, Enum):
    """Source distribution of the transmitted samples."""

    NOISE_ONLY = "noise"
    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "qam16"
    QAM64 = "qam64"
    CONTINUOUS_UNIFORM = "cu"

    @classmethod
    def parse(cls, text: str) -> "SignalModel":
        key = text.strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "noise": cls.NOISE_ONLY,
            "noiseonly": cls.NOISE_ONLY,
            "h0": cls.NOISE_ONLY,
            "bpsk": cls.BPSK,
            "qpsk": cls.QPSK,
            "qam16": cls.QAM16,
            "16qam": cls.QAM16,
            "qam64": cls.QAM64,
            "64qam": cls.QAM64,
            "cu": cls.CONTINUOUS_UNIFORM,
            "continuousuniform": cls.CONTINUOUS_UNIFORM,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown signal model {text!r}") from None

    @property
    def levels(self) -> int | None:
        """Levels per real component; ``None`` for a continuous source."""
        return _LEVELS[self]

    @property
    def complex_valued(self) -> bool:
        return self not in (SignalModel.BPSK, SignalModel.NOISE_ONLY)

    @property
    def fourth_moment_coefficient(self) -> Fraction:
        """Coefficient of ``beta**2`` in ``M4 / sigma**4``."""
        return _M4_COEFF[self]


_LEVELS: dict[SignalModel, int | None] = {
    SignalModel.NOISE_ONLY: None,
    SignalModel.BPSK: 2,
    SignalModel.QPSK: 2,
    SignalModel.QAM16: 4,
    SignalModel.QAM64: 8,
    SignalModel.CONTINUOUS_UNIFORM: None,
}

_M4_COEFF: dict[SignalModel, Fraction] = {
    SignalModel.NOISE_ONLY: Fraction(0),
    SignalModel.BPSK: Fraction(4),
    SignalModel.QPSK: Fraction(4),
    SignalModel.QAM16: Fraction(132, 25),
    SignalModel.QAM64: Fraction(116, 21),
    SignalModel.CONTINUOUS_UNIFORM: Fraction(28, 5),
}

# Numerator polynomials of the closed-form asymptotic variance, highest power
# first, down to beta**2.  The common tail is kappa = 24*beta + 4.
_VARIANCE_ROWS: dict[SignalModel, tuple[float, ...]] = {
    SignalModel.BPSK: (8.0, 32.0, 40.0),
    SignalModel.QPSK: (8.0, 32.0, 40.0),
    SignalModel.QAM16: (0.234, 2.765, 17.114, 42.24, 46.4),
    SignalModel.QAM64: (0.26, 3.51, 19.49, 44.8, 47.62),
    SignalModel.CONTINUOUS_UNIFORM: (0.325, 3.977, 20.503, 45.715, 48.0),
}


@dataclass(frozen=True)
class MomentSet:
    """Absolute moments ``E|y|**k`` for k = 2, 4, 6, 8."""

    m2: float
    m4: float
    m6: float
    m8: float


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def discrete_uniform_moment(P: int, b: float, k: int) -> float:
    """k-th raw moment of a variable uniform on P equispaced levels in [-b, b]."""
    if int(P) != P or P < 2:
        raise ValueError(f"need at least two levels, got P={P!r}")
    if b <= 0:
        raise ValueError(f"level bound must be positive, got b={b!r}")
    if k % 2:
        return 0.0
    P = int(P)
    total = sum((P - 2 * i - 1) ** k for i in range(P))
    return float(b**k * (-1) ** k * total / (P * (P - 1) ** k))


def continuous_uniform_moment(b: float, k: int) -> float:
    if b <= 0:
        raise ValueError(f"support bound must be positive, got b={b!r}")
    if k % 2:
        return 0.0
    return b**k / (k + 1)


def gaussian_moment(sigma: float, k: int) -> float:
    """k-th raw moment of N(0, sigma**2): (k-1)!! * sigma**k for even k."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if k % 2:
        return 0.0
    return float(math.prod(range(1, k, 2))) * sigma**k


def _signal_beta(model: SignalModel, beta):
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("SNR must be non-negative")
    if model is SignalModel.NOISE_ONLY:
        return np.zeros_like(beta)
    return beta


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def analytic_m2(model: SignalModel, beta, sigma2: float):
    """``E|y|**2 = 2 sigma2 (beta + 1)`` for any source."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    beta = _signal_beta(model, beta)
    return _scalar(2.0 * sigma2 * (beta + 1.0))


def analytic_m4(model: SignalModel, beta, sigma2: float):
    """``E|y|**4 = sigma2**2 (c beta**2 + 16 beta + 8)`` with c set by the model."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    beta = _signal_beta(model, beta)
    c = float(model.fourth_moment_coefficient)
    return _scalar(sigma2**2 * (c * beta**2 + 16.0 * beta + 8.0))


def theoretical_ratio(model: SignalModel, beta):
    """Population value of ``-M4 / M2**2``; -2 without a signal."""
    beta = _signal_beta(model, beta)
    c = float(model.fourth_moment_coefficient)
    return _scalar(-(c * beta**2 + 16.0 * beta + 8.0) / (4.0 * (beta + 1.0) ** 2))


def delta_method_variance(moments: MomentSet) -> float:
    """Asymptotic variance of ``sqrt(N) (T_hat - T)`` from the first four even moments."""
    m2, m4, m6, m8 = moments.m2, moments.m4, moments.m6, moments.m8
    if m2 <= 0:
        raise ValueError("second moment must be positive")
    num = 4.0 * m4**3 + m2**2 * m8 - 4.0 * m2 * m4 * m6 - m2**2 * m4**2
    return num / m2**6


def closed_form_variance(model: SignalModel, beta):
    """Closed-form asymptotic variance of the test statistic for ``model`` at ``beta``."""
    beta = _signal_beta(model, beta)
    if model is SignalModel.NOISE_ONLY:
        return _scalar(np.full_like(beta, 4.0))
    num = np.polyval(_VARIANCE_ROWS[model] + (0.0, 0.0), beta) + 24.0 * beta + 4.0
    return _scalar(num / (beta + 1.0) ** 6)


def q_function(x):
    """Gaussian tail probability ``P(Z > x)``."""
    return _scalar(0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0)))


def q_inverse(p):
    """Inverse of :func:`q_function` on the open interval (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(np.isnan(p)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    x = math.sqrt(2.0) * special.erfcinv(2.0 * p)
    # One Newton step on log Q keeps the round trip tight deep in the tails.
    q = 0.5 * special.erfc(x / math.sqrt(2.0))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    x = x + q * np.log(q / p) / pdf
    return _scalar(x)


def threshold_for_pf(pf) -> float:
    """Moment-detector threshold giving false-alarm probability ``pf``.

    Does not depend on the noise variance or on N.
    """
    return _scalar(2.0 * np.asarray(q_inverse(pf)))


def theoretical_mu(model: SignalModel, beta, n: int):
    """Asymptotic mean ``sqrt(N) (T + 2)`` of the test statistic."""
    return _scalar(math.sqrt(n) * (np.asarray(theoretical_ratio(model, beta)) + 2.0))


def theoretical_pd(model: SignalModel, beta, n: int, lam):
    """Asymptotic detection probability at threshold ``lam``.

    With ``beta = 0`` or ``NOISE_ONLY`` this is the false-alarm probability.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    mu = np.asarray(theoretical_mu(model, beta, n))
    var = np.asarray(closed_form_variance(model, beta))
    return _scalar(q_function((np.asarray(lam, dtype=float) - mu) / np.sqrt(var)))
