"""Independent routes to the absolute moments ``E|y|**k`` of ``y = s + w``.

These do not use the closed-form variance polynomials; they exist so that
the closed forms can be checked against something computed from first
principles.

* :func:`exact_moments` expands ``|y|**2 = X**2 + Y**2`` binomially and
  combines per-component raw moments of the source and of the noise.
* :func:`conditional_mc_moments` draws source samples and integrates the
  Gaussian noise out exactly (``|y|**2`` given ``s`` is a scaled
  noncentral chi-square with two degrees of freedom).
* :func:`sample_moments` is plain Monte Carlo over both.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .stats_core import (
    MomentSet,
    SignalModel,
    continuous_uniform_moment,
    discrete_uniform_moment,
    gaussian_moment,
)
from .waveform import component_bound, generate_noise, generate_symbols


def _component_moments(model: SignalModel, order: int) -> tuple[list[float], list[float]]:
    """Raw moments 0..order of the real and imaginary parts of a unit-power symbol."""
    zero = [1.0] + [0.0] * order
    if model is SignalModel.NOISE_ONLY:
        return zero, zero
    b = component_bound(model)
    if model is SignalModel.CONTINUOUS_UNIFORM:
        re = [continuous_uniform_moment(b, k) if k else 1.0 for k in range(order + 1)]
    else:
        re = [discrete_uniform_moment(model.levels, b, k) for k in range(order + 1)]
    im = re if model.complex_valued else zero
    return re, im


def exact_moments(model: SignalModel, beta: float, sigma2: float = 1.0) -> MomentSet:
    amp = math.sqrt(2.0 * sigma2 * beta) if model is not SignalModel.NOISE_ONLY else 0.0
    sre, sim = _component_moments(model, 8)
    sigma = math.sqrt(sigma2)
    w = [gaussian_moment(sigma, k) if k else 1.0 for k in range(9)]

    def component(s_mom, power):
        # E[(amp*s + w)**power]
        return sum(
            math.comb(power, m) * amp**m * s_mom[m] * w[power - m] for m in range(power + 1)
        )

    out = []
    for j in (1, 2, 3, 4):
        out.append(
            sum(
                math.comb(j, k) * component(sre, 2 * k) * component(sim, 2 * (j - k))
                for k in range(j + 1)
            )
        )
    return MomentSet(*out)


def conditional_moments(power: np.ndarray, sigma2: float) -> list[np.ndarray]:
    """``E[|s + w|**(2j) | |s|**2 = power]`` for j = 1..4."""
    x = -np.asarray(power) / (2.0 * sigma2)
    return [
        (2.0 * sigma2) ** j * math.factorial(j) * special.eval_laguerre(j, x)
        for j in (1, 2, 3, 4)
    ]


def conditional_mc_moments(
    model: SignalModel,
    beta: float,
    rng: np.random.Generator,
    samples: int = 10**7,
    sigma2: float = 1.0,
    chunk: int = 10**6,
) -> MomentSet:
    if model is SignalModel.NOISE_ONLY:
        return MomentSet(*(float(m) for m in conditional_moments(np.zeros(1), sigma2)))
    amp2 = 2.0 * sigma2 * beta
    sums = np.zeros(4)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        s = generate_symbols(model, k, rng)
        power = amp2 * (s.real**2 + s.imag**2)
        sums += [m.sum() for m in conditional_moments(power, sigma2)]
        done += k
    return MomentSet(*(sums / samples))


def sample_moments(
    model: SignalModel,
    beta: float,
    rng: np.random.Generator,
    samples: int = 10**7,
    sigma2: float = 1.0,
    chunk: int = 10**6,
) -> MomentSet:
    sums = np.zeros(4)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        y = generate_noise(k, sigma2, rng)
        if model is not SignalModel.NOISE_ONLY:
            y = y + math.sqrt(2.0 * sigma2 * beta) * generate_symbols(model, k, rng)
        e = y.real**2 + y.imag**2
        sums += [e.sum(), (e * e).sum(), (e**3).sum(), (e**4).sum()]
        done += k
    return MomentSet(*(sums / samples))
