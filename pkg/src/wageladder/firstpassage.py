"""Closed-form first-passage benchmark for a drifted diffusion.

A scalar Brownian motion with drift mu and volatility sigma starts a distance
d above an absorbing barrier. These routines give the exact distribution of
the first hitting time, the associated hazard, and the probability of never
reaching the barrier. Gaussian tails are evaluated through log_ndtr so the
expressions stay finite for extreme arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .params import InvalidParameterError


@dataclass(frozen=True)
class BenchmarkSpec:
    """Hitting problem: start d above the barrier, drift mu, volatility sigma.

    t_ret is the truncation horizon used for the survivorship moment
    (probability the barrier is not reached before t_ret).
    """

    d: float
    mu: float
    sigma: float
    t_ret: float = 40.0

    def __post_init__(self) -> None:
        if not self.d > 0.0:
            raise InvalidParameterError(f"barrier distance must be positive, got {self.d}")
        if not self.sigma > 0.0:
            raise InvalidParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.t_ret > 0.0:
            raise InvalidParameterError(f"t_ret must be positive, got {self.t_ret}")


def hitting_cdf(t: np.ndarray | float, spec: BenchmarkSpec) -> np.ndarray | float:
    """P(first hitting time <= t). Zero for t <= 0, vectorized over t."""
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    pos = t_arr > 0.0
    tp = t_arr[pos]
    sqt = spec.sigma * np.sqrt(tp)
    a = (-spec.d - spec.mu * tp) / sqt
    b = (-spec.d + spec.mu * tp) / sqt
    h = -2.0 * spec.mu * spec.d / (spec.sigma * spec.sigma)
    vals = np.exp(log_ndtr(a)) + np.exp(h + log_ndtr(b))
    out[pos] = np.clip(vals, 0.0, 1.0)
    if np.ndim(t) == 0:
        return float(out)
    return out


def hitting_pdf(t: np.ndarray | float, spec: BenchmarkSpec) -> np.ndarray | float:
    """Density of the first hitting time. Zero for t <= 0."""
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    pos = t_arr > 0.0
    tp = t_arr[pos]
    var = spec.sigma * spec.sigma * tp
    log_f = (
        np.log(spec.d)
        - 0.5 * np.log(2.0 * np.pi)
        - np.log(spec.sigma)
        - 1.5 * np.log(tp)
        - (spec.d + spec.mu * tp) ** 2 / (2.0 * var)
    )
    out[pos] = np.exp(log_f)
    if np.ndim(t) == 0:
        return float(out)
    return out


def hazard(t: np.ndarray | float, spec: BenchmarkSpec) -> np.ndarray | float:
    """Hazard rate pdf / survival of the first hitting time."""
    t_arr = np.asarray(t, dtype=float)
    pdf = np.asarray(hitting_pdf(t_arr, spec), dtype=float)
    survival = 1.0 - np.asarray(hitting_cdf(t_arr, spec), dtype=float)
    out = pdf / np.maximum(survival, 1e-300)
    if np.ndim(t) == 0:
        return float(out)
    return out


def never_end_probability(spec: BenchmarkSpec) -> float:
    """P(the barrier is never reached).

    Positive exactly when the drift points away from the barrier, where it
    equals 1 - exp(-2 mu d / sigma^2); otherwise the hit is certain.
    """
    if spec.mu > 0.0:
        return float(-np.expm1(-2.0 * spec.mu * spec.d / (spec.sigma * spec.sigma)))
    return 0.0


def never_end_truncated(spec: BenchmarkSpec) -> float:
    """P(the barrier is not reached before t_ret)."""
    return 1.0 - float(hitting_cdf(spec.t_ret, spec))
