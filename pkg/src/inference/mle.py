"""Maximum-likelihood estimation of exponential jump rates."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import TooFewSamples, ZeroDenominator


@dataclass(frozen=True)
class RateEstimate:
    """Estimated jump rate with its error model.

    ``alpha`` inflates the statistical variance (bootstrap excess factor) and
    ``eta_hat`` adds an intrinsic-spread floor Gamma^2 * eta to the error.
    """

    gamma_hat: float
    n: int
    deadtime_hat: float = 0.0
    alpha: float = 1.0
    eta_hat: float = 0.0

    @property
    def std_error(self) -> float:
        return rate_std_error(self)


def mle_rate(times: np.ndarray | list[float], with_deadtime: bool = False) -> RateEstimate:
    """Rate of an exponential dwell-time sample.

    Args:
        times: Dwell durations in seconds.
        with_deadtime: Shift every dwell by the smallest observed one first.

    Returns:
        RateEstimate with gamma_hat = n / sum(tau - delta).

    Raises:
        TooFewSamples: If fewer than 2 dwells are given (3 with deadtime).
        ZeroDenominator: If the deadtime-shifted dwells sum to zero.
    """
    tau = np.asarray(times, dtype=float)
    needed = 3 if with_deadtime else 2
    if tau.size < needed:
        raise TooFewSamples(f"need at least {needed} dwells, got {tau.size}")
    if np.any(tau <= 0) or not np.all(np.isfinite(tau)):
        raise ValueError("dwell times must be positive and finite")

    deadtime = float(tau.min()) if with_deadtime else 0.0
    total = float(np.sum(tau - deadtime))
    if total <= 0.0:
        raise ZeroDenominator("all dwells equal the deadtime")
    return RateEstimate(gamma_hat=tau.size / total, n=int(tau.size), deadtime_hat=deadtime)


def exact_mle_moments(gamma: float, n: int) -> tuple[float, float]:
    """Exact mean and variance of n / sum(tau) for n exponential dwells.

    E = n Gamma / (n - 1) and Var = Gamma^2 n^2 / ((n - 1)^2 (n - 2)).
    """
    if n <= 2:
        raise TooFewSamples("the variance is finite only for n > 2")
    mean = n * gamma / (n - 1)
    variance = gamma**2 * n**2 / ((n - 1) ** 2 * (n - 2))
    return mean, variance


def rate_std_error(est: RateEstimate) -> float:
    """sqrt(alpha Gamma^2 / n + (Gamma^2 eta)^2)."""
    statistical = est.alpha * est.gamma_hat**2 / est.n
    intrinsic = (est.gamma_hat**2 * est.eta_hat) ** 2
    return math.sqrt(statistical + intrinsic)
