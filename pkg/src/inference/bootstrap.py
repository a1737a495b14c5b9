"""Subset bootstrap of rate and mean-dwell estimators.

Both procedures draw subsets of n' dwells without duplicates for every n' in a
size range, measure the spread of an estimator across subsets and fit the
1/n' scaling the spread should follow for independent exponential dwells.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..config import get_settings
from ..errors import TooFewSamples
from ..logger import get_logger
from ..simulation.trajectory import derive_rng
from .mle import mle_rate

logger = get_logger(__name__)


@dataclass(frozen=True)
class BootstrapFit:
    """Excess-variance factor alpha and the data it was fitted to."""

    alpha: float
    sizes: np.ndarray
    variances: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class IntrinsicSpread:
    """Spread eta of the mean survival time across the record.

    ``eta_squared_raw`` keeps the fitted value before clamping at zero.
    """

    eta_hat: float
    eta_squared_raw: float
    mean_dwell: float
    scale: float


def _size_range(n_range: tuple[int, int] | None) -> np.ndarray:
    if n_range is None:
        settings = get_settings()
        n_range = (settings.bootstrap_min_size, settings.bootstrap_max_size)
    lo, hi = n_range
    if lo < 3 or hi < lo:
        raise ValueError(f"invalid subset size range {n_range}")
    return np.arange(lo, hi + 1)


def _subset_statistics(
    tau: np.ndarray,
    sizes: np.ndarray,
    m_boot: int,
    seed: int,
    statistic,
) -> np.ndarray:
    variances = np.empty(sizes.size)
    for k, size in enumerate(sizes):
        rng = derive_rng(seed, int(size))
        values = np.array(
            [
                statistic(tau[rng.choice(tau.size, size=int(size), replace=False)])
                for _ in range(m_boot)
            ]
        )
        variances[k] = np.var(values, ddof=1)
    return variances


def _fit_through_origin(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.dot(x, y) / np.dot(x, x))


def bootstrap_alpha(
    times: np.ndarray | list[float],
    m_boot: int | None = None,
    n_range: tuple[int, int] | None = None,
    seed: int = 0,
    leading_order: bool = True,
) -> BootstrapFit:
    """Fit alpha in Var[Gamma_hat(n')] = alpha * V(n').

    V(n') is Gamma^2 / n' at the full-sample rate, the same form
    ``rate_std_error`` scales with alpha. With ``leading_order`` unset the
    exact variance Gamma^2 n'^2 / ((n'-1)^2 (n'-2)) of n' independent
    exponential dwells is used instead; small subsets then no longer push
    alpha above one for ideal data.

    Args:
        times: Dwell durations in seconds.
        m_boot: Subsets per size; defaults to the configured count.
        n_range: Inclusive (smallest, largest) subset size.
        seed: Master seed of the subset draws.
        leading_order: Regress on Gamma^2 / n' rather than the exact variance.

    Raises:
        TooFewSamples: If there are not more dwells than the largest subset.
    """
    tau = np.asarray(times, dtype=float)
    sizes = _size_range(n_range)
    m_boot = m_boot or get_settings().bootstrap_subsets
    if tau.size <= sizes[-1]:
        raise TooFewSamples(f"{tau.size} dwells cannot fill subsets of {sizes[-1]}")

    gamma = mle_rate(tau).gamma_hat
    variances = _subset_statistics(tau, sizes, m_boot, seed, lambda sub: sub.size / sub.sum())
    if leading_order:
        reference = gamma**2 / sizes
    else:
        reference = gamma**2 * sizes**2 / ((sizes - 1.0) ** 2 * (sizes - 2.0))

    alpha = max(_fit_through_origin(reference, variances), 0.0)
    degenerate = bool(np.all(variances == 0.0))
    if degenerate:
        logger.warning("bootstrap_degenerate", dwells=int(tau.size))
    return BootstrapFit(alpha=alpha, sizes=sizes, variances=variances, degenerate=degenerate)


def intrinsic_spread(
    times: np.ndarray | list[float],
    m_boot: int | None = None,
    n_range: tuple[int, int] | None = None,
    seed: int = 0,
) -> IntrinsicSpread:
    """Fit the spread eta of the mean survival time.

    The bootstrap variance of the mean dwell is fitted as c / n', and with
    Delta_0 the mean dwell above the shortest one, c = Delta_0^2 + 2 eta^2.

    Raises:
        TooFewSamples: If fewer dwells than the configured minimum are given
            or there are not more dwells than the largest subset.
    """
    settings = get_settings()
    tau = np.asarray(times, dtype=float)
    if tau.size < settings.intrinsic_min_samples:
        raise TooFewSamples(f"need {settings.intrinsic_min_samples} dwells, got {tau.size}")
    sizes = _size_range(n_range)
    if tau.size <= sizes[-1]:
        raise TooFewSamples(f"{tau.size} dwells cannot fill subsets of {sizes[-1]}")
    m_boot = m_boot or settings.bootstrap_subsets

    variances = _subset_statistics(tau, sizes, m_boot, seed, np.mean)
    scale = _fit_through_origin(1.0 / sizes, variances)
    delta0 = float(tau.mean() - tau.min())
    eta_squared = 0.5 * (scale - delta0**2)
    return IntrinsicSpread(
        eta_hat=math.sqrt(max(eta_squared, 0.0)),
        eta_squared_raw=eta_squared,
        mean_dwell=delta0,
        scale=scale,
    )
