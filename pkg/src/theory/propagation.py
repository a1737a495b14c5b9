"""Gauss error propagation from rate errors to the theoretical precision."""

import math
from collections.abc import Callable

import numpy as np

from ..markov.generator import Generator, validate_generator
from .fcs import CountingWeights, asymptotic_moments, net_weights, opt_weights

_RELATIVE_STEP = 1e-5

WeightsFactory = Callable[[Generator], CountingWeights]

WEIGHT_FACTORIES: dict[str, WeightsFactory] = {
    "net": net_weights,
    "opt": opt_weights,
}


def _resolve(estimator: str | WeightsFactory) -> WeightsFactory:
    if callable(estimator):
        return estimator
    try:
        return WEIGHT_FACTORIES[estimator]
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}") from None


def theoretical_precision(g: Generator, estimator: str | WeightsFactory = "opt") -> float:
    """Precision of the estimator whose weights are rebuilt from ``g``."""
    return asymptotic_moments(g, _resolve(estimator)(g)).precision


def precision_gradient(
    g: Generator,
    estimator: str | WeightsFactory = "opt",
    relative_step: float = _RELATIVE_STEP,
) -> np.ndarray:
    """Partial derivatives dS/dGamma_ji by central differences.

    The estimator weights are recomputed for every perturbed generator, so the
    derivative includes the recalibration of nu and Gamma. Entries with a zero
    rate use a forward difference.
    """
    factory = _resolve(estimator)
    off = g.off_diagonal()
    scale = float(off[off > 0].mean())
    gradient = np.zeros_like(off)
    for j, i in zip(*np.nonzero(~np.eye(g.n_states, dtype=bool))):
        h = relative_step * max(off[j, i], scale)
        up = off.copy()
        up[j, i] += h
        s_up = theoretical_precision(validate_generator(up), factory)
        if off[j, i] >= h:
            down = off.copy()
            down[j, i] -= h
            s_down = theoretical_precision(validate_generator(down), factory)
            gradient[j, i] = (s_up - s_down) / (2.0 * h)
        else:
            gradient[j, i] = (s_up - theoretical_precision(g, factory)) / h
    return gradient


def precision_error_propagation(
    g_hat: Generator,
    std_errors: np.ndarray,
    estimator: str | WeightsFactory = "opt",
) -> float:
    """sigma_S = sqrt(sum_{i != j} (dS/dGamma_ji)^2 dGamma_ji^2).

    Raises:
        ConvergenceFailure: Propagated from the moment computation.
    """
    errors = np.array(std_errors, dtype=float)
    np.fill_diagonal(errors, 0.0)
    if not np.any(errors > 0):
        return 0.0
    gradient = precision_gradient(g_hat, estimator)
    return math.sqrt(float(np.sum((gradient * errors) ** 2)))
