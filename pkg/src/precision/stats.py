"""Empirical clock precision from sliced records.

A long record is cut into M slices of equal horizon t, an estimator is
evaluated on each slice and the slices are treated as independent samples of
Theta(t). The precision estimate is mean^2 / (t var) and its error follows from
Gauss propagation under the assumption that Theta(t) is close to normal.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..errors import TooShort
from ..identification.classifier import StateSequence
from ..simulation.trajectory import JumpRecord
from ..ticks.counting import extract_jumps
from ..ticks.estimators import Calibration, EstimatorKind, evaluate


@dataclass(frozen=True)
class SliceEnsemble:
    """Estimator values of M slices at the common horizon ``horizon`` seconds."""

    estimates: np.ndarray
    horizon: float
    estimator_tag: EstimatorKind = EstimatorKind.NET

    def __post_init__(self):
        object.__setattr__(self, "estimates", np.asarray(self.estimates, dtype=float))
        object.__setattr__(self, "estimator_tag", EstimatorKind(self.estimator_tag))
        if self.estimates.size < 2:
            raise ValueError("an ensemble needs at least two slices")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def size(self) -> int:
        return int(self.estimates.size)


@dataclass(frozen=True)
class PrecisionEstimate:
    """Sample moments, precision and its standard error.

    A zero variance gives ``precision = math.inf`` with ``infinite`` set.
    """

    mean: float
    variance: float
    precision: float
    std_error: float
    slices: int
    horizon: float
    estimator_tag: EstimatorKind = EstimatorKind.NET
    infinite: bool = False


def slice_record(seq: StateSequence, m: int) -> list[StateSequence]:
    """Cut a sequence into ``m`` slices of floor(N / m) samples; the rest is dropped.

    Raises:
        TooShort: If there are fewer samples than slices.
    """
    if m < 2:
        raise ValueError("need at least two slices")
    if len(seq) < m:
        raise TooShort(f"{len(seq)} samples cannot fill {m} slices")
    size = len(seq) // m
    blocks = seq.states[: size * m].reshape(m, size)
    return [
        StateSequence(states=block, dt=seq.dt, authoritative=seq.authoritative) for block in blocks
    ]


def build_ensemble(
    slices: Sequence[StateSequence | JumpRecord],
    estimator: EstimatorKind | str,
    calibration: Calibration,
) -> SliceEnsemble:
    """Evaluate one estimator on every slice."""
    records = [extract_jumps(s) if isinstance(s, StateSequence) else s for s in slices]
    values = np.array([evaluate(rec, calibration, EstimatorKind(estimator)) for rec in records])
    return SliceEnsemble(estimates=values, horizon=records[0].duration, estimator_tag=estimator)


def sample_moments(ens: SliceEnsemble) -> tuple[float, float]:
    """Sample mean and unbiased sample variance."""
    return float(np.mean(ens.estimates)), float(np.var(ens.estimates, ddof=1))


def empirical_precision(ens: SliceEnsemble) -> PrecisionEstimate:
    """S = mean^2 / (t var) with its standard error.

    The error is (S / sqrt(M)) sqrt(4 var / mean^2 + 2 M / (M - 1)), written
    without dividing by the mean so a vanishing mean gives a finite error.
    """
    mean, variance = sample_moments(ens)
    m, t = ens.size, ens.horizon
    if variance == 0.0:
        return PrecisionEstimate(
            mean=mean,
            variance=0.0,
            precision=math.inf,
            std_error=math.inf,
            slices=m,
            horizon=t,
            estimator_tag=ens.estimator_tag,
            infinite=True,
        )
    precision = mean**2 / (t * variance)
    spread = 4.0 * mean**2 / (t**2 * variance) + 2.0 * m * precision**2 / (m - 1)
    return PrecisionEstimate(
        mean=mean,
        variance=variance,
        precision=precision,
        std_error=math.sqrt(spread / m),
        slices=m,
        horizon=t,
        estimator_tag=ens.estimator_tag,
    )


def mean_std_error(ens: SliceEnsemble) -> float:
    return math.sqrt(sample_moments(ens)[1] / ens.size)


def variance_std_error(ens: SliceEnsemble) -> float:
    """var sqrt(2 / (M - 1)), exact for normal samples."""
    return sample_moments(ens)[1] * math.sqrt(2.0 / (ens.size - 1))


def calibration_uncertainty(prec: PrecisionEstimate, t: float) -> float:
    """Relative variance 1 / (t S) of a rate calibrated over ``t`` seconds."""
    if t <= 0:
        raise ValueError("calibration time must be positive")
    if prec.infinite:
        return 0.0
    if prec.precision == 0.0:
        return math.inf
    return 1.0 / (t * prec.precision)
