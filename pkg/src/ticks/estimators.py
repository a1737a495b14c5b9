"""Net-transfer and optimal time estimators."""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ZeroRate
from ..inference.full_matrix import full_matrix_mle
from ..logger import get_logger
from ..markov.generator import Generator, exit_rates
from ..simulation.trajectory import JumpRecord
from ..theory.fcs import asymptotic_moments, net_current, net_weights
from .counting import count_net_transfers

logger = get_logger(__name__)


class EstimatorKind(str, Enum):
    """Linear time estimators of the clock."""

    NET = "net"
    OPT = "opt"


class CalibrationSource(str, Enum):
    """Where the rates behind a calibration came from."""

    TRUTH = "simulated-truth"
    FITTED = "fitted"


@dataclass(frozen=True)
class Calibration:
    """Mean net-transfer rate nu and exit rates Gamma_s in Hz.

    ``nu_std_error`` is the statistical error of a fitted nu; it is zero for
    a calibration taken from a known generator.
    """

    nu: float
    gamma: np.ndarray
    source: CalibrationSource = CalibrationSource.FITTED
    nu_std_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "source", CalibrationSource(self.source))
        if not np.isfinite(self.nu):
            raise ValueError("nu must be finite")
        if not self.nu_std_error >= 0.0:
            raise ValueError("nu_std_error must be non-negative")
        if np.any(self.gamma <= 0):
            raise ValueError("exit rates must be positive")

    @property
    def nu_resolved(self) -> bool:
        """Whether nu is nonzero and larger than its own error."""
        return self.nu != 0.0 and abs(self.nu) > self.nu_std_error


def theta_net(rec: JumpRecord, cal: Calibration) -> float:
    """Net tick count divided by the mean net-transfer rate.

    Raises:
        ZeroRate: If nu is zero, as for a clock at equilibrium.
    """
    if cal.nu == 0.0:
        raise ZeroRate("net-transfer rate is zero; the clock does not advance")
    return count_net_transfers(rec).net / cal.nu


def theta_opt(rec: JumpRecord, cal: Calibration) -> float:
    """Sum of 1/Gamma over every visited state, initial and final included."""
    counts = rec.visit_counts(cal.gamma.size)
    return float(np.dot(counts, 1.0 / cal.gamma))


def evaluate(rec: JumpRecord, cal: Calibration, kind: EstimatorKind) -> float:
    if EstimatorKind(kind) is EstimatorKind.NET:
        return theta_net(rec, cal)
    return theta_opt(rec, cal)


def calibrate(
    records: JumpRecord | Iterable[JumpRecord],
    lab_durations: Sequence[float] | None = None,
    n_states: int = 3,
) -> Calibration:
    """Self-calibrate both estimators from the records themselves.

    nu is the total net transfer count over the total lab time; the exit rates
    come from the full-matrix maximum-likelihood fit. The error of nu is
    sqrt(D / T), with D the growth rate of the net-count variance of the
    fitted generator and T the total lab time.

    Args:
        records: One or more jump records.
        lab_durations: Lab time of each record; defaults to the record durations.
        n_states: Number of clock states.
    """
    records = [records] if isinstance(records, JumpRecord) else list(records)
    durations = lab_durations if lab_durations is not None else [r.duration for r in records]
    total = float(np.sum(durations))
    if total <= 0:
        raise ValueError("total duration must be positive")

    net = sum(count_net_transfers(r).net for r in records)
    nu = net / total
    if net == 0:
        logger.warning("zero_rate_calibration", records=len(records), duration_s=total)
    g = full_matrix_mle(records, n_states=n_states).generator
    diffusion = asymptotic_moments(g, net_weights(g, nu=1.0)).diffusion
    return Calibration(
        nu=nu,
        gamma=exit_rates(g),
        source=CalibrationSource.FITTED,
        nu_std_error=math.sqrt(max(diffusion, 0.0) / total),
    )


def truth_calibration(g: Generator) -> Calibration:
    """Calibration from a known generator."""
    return Calibration(nu=net_current(g), gamma=exit_rates(g), source=CalibrationSource.TRUTH)
