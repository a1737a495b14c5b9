"""Sliding-window re-estimation of the generator to expose drifts."""

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..config import get_settings
from ..errors import UnvisitedState, WindowTooShort
from ..identification.classifier import StateSequence
from ..logger import get_logger
from ..markov.generator import exit_rates
from ..simulation.trajectory import JumpRecord, crop_record
from ..ticks.counting import extract_jumps
from .full_matrix import GeneratorEstimate, full_matrix_mle

logger = get_logger(__name__)


@dataclass(frozen=True)
class DriftWindow:
    """One window of the scan; ``estimate`` is None when a state went unvisited."""

    start_s: float
    estimate: GeneratorEstimate | None
    max_deviation: float
    flagged: bool


@dataclass(frozen=True)
class DriftScan:
    window_width: float
    shift: float
    threshold: float
    windows: list[DriftWindow]
    global_estimate: GeneratorEstimate

    @property
    def flagged_starts(self) -> list[float]:
        return [w.start_s for w in self.windows if w.flagged]


def _deviation(window: GeneratorEstimate, whole: GeneratorEstimate) -> float:
    """Largest rate difference in units of the combined standard error.

    Every entry is compared, exit rates on the diagonal and the per-destination
    rates off it, so a drift that only moves the branching is caught too.
    """
    diff = np.abs(window.generator.rates - whole.generator.rates)
    spread = np.hypot(window.std_errors, whole.std_errors)
    z = np.zeros_like(diff)
    np.divide(diff, spread, out=z, where=spread > 0)
    z[(spread == 0) & (diff > 0)] = np.inf
    return float(np.max(z))


def _with_error_model(
    estimate: GeneratorEstimate,
    alpha: Sequence[float] | None,
    eta: Sequence[float] | None,
) -> GeneratorEstimate:
    if alpha is None and eta is None:
        return estimate
    exits = [
        replace(
            est,
            alpha=est.alpha if alpha is None else float(alpha[i]),
            eta_hat=est.eta_hat if eta is None else float(eta[i]),
        )
        for i, est in enumerate(estimate.exit_estimates)
    ]
    return estimate.with_exit_estimates(exits)


def drift_scan(
    data: StateSequence | JumpRecord,
    width: float | None = None,
    shift: float | None = None,
    threshold: float | None = None,
    n_states: int = 3,
    alpha: Sequence[float] | None = None,
    eta: Sequence[float] | None = None,
) -> DriftScan:
    """Re-fit the generator on windows [k q W, (k q + 1) W] of the record.

    A window is flagged when one of its rates differs from the whole-record
    estimate by more than ``threshold`` combined standard errors, or when it
    cannot be fitted at all. Bootstrap ``alpha`` and ``eta`` per state, when
    given, set the error model of the whole record and of every window.

    Args:
        data: Classified sequence or jump record.
        width: Window width W in seconds.
        shift: Window shift as a fraction q of the width.
        threshold: Flag threshold in standard errors.
        n_states: Number of clock states.
        alpha: Excess-variance factor of each exit rate.
        eta: Intrinsic spread of each state's mean dwell.

    Raises:
        WindowTooShort: If the window is longer than the record.
    """
    settings = get_settings()
    width = width if width is not None else settings.drift_window_s
    shift = shift if shift is not None else settings.drift_shift
    threshold = threshold if threshold is not None else settings.drift_threshold
    if width <= 0 or not 0 < shift <= 1:
        raise ValueError("window width must be positive and shift in (0, 1]")

    rec = extract_jumps(data) if isinstance(data, StateSequence) else data
    if width > rec.duration:
        raise WindowTooShort(f"window of {width} s exceeds record of {rec.duration} s")

    whole = _with_error_model(full_matrix_mle(rec, n_states=n_states), alpha, eta)
    expected_dwells = width * float(np.min(exit_rates(whole.generator)))
    if expected_dwells < settings.drift_min_dwells:
        logger.warning("drift_window_short", expected_dwells=expected_dwells)

    step = shift * width
    n_windows = int(np.floor((rec.duration - width) / step + 1e-9)) + 1
    windows: list[DriftWindow] = []
    for k in range(n_windows):
        start = k * step
        part = crop_record(rec, start, min(start + width, rec.duration))
        try:
            estimate = _with_error_model(full_matrix_mle(part, n_states=n_states), alpha, eta)
        except UnvisitedState:
            windows.append(DriftWindow(start, None, float("inf"), True))
            continue
        deviation = _deviation(estimate, whole)
        windows.append(DriftWindow(start, estimate, deviation, deviation > threshold))

    logger.info(
        "drift_scan",
        windows=len(windows),
        flagged=sum(w.flagged for w in windows),
    )
    return DriftScan(
        window_width=width,
        shift=shift,
        threshold=threshold,
        windows=windows,
        global_estimate=whole,
    )
