"""Maximum-likelihood state classification with middle-level debounce."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import LengthMismatch, PeaksUnresolved
from ..logger import get_logger
from ..simulation.telegraph import TelegraphTrace
from .level_model import LevelModel

logger = get_logger(__name__)


@dataclass(frozen=True)
class StateSequence:
    """Per-sample state labels S(t) on a uniform time grid."""

    states: np.ndarray
    dt: float
    authoritative: bool = True

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=np.int64))
        if not self.dt > 0:
            raise ValueError("sample interval must be positive")
        if self.states.ndim != 1:
            raise ValueError("states must be one-dimensional")

    def __len__(self) -> int:
        return int(self.states.size)

    @property
    def duration(self) -> float:
        return self.states.size * self.dt


def _run_lengths(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Start index, value and length of every maximal constant run."""
    change = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [values.size]]))
    return starts, values[starts], lengths


def debounce(states: np.ndarray, middle_state: int, k: int) -> np.ndarray:
    """Reassign middle-state runs shorter than ``k`` to the preceding state.

    A leading middle run has no predecessor and is kept.
    """
    if states.size == 0 or k <= 1:
        return states.copy()
    starts, values, lengths = _run_lengths(states)
    short = (values == middle_state) & (lengths < k) & (starts > 0)
    if not np.any(short):
        return states.copy()
    values = values.copy()
    # the run before a middle run is never itself a middle run
    previous = np.flatnonzero(short) - 1
    values[short] = values[previous]
    return np.repeat(values, lengths)


def classify(
    trace: TelegraphTrace,
    model: LevelModel,
    debounce_k: int = 3,
    force: bool = False,
) -> StateSequence:
    """Map every sample to the component with the largest weighted density.

    Args:
        trace: Sensor trace.
        model: Calibrated level model.
        debounce_k: Shortest middle-level run that is accepted.
        force: Classify even when the model's peaks are unresolved.

    Returns:
        StateSequence aligned with the trace. The sequence is marked
        non-authoritative when the model is unresolved or heuristic.

    Raises:
        PeaksUnresolved: If the model is unresolved and ``force`` is not set.
    """
    if model.unresolved and not force:
        raise PeaksUnresolved("level model peaks overlap; pass force to classify anyway")
    if debounce_k < 1:
        raise ValueError("debounce_k must be at least 1")

    component = np.argmax(model.log_components(trace.samples), axis=0)
    states = model.component_states[component]
    states = debounce(states, model.middle_state, debounce_k)

    authoritative = model.authoritative and not model.unresolved
    if not authoritative:
        logger.warning("non_authoritative_classification", samples=len(trace))
    return StateSequence(states=states, dt=trace.dt, authoritative=authoritative)


def readout_snr(trace: TelegraphTrace, seq: StateSequence, model: LevelModel) -> float:
    """Variance of the identified level signal over the mean squared residual.

    Returns ``math.inf`` for a noiseless trace.

    Raises:
        LengthMismatch: If trace and sequence are not aligned.
    """
    if len(trace) != len(seq):
        raise LengthMismatch(f"trace has {len(trace)} samples, sequence {len(seq)}")
    levels = np.full(int(seq.states.max()) + 1, np.nan)
    for state, component in model.state_map.items():
        if state < levels.size:
            levels[state] = model.mu[component]
    level_signal = levels[seq.states]
    noise = trace.samples - level_signal
    noise_power = float(np.mean(noise**2))
    if noise_power == 0.0:
        return math.inf
    return float(np.var(level_signal)) / noise_power
