"""Jump extraction and tick counting."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrace
from ..identification.classifier import StateSequence
from ..markov.generator import ChargeState
from ..simulation.trajectory import JumpRecord


@dataclass(frozen=True)
class TickCount:
    """Forward and backward ticks of a record.

    ``excursions`` is the number of complete excursions away from state 0 that
    were scanned; a record without any is flagged ``incomplete``.
    """

    forward: int
    backward: int
    excursions: int = 0

    @property
    def net(self) -> int:
        return self.forward - self.backward

    @property
    def incomplete(self) -> bool:
        return self.excursions == 0


def extract_jumps(seq: StateSequence) -> JumpRecord:
    """Run-length compress a sampled sequence into a jump record.

    A jump is placed at the first sample of every new run.

    Raises:
        EmptyTrace: If the sequence holds no samples.
    """
    if len(seq) == 0:
        raise EmptyTrace("cannot extract jumps from an empty sequence")
    states = seq.states
    starts = np.flatnonzero(states[1:] != states[:-1]) + 1
    return JumpRecord(
        states=np.concatenate([states[:1], states[starts]]),
        times=starts * seq.dt,
        duration=seq.duration,
    )


def record_to_sequence(rec: JumpRecord, dt: float) -> StateSequence:
    """Noiseless sampled state at times k * dt, k < floor(duration / dt)."""
    if dt <= 0:
        raise ValueError("sample interval must be positive")
    n_samples = int(math.floor(rec.duration / dt + 1e-9))
    return StateSequence(states=rec.state_at(np.arange(n_samples) * dt), dt=dt)


def count_net_transfers(rec: JumpRecord) -> TickCount:
    """Count complete charge transfers through the double dot.

    Every excursion between two consecutive visits to state 0 is inspected:
    leaving 0 into L and returning from R is a forward tick, leaving into R
    and returning from L a backward tick. Excursions that return the way they
    left carry no charge. Partial excursions at either end are ignored.
    """
    states = rec.states
    zeros = np.flatnonzero(states == ChargeState.ZERO)
    if zeros.size < 2:
        return TickCount(forward=0, backward=0, excursions=0)
    entered = states[zeros[:-1] + 1]
    left_from = states[zeros[1:] - 1]
    forward = (entered == ChargeState.L) & (left_from == ChargeState.R)
    backward = (entered == ChargeState.R) & (left_from == ChargeState.L)
    return TickCount(
        forward=int(forward.sum()),
        backward=int(backward.sum()),
        excursions=int(zeros.size - 1),
    )


def transition_counts(rec: JumpRecord, n_states: int = 3) -> np.ndarray:
    """Matrix N with N[j, i] the number of jumps i -> j."""
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    np.add.at(counts, (rec.states[1:], rec.states[:-1]), 1)
    return counts
