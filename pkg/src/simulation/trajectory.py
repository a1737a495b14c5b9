"""Exact stochastic simulation of clockwork jump trajectories.

Trajectories are drawn with the direct method: an exponential waiting time
with the exit rate of the current state, then a categorical choice of the
successor weighted by the individual rates. Random streams come from
``numpy.random.PCG64`` seeded through ``numpy.random.SeedSequence`` with the
spawn key ``(index,)``, so trajectory ``index`` of master seed ``seed`` is the
same stream whichever order trajectories are produced in.
"""

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateGenerator
from ..markov.generator import Distribution, Generator, exit_rates

_MAX_CHUNK = 65536


@dataclass(frozen=True)
class JumpRecord:
    """Ordered state sequence with jump times.

    ``states[k]`` is the state after the k-th jump (``states[0]`` the initial
    state) and ``times[k - 1]`` the time of the k-th jump in seconds.
    """

    states: np.ndarray
    times: np.ndarray
    duration: float

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "duration", float(self.duration))

        if states.ndim != 1 or states.size == 0:
            raise ValueError("a jump record needs at least an initial state")
        if states.size != times.size + 1:
            raise ValueError("states must be one longer than times")
        if np.any(states[1:] == states[:-1]):
            raise ValueError("consecutive states must differ")
        if times.size:
            if times[0] <= 0 or np.any(np.diff(times) <= 0) or times[-1] > self.duration:
                raise ValueError("jump times must be strictly increasing within (0, duration]")
        elif self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    def state_at(self, t: np.ndarray | float) -> np.ndarray:
        """State occupied at time(s) ``t``; a jump at time t is already applied."""
        return self.states[np.searchsorted(self.times, t, side="right")]

    def visit_counts(self, n_states: int) -> np.ndarray:
        """Number of entries n_s of each state, counting the initial state."""
        return np.bincount(self.states, minlength=n_states)


def derive_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent random stream for trajectory ``index`` of master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _successor_tables(g: Generator) -> tuple[list[list[float]], list[float]]:
    gamma = exit_rates(g)
    if np.any(gamma <= 0):
        raise DegenerateGenerator(f"state {int(np.argmin(gamma))} has zero exit rate")
    off = g.off_diagonal()
    cumulative = np.cumsum(off / gamma, axis=0)
    cumulative /= cumulative[-1]
    tables = [cumulative[:, i].tolist() for i in range(g.n_states)]
    return tables, (1.0 / gamma).tolist()


def _run(
    g: Generator,
    start: int,
    duration: float,
    rng: np.random.Generator,
    offset: float = 0.0,
) -> tuple[list[int], list[float]]:
    """Simulate from ``start`` for ``duration`` seconds; times are shifted by ``offset``."""
    tables, mean_dwell = _successor_tables(g)
    expected = duration * float(np.max(exit_rates(g)))
    chunk = int(min(_MAX_CHUNK, expected + 16))

    states = [start]
    times: list[float] = []
    state = start
    t = 0.0
    while True:
        waits = rng.standard_exponential(chunk).tolist()
        draws = rng.random(chunk).tolist()
        for wait, u in zip(waits, draws):
            t += wait * mean_dwell[state]
            if t > duration:
                return states, times
            state = bisect_right(tables[state], u)
            states.append(state)
            times.append(offset + t)


def sample_trajectory(
    g: Generator,
    p0: Distribution,
    duration: float,
    seed: int,
    index: int = 0,
) -> JumpRecord:
    """Draw one trajectory of the master equation.

    Args:
        g: Generator of the clockwork.
        p0: Distribution of the initial state.
        duration: Record length T in seconds.
        seed: Master seed.
        index: Trajectory index within the master seed's family.

    Returns:
        JumpRecord with every jump in (0, duration].

    Raises:
        DegenerateGenerator: If a state has zero exit rate.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = derive_rng(seed, index)
    start = int(rng.choice(g.n_states, p=p0.probabilities))
    states, times = _run(g, start, duration, rng)
    return JumpRecord(states=np.array(states), times=np.array(times), duration=duration)


def sample_piecewise_trajectory(
    segments: list[tuple[Generator, float]],
    p0: Distribution,
    seed: int,
) -> JumpRecord:
    """Draw a trajectory whose generator changes at fixed times.

    Each segment continues from the state the previous one ended in.

    Args:
        segments: ``(generator, duration)`` pairs in time order.
        p0: Distribution of the initial state.
        seed: Master seed; segment k uses stream ``(seed, k)``.

    Returns:
        JumpRecord spanning the summed duration.
    """
    if not segments:
        raise ValueError("at least one segment is required")
    state = int(derive_rng(seed, len(segments)).choice(segments[0][0].n_states, p=p0.probabilities))
    states = [state]
    times: list[float] = []
    offset = 0.0
    for k, (g, duration) in enumerate(segments):
        seg_states, seg_times = _run(g, state, duration, derive_rng(seed, k), offset=offset)
        states.extend(seg_states[1:])
        times.extend(seg_times)
        state = seg_states[-1]
        offset += duration
    return JumpRecord(states=np.array(states), times=np.array(times), duration=offset)


def sample_ensemble(
    g: Generator,
    p0: Distribution,
    duration: float,
    seed: int,
    count: int,
) -> list[JumpRecord]:
    """Draw ``count`` independent trajectories with derived streams."""
    return [sample_trajectory(g, p0, duration, seed, index=k) for k in range(count)]


def slice_jump_record(rec: JumpRecord, m: int) -> list[JumpRecord]:
    """Cut a record into ``m`` contiguous windows of equal length.

    Each window starts at time 0 in the state occupied at its left edge.
    """
    if m < 2:
        raise ValueError("need at least two slices")
    edges = np.linspace(0.0, rec.duration, m + 1)
    return [crop_record(rec, a, b) for a, b in zip(edges[:-1], edges[1:])]


def crop_record(rec: JumpRecord, start: float, stop: float) -> JumpRecord:
    """Part of a record inside [start, stop), rebased to begin at time 0."""
    if not 0.0 <= start < stop <= rec.duration + 1e-9:
        raise ValueError(f"window [{start}, {stop}) outside record of length {rec.duration}")
    lo = int(np.searchsorted(rec.times, start, side="right"))
    hi = int(np.searchsorted(rec.times, stop, side="left"))
    return JumpRecord(
        states=rec.states[lo : hi + 1],
        times=rec.times[lo:hi] - start,
        duration=stop - start,
    )
