"""Dwell-time lists split by origin and destination state."""

from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from ..simulation.trajectory import JumpRecord
from .mle import mle_rate


@dataclass(frozen=True)
class WaitingTimes:
    """Dwells tau_{j|i}: time spent in i before a jump to j.

    ``lists`` is keyed by ``(j, i)``; pairs never observed are absent.
    """

    lists: dict[tuple[int, int], np.ndarray]
    n_states: int = 3

    def pair(self, target: int, source: int) -> np.ndarray:
        return self.lists.get((target, source), np.empty(0))

    def count(self, target: int, source: int) -> int:
        return int(self.pair(target, source).size)

    def pooled(self, source: int) -> np.ndarray:
        """All dwells in ``source`` regardless of where the jump went."""
        parts = [times for (_, i), times in sorted(self.lists.items()) if i == source]
        return np.concatenate(parts) if parts else np.empty(0)

    def counts(self) -> np.ndarray:
        """Matrix N with N[j, i] = number of dwells in i ending in j."""
        matrix = np.zeros((self.n_states, self.n_states), dtype=np.int64)
        for (j, i), times in self.lists.items():
            matrix[j, i] = times.size
        return matrix


def _as_records(records: JumpRecord | Iterable[JumpRecord]) -> list[JumpRecord]:
    return [records] if isinstance(records, JumpRecord) else list(records)


def collect_waiting_times(
    records: JumpRecord | Iterable[JumpRecord],
    n_states: int = 3,
) -> WaitingTimes:
    """Split the complete dwells of one or more records by jump.

    The dwell before the first jump has no known start and the one after the
    last jump no known end; both are left out.
    """
    buckets: dict[tuple[int, int], list[np.ndarray]] = defaultdict(list)
    for rec in _as_records(records):
        if rec.n_jumps < 2:
            continue
        dwells = np.diff(rec.times)
        sources = rec.states[1:-1]
        targets = rec.states[2:]
        for j, i in set(zip(targets.tolist(), sources.tolist())):
            buckets[(j, i)].append(dwells[(targets == j) & (sources == i)])
    lists = {key: np.concatenate(parts) for key, parts in buckets.items()}
    return WaitingTimes(lists=lists, n_states=n_states)


def conditional_waiting_times(
    records: JumpRecord | Iterable[JumpRecord],
) -> dict[tuple[int, int, int], np.ndarray]:
    """Dwells in i before a jump to j, keyed ``(j, i, k)`` by the state k before i."""
    buckets: dict[tuple[int, int, int], list[np.ndarray]] = defaultdict(list)
    for rec in _as_records(records):
        if rec.n_jumps < 2:
            continue
        dwells = np.diff(rec.times)
        origins = rec.states[:-2]
        sources = rec.states[1:-1]
        targets = rec.states[2:]
        keys = set(zip(targets.tolist(), sources.tolist(), origins.tolist()))
        for j, i, k in keys:
            mask = (targets == j) & (sources == i) & (origins == k)
            buckets[(j, i, k)].append(dwells[mask])
    return {key: np.concatenate(parts) for key, parts in buckets.items()}


@dataclass(frozen=True)
class WaitingTimeHistogram:
    centers: np.ndarray
    densities: np.ndarray
    model: np.ndarray
    gamma_hat: float
    deadtime_hat: float


def waiting_time_histogram(
    times: np.ndarray,
    bins: int = 10,
    with_deadtime: bool = False,
) -> WaitingTimeHistogram:
    """Normalized dwell histogram next to the fitted shifted exponential."""
    tau = np.asarray(times, dtype=float)
    est = mle_rate(tau, with_deadtime=with_deadtime)
    densities, edges = np.histogram(tau, bins=bins, density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    shifted = centers - est.deadtime_hat
    model = np.where(shifted >= 0, est.gamma_hat * np.exp(-est.gamma_hat * shifted), 0.0)
    return WaitingTimeHistogram(
        centers=centers,
        densities=densities,
        model=model,
        gamma_hat=est.gamma_hat,
        deadtime_hat=est.deadtime_hat,
    )
