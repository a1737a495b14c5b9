"""Maximum-likelihood reconstruction of the full rate matrix."""

import math
from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np

from ..errors import TooFewSamples, UnvisitedState
from ..markov.generator import Generator, validate_generator
from ..simulation.trajectory import JumpRecord
from .mle import RateEstimate, mle_rate
from .waiting_times import WaitingTimes, collect_waiting_times


@dataclass(frozen=True)
class GeneratorEstimate:
    """Fitted generator with per-entry standard errors.

    ``std_errors[j, i]`` is the error of the rate i -> j; the diagonal holds the
    errors of the exit rates.
    """

    generator: Generator
    std_errors: np.ndarray
    counts: np.ndarray
    exit_estimates: tuple[RateEstimate, ...]

    @property
    def exit_std_errors(self) -> np.ndarray:
        return np.array([est.std_error for est in self.exit_estimates])

    @property
    def deadtimes(self) -> np.ndarray:
        return np.array([est.deadtime_hat for est in self.exit_estimates])

    def with_exit_estimates(self, exits: Iterable[RateEstimate]) -> "GeneratorEstimate":
        """Same rates with the errors recomputed from a new exit error model.

        Used once bootstrap alpha and eta are known, so the per-entry errors
        and everything derived from them see the inflated exits.
        """
        exits = tuple(exits)
        if len(exits) != len(self.exit_estimates):
            raise ValueError(f"need {len(self.exit_estimates)} exit estimates, got {len(exits)}")
        errors = np.column_stack(
            [entry_std_errors(est, self.counts[:, i], i) for i, est in enumerate(exits)]
        )
        return replace(self, std_errors=errors, exit_estimates=exits)


def entry_std_errors(est: RateEstimate, column: np.ndarray, state: int) -> np.ndarray:
    """Errors of Gamma_ji = share_j Gamma_i for one source state.

    The exit-rate error enters through share_j and the binomial error of the
    split is scaled by the same excess factor alpha. The diagonal entry holds
    the exit-rate error itself.
    """
    total = column.sum()
    share = column / total
    binomial = est.alpha * est.gamma_hat**2 * share * (1.0 - share) / total
    errors = np.sqrt(share**2 * est.std_error**2 + binomial)
    errors[state] = est.std_error
    return errors


def full_matrix_mle(
    records: JumpRecord | Iterable[JumpRecord],
    with_deadtime: bool = False,
    n_states: int = 3,
) -> GeneratorEstimate:
    """Estimate every rate from pooled dwells and destination frequencies.

    Gamma_i comes from all dwells in i; the split Gamma_ji = (N_ji / N_i) Gamma_i
    keeps every column summing to zero. The error of an entry combines the
    exit-rate error with the binomial error of the split.

    Raises:
        UnvisitedState: If some state has too few complete dwells.
    """
    wt = collect_waiting_times(records, n_states=n_states)
    counts = wt.counts()
    off = np.zeros((n_states, n_states))
    exits: list[RateEstimate] = []

    for i in range(n_states):
        try:
            est = mle_rate(wt.pooled(i), with_deadtime=with_deadtime)
        except TooFewSamples as e:
            raise UnvisitedState(f"state {i}: {e}") from e
        exits.append(est)
        off[:, i] = counts[:, i] / counts[:, i].sum() * est.gamma_hat

    np.fill_diagonal(off, 0.0)
    return GeneratorEstimate(
        generator=validate_generator(off),
        std_errors=np.column_stack(
            [entry_std_errors(est, counts[:, i], i) for i, est in enumerate(exits)]
        ),
        counts=counts,
        exit_estimates=tuple(exits),
    )


def trajectory_log_likelihood(rec: JumpRecord, g: Generator) -> float:
    """Log-probability density of the record given its initial state.

    Sum over jumps of ln Gamma_{s_k s_(k-1)} minus sum over states of
    Gamma_i times the total time spent in i, censored final dwell included.
    """
    jump_rates = g.rates[rec.states[1:], rec.states[:-1]]
    if np.any(jump_rates <= 0):
        return -math.inf
    occupation = np.diff(np.concatenate([[0.0], rec.times, [rec.duration]]))
    exit_rates = -np.diag(g.rates)
    return float(np.sum(np.log(jump_rates)) - np.sum(exit_rates[rec.states] * occupation))


def destination_consistency(
    wt: WaitingTimes,
    state: int,
    destinations: tuple[int, int] | None = None,
) -> float:
    """z-score between the exit rates of ``state`` fitted per destination.

    For Markov dynamics the dwell distribution does not depend on where the
    jump goes, so |z| stays small.

    Raises:
        TooFewSamples: If a destination list has fewer than 2 dwells.
    """
    if destinations is None:
        destinations = tuple(j for j in range(wt.n_states) if j != state)[:2]
    first, second = (mle_rate(wt.pair(j, state)) for j in destinations)
    spread = math.hypot(first.std_error, second.std_error)
    return (first.gamma_hat - second.gamma_hat) / spread
