"""Continuous-time Markov generators and their stationary properties."""

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..errors import AbsorbingState, NegativeRate, Reducible

STEADY_STATE_TOLERANCE = 1e-10


class ChargeState(IntEnum):
    """State labels of the three-state clock, in master-equation order (p_0, p_R, p_L)."""

    ZERO = 0
    R = 1
    L = 2

    @property
    def label(self) -> str:
        return "0" if self is ChargeState.ZERO else self.name

    @classmethod
    def from_label(cls, label: str) -> "ChargeState":
        return cls.ZERO if label == "0" else cls[label]


@dataclass(frozen=True)
class Generator:
    """Validated transition-rate matrix M.

    ``rates[j, i]`` is the rate from state i to state j in Hz; the diagonal holds
    ``-Gamma_i`` so that every column sums to zero.
    """

    rates: np.ndarray

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    def off_diagonal(self) -> np.ndarray:
        """Copy of the matrix with a zeroed diagonal."""
        off = self.rates.copy()
        np.fill_diagonal(off, 0.0)
        return off

    def rate(self, target: int, source: int) -> float:
        """Rate of the jump source -> target."""
        return float(self.rates[target, source])

    def scaled(self, factor: float) -> "Generator":
        """Generator with every rate multiplied by ``factor``."""
        return validate_generator(self.off_diagonal() * factor)


@dataclass(frozen=True)
class Distribution:
    """Probability vector over the states of a generator."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")

    @classmethod
    def uniform(cls, n_states: int) -> "Distribution":
        return cls(np.full(n_states, 1.0 / n_states))

    @classmethod
    def point(cls, n_states: int, state: int) -> "Distribution":
        p = np.zeros(n_states)
        p[state] = 1.0
        return cls(p)


def validate_generator(raw: np.ndarray | list) -> Generator:
    """Validate a rate matrix and recompute its diagonal.

    The diagonal of ``raw`` is ignored; it is rebuilt from the off-diagonal
    entries so that every column sums to zero exactly.

    Args:
        raw: Square n x n matrix, n >= 2, entry [j, i] the rate i -> j in Hz.

    Returns:
        Validated Generator.

    Raises:
        ValueError: If the matrix is not square or smaller than 2 x 2.
        NegativeRate: If an off-diagonal entry is negative or not finite.
        AbsorbingState: If some column has no positive off-diagonal entry.
    """
    matrix = np.array(raw, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 2:
        raise ValueError(f"generator must be a square matrix with n >= 2, got {matrix.shape}")

    off = matrix.copy()
    np.fill_diagonal(off, 0.0)
    if not np.all(np.isfinite(off)):
        raise NegativeRate("off-diagonal rates must be finite")
    negative = np.argwhere(off < 0)
    if negative.size:
        j, i = negative[0]
        raise NegativeRate(f"rate {i}->{j} is negative: {off[j, i]}")

    outflow = off.sum(axis=0)
    absorbing = np.flatnonzero(outflow <= 0)
    if absorbing.size:
        raise AbsorbingState(f"state {int(absorbing[0])} has no outgoing rate")

    np.fill_diagonal(off, -outflow)
    off.flags.writeable = False
    return Generator(rates=off)


def exit_rates(g: Generator) -> np.ndarray:
    """Total escape rates Gamma_i = -M_ii in Hz."""
    return -np.diag(g.rates).copy()


def is_irreducible(g: Generator) -> bool:
    """Whether every state can reach every other along nonzero rates."""
    adjacency = (g.off_diagonal() > 0).T.astype(int)
    n_components, _ = connected_components(adjacency, directed=True, connection="strong")
    return n_components == 1


def steady_state(g: Generator) -> Distribution:
    """Stationary distribution p with M p = 0.

    Solves the generator equations augmented with the normalization row by
    least squares and checks the residual.

    Raises:
        Reducible: If the nonzero-rate graph is not strongly connected.
    """
    if not is_irreducible(g):
        raise Reducible("generator has more than one communicating class")

    n = g.n_states
    system = np.vstack([g.rates, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    p = np.clip(p, 0.0, None)
    p /= p.sum()

    residual = float(np.max(np.abs(g.rates @ p)))
    scale = float(np.max(exit_rates(g)))
    if residual > STEADY_STATE_TOLERANCE * max(scale, 1.0):
        raise Reducible(f"steady-state residual {residual:.3e} exceeds tolerance")
    return Distribution(probabilities=p)


def cycle_affinity(g: Generator) -> float:
    """Entropy per completed 0 -> L -> R -> 0 cycle in units of k_B.

    Returns ``math.inf`` when a backward rate vanishes.
    """
    if g.n_states != 3:
        raise ValueError("cycle affinity is defined for the three-state clock")
    zero, right, left = ChargeState.ZERO, ChargeState.R, ChargeState.L
    forward = g.rate(left, zero) * g.rate(right, left) * g.rate(zero, right)
    backward = g.rate(zero, left) * g.rate(left, right) * g.rate(right, zero)
    if backward == 0.0:
        return math.inf if forward > 0 else 0.0
    if forward == 0.0:
        return -math.inf
    return math.log(forward / backward)


def biased_cycle_generator(
    base_rate: float,
    sigma_tick: float,
    state_scale: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Generator:
    """Three-state clock whose cycle affinity equals ``sigma_tick``.

    Each forward jump of the 0 -> L -> R -> 0 cycle runs at
    ``base_rate * exp(sigma_tick / 6)`` and each backward jump at
    ``base_rate * exp(-sigma_tick / 6)``, multiplied by the scale of the state
    being left.

    Args:
        base_rate: Geometric mean of forward and backward rates in Hz.
        sigma_tick: Entropy per tick in k_B; 0 gives an equilibrium clock.
        state_scale: Per-source-state multipliers (order 0, R, L).

    Returns:
        Validated Generator.
    """
    forward = base_rate * math.exp(sigma_tick / 6.0)
    backward = base_rate * math.exp(-sigma_tick / 6.0)
    zero, right, left = ChargeState.ZERO, ChargeState.R, ChargeState.L
    raw = np.zeros((3, 3))
    raw[left, zero] = forward * state_scale[zero]
    raw[right, left] = forward * state_scale[left]
    raw[zero, right] = forward * state_scale[right]
    raw[zero, left] = backward * state_scale[left]
    raw[left, right] = backward * state_scale[right]
    raw[right, zero] = backward * state_scale[zero]
    return validate_generator(raw)


def unidirectional_cycle(gamma: float) -> Generator:
    """The fully biased clock 0 -> L -> R -> 0 with every rate ``gamma``."""
    zero, right, left = ChargeState.ZERO, ChargeState.R, ChargeState.L
    raw = np.zeros((3, 3))
    raw[left, zero] = gamma
    raw[right, left] = gamma
    raw[zero, right] = gamma
    return validate_generator(raw)
