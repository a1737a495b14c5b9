"""Full counting statistics of linear counting observables.

An observable adds the weight w_{j|i} for every jump i -> j. Its cumulant
generating rate is the Perron eigenvalue lambda*(s) of the tilted generator,
whose off-diagonal entries are M_ji exp(w_{j|i} s). The drift and diffusion are
the first two derivatives of lambda* at s = 0; they are obtained from
first- and second-order perturbation of the zero eigenvalue of M with the
steady state as right and the all-ones vector as left eigenvector.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..config import get_settings
from ..errors import ConvergenceFailure, ZeroRate
from ..markov.generator import (
    STEADY_STATE_TOLERANCE,
    ChargeState,
    Generator,
    exit_rates,
    steady_state,
)

_IMAG_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CountingWeights:
    """Weight w[j, i] added per jump i -> j; the diagonal is ignored."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        np.fill_diagonal(w, 0.0)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not np.any(w != 0):
            raise ValueError("at least one weight must be nonzero")
        object.__setattr__(self, "weights", w)

    def scaled(self, factor: float) -> "CountingWeights":
        return CountingWeights(self.weights * factor)


@dataclass(frozen=True)
class AsymptoticMoments:
    """Long-time growth rates of mean and variance of an observable.

    ``precision`` is drift^2 / diffusion; it is ``math.inf`` with
    ``precision_infinite`` set when the diffusion vanishes.
    """

    drift: float
    diffusion: float
    precision: float
    precision_infinite: bool = False


def net_current(g: Generator) -> float:
    """Mean rate of net R -> 0 transfers in the steady state.

    Currents within the steady-state solver tolerance are reported as exactly 0.
    """
    p = steady_state(g).probabilities
    zero, right = ChargeState.ZERO, ChargeState.R
    nu = g.rate(zero, right) * p[right] - g.rate(right, zero) * p[zero]
    if abs(nu) <= STEADY_STATE_TOLERANCE * float(np.max(exit_rates(g))):
        return 0.0
    return float(nu)


def net_weights(g: Generator, nu: float | None = None) -> CountingWeights:
    """+1/nu per R -> 0 jump and -1/nu per 0 -> R jump.

    Raises:
        ZeroRate: If the net current vanishes.
    """
    nu = net_current(g) if nu is None else nu
    if nu == 0.0:
        raise ZeroRate("net current is zero")
    w = np.zeros((g.n_states, g.n_states))
    w[ChargeState.ZERO, ChargeState.R] = 1.0 / nu
    w[ChargeState.R, ChargeState.ZERO] = -1.0 / nu
    return CountingWeights(w)


def opt_weights(g: Generator) -> CountingWeights:
    """1/Gamma_i for every jump out of i."""
    w = np.tile(1.0 / exit_rates(g), (g.n_states, 1))
    return CountingWeights(w)


def tilted_generator(g: Generator, w: CountingWeights, s: float) -> np.ndarray:
    """M(s) with off-diagonals M_ji exp(w_ji s) and the diagonal of M."""
    tilted = g.off_diagonal() * np.exp(w.weights * s)
    np.fill_diagonal(tilted, np.diag(g.rates))
    return tilted


def dominant_eigenvalue(m: np.ndarray) -> float:
    """Eigenvalue with the largest real part of a Metzler matrix.

    Raises:
        ConvergenceFailure: If the eigenvalue problem fails or the leading
            eigenvalue is not real.
    """
    try:
        eigenvalues = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigenvalue computation failed: {e}") from e
    if not np.all(np.isfinite(eigenvalues)):
        raise ConvergenceFailure("eigenvalues are not finite")
    leading = eigenvalues[np.argmax(eigenvalues.real)]
    scale = max(float(np.max(np.abs(m))), 1.0)
    if abs(leading.imag) > _IMAG_TOLERANCE * scale:
        raise ConvergenceFailure(f"leading eigenvalue {leading} is not real")
    return float(leading.real)


def _with_precision(drift: float, diffusion: float, scale: float) -> AsymptoticMoments:
    if diffusion <= 1e-14 * scale:
        if drift == 0.0:
            return AsymptoticMoments(drift, max(diffusion, 0.0), 0.0)
        return AsymptoticMoments(drift, max(diffusion, 0.0), math.inf, precision_infinite=True)
    return AsymptoticMoments(drift, diffusion, drift**2 / diffusion)


def asymptotic_moments(g: Generator, w: CountingWeights) -> AsymptoticMoments:
    """Drift, diffusion and precision of an observable.

    With p the steady state, M1 = M o W and M2 = M o W o W restricted to the
    off-diagonal, drift = 1^T M1 p and diffusion = 1^T M2 p + 2 1^T M1 r, where r
    solves M r = drift p - M1 p with 1^T r = 0.

    Raises:
        Reducible: If the generator has more than one communicating class.
    """
    p = steady_state(g).probabilities
    off = g.off_diagonal()
    first = off * w.weights
    second = off * w.weights**2

    drift = float(np.sum(first @ p))
    rhs = drift * p - first @ p
    n = g.n_states
    system = np.vstack([g.rates, np.ones((1, n))])
    r, *_ = np.linalg.lstsq(system, np.append(rhs, 0.0), rcond=None)
    diffusion = float(np.sum(second @ p) + 2.0 * np.sum(first @ r))

    scale = float(np.sum(second @ p))
    return _with_precision(drift, diffusion, max(scale, 1e-300))


def finite_difference_moments(
    g: Generator,
    w: CountingWeights,
    step: float | None = None,
) -> AsymptoticMoments:
    """Drift and diffusion from central differences of lambda*(s).

    The step is measured in units of the largest weight and the results are
    Richardson-extrapolated from steps h and h / 2.
    """
    step = step if step is not None else get_settings().fd_step
    h = step / float(np.max(np.abs(w.weights)))

    def lam(s: float) -> float:
        return dominant_eigenvalue(tilted_generator(g, w, s))

    centre = lam(0.0)

    def derivatives(size: float) -> tuple[float, float]:
        up, down = lam(size), lam(-size)
        return (up - down) / (2.0 * size), (up - 2.0 * centre + down) / size**2

    d1_h, d2_h = derivatives(h)
    d1_half, d2_half = derivatives(h / 2.0)
    drift = (4.0 * d1_half - d1_h) / 3.0
    diffusion = (4.0 * d2_half - d2_h) / 3.0
    scale = float(np.sum(g.off_diagonal() * w.weights**2))
    return _with_precision(drift, diffusion, max(scale, 1e-300))
