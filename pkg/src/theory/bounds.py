"""Closed-form precision results and the thermodynamic uncertainty bound."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ZeroRate
from ..logger import get_logger
from ..markov.generator import Generator, cycle_affinity, exit_rates, steady_state
from .fcs import net_current

logger = get_logger(__name__)


def optimal_precision(g: Generator) -> float:
    """S_opt = (sum_i p_i / Gamma_i)^-1, the best precision of any linear estimator."""
    p = steady_state(g).probabilities
    return 1.0 / float(np.sum(p / exit_rates(g)))


@dataclass(frozen=True)
class RenewalMoments:
    """Moments of the waiting time between ticks of a renewal clock.

    ``n_inf`` equals the Fano factor; it is ``math.inf`` when D vanishes.
    """

    mean_s: float
    variance_s2: float
    n_inf: float

    @property
    def fano(self) -> float:
        return self.n_inf

    @property
    def n_inf_infinite(self) -> bool:
        return math.isinf(self.n_inf)


def renewal_moments(nu: float, diffusion: float) -> RenewalMoments:
    """E[T] = 1/nu, Var[T] = D/nu^3 and N_inf = nu/D.

    Args:
        nu: Tick rate in Hz.
        diffusion: Diffusion constant D of the tick count in Hz.

    Raises:
        ZeroRate: If nu is not positive.
    """
    if nu <= 0:
        raise ZeroRate("tick rate must be positive")
    n_inf = math.inf if diffusion <= 0 else nu / diffusion
    return RenewalMoments(mean_s=1.0 / nu, variance_s2=max(diffusion, 0.0) / nu**3, n_inf=n_inf)


def fano_factor(precision: float, nu: float) -> float:
    """Relative precision S / nu of a counting observable."""
    if nu == 0:
        raise ZeroRate("tick rate is zero")
    return precision / abs(nu)


@dataclass(frozen=True)
class TurCheck:
    """Comparison of a measured precision with nu Sigma_tick / 2.

    The bound only constrains estimators built from antisymmetric currents;
    for any other estimator ``applicable`` is false and a violation is
    expected rather than an error.
    """

    bound_hz: float
    precision_hz: float | None = None
    satisfied: bool | None = None
    applicable: bool = True


def tur_bound(
    g: Generator,
    sigma_tick: float | None = None,
    nu: float | None = None,
) -> float:
    """nu * Sigma_tick / 2; both default to the generator's own values.

    Returns ``math.inf`` for a clock without backward rates.
    """
    sigma_tick = cycle_affinity(g) if sigma_tick is None else sigma_tick
    if sigma_tick < 0:
        raise ValueError("entropy per tick must be non-negative")
    nu = net_current(g) if nu is None else nu
    if sigma_tick == 0.0:
        return 0.0
    return abs(nu) * sigma_tick / 2.0


def check_tur(
    bound_hz: float,
    precision_hz: float,
    std_error_hz: float = 0.0,
    antisymmetric: bool = True,
    n_sigma: float = 3.0,
) -> TurCheck:
    """Whether ``precision_hz`` stays below the bound within ``n_sigma`` errors."""
    satisfied = precision_hz <= bound_hz + n_sigma * std_error_hz
    if not antisymmetric and not satisfied:
        logger.info("tur_inapplicable", bound_hz=bound_hz, precision_hz=precision_hz)
    return TurCheck(
        bound_hz=bound_hz,
        precision_hz=precision_hz,
        satisfied=satisfied,
        applicable=antisymmetric,
    )
