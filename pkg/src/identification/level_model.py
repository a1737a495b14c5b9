"""Three-Gaussian calibration of the readout levels.

The histogram p(I) is fitted with q(I) = sum_i h_i N(I; mu_i, sigma_i) by
Levenberg-Marquardt least squares. Components are sorted by mean, so the
lowest, middle and highest level map to the states 0, R and L unless a
different ``state_map`` is configured (the rf principal-component trace, for
example, swaps the middle and high levels).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.optimize import least_squares
from scipy.special import expit, logit, logsumexp

from ..config import get_settings
from ..errors import AllZeroDensity, FitDiverged
from ..logger import get_logger
from ..markov.generator import ChargeState
from ..simulation.telegraph import TelegraphTrace
from .histogram import Histogram

logger = get_logger(__name__)

N_COMPONENTS = 3
_VALLEY_RATIO = 0.8
# widths may shrink to a tenth of a bin and grow to the histogram span
_MIN_WIDTH_BINS = 0.1
_PINNED = 0.01
_MIN_WEIGHT = 0.01
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

DEFAULT_STATE_MAP: dict[int, int] = {
    ChargeState.ZERO: 0,
    ChargeState.R: 1,
    ChargeState.L: 2,
}


@dataclass(frozen=True)
class LevelModel:
    """Fitted readout levels.

    ``state_map`` maps each state label to the index of its component in the
    ascending-mean order.
    """

    mu: np.ndarray
    sigma: np.ndarray
    h: np.ndarray
    state_map: dict[int, int] = field(default_factory=lambda: dict(DEFAULT_STATE_MAP))
    unresolved: bool = False
    authoritative: bool = True
    residual: float = 0.0

    def __post_init__(self):
        for name in ("mu", "sigma", "h"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.sigma <= 0):
            raise ValueError("component widths must be positive")
        if sorted(self.state_map.values()) != list(range(self.mu.size)):
            raise ValueError("state_map must assign every component exactly once")

    @property
    def component_states(self) -> np.ndarray:
        """State label of each component, indexed by component."""
        states = np.empty(self.mu.size, dtype=np.int64)
        for state, component in self.state_map.items():
            states[component] = int(state)
        return states

    @property
    def middle_state(self) -> int:
        """State whose level lies between the other two."""
        return int(self.component_states[1])

    def level_of(self, state: int) -> float:
        return float(self.mu[self.state_map[state]])

    def log_components(self, values: np.ndarray) -> np.ndarray:
        """log(h_i N(x; mu_i, sigma_i)) with shape (components, samples)."""
        x = np.asarray(values, dtype=float)[None, :]
        z = (x - self.mu[:, None]) / self.sigma[:, None]
        with np.errstate(divide="ignore"):
            log_h = np.log(self.h)[:, None]
        return log_h - np.log(self.sigma)[:, None] - _LOG_SQRT_2PI - 0.5 * z**2


def mixture_density(model: LevelModel, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Total and per-component mixture densities at ``values``."""
    components = np.exp(model.log_components(np.atleast_1d(values)))
    return components.sum(axis=0), components


def _peaks_overlap(mu: np.ndarray, sigma: np.ndarray) -> bool:
    for i in range(mu.size):
        for j in range(i + 1, mu.size):
            if abs(mu[i] - mu[j]) < 0.5 * (sigma[i] + sigma[j]):
                return True
    return False


def _half_max_width(densities: np.ndarray, peak: int, bin_width: float) -> float:
    half = 0.5 * densities[peak]
    left = peak
    while left > 0 and densities[left] > half:
        left -= 1
    right = peak
    while right < densities.size - 1 and densities[right] > half:
        right += 1
    fwhm = max(right - left, 1) * bin_width
    return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def _separated(p: np.ndarray, a: int, b: int, min_separation: int) -> bool:
    """Whether two maxima are far apart and divided by a clear valley."""
    lo, hi = min(a, b), max(a, b)
    if hi - lo < min_separation:
        return False
    return float(p[lo : hi + 1].min()) < _VALLEY_RATIO * min(p[a], p[b])


def visible_peaks(hist: Histogram, min_separation: int = 3) -> list[int]:
    """Bins of the highest separated maxima of the smoothed density, ascending.

    The density is lightly smoothed first; two maxima count as separate peaks
    only when a valley lies between them. At most three are returned.
    """
    p = gaussian_filter1d(hist.densities, sigma=1.0, mode="nearest")
    padded = np.concatenate([[-np.inf], p, [-np.inf]])
    is_max = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] > padded[2:]) & (p > 0)
    candidates = sorted(np.flatnonzero(is_max), key=lambda k: -p[k])

    chosen: list[int] = []
    for k in candidates:
        if all(_separated(p, k, c, min_separation) for c in chosen):
            chosen.append(int(k))
        if len(chosen) == N_COMPONENTS:
            break
    return sorted(chosen)


def initial_guess(hist: Histogram, min_separation: int = 3) -> np.ndarray:
    """Starting (mu, sigma, h) from the three visible peaks.

    Falls back to the 25/50/75% quantiles when fewer than three separated
    maxima exist.

    Returns:
        Array of shape (3, 3): rows mu, sigma, h.
    """
    chosen = visible_peaks(hist, min_separation)
    if len(chosen) == N_COMPONENTS:
        p = gaussian_filter1d(hist.densities, sigma=1.0, mode="nearest")
        mu = hist.centers[chosen]
        sigma = np.array([_half_max_width(p, k, hist.bin_width) for k in chosen])
        h = p[chosen] * sigma * math.sqrt(2.0 * math.pi)
        h = h / h.sum()
    else:
        _, std = hist.mean_and_std()
        mu = np.array([hist.quantile(q) for q in (0.25, 0.5, 0.75)])
        sigma = np.full(N_COMPONENTS, max(std / N_COMPONENTS, hist.bin_width))
        h = np.full(N_COMPONENTS, 1.0 / N_COMPONENTS)
    return np.vstack([mu, sigma, h])


@dataclass(frozen=True)
class _Bounds:
    """Box the fitted means and widths are mapped into."""

    lo: float
    span: float
    sigma_min: float
    sigma_max: float

    @classmethod
    def of(cls, hist: Histogram) -> "_Bounds":
        lo, hi = float(hist.bin_edges[0]), float(hist.bin_edges[-1])
        return cls(lo, hi - lo, _MIN_WIDTH_BINS * hist.bin_width, hi - lo)

    @property
    def log_width_ratio(self) -> float:
        return math.log(self.sigma_max / self.sigma_min)

    def encode(self, mu: np.ndarray, sigma: np.ndarray, h: np.ndarray) -> np.ndarray:
        eps = 1e-6
        a = logit(np.clip((mu - self.lo) / self.span, eps, 1.0 - eps))
        ratio = np.log(np.maximum(sigma, self.sigma_min) / self.sigma_min) / self.log_width_ratio
        b = logit(np.clip(ratio, eps, 1.0 - eps))
        return np.concatenate([a, b, np.sqrt(np.maximum(h, 0.0))])

    def decode(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mu = self.lo + self.span * expit(x[:3])
        sigma = self.sigma_min * np.exp(self.log_width_ratio * expit(x[3:6]))
        return mu, sigma, x[6:] ** 2


def check_components(hist: Histogram, mu: np.ndarray, sigma: np.ndarray, h: np.ndarray) -> None:
    """Reject fits whose components left the histogram or collapsed.

    A weighted component whose width is pinned at a tenth of a bin or at the
    full histogram span has stopped describing a readout level.

    Raises:
        FitDiverged: If a parameter is not finite, a mean lies outside the
            histogram, or a weighted width sits at its limit.
    """
    bounds = _Bounds.of(hist)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(h))):
        raise FitDiverged("fitted parameters are not finite")
    hi = bounds.lo + bounds.span
    if np.any(mu < bounds.lo) or np.any(mu > hi):
        raise FitDiverged(f"fitted levels {mu.tolist()} outside [{bounds.lo:.4g}, {hi:.4g}]")
    weighted = h >= _MIN_WEIGHT * h.sum()
    pinned = (sigma <= bounds.sigma_min * (1.0 + _PINNED)) | (
        sigma >= bounds.sigma_max * (1.0 - _PINNED)
    )
    if np.any(weighted & pinned):
        raise FitDiverged(f"degenerate component widths {sigma.tolist()}")


def fit_level_model(
    hist: Histogram,
    initial: np.ndarray | None = None,
    state_map: dict[int, int] | None = None,
) -> LevelModel:
    """Least-squares fit of three Gaussians to a histogram.

    Means are mapped into the histogram window and widths between a tenth of
    a bin and the window span, so the unconstrained optimizer cannot push a
    component to infinity.

    Args:
        hist: Density histogram of the trace.
        initial: Optional (3, 3) array of starting mu, sigma, h rows.
        state_map: Optional state-to-component assignment.

    Returns:
        LevelModel with components sorted by mean and weights normalized.
        ``unresolved`` is set when fewer than three peaks are visible or two
        levels overlap within their mean width.

    Raises:
        FitDiverged: If the optimizer fails, the residual is above the ceiling
            or a component degenerates.
    """
    settings = get_settings()
    peaks = visible_peaks(hist, settings.peak_min_separation_bins)
    start = initial_guess(hist, settings.peak_min_separation_bins) if initial is None else initial
    bounds = _Bounds.of(hist)
    x0 = bounds.encode(*(np.asarray(row, dtype=float) for row in start))

    centers = hist.centers
    target = hist.densities

    def residuals(x: np.ndarray) -> np.ndarray:
        mu, sigma, h = bounds.decode(x)
        z = (centers[None, :] - mu[:, None]) / sigma[:, None]
        q = (h / sigma)[:, None] * np.exp(-0.5 * z**2 - _LOG_SQRT_2PI)
        return q.sum(axis=0) - target

    try:
        result = least_squares(
            residuals,
            x0,
            method="lm",
            xtol=settings.fit_xtol,
            max_nfev=settings.fit_max_iterations * (x0.size + 1),
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        raise FitDiverged(f"least-squares fit failed: {e}") from e

    if not result.success:
        raise FitDiverged(f"least-squares fit did not converge: {result.message}")

    rms = float(np.sqrt(np.mean(result.fun**2)))
    relative = rms / float(np.max(target))
    if not math.isfinite(relative) or relative > settings.fit_residual_ceiling:
        raise FitDiverged(f"relative fit residual {relative:.3g} above ceiling")

    mu, sigma, h = bounds.decode(result.x)
    if h.sum() <= 0:
        raise FitDiverged("all fitted weights vanished")
    check_components(hist, mu, sigma, h)
    order = np.argsort(mu)
    mu, sigma, h = mu[order], sigma[order], h[order] / h.sum()

    unresolved = len(peaks) < N_COMPONENTS or _peaks_overlap(mu, sigma)
    if unresolved:
        logger.warning(
            "peaks_unresolved", visible=len(peaks), mu=mu.tolist(), sigma=sigma.tolist()
        )

    return LevelModel(
        mu=mu,
        sigma=sigma,
        h=h,
        state_map=dict(state_map or DEFAULT_STATE_MAP),
        unresolved=unresolved,
        residual=relative,
    )


def fallback_level_model(
    trace: TelegraphTrace,
    state_map: dict[int, int] | None = None,
) -> LevelModel:
    """Heuristic levels for traces without a visible three-level structure.

    The middle level sits at the sample mean and the outer levels one sample
    standard deviation below and above it. The model is marked
    non-authoritative: states read with it need not match the clockwork.
    """
    mean = float(np.mean(trace.samples))
    std = float(np.std(trace.samples))
    if std == 0.0:
        std = 1.0
    logger.warning("fallback_level_model", mean=mean, std=std)
    return LevelModel(
        mu=np.array([mean - std, mean, mean + std]),
        sigma=np.full(N_COMPONENTS, std),
        h=np.full(N_COMPONENTS, 1.0 / N_COMPONENTS),
        state_map=dict(state_map or DEFAULT_STATE_MAP),
        authoritative=False,
    )


def identification_error(model: LevelModel, value: float | np.ndarray) -> float | np.ndarray:
    """Probability that the most likely level is not the true one.

    epsilon = 1 - q_S(I) / sum_i q_i(I), evaluated in log space.

    Raises:
        AllZeroDensity: If every component density is zero at ``value``.
    """
    log_q = model.log_components(np.atleast_1d(value))
    total = logsumexp(log_q, axis=0)
    if np.any(~np.isfinite(total)):
        raise AllZeroDensity("no component has positive density")
    eps = -np.expm1(log_q.max(axis=0) - total)
    return float(eps[0]) if np.ndim(value) == 0 else eps
