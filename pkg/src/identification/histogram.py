"""Equidistant density histograms of sensor traces."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConstantSignal, EmptyTrace
from ..simulation.telegraph import TelegraphTrace


@dataclass(frozen=True)
class Histogram:
    """Probability density p(I) over equidistant bins."""

    bin_edges: np.ndarray
    densities: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def n_bins(self) -> int:
        return int(self.densities.size)

    def quantile(self, q: float) -> float:
        """Signal value below which a fraction ``q`` of the density lies."""
        cdf = np.concatenate([[0.0], np.cumsum(self.densities * np.diff(self.bin_edges))])
        return float(np.interp(q, cdf, self.bin_edges))

    def mean_and_std(self) -> tuple[float, float]:
        weights = self.densities * np.diff(self.bin_edges)
        mean = float(np.sum(weights * self.centers))
        var = float(np.sum(weights * (self.centers - mean) ** 2))
        return mean, float(np.sqrt(var))


def build_histogram(trace: TelegraphTrace, bins: int = 180) -> Histogram:
    """Bin a trace into ``bins`` equidistant bins spanning its sample range.

    Args:
        trace: Sensor trace.
        bins: Number of bins, at least 10.

    Returns:
        Histogram whose densities integrate to one.

    Raises:
        EmptyTrace: If the trace holds no samples.
        ConstantSignal: If every sample has the same value.
    """
    if bins < 10:
        raise ValueError("at least 10 bins are required")
    samples = trace.samples
    if samples.size == 0:
        raise EmptyTrace("cannot histogram an empty trace")
    lo, hi = float(samples.min()), float(samples.max())
    if hi == lo:
        raise ConstantSignal(f"all samples equal {lo}")
    densities, edges = np.histogram(samples, bins=bins, range=(lo, hi), density=True)
    return Histogram(bin_edges=edges, densities=densities)
