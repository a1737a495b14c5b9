"""Principal-component merge of the two rf quadratures."""

import numpy as np

from ..errors import LengthMismatch
from ..simulation.telegraph import Channel, TelegraphTrace


def principal_axis(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unit vector along the leading eigenvector of the 2x2 sample covariance.

    The axis is oriented to have a positive x component; for equal eigenvalues
    the x axis is chosen.
    """
    cov = np.cov(np.vstack([x, y]), bias=True)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    if np.isclose(eigenvalues[0], eigenvalues[1], rtol=1e-12, atol=0.0):
        return np.array([1.0, 0.0])
    axis = eigenvectors[:, -1]
    if axis[0] < 0 or (axis[0] == 0 and axis[1] < 0):
        axis = -axis
    return axis


def combine_quadratures(x: TelegraphTrace, y: TelegraphTrace) -> TelegraphTrace:
    """Project the (x, y) samples onto their leading principal axis.

    Raises:
        LengthMismatch: If the traces differ in length or sample interval.
    """
    if len(x) != len(y) or not np.isclose(x.dt, y.dt, rtol=1e-12):
        raise LengthMismatch("quadrature traces must share length and sample interval")
    axis = principal_axis(x.samples, y.samples)
    projected = axis[0] * x.samples + axis[1] * y.samples
    return TelegraphTrace(samples=projected, dt=x.dt, channel=Channel.RF_PCA)
