"""Synthetic telegraph sensor traces."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .trajectory import JumpRecord, derive_rng

_NOISE_STREAM = 1 << 20


class Channel(str, Enum):
    """Readout channel a trace was recorded on."""

    DC = "dc"
    RF_X = "rf_x"
    RF_Y = "rf_y"
    RF_PCA = "rf_pca"


@dataclass(frozen=True)
class TelegraphTrace:
    """Uniformly sampled sensor signal (pA for dc, mV for rf)."""

    samples: np.ndarray
    dt: float
    channel: Channel = Channel.DC

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel", Channel(self.channel))
        if not self.dt > 0:
            raise ValueError("sample interval must be positive")
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("a trace needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("trace samples must be finite")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt


@dataclass(frozen=True)
class LevelTruth:
    """Ground-truth signal level of each state plus white Gaussian noise."""

    level_values: dict[int, float]
    noise_sigma: float = 0.0

    def __post_init__(self):
        values = list(self.level_values.values())
        if len(set(values)) != len(values):
            raise ValueError("level values must be distinct")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")

    def lookup(self, n_states: int) -> np.ndarray:
        table = np.full(n_states, np.nan)
        for state, value in self.level_values.items():
            table[int(state)] = value
        return table


def synthesize_trace(
    rec: JumpRecord,
    truth: LevelTruth,
    dt: float,
    seed: int,
    channel: Channel = Channel.DC,
) -> TelegraphTrace:
    """Sample the record's level every ``dt`` seconds and add Gaussian noise.

    Sample k carries the level of the state occupied at time k * dt; the
    trace holds floor(duration / dt) samples.
    """
    if dt <= 0:
        raise ValueError("sample interval must be positive")
    n_samples = int(math.floor(rec.duration / dt + 1e-9))
    table = truth.lookup(int(rec.states.max()) + 1)
    signal = table[rec.state_at(np.arange(n_samples) * dt)]
    if np.any(np.isnan(signal)):
        raise ValueError("record visits a state without a level value")
    if truth.noise_sigma > 0:
        rng = derive_rng(seed, _NOISE_STREAM)
        signal = signal + rng.normal(0.0, truth.noise_sigma, size=n_samples)
    return TelegraphTrace(samples=signal, dt=dt, channel=channel)
