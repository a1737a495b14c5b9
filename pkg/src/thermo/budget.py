"""Entropy budget of the clockwork and of its readout.

Quantities are SI internally: volts, watts, kelvin. Traces carry pA (dc) or
mV (rf) samples and are converted on entry.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from ..config import get_settings
from ..errors import NegativeDissipation, UnitMismatch, ZeroRate
from ..simulation.telegraph import Channel, TelegraphTrace

PICOAMPERE = 1e-12
MILLIVOLT = 1e-3


@dataclass(frozen=True)
class ThermoConfig:
    """Operating point of the device and its readout."""

    temperature_k: float = 0.180
    v_dqd: float = 0.0
    v_cs: float = 0.0
    p_in_w: float = 0.0
    gain_chain: float = 1.0

    def __post_init__(self):
        if not self.temperature_k > 0:
            raise ValueError("temperature must be positive")
        if not all(math.isfinite(v) for v in (self.v_dqd, self.v_cs, self.p_in_w)):
            raise ValueError("voltages and powers must be finite")
        if not self.gain_chain > 0:
            raise ValueError("gain chain factor must be positive")

    @classmethod
    def from_settings(cls, **overrides) -> "ThermoConfig":
        settings = get_settings()
        values = {"temperature_k": settings.temperature_k, "gain_chain": settings.rf_gain_chain}
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class EntropyBudget:
    """Per-tick entropy of the clockwork and of its measurement, in k_B.

    ``ratio`` is measurement over clockwork entropy; it is ``math.inf`` with
    ``ratio_infinite`` set for a clockwork at equilibrium.
    """

    sigma_tick: float
    sigma_meas_per_tick: float
    power_diss: float
    tick_rate: float
    ratio: float
    ratio_infinite: bool = False


def entropy_per_tick(v_dqd: float, temperature: float) -> float:
    """Sigma_tick = e |V_DQD| / (k_B T) in units of k_B."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return constants.e * abs(v_dqd) / (constants.k * temperature)


def dc_dissipation(trace: TelegraphTrace, v_cs: float) -> float:
    """Time average of V_cs |I(t) - mean(I)| in watts for a trace in pA.

    Raises:
        UnitMismatch: If the trace is not a dc current trace.
    """
    if trace.channel is not Channel.DC:
        raise UnitMismatch(f"dc dissipation needs a dc trace, got {trace.channel.value}")
    current = trace.samples * PICOAMPERE
    return float(np.mean(np.abs(v_cs * (current - current.mean()))))


def rf_dissipation(p_in: float, p_out: float) -> float:
    """Power absorbed by the sensor, P_in - P_out.

    Raises:
        NegativeDissipation: If more power leaves than enters.
    """
    if p_out < 0 or p_in < 0:
        raise ValueError("powers must be non-negative")
    if p_out > p_in:
        raise NegativeDissipation(f"output {p_out:.3e} W exceeds input {p_in:.3e} W")
    return p_in - p_out


def dbm_to_watts(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(watts / 1e-3)


def rf_output_power(
    x: TelegraphTrace,
    y: TelegraphTrace,
    impedance_ohm: float = 50.0,
    gain_chain: float | None = None,
) -> float:
    """Mean (V_x^2 + V_y^2) / R of the demodulated quadratures, referred back
    through the gain chain. Traces are in mV.

    Raises:
        UnitMismatch: If the traces are not the rf quadratures.
    """
    if x.channel is not Channel.RF_X or y.channel is not Channel.RF_Y:
        raise UnitMismatch("rf output power needs the rf_x and rf_y quadratures")
    gain_chain = gain_chain if gain_chain is not None else get_settings().rf_gain_chain
    vx, vy = x.samples * MILLIVOLT, y.samples * MILLIVOLT
    return float(np.mean(vx**2 + vy**2)) / impedance_ohm / gain_chain


def entropy_budget(
    power: float,
    tick_rate: float,
    temperature: float,
    sigma_tick: float,
) -> EntropyBudget:
    """Measurement entropy per tick P / (k_B T nu) next to the clockwork's own.

    Raises:
        ZeroRate: If the tick rate is not positive.
    """
    if tick_rate <= 0:
        raise ZeroRate("tick rate must be positive")
    sigma_meas = power / (constants.k * temperature * tick_rate)
    if sigma_tick == 0.0:
        infinite = sigma_meas > 0
        ratio = math.inf if infinite else 0.0
    else:
        infinite = False
        ratio = sigma_meas / sigma_tick
    return EntropyBudget(
        sigma_tick=sigma_tick,
        sigma_meas_per_tick=sigma_meas,
        power_diss=power,
        tick_rate=tick_rate,
        ratio=ratio,
        ratio_infinite=infinite,
    )
