"""Pydantic schemas for every JSON artifact.

All files carry ``"schema": 1``. Numbers that may be infinite are stored as
``null`` next to a ``<field>_infinite`` flag; reports never hold NaN.
"""

import math
from datetime import datetime, timezone
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..identification.level_model import LevelModel
from ..markov.generator import ChargeState, Generator, validate_generator
from ..simulation.trajectory import JumpRecord

SCHEMA_VERSION = 1


def finite_or_none(value: float | None) -> float | None:
    """``None`` for missing, infinite or NaN values, else the float."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def sentinel(name: str, value: float | None) -> dict[str, Any]:
    """Field pair ``{name: value | None, name_infinite: bool}``."""
    infinite = value is not None and math.isinf(value)
    return {name: finite_or_none(value), f"{name}_infinite": infinite}


def state_label(state: int) -> str:
    try:
        return ChargeState(state).label
    except ValueError:
        return str(state)


def state_from_label(label: str) -> int:
    try:
        return int(ChargeState.from_label(label))
    except KeyError:
        return int(label)


class Artifact(BaseModel):
    """Base of all versioned files."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")


# ============== Domain Files ==============

class GeneratorFile(Artifact):
    """Rate matrix; ``rates[j][i]`` is the rate i -> j in Hz, diagonal ignored."""

    n: int = Field(ge=2)
    rates: list[list[float]]

    @classmethod
    def from_generator(cls, g: Generator) -> "GeneratorFile":
        return cls(n=g.n_states, rates=g.off_diagonal().tolist())

    def to_generator(self) -> Generator:
        matrix = np.array(self.rates, dtype=float)
        if matrix.shape != (self.n, self.n):
            raise ValueError(f"rates must be {self.n} x {self.n}")
        return validate_generator(matrix)


class JumpRecordFile(Artifact):
    states: list[int]
    times: list[float]
    duration: float

    @classmethod
    def from_record(cls, rec: JumpRecord) -> "JumpRecordFile":
        return cls(states=rec.states.tolist(), times=rec.times.tolist(), duration=rec.duration)

    def to_record(self) -> JumpRecord:
        return JumpRecord(
            states=np.array(self.states), times=np.array(self.times), duration=self.duration
        )


class LevelModelFile(Artifact):
    """Three-Gaussian readout calibration; ``state_map`` maps labels to components."""

    mu: list[float]
    sigma: list[float]
    h: list[float]
    state_map: dict[str, int]
    unresolved: bool = False
    authoritative: bool = True
    residual: float = 0.0

    @classmethod
    def from_model(cls, model: LevelModel) -> "LevelModelFile":
        return cls(
            mu=model.mu.tolist(),
            sigma=model.sigma.tolist(),
            h=model.h.tolist(),
            state_map={state_label(s): int(c) for s, c in sorted(model.state_map.items())},
            unresolved=model.unresolved,
            authoritative=model.authoritative,
            residual=model.residual,
        )

    def to_model(self) -> LevelModel:
        return LevelModel(
            mu=np.array(self.mu),
            sigma=np.array(self.sigma),
            h=np.array(self.h),
            state_map={state_from_label(k): v for k, v in self.state_map.items()},
            unresolved=self.unresolved,
            authoritative=self.authoritative,
            residual=self.residual,
        )


# ============== Stage Results ==============

class RateEntry(BaseModel):
    gamma_hz: float
    stderr_hz: float
    n: int
    deadtime_s: float = 0.0
    alpha: float = 1.0
    eta_s: float = 0.0


class RatesFile(Artifact):
    """Fitted generator: ``pairs`` keyed ``"j|i"``, ``exit`` keyed by state label."""

    generator: GeneratorFile
    pairs: dict[str, RateEntry]
    exit: dict[str, RateEntry]
    destination_z: dict[str, float | None] = Field(default_factory=dict)


class DriftWindowEntry(BaseModel):
    start_s: float
    flagged: bool
    max_deviation: float | None
    max_deviation_infinite: bool = False
    exit_rates_hz: list[float] | None = None


class DriftScanFile(Artifact):
    window_s: float
    shift: float
    threshold: float
    windows: list[DriftWindowEntry]


class TickSection(Artifact):
    forward: int
    backward: int
    net: int
    excursions: int
    incomplete: bool


class IdentificationSection(Artifact):
    snr: float | None
    snr_infinite: bool = False
    mean_epsilon: float
    unresolved: bool
    authoritative: bool
    samples: int
    jumps: int


class PrecisionSection(Artifact):
    estimator: str
    defined: bool = True
    M: int
    t_s: float
    mean_s: float | None
    var_s2: float | None
    S_hz: float | None
    S_hz_infinite: bool = False
    S_stderr_hz: float | None
    S_stderr_hz_infinite: bool = False
    calibration: str
    nu_hz: float
    nu_stderr_hz: float = 0.0
    calibration_rel_var: float | None = None
    calibration_rel_var_infinite: bool = False
    undefined_reason: str | None = None


class TheorySection(Artifact):
    estimator: str
    S_theory_hz: float | None
    S_theory_hz_infinite: bool = False
    S_opt_hz: float
    nu_hz: float
    D: float | None = Field(default=None, description="Diffusion of the tick count in Hz")
    N_inf: float | None = None
    N_inf_infinite: bool = False
    tur_bound_hz: float | None
    tur_bound_hz_infinite: bool = False
    sigma_S_hz: float | None = None


class TurSection(BaseModel):
    estimator: str
    bound_hz: float | None
    bound_hz_infinite: bool = False
    precision_hz: float | None
    satisfied: bool | None
    applicable: bool


class PrecisionFile(Artifact):
    sections: list[PrecisionSection]
    tur: list[TurSection] = Field(default_factory=list)


class TheoryFile(Artifact):
    sections: list[TheorySection]


class BudgetSection(Artifact):
    sigma_tick_kb: float
    sigma_meas_per_tick_kb: float
    power_w: float
    tick_rate_hz: float
    ratio: float | None
    ratio_infinite: bool = False


class Provenance(BaseModel):
    config_hash: str
    seed: int | None
    tool_version: str
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class PrecisionReport(Artifact):
    """Merged results of one analysis run."""

    provenance: Provenance
    identification: IdentificationSection | None = None
    ticks: TickSection | None = None
    rates: RatesFile | None = None
    precision: list[PrecisionSection] = Field(default_factory=list)
    theory: list[TheorySection] = Field(default_factory=list)
    tur: list[TurSection] = Field(default_factory=list)
    budget: BudgetSection | None = None
    drift: DriftScanFile | None = None
