"""Trace and artifact loading with validation."""

import json
import re
from pathlib import Path
from typing import TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from ..config import get_settings
from ..errors import EmptyTrace, MalformedRow, NonUniformSampling
from ..identification.classifier import StateSequence
from ..identification.level_model import LevelModel
from ..logger import get_logger
from ..markov.generator import Generator
from ..output.schemas import GeneratorFile, JumpRecordFile, LevelModelFile, state_from_label
from ..simulation.telegraph import Channel, TelegraphTrace
from ..simulation.trajectory import JumpRecord

logger = get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

_PARSER_LINE = re.compile(r"line (\d+)")


class TraceLoader:
    """Load uniformly sampled two-column CSV files."""

    def __init__(
        self,
        column_time: str = "time_s",
        column_signal: str = "signal",
        tolerance: float | None = None,
    ):
        """Initialize loader with a column mapping.

        Args:
            column_time: Header of the time column in seconds.
            column_signal: Header of the value column.
            tolerance: Allowed relative deviation of a time step from the
                median step; defaults to the configured value.
        """
        self.column_time = column_time
        self.column_signal = column_signal
        self.tolerance = tolerance if tolerance is not None else get_settings().sampling_tolerance

    def read_columns(self, path: Path, value_column: str) -> tuple[np.ndarray, pd.Series]:
        """Read and check the time column; return it with the raw value column.

        Raises:
            MalformedRow: If a row cannot be parsed or time does not increase.
            EmptyTrace: If the file holds a header only.
        """
        try:
            frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
        except pd.errors.EmptyDataError as e:
            raise EmptyTrace(f"{path} is empty") from e
        except pd.errors.ParserError as e:
            match = _PARSER_LINE.search(str(e))
            raise MalformedRow(int(match.group(1)) if match else 0, str(e)) from e

        missing = [c for c in (self.column_time, value_column) if c not in frame.columns]
        if missing:
            raise MalformedRow(1, f"missing column(s) {', '.join(missing)}")
        if frame.empty:
            raise EmptyTrace(f"{path} has no data rows")

        times = pd.to_numeric(frame[self.column_time], errors="coerce")
        bad = np.flatnonzero(~np.isfinite(times.to_numpy(dtype=float)))
        if bad.size:
            # header is line 1
            raw = frame[self.column_time].iloc[bad[0]]
            raise MalformedRow(int(bad[0]) + 2, f"unparseable time {raw!r}")
        times = times.to_numpy(dtype=float)

        steps = np.diff(times)
        backwards = np.flatnonzero(steps <= 0)
        if backwards.size:
            raise MalformedRow(int(backwards[0]) + 3, "time does not increase")
        return times, frame[value_column]

    def infer_dt(self, times: np.ndarray) -> float:
        """Median time step, checked against every individual step.

        Raises:
            NonUniformSampling: If a step deviates from the median by more than
                the tolerance or fewer than two rows are present.
        """
        if times.size < 2:
            raise NonUniformSampling("at least two rows are needed to infer the sample interval")
        steps = np.diff(times)
        dt = float(np.median(steps))
        deviation = np.abs(steps - dt) / dt
        worst = int(np.argmax(deviation))
        if deviation[worst] > self.tolerance:
            raise NonUniformSampling(
                f"step {steps[worst]:.6g} s at line {worst + 3} deviates from median {dt:.6g} s"
            )
        return dt

    def load(self, path: Path, channel: Channel = Channel.DC) -> TelegraphTrace:
        """Load a trace CSV.

        Raises:
            MalformedRow: With the 1-based line number of the first bad row.
            NonUniformSampling: If the sample interval is not uniform.
            EmptyTrace: If the file holds a header only.
        """
        times, raw = self.read_columns(path, self.column_signal)
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise MalformedRow(int(bad[0]) + 2, f"unparseable signal {raw.iloc[bad[0]]!r}")
        dt = self.infer_dt(times)
        logger.info("trace_loaded", path=str(path), samples=int(values.size), dt_s=dt)
        return TelegraphTrace(samples=values, dt=dt, channel=channel)

    def load_sequence(self, path: Path, column_state: str = "state") -> StateSequence:
        """Load a ``time_s,state`` CSV with labels 0, R, L."""
        times, raw = self.read_columns(path, column_state)
        states = []
        for k, label in enumerate(raw.tolist()):
            try:
                states.append(state_from_label(str(label).strip()))
            except ValueError:
                raise MalformedRow(k + 2, f"unknown state label {label!r}") from None
        return StateSequence(states=np.array(states), dt=self.infer_dt(times))


def parse_trace(
    path: str | Path,
    column_time: str = "time_s",
    column_signal: str = "signal",
    channel: Channel = Channel.DC,
) -> TelegraphTrace:
    """Load a trace CSV with the configured sampling tolerance."""
    return TraceLoader(column_time, column_signal).load(Path(path), channel=channel)


def load_artifact(path: str | Path, model: type[ModelT]) -> ModelT:
    """Parse a JSON artifact into its schema model.

    Raises:
        MalformedRow: If the file is not valid JSON for the schema.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return model.model_validate(json.loads(text))
    except json.JSONDecodeError as e:
        raise MalformedRow(e.lineno, e.msg) from e
    except ValidationError as e:
        raise MalformedRow(1, str(e)) from e


def load_generator(path: str | Path) -> Generator:
    return load_artifact(path, GeneratorFile).to_generator()


def load_jump_record(path: str | Path) -> JumpRecord:
    return load_artifact(path, JumpRecordFile).to_record()


def load_level_model(path: str | Path) -> LevelModel:
    return load_artifact(path, LevelModelFile).to_model()
