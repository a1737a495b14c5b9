"""Atomic writers for JSON artifacts and CSV data files."""

import io
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..identification.classifier import StateSequence
from ..simulation.telegraph import TelegraphTrace
from .schemas import state_label


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_json(path: str | Path, model: BaseModel) -> Path:
    text = model.model_dump_json(by_alias=True, indent=2)
    return atomic_write_text(path, text + "\n")


def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return atomic_write_text(path, buffer.getvalue())


def write_trace(path: str | Path, trace: TelegraphTrace) -> Path:
    """``time_s,signal`` CSV, one row per sample."""
    return write_frame(path, pd.DataFrame({"time_s": trace.times, "signal": trace.samples}))


def write_sequence(path: str | Path, seq: StateSequence) -> Path:
    """``time_s,state`` CSV with state labels."""
    labels = [state_label(s) for s in seq.states.tolist()]
    times = np.arange(len(seq)) * seq.dt
    return write_frame(path, pd.DataFrame({"time_s": times, "state": labels}))
