"""Shared fixtures for the clockwork test suite."""

import os

import numpy as np
import pytest

from src.config import get_settings
from src.identification.level_model import LevelModel
from src.markov.generator import (
    Generator,
    biased_cycle_generator,
    unidirectional_cycle,
    validate_generator,
)
from src.output.schemas import GeneratorFile


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, tmp_path):
    """Isolate every test from ambient environment and cached settings."""
    for key in list(os.environ):
        if key.startswith("CLOCKWORK_"):
            monkeypatch.delenv(key)
    monkeypatch.setenv("CLOCKWORK_OUTPUT_DIR", str(tmp_path / "default-output"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def unidirectional() -> Generator:
    return unidirectional_cycle(30.0)


@pytest.fixture
def biased() -> Generator:
    """Driven clock with rates between roughly 15 and 65 Hz."""
    return biased_cycle_generator(30.0, 3.0, state_scale=(1.0, 1.3, 0.8))


@pytest.fixture
def equilibrium() -> Generator:
    return biased_cycle_generator(30.0, 0.0)


@pytest.fixture
def symmetric() -> Generator:
    """All six rates equal to 1 Hz."""
    return validate_generator(np.ones((3, 3)))


def random_generator(rng: np.random.Generator, low: float = 1.0, high: float = 100.0) -> Generator:
    return validate_generator(rng.uniform(low, high, size=(3, 3)))


@pytest.fixture
def random_generators() -> list[Generator]:
    rng = np.random.default_rng(20240611)
    return [random_generator(rng) for _ in range(100)]


@pytest.fixture
def three_level_model() -> LevelModel:
    """Well separated levels 0, 1, 2 with equal widths and weights."""
    return LevelModel(
        mu=np.array([0.0, 1.0, 2.0]),
        sigma=np.full(3, 0.1),
        h=np.full(3, 1.0 / 3.0),
    )


@pytest.fixture
def generator_file(tmp_path, biased):
    path = tmp_path / "generator.json"
    path.write_text(GeneratorFile.from_generator(biased).model_dump_json(by_alias=True))
    return path
