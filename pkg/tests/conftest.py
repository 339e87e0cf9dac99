import numpy as np
import pytest

from hise.config import RunConfig, load_run_config
from hise.data import DatasetSplit, generate_synthetic
from hise.model import ModelParams, init_params
from hise.numcore import Array


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch: pytest.MonkeyPatch) -> None:
    # a developer's HISE_SEED must not leak into test configs
    monkeypatch.delenv("HISE_SEED", raising=False)


@pytest.fixture(scope="session")
def tiny_config() -> RunConfig:
    return load_run_config("tiny", env_seed=False)


@pytest.fixture(scope="session")
def tiny_split(tiny_config: RunConfig) -> DatasetSplit:
    return generate_synthetic(tiny_config)


@pytest.fixture
def tiny_params(tiny_config: RunConfig) -> ModelParams:
    return init_params(tiny_config)


def unit_rows(rng: np.random.Generator, rows: int, cols: int) -> Array:
    x = rng.standard_normal((rows, cols))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
