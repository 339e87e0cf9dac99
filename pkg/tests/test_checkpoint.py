import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from hise.config import RunConfig
from hise.data import DatasetSplit
from hise.errors import CheckpointError
from hise.training import Trainer, TrainState, load_checkpoint, save_checkpoint


@pytest.fixture
def trained(tiny_config: RunConfig, tiny_split: DatasetSplit) -> TrainState:
    config = dataclasses.replace(tiny_config, train=dataclasses.replace(tiny_config.train, epochs=1))
    return Trainer(config, tiny_split).run().state


def _rewrite(path: Path, **changes: np.ndarray) -> None:
    with np.load(path, allow_pickle=False) as data:
        arrays = {key: np.array(data[key]) for key in data.files}
    arrays.update(changes)
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def test_round_trip(tmp_path: Path, tiny_config: RunConfig, trained: TrainState) -> None:
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, trained, tiny_config)
    state, config = load_checkpoint(path)
    assert config == tiny_config
    assert (state.epoch, state.step) == (trained.epoch, trained.step)
    for name in trained.params:
        np.testing.assert_array_equal(state.params[name], trained.params[name])
        np.testing.assert_array_equal(state.momentum[name], trained.momentum[name])
        np.testing.assert_array_equal(state.adam.m[name], trained.adam.m[name])
    assert state.adam.step == trained.adam.step
    np.testing.assert_array_equal(state.video_bank.rows, trained.video_bank.rows)
    np.testing.assert_array_equal(state.text_bank.rows, trained.text_bank.rows)


def test_resume_is_bit_identical(tmp_path: Path, tiny_config: RunConfig, tiny_split: DatasetSplit) -> None:
    straight = Trainer(tiny_config, tiny_split).run().state

    first = dataclasses.replace(tiny_config, train=dataclasses.replace(tiny_config.train, epochs=1))
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, Trainer(first, tiny_split).run().state, first)
    state, _ = load_checkpoint(path)
    resumed = Trainer(tiny_config, tiny_split).run(state).state

    assert resumed.step == straight.step
    for name in straight.params:
        np.testing.assert_array_equal(resumed.params[name], straight.params[name])
        np.testing.assert_array_equal(resumed.momentum[name], straight.momentum[name])
    np.testing.assert_array_equal(resumed.video_bank.rows, straight.video_bank.rows)


def test_missing_and_garbage_files(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError, match="no such checkpoint"):
        load_checkpoint(tmp_path / "absent.npz")
    garbage = tmp_path / "garbage.npz"
    garbage.write_bytes(b"definitely not a zip archive")
    with pytest.raises(CheckpointError, match="not a readable checkpoint"):
        load_checkpoint(garbage)


def test_tampered_shape(tmp_path: Path, tiny_config: RunConfig, trained: TrainState) -> None:
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, trained, tiny_config)
    _rewrite(path, **{"live/text.w_q": np.zeros((3, 3))})
    with pytest.raises(CheckpointError, match=r"live/text.w_q: shape \(3, 3\), config expects \(4, 4\)"):
        load_checkpoint(path)


def test_non_finite_parameter(tmp_path: Path, tiny_config: RunConfig, trained: TrainState) -> None:
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, trained, tiny_config)
    poisoned = trained.momentum["vse.gcn_w"].copy()
    poisoned[0, 0] = np.inf
    _rewrite(path, **{"momentum/vse.gcn_w": poisoned})
    with pytest.raises(CheckpointError, match="momentum/vse.gcn_w: contains non-finite values"):
        load_checkpoint(path)


def test_tampered_metadata(tmp_path: Path, tiny_config: RunConfig, trained: TrainState) -> None:
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, trained, tiny_config)
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
    meta["config"]["train"]["lr"] = 0.5
    _rewrite(path, meta=np.array(json.dumps(meta)))
    with pytest.raises(CheckpointError, match="config hash does not match"):
        load_checkpoint(path)

    _rewrite(path, meta=np.array("{not json"))
    with pytest.raises(CheckpointError, match="corrupted metadata"):
        load_checkpoint(path)


def test_bank_rows_must_be_unit(tmp_path: Path, tiny_config: RunConfig, trained: TrainState) -> None:
    path = tmp_path / "checkpoint.npz"
    save_checkpoint(path, trained, tiny_config)
    _rewrite(path, **{"bank/text": 2.0 * trained.text_bank.rows})
    with pytest.raises(CheckpointError, match="bad bank contents"):
        load_checkpoint(path)
