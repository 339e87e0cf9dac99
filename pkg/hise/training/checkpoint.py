"""Single-file .npz checkpoints: live and momentum parameters, Adam moments, both banks.

Arrays are stored under "<group>/<param name>" keys; "meta" holds a JSON document with
counters, Adam hyperparameters and the full run config.
"""

from __future__ import annotations

import json
import logging
import zipfile
from pathlib import Path
from typing import Any

import numpy as np

from hise.config import RunConfig
from hise.errors import CheckpointError, ConfigError
from hise.model.params import ModelParams, param_shapes
from hise.numcore import AdamState, Array
from hise.training.memory import MemoryBank
from hise.training.state import TrainState

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(path: Path, state: TrainState, config: RunConfig) -> None:
    arrays: dict[str, Array] = {}
    for name, value in state.params.items():
        arrays[f"live/{name}"] = value
    for name, value in state.momentum.items():
        arrays[f"momentum/{name}"] = value
    for name, value in state.adam.m.items():
        arrays[f"adam_m/{name}"] = value
    for name, value in state.adam.v.items():
        arrays[f"adam_v/{name}"] = value
    arrays["bank/video"] = state.video_bank.rows
    arrays["bank/text"] = state.text_bank.rows

    meta = {
        "format": FORMAT_VERSION,
        "epoch": state.epoch,
        "step": state.step,
        "adam": {
            "lr": state.adam.lr,
            "beta1": state.adam.beta1,
            "beta2": state.adam.beta2,
            "eps": state.adam.eps,
            "step": state.adam.step,
        },
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "dims_hash": config.dims_hash(),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    logger.info("saved checkpoint at epoch %d (step %d) to %s", state.epoch, state.step, path)


def _group(arrays: dict[str, Array], group: str) -> dict[str, Array]:
    prefix = f"{group}/"
    return {key[len(prefix) :]: value for key, value in arrays.items() if key.startswith(prefix)}


def _check_params(params: dict[str, Array], expected: dict[str, tuple[int, int]], group: str) -> ModelParams:
    if set(params) != set(expected):
        difference = sorted(set(params) ^ set(expected))
        raise CheckpointError(f"{group} parameters do not match the config: {', '.join(difference[:3])}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise CheckpointError(f"{group}/{name}: shape {params[name].shape}, config expects {shape}")
        if not np.all(np.isfinite(params[name])):
            raise CheckpointError(f"{group}/{name}: contains non-finite values")
    return ModelParams(params)


def load_checkpoint(path: Path) -> tuple[TrainState, RunConfig]:
    """Restores a TrainState and its RunConfig; any inconsistency raises CheckpointError."""
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {key: np.array(data[key]) for key in data.files}
    except FileNotFoundError:
        raise CheckpointError(f"{path}: no such checkpoint") from None
    except (OSError, ValueError, EOFError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"{path}: not a readable checkpoint ({e})") from None

    try:
        meta: dict[str, Any] = json.loads(str(arrays.pop("meta")))
        if meta.get("format") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint format {meta.get('format')!r}")
        config = RunConfig.from_dict(meta["config"])
        adam_meta = meta["adam"]
        epoch, step = int(meta["epoch"]), int(meta["step"])
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError) as e:
        raise CheckpointError(f"{path}: corrupted metadata ({e})") from None

    if meta.get("config_hash") != config.config_hash():
        raise CheckpointError(f"{path}: config hash does not match the stored config")

    expected = param_shapes(config)
    params = _check_params(_group(arrays, "live"), expected, "live")
    momentum = _check_params(_group(arrays, "momentum"), expected, "momentum")
    adam_m, adam_v = _group(arrays, "adam_m"), _group(arrays, "adam_v")
    for name, value in {**adam_m, **adam_v}.items():
        if name not in expected or value.shape != expected[name]:
            raise CheckpointError(f"{path}: Adam moment {name} does not match the parameters")

    try:
        video_bank = MemoryBank(config.train.bank_capacity, config.d_model, arrays["bank/video"])
        text_bank = MemoryBank(config.train.bank_capacity, config.d_model, arrays["bank/text"])
    except KeyError as e:
        raise CheckpointError(f"{path}: missing {e.args[0]}") from None
    except Exception as e:
        raise CheckpointError(f"{path}: bad bank contents ({e})") from None

    adam = AdamState(
        lr=float(adam_meta["lr"]),
        beta1=float(adam_meta["beta1"]),
        beta2=float(adam_meta["beta2"]),
        eps=float(adam_meta["eps"]),
        step=int(adam_meta["step"]),
        m=adam_m,
        v=adam_v,
    )
    state = TrainState(
        params=params,
        momentum=momentum,
        adam=adam,
        video_bank=video_bank,
        text_bank=text_bank,
        epoch=epoch,
        step=step,
    )
    logger.info("loaded checkpoint %s (epoch %d, step %d)", path, epoch, step)
    return state, config
