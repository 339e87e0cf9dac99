from __future__ import annotations

from dataclasses import dataclass

from hise.config import RunConfig
from hise.model.params import ModelParams, init_params
from hise.numcore import AdamState
from hise.training.memory import MemoryBank


@dataclass
class TrainState:
    """Everything a training run mutates between steps; a checkpoint stores exactly this."""

    params: ModelParams
    momentum: ModelParams
    adam: AdamState
    video_bank: MemoryBank
    text_bank: MemoryBank
    epoch: int = 0
    step: int = 0

    @classmethod
    def fresh(cls, config: RunConfig) -> TrainState:
        params = init_params(config)
        return cls(
            params=params,
            momentum=params.copy(),
            adam=AdamState(lr=config.train.lr),
            video_bank=MemoryBank(config.train.bank_capacity, config.d_model),
            text_bank=MemoryBank(config.train.bank_capacity, config.d_model),
        )
