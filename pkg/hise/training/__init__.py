from hise.training.checkpoint import load_checkpoint, save_checkpoint
from hise.training.memory import MemoryBank
from hise.training.objective import (
    ObjectiveTerms,
    bank_hal_loss,
    batch_similarity,
    hal_loss,
    infonce_loss,
    momentum_update,
    total_objective,
)
from hise.training.state import TrainState
from hise.training.trainer import Trainer, TrainResult, cosine_learning_rate

__all__ = [
    "MemoryBank",
    "ObjectiveTerms",
    "TrainResult",
    "TrainState",
    "Trainer",
    "bank_hal_loss",
    "batch_similarity",
    "cosine_learning_rate",
    "hal_loss",
    "infonce_loss",
    "load_checkpoint",
    "momentum_update",
    "save_checkpoint",
    "total_objective",
]
