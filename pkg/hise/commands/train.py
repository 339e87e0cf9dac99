import dataclasses
import logging
from pathlib import Path

from hise.commands.base import CommandContext, arg, command, write_json
from hise.config import RunConfig
from hise.errors import CheckpointError
from hise.evaluation import format_metrics_table
from hise.model.params import param_shapes
from hise.training import MemoryBank, Trainer, TrainState, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.npz"
HISTORY_FILE = "history.json"
METRICS_FILE = "metrics.json"


def resume_state(path: Path, config: RunConfig) -> TrainState:
    """Continues a checkpoint under `config`; only non-structural settings may differ."""
    state, stored = load_checkpoint(path)
    if param_shapes(stored) != param_shapes(config):
        raise CheckpointError(f"{path}: parameter shapes differ from the current config")
    if stored.config_hash() != config.config_hash():
        logger.warning("resuming %s under a different config (hash %s)", path, config.config_hash()[:12])
    state.adam = dataclasses.replace(state.adam, lr=config.train.lr)
    state.video_bank = MemoryBank(config.train.bank_capacity, config.d_model, state.video_bank.rows)
    state.text_bank = MemoryBank(config.train.bank_capacity, config.d_model, state.text_bank.rows)
    return state


@command(
    "train",
    arguments=(
        arg("--config", required=True, help="config file or bundled preset"),
        arg("--data", required=True, help="fixture directory"),
        arg("--out", required=True, help="output directory"),
        arg("--resume", metavar="CKPT", help="continue from a checkpoint at its epoch boundary"),
    ),
    help="train a model and write checkpoint, history and metrics",
)
def train(cc: CommandContext) -> int:
    out_dir = Path(cc.args.out)
    with cc.run_log(out_dir, "train.log"):
        config = cc.load_config()
        split = cc.load_split(config)
        state = resume_state(Path(cc.args.resume), config) if cc.args.resume else None
        result = Trainer(config, split).run(state)
        save_checkpoint(out_dir / CHECKPOINT_FILE, result.state, config)
        write_json(out_dir / HISTORY_FILE, result.history)
        write_json(out_dir / METRICS_FILE, result.final.to_dict())
    cc.emit(format_metrics_table(result.final))
    return 0
