import logging
from pathlib import Path

from hise.commands.base import CommandContext, arg, command, write_json
from hise.evaluation import evaluate, format_metrics_table
from hise.training import load_checkpoint

logger = logging.getLogger(__name__)


@command(
    "eval",
    arguments=(
        arg("--ckpt", required=True, help="checkpoint written by train"),
        arg("--data", required=True, help="fixture directory"),
        arg("--json", metavar="PATH", help="also write the report as JSON"),
    ),
    help="evaluate a checkpoint in both retrieval directions",
)
def eval_command(cc: CommandContext) -> int:
    state, config = load_checkpoint(Path(cc.args.ckpt))
    split = cc.load_split(config)
    report = evaluate(state.params, split, config)
    if cc.args.json:
        write_json(Path(cc.args.json), report.to_dict())
        logger.info("wrote %s", cc.args.json)
    cc.emit(format_metrics_table(report))
    return 0
