import logging

from hise import gradsuite
from hise.commands.base import CommandContext, arg, command
from hise.format import format_table

logger = logging.getLogger(__name__)


@command(
    "gradcheck",
    arguments=(
        arg("--seed", type=int, default=0, help="base seed for the random instances"),
        arg("--trials", type=int, default=gradsuite.DEFAULT_TRIALS, help="random instances per check"),
        arg("--check", action="append", metavar="NAME", help="run only this check (repeatable)"),
    ),
    help="compare every analytic gradient against finite differences",
)
def gradcheck(cc: CommandContext) -> int:
    results = gradsuite.run_suite(cc.args.seed, cc.args.trials, cc.args.check)
    rows = [
        [r.name, f"{r.max_error:.2e}", f"{r.tolerance:.0e}", "ok" if r.passed else "FAIL"] for r in results
    ]
    cc.emit(format_table(["check", "max rel error", "tolerance", "status"], rows))
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("%d of %d checks failed: %s", len(failed), len(results), ", ".join(failed))
        return 1
    cc.emit(f"all {len(results)} checks passed ({cc.args.trials} trials each)")
    return 0
