import argparse
import logging
import sys
from collections.abc import Sequence

from hise.commands import REGISTRY, CommandContext
from hise.config import log_level_from_env
from hise.errors import HiseError
from hise.logs import setup_logging

logger = logging.getLogger("hise")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hise", description="video-text retrieval with explicit semantics")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (env LOG_LEVEL)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for spec in REGISTRY:
        sub = subparsers.add_parser(spec.name, help=spec.help, description=spec.help)
        for argument in spec.arguments:
            sub.add_argument(*argument.flags, **argument.options)
        sub.set_defaults(spec=spec)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or log_level_from_env())
    spec = args.spec
    try:
        return spec.handler(CommandContext(args, spec))
    except HiseError as e:
        print(f"hise {spec.name}: error: {e}", file=sys.stderr)
        return 1
    except Exception:
        logger.exception("%s failed unexpectedly", spec.name)
        return 1


if __name__ == "__main__":
    sys.exit(main())
