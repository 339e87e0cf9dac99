from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Iterator, Mapping
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

from hise.config import RunConfig, load_run_config
from hise.data import DatasetSplit, load_fixture_dir
from hise.errors import FixtureError
from hise.logs import add_file_log, remove_file_log

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"

Handler = Callable[["CommandContext"], int]


@dataclass(frozen=True)
class Argument:
    flags: tuple[str, ...]
    options: Mapping[str, Any] = field(default_factory=dict)


def arg(*flags: str, **options: Any) -> Argument:
    """One add_argument() call, deferred until the parser is built."""
    return Argument(flags=flags, options=options)


@dataclass(frozen=True)
class CommandSpec:
    name: str
    handler: Handler
    arguments: tuple[Argument, ...] = ()
    help: str = ""


REGISTRY: list[CommandSpec] = []


def command(
    name: str, *, arguments: tuple[Argument, ...] = (), help: str = ""
) -> Callable[[Handler], Handler]:
    """Registers a sub-command; __main__ builds one argparse sub-parser per registered spec."""

    def decorator(handler: Handler) -> Handler:
        REGISTRY.append(CommandSpec(name=name, handler=handler, arguments=arguments, help=help))
        return handler

    return decorator


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(data_dir: Path) -> dict[str, Any] | None:
    path = data_dir / MANIFEST_FILE
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FixtureError(f"{path}: invalid JSON ({e.msg})") from None


class CommandContext:
    """Everything a command handler needs: parsed arguments and the data stream."""

    def __init__(self, args: argparse.Namespace, spec: CommandSpec, stdout: TextIO | None = None) -> None:
        self.args = args
        self.spec = spec
        self.stdout = stdout if stdout is not None else sys.stdout

    def emit(self, text: str) -> None:
        """Data goes to stdout; diagnostics go through logging to stderr."""
        print(text, file=self.stdout)

    def load_config(self) -> RunConfig:
        config = load_run_config(self.args.config)
        logger.info("config %s (hash %s, seed %d)", self.args.config, config.config_hash()[:12], config.seed)
        return config

    def load_split(self, config: RunConfig) -> DatasetSplit:
        data_dir = Path(self.args.data)
        self.check_manifest(data_dir, config)
        split = load_fixture_dir(data_dir, vocab_size=config.vocab_size, num_roles=config.num_roles)
        if split.d_frame != config.d_frame:
            raise FixtureError(
                f"{data_dir}: frames have {split.d_frame} features but d_frame is {config.d_frame}"
            )
        if split.d_roi is not None and split.d_roi != config.d_roi:
            raise FixtureError(
                f"{data_dir}: roi vectors have {split.d_roi} values but d_roi is {config.d_roi}"
            )
        return split

    def check_manifest(self, data_dir: Path, config: RunConfig) -> None:
        manifest = read_manifest(data_dir)
        if manifest is None:
            logger.debug("%s has no %s, skipping the dims check", data_dir, MANIFEST_FILE)
            return
        if manifest.get("dims_hash") != config.dims_hash():
            logger.warning(
                "fixtures in %s were generated with different dimensions (dims hash %s, config %s)",
                data_dir,
                str(manifest.get("dims_hash"))[:12],
                config.dims_hash()[:12],
            )

    @contextmanager
    def run_log(self, out_dir: Path, filename: str) -> Iterator[Path]:
        """Mirrors log records into out_dir/filename for the duration of the block."""
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / filename
        handler = add_file_log(path)
        try:
            yield path
        finally:
            remove_file_log(handler)
