import logging
from pathlib import Path

from hise.commands.base import MANIFEST_FILE, CommandContext, arg, command, write_json
from hise.data import generate_synthetic, write_fixtures

logger = logging.getLogger(__name__)


@command(
    "gen-data",
    arguments=(
        arg("--config", required=True, help="config file or bundled preset (desk, hard, tiny)"),
        arg("--out", required=True, help="directory for videos.jsonl, texts.jsonl and manifest.json"),
    ),
    help="generate a synthetic fixture set",
)
def gen_data(cc: CommandContext) -> int:
    config = cc.load_config()
    out_dir = Path(cc.args.out)
    split = generate_synthetic(config)
    videos_path, texts_path = write_fixtures(split, out_dir)
    write_json(
        out_dir / MANIFEST_FILE,
        {
            "config_hash": config.config_hash(),
            "dims_hash": config.dims_hash(),
            "seed": config.seed,
            "videos": len(split.videos),
            "texts": len(split.texts),
        },
    )
    logger.info("wrote %s and %s", videos_path, texts_path)
    cc.emit(f"{len(split.videos)} videos and {len(split.texts)} texts written to {out_dir}")
    return 0
