"""Bundled run configs (hise/bundled/*.json), addressable by name on the command line."""

from pathlib import Path

from hise.errors import ConfigError

BUNDLED_DIR = Path(__file__).resolve().parent / "bundled"


def preset_names() -> list[str]:
    return sorted(path.stem for path in BUNDLED_DIR.glob("*.json"))


def resolve_config_path(source: str | Path) -> Path:
    """An existing file wins; otherwise `source` names a bundled preset ('desk', 'desk.json')."""
    path = Path(source)
    if path.exists():
        return path
    name = path.name if path.suffix == ".json" else f"{path.name}.json"
    bundled = BUNDLED_DIR / name
    if bundled.exists():
        return bundled
    known = ", ".join(preset_names())
    raise ConfigError(f"config: {source} is neither a file nor a bundled preset ({known})")
