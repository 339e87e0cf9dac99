"""Run configuration: one JSON document drives fixture generation, training and evaluation.

Every section is a frozen dataclass whose defaults are the desk-scale settings from
hise.constants. `RunConfig.from_dict(config.to_dict()) == config` holds for every valid
config, and validation errors always name the offending field.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from hise import constants
from hise.errors import ConfigError
from hise.presets import resolve_config_path

VOCAB_KINDS = ("subjects", "actions", "objects", "places", "attributes")
LOSS_KINDS = ("hal", "b-infonce")

# fields that determine the shape of fixtures; checkpoints and manifests record their hash
FIXTURE_DIM_FIELDS = ("d_frame", "d_roi", "vocab", "num_roles")

VocabEntry = int | tuple[int, int]


@dataclass(frozen=True)
class VocabConfig:
    """Vocabulary partition: a count (laid out after the previous kinds) or an explicit [start, stop)."""

    subjects: VocabEntry = 8
    actions: VocabEntry = 8
    objects: VocabEntry = 8
    places: VocabEntry = 4
    attributes: VocabEntry = 4

    def ranges(self) -> dict[str, range]:
        ranges: dict[str, range] = {}
        cursor = 0
        for kind in VOCAB_KINDS:
            entry = getattr(self, kind)
            if isinstance(entry, int):
                ranges[kind] = range(cursor, cursor + entry)
                cursor += entry
            else:
                start, stop = entry
                ranges[kind] = range(start, stop)
                cursor = max(cursor, stop)
        return ranges

    @property
    def size(self) -> int:
        return max(r.stop for r in self.ranges().values())

    def validate(self) -> None:
        for kind in VOCAB_KINDS:
            entry = getattr(self, kind)
            if isinstance(entry, int):
                if entry < 1:
                    raise ConfigError(f"vocab.{kind}: count must be >= 1, got {entry}")
            else:
                start, stop = entry
                if start < 0 or stop <= start:
                    raise ConfigError(f"vocab.{kind}: range [{start}, {stop}) is empty or negative")
        claimed: dict[int, str] = {}
        for kind, ids in self.ranges().items():
            for token in ids:
                if token in claimed:
                    raise ConfigError(
                        f"vocab.{kind}: vocab partition overlap with {claimed[token]} at token {token}"
                    )
                claimed[token] = kind

    def to_dict(self) -> dict[str, Any]:
        return {kind: _vocab_entry_to_json(getattr(self, kind)) for kind in VOCAB_KINDS}


@dataclass(frozen=True)
class LossConfig:
    alpha: float = constants.ALPHA
    margin: float = constants.HAL_MARGIN
    temperature: float = constants.HAL_TEMPERATURE
    lambda_batch: float = constants.LAMBDA_BATCH
    lambda_bank: float = constants.LAMBDA_BANK
    kind: str = "hal"
    infonce_temperature: float = constants.INFONCE_TEMPERATURE

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"loss.alpha: must be in [0, 1], got {self.alpha}")
        if self.temperature <= 0:
            raise ConfigError(f"loss.temperature: must be > 0, got {self.temperature}")
        if self.lambda_batch < 0:
            raise ConfigError(f"loss.lambda_batch: must be >= 0, got {self.lambda_batch}")
        if self.lambda_bank < 0:
            raise ConfigError(f"loss.lambda_bank: must be >= 0, got {self.lambda_bank}")
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"loss.kind: must be one of {', '.join(LOSS_KINDS)}, got {self.kind!r}")
        if self.infonce_temperature <= 0:
            raise ConfigError(f"loss.infonce_temperature: must be > 0, got {self.infonce_temperature}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = constants.EPOCHS
    batch_size: int = constants.BATCH_SIZE
    lr: float = constants.LEARNING_RATE
    cosine_schedule: bool = False
    bank_capacity: int = constants.BANK_CAPACITY
    momentum: float = constants.MOMENTUM
    eval_every: int = 0

    def validate(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"train.epochs: must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size: must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"train.lr: must be > 0, got {self.lr}")
        if self.bank_capacity < 1:
            raise ConfigError(f"train.bank_capacity: must be >= 1, got {self.bank_capacity}")
        if not 0.0 <= self.momentum <= 1.0:
            raise ConfigError(f"train.momentum: must be in [0, 1], got {self.momentum}")
        if self.eval_every < 0:
            raise ConfigError(f"train.eval_every: must be >= 0, got {self.eval_every}")


@dataclass(frozen=True)
class ComponentToggles:
    """Which high-level semantic representations feed the fused embeddings."""

    vds: bool = True
    vhs: bool = True
    tds: bool = True
    ths: bool = True

    @property
    def visual(self) -> bool:
        return self.vds or self.vhs

    @property
    def textual(self) -> bool:
        return self.tds or self.ths

    def label(self) -> str:
        enabled = [name.upper() for name in ("vds", "vhs", "tds", "ths") if getattr(self, name)]
        return "+".join(enabled) if enabled else "none"


@dataclass(frozen=True)
class ReasoningToggles:
    """Graph reasoning (True) or plain mean pooling (False) per modality."""

    visual_graph: bool = True
    textual_graph: bool = True

    def label(self) -> str:
        visual = "VGR" if self.visual_graph else "VMP"
        textual = "TGR" if self.textual_graph else "TMP"
        return f"{visual}+{textual}"


@dataclass(frozen=True)
class RunConfig:
    d_frame: int = constants.D_FRAME
    d_roi: int = constants.D_ROI
    d_model: int = constants.D_MODEL
    vocab: VocabConfig = field(default_factory=VocabConfig)
    pairs: int = constants.PAIRS
    frames_per_video: int = constants.FRAMES_PER_VIDEO
    noise_sigma: float = constants.NOISE_SIGMA
    distractors_per_frame: int = constants.DISTRACTORS_PER_FRAME
    conf_threshold: float = constants.CONF_THRESHOLD
    seed: int = 0
    top_k: int = constants.TOP_K
    num_roles: int = constants.NUM_ROLES
    max_text_len: int = constants.MAX_TEXT_LEN
    max_frames: int = constants.MAX_FRAMES
    raw_affinity: bool = False
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    components: ComponentToggles = field(default_factory=ComponentToggles)
    reasoning: ReasoningToggles = field(default_factory=ReasoningToggles)

    def validate(self) -> None:
        for name in ("d_frame", "d_roi", "d_model", "pairs", "frames_per_video", "top_k", "num_roles"):
            value = getattr(self, name)
            if value < 1:
                raise ConfigError(f"{name}: must be >= 1, got {value}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma: must be >= 0, got {self.noise_sigma}")
        if self.distractors_per_frame < 0:
            raise ConfigError(f"distractors_per_frame: must be >= 0, got {self.distractors_per_frame}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be >= 0, got {self.seed}")
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ConfigError(f"conf_threshold: must be in [0, 1], got {self.conf_threshold}")
        if self.max_text_len < 2:
            raise ConfigError(f"max_text_len: must be >= 2 (one token plus EOS), got {self.max_text_len}")
        if self.max_frames < self.frames_per_video:
            raise ConfigError(
                f"max_frames: must be >= frames_per_video ({self.frames_per_video}), got {self.max_frames}"
            )
        self.vocab.validate()
        self.loss.validate()
        self.train.validate()

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    @property
    def uses_visual_semantics(self) -> bool:
        return self.loss.alpha < 1.0 and self.components.visual

    @property
    def uses_textual_semantics(self) -> bool:
        return self.loss.alpha < 1.0 and self.components.textual

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["vocab"] = self.vocab.to_dict()
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, raw: Any) -> RunConfig:
        config = _build(cls, raw, "")
        config.validate()
        return config

    def config_hash(self) -> str:
        return _digest(self.to_dict())

    def dims_hash(self) -> str:
        data = self.to_dict()
        return _digest({name: data[name] for name in FIXTURE_DIM_FIELDS})


_SECTIONS: dict[str, type] = {
    "vocab": VocabConfig,
    "loss": LossConfig,
    "train": TrainConfig,
    "components": ComponentToggles,
    "reasoning": ReasoningToggles,
}


def _digest(data: dict[str, Any]) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _vocab_entry_to_json(entry: VocabEntry) -> int | list[int]:
    return entry if isinstance(entry, int) else list(entry)


def _coerce(value: Any, default: Any, where: str) -> Any:
    """Checks a JSON value against the type of the field's default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool) and not where.startswith("vocab."):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def _coerce_vocab_entry(value: Any, where: str) -> VocabEntry:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if (
        isinstance(value, list | tuple)
        and len(value) == 2
        and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        return (value[0], value[1])
    raise ConfigError(f"{where}: expected a count or a [start, stop) pair, got {value!r}")


def _build(cls: type, raw: Any, prefix: str) -> Any:
    section = prefix.rstrip(".") or "config"
    if not isinstance(raw, dict):
        raise ConfigError(f"{section}: expected a JSON object, got {type(raw).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"{prefix}{unknown[0]}: unknown field")

    defaults = cls()
    kwargs: dict[str, Any] = {}
    for name, value in raw.items():
        where = f"{prefix}{name}"
        if name in _SECTIONS and not prefix:
            kwargs[name] = _build(_SECTIONS[name], value, f"{name}.")
        elif cls is VocabConfig:
            kwargs[name] = _coerce_vocab_entry(value, where)
        else:
            kwargs[name] = _coerce(value, getattr(defaults, name), where)
    return cls(**kwargs)


def seed_override() -> int | None:
    """HISE_SEED from the environment (or a .env file), if set."""
    load_dotenv()
    raw = os.getenv(constants.SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return None
    try:
        seed = int(raw.strip())
    except ValueError:
        raise ConfigError(f"{constants.SEED_ENV_VAR}: expected an integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"{constants.SEED_ENV_VAR}: must be >= 0, got {seed}")
    return seed


def log_level_from_env(default: str = "INFO") -> str:
    load_dotenv()
    return os.getenv(constants.LOG_LEVEL_ENV_VAR, default)


def load_run_config(source: str | Path, *, env_seed: bool = True) -> RunConfig:
    """Reads a config file (or bundled preset name), validates it and applies HISE_SEED."""
    path = resolve_config_path(source)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: {path} is not valid JSON (line {e.lineno}: {e.msg})") from None

    config = RunConfig.from_dict(raw)
    seed = seed_override() if env_seed else None
    if seed is not None and seed != config.seed:
        config = dataclasses.replace(config, seed=seed)
    return config
