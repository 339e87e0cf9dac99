"""All learnable arrays of the model, keyed by dotted name.

Groups: `text.*` (base text encoder, also encodes video captions), `video.*` (base video
encoder), `occurrence.*` (the role graph's own text encoder), `tse.*` (one R-GCN weight per
relation, the last one reserved for action -> occurrence edges) and `vse.*` (entity node
MLPs, affinity embeddings, GCN weight). Every group is always initialized, so two configs
with the same dims and seed share identical base encoders.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from hise.config import RunConfig
from hise.errors import ShapeError
from hise.numcore import Array

TEXT_ENCODERS = ("text", "occurrence")


def relation_weight_name(relation: int) -> str:
    return f"tse.w_rel.{relation}"


def param_shapes(config: RunConfig) -> dict[str, tuple[int, int]]:
    d = config.d_model
    table_rows = config.vocab_size + 1  # last row is EOS
    shapes: dict[str, tuple[int, int]] = {}
    for prefix in TEXT_ENCODERS:
        shapes[f"{prefix}.token_embedding"] = (table_rows, d)
        shapes[f"{prefix}.position"] = (config.max_text_len, d)
        for name in ("w_q", "w_k", "w_v", "w_out"):
            shapes[f"{prefix}.{name}"] = (d, d)
    shapes["video.frame_projection"] = (config.d_frame, d)
    shapes["video.position"] = (config.max_frames, d)
    for name in ("w_q", "w_k", "w_v", "w_out"):
        shapes[f"video.{name}"] = (d, d)
    for relation in range(config.num_roles + 1):
        shapes[relation_weight_name(relation)] = (d, d)
    shapes.update(
        {
            "vse.concept_w": (d, d),
            "vse.concept_b": (1, d),
            "vse.appearance_w": (config.d_roi, d),
            "vse.appearance_b": (1, d),
            "vse.position_w": (4, d),
            "vse.position_b": (1, d),
            "vse.node_w": (2 * d, d),
            "vse.node_b": (1, d),
            "vse.affinity_query": (d, d),
            "vse.affinity_key": (d, d),
            "vse.gcn_w": (d, d),
        }
    )
    return shapes


def _init_scale(name: str, shape: tuple[int, int]) -> float:
    if name.endswith("_b"):
        return 0.0
    if name.endswith(".position"):
        return 0.1
    if name.startswith("tse.w_rel") or name == "vse.gcn_w":
        # message passing starts close to the residual path
        return 0.1 / math.sqrt(shape[0])
    if name.endswith("token_embedding"):
        return 1.0 / math.sqrt(shape[1])
    return 1.0 / math.sqrt(shape[0])


class ModelParams(Mapping[str, Array]):
    """Name -> array mapping; updates produce new instances, arrays are never shared between copies."""

    def __init__(self, arrays: Mapping[str, Array]) -> None:
        self.arrays: dict[str, Array] = {
            name: np.asarray(value, dtype=np.float64) for name, value in arrays.items()
        }

    def __getitem__(self, name: str) -> Array:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def __len__(self) -> int:
        return len(self.arrays)

    def copy(self) -> ModelParams:
        return ModelParams({name: value.copy() for name, value in self.arrays.items()})

    def replace(self, updated: Mapping[str, Array]) -> ModelParams:
        unknown = sorted(set(updated) - set(self.arrays))
        if unknown:
            raise ShapeError(f"unknown parameter(s): {', '.join(unknown)}")
        merged = dict(self.arrays)
        for name, value in updated.items():
            if value.shape != merged[name].shape:
                raise ShapeError(f"{name}: expected shape {merged[name].shape}, got {value.shape}")
            merged[name] = value
        return ModelParams(merged)

    def check_mirrors(self, other: Mapping[str, Array]) -> None:
        """Raises ShapeError unless `other` has exactly the same names and shapes."""
        if set(self.arrays) != set(other):
            missing = sorted(set(self.arrays) ^ set(other))
            raise ShapeError(f"parameter sets differ: {', '.join(missing)}")
        for name, value in self.arrays.items():
            if other[name].shape != value.shape:
                raise ShapeError(f"{name}: shapes differ ({value.shape} vs {other[name].shape})")


def init_params(config: RunConfig, seed: int | None = None) -> ModelParams:
    """Deterministic in (dims, seed); draws every group in a fixed order."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    arrays: dict[str, Array] = {}
    for name, shape in param_shapes(config).items():
        scale = _init_scale(name, shape)
        arrays[name] = scale * rng.standard_normal(shape) if scale else np.zeros(shape)
    return ModelParams(arrays)
