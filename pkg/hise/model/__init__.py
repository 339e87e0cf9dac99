from hise.model.embed import (
    BatchEmbeddings,
    Embedding,
    embed_base_batch,
    embed_batch,
    embed_text,
    embed_video,
    fuse,
)
from hise.model.params import ModelParams, init_params, param_shapes

__all__ = [
    "BatchEmbeddings",
    "Embedding",
    "ModelParams",
    "embed_base_batch",
    "embed_batch",
    "embed_text",
    "embed_video",
    "fuse",
    "init_params",
    "param_shapes",
]
