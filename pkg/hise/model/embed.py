"""Base, semantic and fused embeddings for videos and texts.

Each modality's semantic vector is the mean of its enabled components (VDS/VHS for video,
TDS/THS for text); a modality with no enabled component, or alpha == 1, keeps its base
embedding unchanged.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from hise.config import RunConfig
from hise.data.records import TextRecord, VideoRecord
from hise.model.encoders import encode_text_global, encode_video_global
from hise.model.tse import textual_semantics
from hise.model.vse import visual_semantics
from hise.numcore import DiffValue, ParamBinding
from hise.numcore import functional as F


def fuse(base: DiffValue, semantic: DiffValue | None, alpha: float) -> DiffValue:
    """l2-normalized alpha * base + (1 - alpha) * semantic; `base` itself at alpha == 1."""
    if semantic is None or alpha == 1.0:
        return base
    return F.l2_normalize_rows(F.add(F.scale(base, alpha), F.scale(semantic, 1.0 - alpha)))


@dataclass(frozen=True)
class Embedding:
    base: DiffValue
    fused: DiffValue


def video_semantic_vector(video: VideoRecord, params: ParamBinding, config: RunConfig) -> DiffValue | None:
    if not config.uses_visual_semantics:
        return None
    semantics = visual_semantics(
        video,
        params,
        top_k=config.top_k,
        conf_threshold=config.conf_threshold,
        graph_reasoning=config.reasoning.visual_graph,
        normalize_affinity=not config.raw_affinity,
        discrete=config.components.vds,
        holistic=config.components.vhs,
    )
    return semantics.vs


def text_semantic_vector(text: TextRecord, params: ParamBinding, config: RunConfig) -> DiffValue | None:
    if not config.uses_textual_semantics:
        return None
    semantics = textual_semantics(
        text, params, config.num_roles, graph_reasoning=config.reasoning.textual_graph
    )
    enabled = []
    if config.components.tds:
        enabled.append(semantics.tds)
    if config.components.ths:
        enabled.append(semantics.ths)
    if len(enabled) == 2:
        return semantics.ts
    return enabled[0]


def embed_video(video: VideoRecord, params: ParamBinding, config: RunConfig) -> Embedding:
    base = encode_video_global(video.frames, params)
    semantic = video_semantic_vector(video, params, config)
    return Embedding(base=base, fused=fuse(base, semantic, config.loss.alpha))


def embed_text(text: TextRecord, params: ParamBinding, config: RunConfig) -> Embedding:
    base = encode_text_global(text.tokens, params, prefix="text")
    semantic = text_semantic_vector(text, params, config)
    return Embedding(base=base, fused=fuse(base, semantic, config.loss.alpha))


@dataclass(frozen=True)
class BatchEmbeddings:
    """B x d_model blocks; row i of the video blocks pairs with row i of the text blocks."""

    video_base: DiffValue
    text_base: DiffValue
    video_fused: DiffValue
    text_fused: DiffValue


def embed_batch(
    videos: Sequence[VideoRecord], texts: Sequence[TextRecord], params: ParamBinding, config: RunConfig
) -> BatchEmbeddings:
    video_rows = [embed_video(video, params, config) for video in videos]
    text_rows = [embed_text(text, params, config) for text in texts]
    return BatchEmbeddings(
        video_base=F.stack_rows([e.base for e in video_rows]),
        text_base=F.stack_rows([e.base for e in text_rows]),
        video_fused=F.stack_rows([e.fused for e in video_rows]),
        text_fused=F.stack_rows([e.fused for e in text_rows]),
    )


def embed_base_batch(
    videos: Sequence[VideoRecord], texts: Sequence[TextRecord], params: ParamBinding
) -> tuple[DiffValue, DiffValue]:
    """Base embeddings only (what the momentum encoders produce for the banks)."""
    video_base = F.stack_rows([encode_video_global(video.frames, params) for video in videos])
    text_base = F.stack_rows([encode_text_global(text.tokens, params, prefix="text") for text in texts])
    return video_base, text_base
