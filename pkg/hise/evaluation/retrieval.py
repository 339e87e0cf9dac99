"""Inference: fused embeddings for a whole split, then both retrieval directions."""

from __future__ import annotations

import logging
from collections.abc import Mapping

import numpy as np

from hise.config import RunConfig
from hise.data.records import DatasetSplit
from hise.evaluation.metrics import similarity_matrix
from hise.evaluation.report import MetricsReport
from hise.model.embed import embed_text, embed_video
from hise.numcore import Array, ParamBinding, Tape

logger = logging.getLogger(__name__)


def embed_split(params: Mapping[str, Array], split: DatasetSplit, config: RunConfig) -> tuple[Array, Array]:
    """Fused video and text rows; each item is encoded on its own tape with parameters as constants."""
    videos = []
    for video in split.videos:
        tape = Tape()
        videos.append(embed_video(video, ParamBinding(tape, params, trainable=False), config).fused.data[0])
    texts = []
    for text in split.texts:
        tape = Tape()
        texts.append(embed_text(text, ParamBinding(tape, params, trainable=False), config).fused.data[0])
    return np.array(videos), np.array(texts)


def evaluate(params: Mapping[str, Array], split: DatasetSplit, config: RunConfig) -> MetricsReport:
    """R@1/5/10 and MdR in both directions over a bijective split."""
    split.require_bijective()
    videos, texts = embed_split(params, split, config)
    report = MetricsReport.from_similarity(similarity_matrix(videos, texts), split.text_to_video)
    logger.debug("evaluated %d pairs: R@Sum %.1f", report.count, report.r_sum)
    return report
