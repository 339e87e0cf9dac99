"""Rank-based retrieval metrics over a videos x texts similarity matrix.

Direction "t2v": every text (column) queries the videos (rows). Direction "v2t": every
video (row) queries the texts (columns). `truth[i]` is the index of query i's true item.
Equal scores rank by item index ascending.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Literal

import numpy as np

from hise.errors import ShapeError
from hise.numcore import Array

Direction = Literal["t2v", "v2t"]
DIRECTIONS: tuple[Direction, ...] = ("t2v", "v2t")


def similarity_matrix(videos: Array, texts: Array) -> Array:
    """Cosine similarity of every video row with every text row."""
    videos = np.atleast_2d(np.asarray(videos, dtype=np.float64))
    texts = np.atleast_2d(np.asarray(texts, dtype=np.float64))
    if videos.shape[1] != texts.shape[1]:
        raise ShapeError(f"similarity_matrix: video width {videos.shape[1]} vs text width {texts.shape[1]}")
    video_norms = np.linalg.norm(videos, axis=1, keepdims=True)
    text_norms = np.linalg.norm(texts, axis=1, keepdims=True)
    video_unit = np.divide(videos, video_norms, out=np.zeros_like(videos), where=video_norms > 0)
    text_unit = np.divide(texts, text_norms, out=np.zeros_like(texts), where=text_norms > 0)
    return video_unit @ text_unit.T


def _query_scores(similarity: Array, direction: Direction) -> Array:
    """One row of item scores per query."""
    if direction == "t2v":
        return similarity.T
    if direction == "v2t":
        return similarity
    raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")


def rank_positions(similarity: Array, truth: Sequence[int], direction: Direction) -> Array:
    """1-based rank of each query's true item: 1 + items scoring higher + tied items with a lower index."""
    scores = _query_scores(np.asarray(similarity, dtype=np.float64), direction)
    truth_index = np.asarray(truth, dtype=np.int64)
    if truth_index.shape != (scores.shape[0],):
        queries = scores.shape[0]
        raise ShapeError(f"rank_positions: {truth_index.size} truths for {queries} {direction} queries")
    true_scores = scores[np.arange(scores.shape[0]), truth_index][:, None]
    items = np.arange(scores.shape[1])[None, :]
    better = (scores > true_scores) | ((scores == true_scores) & (items < truth_index[:, None]))
    return 1 + better.sum(axis=1)


def recall_at_k(similarity: Array, truth: Sequence[int], k: int, direction: Direction) -> float:
    """Percentage of queries whose true item ranks within the top k."""
    ranks = rank_positions(similarity, truth, direction)
    return 100.0 * float(np.count_nonzero(ranks <= k)) / ranks.size


def median_rank(similarity: Array, truth: Sequence[int], direction: Direction) -> float:
    """Median of true-item ranks; even counts average the two middle ranks."""
    return float(np.median(rank_positions(similarity, truth, direction)))
