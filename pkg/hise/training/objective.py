"""Alignment objectives over cosine similarity matrices of unit-norm embeddings.

hal_loss:   mu/Q sum_q [log(sum_{r != pos} exp((S_qr - gamma) / mu) + 1) - log(S_q,pos + 1)]
            plus the same over columns, averaged by R.
bank terms: the row direction only, positives are momentum keys, negatives are bank rows;
            neither receives gradient.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from hise.config import LossConfig
from hise.errors import MissingPositiveError, ShapeError
from hise.model.embed import BatchEmbeddings
from hise.model.params import ModelParams
from hise.numcore import Array, DiffValue
from hise.numcore import functional as F
from hise.training.memory import MemoryBank

logger = logging.getLogger(__name__)


def _positive_mask(rows: int, cols: int, row_positives: Sequence[int], where: str) -> Array:
    if len(row_positives) != rows:
        raise MissingPositiveError(f"{where}: {len(row_positives)} positives for {rows} rows")
    mask = np.zeros((rows, cols))
    for q, r in enumerate(row_positives):
        if not 0 <= r < cols:
            raise MissingPositiveError(f"{where}: row {q} has no positive (index {r} of {cols})")
        mask[q, r] = 1.0
    return mask


def column_positives(row_positives: Sequence[int], cols: int) -> list[int]:
    """Inverts a bijective row -> column pairing."""
    inverse = [-1] * cols
    for q, r in enumerate(row_positives):
        if 0 <= r < cols:
            inverse[r] = q
    if len(row_positives) != cols:
        raise MissingPositiveError("hal_loss: row pairing is not a bijection; pass col_positives")
    missing = [r for r, q in enumerate(inverse) if q < 0]
    if missing:
        raise MissingPositiveError(f"hal_loss: column {missing[0]} has no positive; pass col_positives")
    return inverse


def _hal_direction(
    similarity: DiffValue, positive: Array, margin: float, temperature: float, axis: int
) -> DiffValue:
    """Sum over rows (axis=1) or columns (axis=0) of log(neg + 1) - log(pos + 1)."""
    reduce = F.row_sums if axis == 1 else F.column_sums
    negatives = F.exp(F.scale(F.add_scalar(similarity, -margin), 1.0 / temperature))
    negative_sum = reduce(F.multiply(negatives, F.constant_like(similarity, 1.0 - positive)))
    positive_cell = reduce(F.multiply(similarity, F.constant_like(similarity, positive)))
    return F.sum_all(F.sub(F.log(F.add_scalar(negative_sum, 1.0)), F.log(F.add_scalar(positive_cell, 1.0))))


def hal_loss(
    similarity: DiffValue,
    row_positives: Sequence[int] | None = None,
    col_positives: Sequence[int] | None = None,
    *,
    margin: float,
    temperature: float,
) -> DiffValue:
    """Hubness-aware loss over a Q x R similarity matrix, both directions.

    Defaults to diagonal positives. `col_positives` is only needed when the row pairing
    is not a bijection (Q != R).
    """
    rows, cols = similarity.shape
    if row_positives is None:
        if rows != cols:
            raise MissingPositiveError(f"hal_loss: {rows}x{cols} matrix needs explicit positives")
        row_positives = list(range(rows))
    if col_positives is None:
        col_positives = column_positives(row_positives, cols)

    row_mask = _positive_mask(rows, cols, row_positives, "hal_loss rows")
    col_mask = _positive_mask(cols, rows, col_positives, "hal_loss columns").T
    row_term = F.scale(_hal_direction(similarity, row_mask, margin, temperature, axis=1), temperature / rows)
    col_term = F.scale(_hal_direction(similarity, col_mask, margin, temperature, axis=0), temperature / cols)
    return F.add(row_term, col_term)


def bank_hal_loss(
    anchors: DiffValue, positives: Array, bank: MemoryBank | Array, *, margin: float, temperature: float
) -> DiffValue:
    """Anchor -> key direction of the hubness-aware loss against a memory bank.

    Row q's positive is `positives[q]` (the momentum key of its counterpart); every bank row
    is a negative. An empty bank leaves only the positive term.
    """
    bank_rows = bank.rows if isinstance(bank, MemoryBank) else np.asarray(bank, dtype=np.float64)
    q = anchors.shape[0]
    if positives.shape != anchors.shape:
        raise ShapeError(f"bank_hal_loss: positives {positives.shape} do not match anchors {anchors.shape}")

    positive_cos = F.row_sums(F.multiply(anchors, F.constant_like(anchors, positives)))
    per_row = F.scale(F.log(F.add_scalar(positive_cos, 1.0)), -1.0)
    if bank_rows.shape[0]:
        if bank_rows.shape[1] != anchors.shape[1]:
            raise ShapeError(f"bank_hal_loss: bank width {bank_rows.shape[1]} vs anchors {anchors.shape[1]}")
        logits = F.scale(
            F.add_scalar(F.matmul(anchors, F.constant_like(anchors, bank_rows.T)), -margin), 1.0 / temperature
        )
        negative_sum = F.row_sums(F.exp(logits))
        per_row = F.add(F.log(F.add_scalar(negative_sum, 1.0)), per_row)
    return F.scale(F.sum_all(per_row), temperature / q)


def infonce_loss(
    similarity: DiffValue, row_positives: Sequence[int] | None = None, *, temperature: float
) -> DiffValue:
    """Symmetric cross-entropy over rows and columns of S / temperature, averaged over both."""
    rows, cols = similarity.shape
    if rows != cols:
        raise ShapeError(f"infonce_loss: needs a square matrix, got {rows}x{cols}")
    if row_positives is None:
        row_positives = list(range(rows))
    mask = _positive_mask(rows, cols, row_positives, "infonce_loss")
    logits = F.scale(similarity, 1.0 / temperature)

    def direction(scores: DiffValue, positive: Array) -> DiffValue:
        picked = F.row_sums(F.multiply(F.row_softmax(scores), F.constant_like(scores, positive)))
        return F.scale(F.sum_all(F.log(picked)), -1.0 / rows)

    return F.scale(F.add(direction(logits, mask), direction(F.transpose(logits), mask.T)), 0.5)


def momentum_update(live: ModelParams, momentum: ModelParams, m: float) -> ModelParams:
    """theta_m <- m * theta_m + (1 - m) * theta for every parameter."""
    momentum.check_mirrors(live)
    return ModelParams({name: m * momentum[name] + (1.0 - m) * live[name] for name in momentum})


@dataclass(frozen=True)
class ObjectiveTerms:
    total: DiffValue
    batch: float
    video_bank: float
    text_bank: float

    def as_dict(self) -> dict[str, float]:
        return {
            "total": self.total.item(),
            "batch": self.batch,
            "video_bank": self.video_bank,
            "text_bank": self.text_bank,
        }


def batch_similarity(videos: DiffValue, texts: DiffValue) -> DiffValue:
    """Cosine similarities of unit-norm rows: videos x texts."""
    return F.matmul(videos, F.transpose(texts))


def total_objective(
    batch: BatchEmbeddings,
    momentum_videos: Array,
    momentum_texts: Array,
    video_bank: MemoryBank,
    text_bank: MemoryBank,
    config: LossConfig,
) -> ObjectiveTerms:
    """lambda_batch * HAL(fused) + lambda_bank * (HAL(video base, text bank) + HAL(text base, video bank)).

    Video anchors take the momentum key of their paired text as positive and the text bank
    as negatives, and symmetrically for texts. With kind "b-infonce" the batch term is
    InfoNCE and the bank terms are dropped. Bank terms are skipped when lambda_bank is 0.
    """
    scores = batch_similarity(batch.video_fused, batch.text_fused)
    if config.kind == "b-infonce":
        batch_term = infonce_loss(scores, temperature=config.infonce_temperature)
    else:
        batch_term = hal_loss(scores, margin=config.margin, temperature=config.temperature)
    total = F.scale(batch_term, config.lambda_batch)

    video_value = text_value = 0.0
    if config.kind == "hal" and config.lambda_bank > 0:
        video_term = bank_hal_loss(
            batch.video_base, momentum_texts, text_bank, margin=config.margin, temperature=config.temperature
        )
        text_term = bank_hal_loss(
            batch.text_base, momentum_videos, video_bank, margin=config.margin, temperature=config.temperature
        )
        total = F.add(total, F.scale(F.add(video_term, text_term), config.lambda_bank))
        video_value, text_value = video_term.item(), text_term.item()
    return ObjectiveTerms(total=total, batch=batch_term.item(), video_bank=video_value, text_bank=text_value)


def objective_summary(terms: Mapping[str, float]) -> str:
    return " ".join(f"{name}={value:.6f}" for name, value in terms.items())
