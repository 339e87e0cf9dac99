"""Base encoders: one single-head attention layer with residual over token or frame rows.

Text: tokens + EOS -> embeddings + positions -> attention -> EOS row -> output projection.
Video: frames -> projection + positions -> attention -> mean over rows -> output projection.
Both outputs are unit-norm 1 x d_model rows.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from hise.errors import EncoderInputError
from hise.numcore import Array, DiffValue, ParamBinding
from hise.numcore import functional as F


def one_hot(ids: Sequence[int], rows: int) -> Array:
    matrix = np.zeros((len(ids), rows))
    matrix[np.arange(len(ids)), list(ids)] = 1.0
    return matrix


def token_rows(ids: Sequence[int], table: DiffValue) -> DiffValue:
    """Rows of `table` for `ids`, as a differentiable selection."""
    return F.matmul(F.constant_like(table, one_hot(ids, table.shape[0])), table)


def leading_rows(table: DiffValue, count: int) -> DiffValue:
    return F.matmul(F.constant_like(table, np.eye(count, table.shape[0])), table)


def attention_layer(x: DiffValue, w_q: DiffValue, w_k: DiffValue, w_v: DiffValue) -> DiffValue:
    """softmax((X Wq)(X Wk)^T / sqrt(d)) (X Wv) + X."""
    d = x.shape[1]
    queries = F.matmul(x, w_q)
    keys = F.matmul(x, w_k)
    values = F.matmul(x, w_v)
    weights = F.row_softmax(F.scale(F.matmul(queries, F.transpose(keys)), 1.0 / math.sqrt(d)))
    return F.add(F.matmul(weights, values), x)


def eos_token(params: ParamBinding, prefix: str = "text") -> int:
    return params.arrays[f"{prefix}.token_embedding"].shape[0] - 1


def encode_text_global(tokens: Sequence[int], params: ParamBinding, prefix: str = "text") -> DiffValue:
    """Unit-norm text vector read from the appended EOS position.

    `prefix` selects the encoder: "text" for the base encoder (also used for captions),
    "occurrence" for the role graph's own encoder.
    """
    eos = eos_token(params, prefix)
    max_len = params.arrays[f"{prefix}.position"].shape[0]
    if not tokens:
        raise EncoderInputError(f"{prefix} encoder: empty token sequence")
    if len(tokens) > max_len - 1:
        raise EncoderInputError(
            f"{prefix} encoder: {len(tokens)} tokens plus EOS exceed max_text_len {max_len}"
        )
    bad = [t for t in tokens if not 0 <= t < eos]
    if bad:
        raise EncoderInputError(f"{prefix} encoder: token id {bad[0]} outside [0, {eos})")

    ids = [*tokens, eos]
    x = F.add(
        token_rows(ids, params[f"{prefix}.token_embedding"]),
        leading_rows(params[f"{prefix}.position"], len(ids)),
    )
    y = attention_layer(x, params[f"{prefix}.w_q"], params[f"{prefix}.w_k"], params[f"{prefix}.w_v"])
    eos_row = F.select_row(y, len(ids) - 1)
    return F.l2_normalize_rows(F.matmul(eos_row, params[f"{prefix}.w_out"]))


def encode_video_global(frames: Array, params: ParamBinding) -> DiffValue:
    """Unit-norm video vector: mean over post-attention frame rows."""
    max_frames = params.arrays["video.position"].shape[0]
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise EncoderInputError("video encoder: no frames")
    if frames.shape[0] > max_frames:
        raise EncoderInputError(f"video encoder: {frames.shape[0]} frames exceed max_frames {max_frames}")

    projection = params["video.frame_projection"]
    x = F.add(
        F.matmul(F.constant_like(projection, frames), projection),
        leading_rows(params["video.position"], frames.shape[0]),
    )
    y = attention_layer(x, params["video.w_q"], params["video.w_k"], params["video.w_v"])
    return F.l2_normalize_rows(F.matmul(F.mean_rows(y), params["video.w_out"]))
