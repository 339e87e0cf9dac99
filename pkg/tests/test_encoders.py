import numpy as np
import pytest

from hise.config import RunConfig
from hise.data import DatasetSplit
from hise.errors import EncoderInputError
from hise.model import ModelParams, init_params, param_shapes
from hise.model.encoders import attention_layer, encode_text_global, encode_video_global
from hise.numcore import ParamBinding, Tape
from hise.numcore import functional as F


def _bind(params: ModelParams) -> ParamBinding:
    return ParamBinding(Tape(), params)


def test_param_shapes_reserve_an_eos_row(tiny_config: RunConfig) -> None:
    shapes = param_shapes(tiny_config)
    assert shapes["text.token_embedding"] == (tiny_config.vocab_size + 1, tiny_config.d_model)
    assert shapes["video.frame_projection"] == (tiny_config.d_frame, tiny_config.d_model)
    assert shapes["vse.appearance_w"] == (tiny_config.d_roi, tiny_config.d_model)
    assert shapes["vse.node_w"] == (2 * tiny_config.d_model, tiny_config.d_model)
    relations = [name for name in shapes if name.startswith("tse.w_rel.")]
    assert len(relations) == tiny_config.num_roles + 1


def test_init_is_deterministic(tiny_config: RunConfig) -> None:
    a, b = init_params(tiny_config, seed=4), init_params(tiny_config, seed=4)
    assert all(np.array_equal(a[name], b[name]) for name in a)
    c = init_params(tiny_config, seed=5)
    assert not np.array_equal(a["text.w_q"], c["text.w_q"])
    assert not np.any(a["vse.node_b"])


def test_text_vector_is_unit_row(tiny_params: ModelParams, tiny_split: DatasetSplit) -> None:
    out = encode_text_global(tiny_split.texts[0].tokens, _bind(tiny_params))
    assert out.shape == (1, 4)
    assert np.linalg.norm(out.data) == pytest.approx(1.0, abs=1e-12)


def test_video_vector_is_unit_row(tiny_params: ModelParams, tiny_split: DatasetSplit) -> None:
    out = encode_video_global(tiny_split.videos[0].frames, _bind(tiny_params))
    assert out.shape == (1, 4)
    assert np.linalg.norm(out.data) == pytest.approx(1.0, abs=1e-12)


def test_same_input_same_vector(tiny_params: ModelParams) -> None:
    a = encode_text_global([1, 2, 3], _bind(tiny_params))
    b = encode_text_global([1, 2, 3], _bind(tiny_params))
    np.testing.assert_array_equal(a.data, b.data)


def test_encoders_differ_by_prefix(tiny_params: ModelParams) -> None:
    base = encode_text_global([1, 2, 3], _bind(tiny_params), prefix="text")
    occurrence = encode_text_global([1, 2, 3], _bind(tiny_params), prefix="occurrence")
    assert not np.array_equal(base.data, occurrence.data)


def test_empty_tokens(tiny_params: ModelParams) -> None:
    with pytest.raises(EncoderInputError, match="empty token sequence"):
        encode_text_global([], _bind(tiny_params))


def test_too_many_tokens(tiny_params: ModelParams) -> None:
    # max_text_len 8 leaves room for 7 tokens plus EOS
    encode_text_global([0] * 7, _bind(tiny_params))
    with pytest.raises(EncoderInputError, match="8 tokens plus EOS exceed max_text_len 8"):
        encode_text_global([0] * 8, _bind(tiny_params))


def test_eos_id_is_not_a_valid_input(tiny_config: RunConfig, tiny_params: ModelParams) -> None:
    with pytest.raises(EncoderInputError, match=f"token id {tiny_config.vocab_size} outside"):
        encode_text_global([tiny_config.vocab_size], _bind(tiny_params))


def test_too_many_frames(tiny_params: ModelParams) -> None:
    with pytest.raises(EncoderInputError, match="5 frames exceed max_frames 4"):
        encode_video_global(np.ones((5, 4)), _bind(tiny_params))
    with pytest.raises(EncoderInputError, match="no frames"):
        encode_video_global(np.ones((0, 4)), _bind(tiny_params))


def test_gradient_reaches_every_text_encoder_weight(tiny_params: ModelParams) -> None:
    tape = Tape()
    params = ParamBinding(tape, tiny_params)
    out = encode_text_global([1, 2, 3], params)
    tape.backward(F.sum_all(out))
    grads = params.grads()
    for name in ("text.w_q", "text.w_k", "text.w_v", "text.w_out", "text.token_embedding"):
        assert np.any(grads[name]), name
    assert not np.any(grads["video.w_q"])


def _attend(x: np.ndarray, w_q: np.ndarray, w_k: np.ndarray, w_v: np.ndarray) -> np.ndarray:
    tape = Tape()
    return attention_layer(tape.constant(x), tape.constant(w_q), tape.constant(w_k), tape.constant(w_v)).data


def test_attention_with_zero_values_is_the_residual() -> None:
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 4))
    w_q, w_k = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
    np.testing.assert_array_equal(_attend(x, w_q, w_k, np.zeros((4, 4))), x)


def test_attention_over_one_row() -> None:
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1, 3))
    w_q, w_k, w_v = (rng.standard_normal((3, 3)) for _ in range(3))
    np.testing.assert_allclose(_attend(x, w_q, w_k, w_v), x @ w_v + x, atol=1e-12)


def test_attention_is_row_permutation_equivariant() -> None:
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 4))
    w_v = rng.standard_normal((4, 4))
    zeros = np.zeros((4, 4))
    order = rng.permutation(6)
    np.testing.assert_allclose(
        _attend(x[order], zeros, zeros, w_v), _attend(x, zeros, zeros, w_v)[order], atol=1e-12
    )


def test_video_vector_ignores_frame_order_without_positions(
    tiny_params: ModelParams, tiny_split: DatasetSplit
) -> None:
    params = tiny_params.replace({"video.position": np.zeros_like(tiny_params["video.position"])})
    frames = np.random.default_rng(3).standard_normal((4, tiny_split.d_frame))
    forward = encode_video_global(frames, _bind(params))
    reverse = encode_video_global(frames[::-1], _bind(params))
    np.testing.assert_allclose(forward.data, reverse.data, atol=1e-12)
