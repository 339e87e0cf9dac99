"""Finite-difference checks for every catalog op and every composite model path.

Each check builds a random scalar function `f(tape, x)` and its input from a seeded
generator; the suite reports the worst relative error per check over all trials.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from functools import cache

import numpy as np

from hise.config import RunConfig, load_run_config
from hise.data.records import DatasetSplit
from hise.data.synthetic import generate_synthetic
from hise.errors import GradientCheckError
from hise.model.embed import embed_base_batch, embed_batch, fuse
from hise.model.encoders import encode_text_global, encode_video_global
from hise.model.params import ModelParams, init_params
from hise.model.tse import rgcn_layer, textual_semantics
from hise.model.vse import affinity_matrix, gcn_layer, visual_semantics
from hise.numcore import Array, DiffValue, ParamBinding, Tape, finite_difference_check
from hise.numcore import functional as F
from hise.training.memory import MemoryBank
from hise.training.objective import bank_hal_loss, hal_loss, infonce_loss, total_objective

logger = logging.getLogger(__name__)

OP_TOLERANCE = 1e-4
END_TO_END_TOLERANCE = 1e-3
STEP = 1e-5
END_TO_END_STEP = 1e-4
DEFAULT_TRIALS = 100
MAX_DIM = 5

ScalarFn = Callable[[Tape, DiffValue], DiffValue]
Builder = Callable[[np.random.Generator, int], tuple[ScalarFn, Array]]


@dataclass(frozen=True)
class GradCheck:
    name: str
    build: Builder
    tolerance: float = OP_TOLERANCE
    step: float = STEP


CHECKS: list[GradCheck] = []


def gradcheck(
    name: str, *, tolerance: float = OP_TOLERANCE, step: float = STEP
) -> Callable[[Builder], Builder]:
    def decorator(build: Builder) -> Builder:
        CHECKS.append(GradCheck(name=name, build=build, tolerance=tolerance, step=step))
        return build

    return decorator


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def project(value: DiffValue, weights: Array) -> DiffValue:
    """A scalar that depends on every entry of `value`."""
    return F.sum_all(F.multiply(value, F.constant_like(value, weights)))


def _normal(rng: np.random.Generator, rows: int, cols: int) -> Array:
    return rng.standard_normal((rows, cols))


def _dims(rng: np.random.Generator, count: int = 2) -> list[int]:
    return [int(d) for d in rng.integers(1, MAX_DIM + 1, size=count)]


def _away_from_zero(rng: np.random.Generator, rows: int, cols: int) -> Array:
    x = _normal(rng, rows, cols)
    return np.sign(x) * (np.abs(x) + 0.1)


def _binary(
    rng: np.random.Generator,
    trial: int,
    a: Array,
    b: Array,
    combine: Callable[[DiffValue, DiffValue], DiffValue],
) -> tuple[ScalarFn, Array]:
    """Alternates which operand is the leaf so both gradients get checked."""
    leaf_first = trial % 2 == 0
    scratch = Tape()
    weights = rng.standard_normal(combine(scratch.constant(a), scratch.constant(b)).shape)
    other = b if leaf_first else a

    def f(tape: Tape, x: DiffValue) -> DiffValue:
        fixed = tape.constant(other)
        return project(combine(x, fixed) if leaf_first else combine(fixed, x), weights)

    return f, (a if leaf_first else b)


def _unary(
    rng: np.random.Generator, x: Array, apply: Callable[[DiffValue], DiffValue], out_shape: tuple[int, int]
) -> tuple[ScalarFn, Array]:
    weights = rng.standard_normal(out_shape)

    def f(tape: Tape, leaf: DiffValue) -> DiffValue:
        return project(apply(leaf), weights)

    return f, x


# -- catalog ops ---------------------------------------------------------------


@gradcheck("op.matmul")
def _check_matmul(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, k, n = _dims(rng, 3)
    return _binary(rng, trial, _normal(rng, m, k), _normal(rng, k, n), F.matmul)


@gradcheck("op.add")
def _check_add(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    # second operand is a single row broadcast over the first
    m, n = _dims(rng)
    other_rows = 1 if trial % 4 < 2 else m
    return _binary(rng, trial, _normal(rng, m, n), _normal(rng, other_rows, n), F.add)


@gradcheck("op.multiply")
def _check_multiply(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _binary(rng, trial, _normal(rng, m, n), _normal(rng, m, n), F.multiply)


@gradcheck("op.concat_columns")
def _check_concat(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, left, right = _dims(rng, 3)
    a, b = _normal(rng, m, left), _normal(rng, m, right)
    return _binary(rng, trial, a, b, lambda x, y: F.concat_columns([x, y]))


@gradcheck("op.scale")
def _check_scale(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    factor = float(rng.uniform(-2.0, 2.0))
    m, n = _dims(rng)
    return _unary(rng, _normal(rng, m, n), lambda x: F.scale(x, factor), (m, n))


@gradcheck("op.relu")
def _check_relu(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _away_from_zero(rng, m, n), F.relu, (m, n))


@gradcheck("op.mean_rows")
def _check_mean_rows(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _normal(rng, m, n), F.mean_rows, (1, n))


@gradcheck("op.sum_all")
def _check_sum_all(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _normal(rng, m, n), F.sum_all, (1, 1))


@gradcheck("op.row_softmax")
def _check_row_softmax(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _normal(rng, m, n), F.row_softmax, (m, n))


@gradcheck("op.l2_normalize_rows")
def _check_l2_normalize(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _away_from_zero(rng, m, n), F.l2_normalize_rows, (m, n))


@gradcheck("op.transpose")
def _check_transpose(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, _normal(rng, m, n), F.transpose, (n, m))


@gradcheck("op.log")
def _check_log(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, rng.uniform(0.5, 2.0, (m, n)), F.log, (m, n))


@gradcheck("op.exp")
def _check_exp(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    return _unary(rng, rng.uniform(-1.0, 1.0, (m, n)), F.exp, (m, n))


@gradcheck("op.select_row")
def _check_select_row(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    m, n = _dims(rng)
    index = int(rng.integers(0, m))
    return _unary(rng, _normal(rng, m, n), lambda x: F.select_row(x, index), (1, n))


# -- composite paths -----------------------------------------------------------


@cache
def _tiny() -> tuple[RunConfig, DatasetSplit]:
    config = load_run_config("tiny", env_seed=False)
    return config, generate_synthetic(config)


def _through_param(
    params: ModelParams, name: str, forward: Callable[[ParamBinding], DiffValue], weights: Array | None
) -> tuple[ScalarFn, Array]:
    """Differentiates `forward` with respect to the single parameter `name`; the rest are constants."""

    def f(tape: Tape, leaf: DiffValue) -> DiffValue:
        binding = ParamBinding(tape, params, trainable=False)
        binding.override(name, leaf)
        out = forward(binding)
        return out if weights is None else project(out, weights)

    return f, params[name]


@gradcheck("encoder.text")
def _check_text_encoder(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    config, split = _tiny()
    params = init_params(config, seed=trial)
    text = split.texts[trial % len(split.texts)]
    name = ("text.w_q", "text.w_v", "text.w_out", "text.token_embedding")[trial % 4]
    weights = rng.standard_normal((1, config.d_model))
    return _through_param(params, name, lambda p: encode_text_global(text.tokens, p), weights)


@gradcheck("encoder.video")
def _check_video_encoder(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    config, split = _tiny()
    params = init_params(config, seed=trial)
    video = split.videos[trial % len(split.videos)]
    name = ("video.frame_projection", "video.w_k", "video.w_out", "video.position")[trial % 4]
    weights = rng.standard_normal((1, config.d_model))
    return _through_param(params, name, lambda p: encode_video_global(video.frames, p), weights)


@gradcheck("tse.rgcn_layer")
def _check_rgcn(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    n, d = _dims(rng)
    relations = 3
    adjacency = []
    for _ in range(relations):
        edges = (rng.random((n, n)) < 0.4).astype(float)
        sums = edges.sum(axis=1, keepdims=True)
        adjacency.append(np.divide(edges, sums, out=np.zeros_like(edges), where=sums > 0))
    weights = [_normal(rng, d, d) for _ in range(relations)]
    projection = rng.standard_normal((n, d))

    def f(tape: Tape, nodes: DiffValue) -> DiffValue:
        return project(rgcn_layer(nodes, adjacency, [tape.constant(w) for w in weights]), projection)

    return f, _normal(rng, n, d)


@gradcheck("tse.textual_semantics")
def _check_textual_semantics(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    config, split = _tiny()
    params = init_params(config, seed=trial)
    text = split.texts[trial % len(split.texts)]
    name = ("tse.w_rel.0", "tse.w_rel.1", f"tse.w_rel.{config.num_roles}", "occurrence.w_out")[trial % 4]
    weights = rng.standard_normal((1, config.d_model))
    return _through_param(params, name, lambda p: textual_semantics(text, p, config.num_roles).ts, weights)


@gradcheck("vse.affinity_matrix")
def _check_affinity(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    k, d = _dims(rng)
    w_query, w_key = _normal(rng, d, d), _normal(rng, d, d)
    projection = rng.standard_normal((k, k))

    def f(tape: Tape, nodes: DiffValue) -> DiffValue:
        return project(affinity_matrix(nodes, tape.constant(w_query), tape.constant(w_key)), projection)

    return f, _normal(rng, k, d)


@gradcheck("vse.gcn_layer")
def _check_gcn(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    k, d = _dims(rng)
    affinity = rng.random((k, k))
    affinity /= affinity.sum(axis=1, keepdims=True)
    weight = _normal(rng, d, d)
    projection = rng.standard_normal((k, d))

    def f(tape: Tape, nodes: DiffValue) -> DiffValue:
        return project(gcn_layer(nodes, tape.constant(affinity), tape.constant(weight)), projection)

    return f, _normal(rng, k, d)


@gradcheck("vse.visual_semantics")
def _check_visual_semantics(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    config, split = _tiny()
    params = init_params(config, seed=trial)
    video = split.videos[trial % len(split.videos)]
    name = ("vse.gcn_w", "vse.affinity_query", "vse.node_w", "vse.concept_w")[trial % 4]
    weights = rng.standard_normal((1, config.d_model))

    def forward(p: ParamBinding) -> DiffValue:
        semantics = visual_semantics(video, p, top_k=config.top_k, conf_threshold=config.conf_threshold)
        if semantics.vs is None:
            raise GradientCheckError(f"video {video.video_id}: no visual semantics")
        return semantics.vs

    return _through_param(params, name, forward, weights)


@gradcheck("fusion")
def _check_fusion(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    alpha = float(rng.uniform(0.5, 0.95))
    semantic = _normal(rng, 1, 4)
    weights = rng.standard_normal((1, 4))

    def f(tape: Tape, leaf: DiffValue) -> DiffValue:
        base = F.l2_normalize_rows(leaf)
        return project(fuse(base, tape.constant(semantic), alpha), weights)

    return f, _away_from_zero(rng, 1, 4)


@gradcheck("objective.hal_loss")
def _check_hal(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    if trial % 2 == 0:
        def f(tape: Tape, s: DiffValue) -> DiffValue:
            return hal_loss(s, margin=0.3, temperature=0.1)

        return f, rng.uniform(-0.9, 0.9, (4, 4))

    # 5 videos x 3 texts: rows share positives, every column keeps one
    row_positives = [0, 1, 2, 0, 1]
    col_positives = [0, 1, 2]

    def g(tape: Tape, s: DiffValue) -> DiffValue:
        return hal_loss(s, row_positives, col_positives, margin=0.3, temperature=0.1)

    return g, rng.uniform(-0.9, 0.9, (5, 3))


@gradcheck("objective.bank_hal_loss")
def _check_bank_hal(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    q, d = 3, 4
    positives = rng.standard_normal((q, d))
    positives /= np.linalg.norm(positives, axis=1, keepdims=True)
    bank = rng.standard_normal((5, d))
    bank /= np.linalg.norm(bank, axis=1, keepdims=True)

    def f(tape: Tape, leaf: DiffValue) -> DiffValue:
        return bank_hal_loss(F.l2_normalize_rows(leaf), positives, bank, margin=0.3, temperature=0.1)

    return f, _away_from_zero(rng, q, d)


@gradcheck("objective.infonce_loss")
def _check_infonce(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    def f(tape: Tape, s: DiffValue) -> DiffValue:
        return infonce_loss(s, temperature=0.5)

    return f, rng.uniform(-1.0, 1.0, (4, 4))


_END_TO_END_PARAMS = (
    "text.w_q",
    "video.w_out",
    "tse.w_rel.0",
    "vse.gcn_w",
    "vse.affinity_key",
    "occurrence.w_v",
    "vse.appearance_w",
)


@gradcheck("objective.total_objective", tolerance=END_TO_END_TOLERANCE, step=END_TO_END_STEP)
def _check_total_objective(rng: np.random.Generator, trial: int) -> tuple[ScalarFn, Array]:
    config, split = _tiny()
    params = init_params(config, seed=trial)
    pairs = split.pairs()
    chosen = rng.choice(len(pairs), size=2, replace=False)
    videos = [pairs[i][0] for i in chosen]
    texts = [pairs[i][1] for i in chosen]

    momentum = init_params(config, seed=trial + 1)
    key_tape = Tape()
    key_videos, key_texts = embed_base_batch(videos, texts, ParamBinding(key_tape, momentum, trainable=False))
    bank_rows = rng.standard_normal((3, config.d_model))
    bank_rows /= np.linalg.norm(bank_rows, axis=1, keepdims=True)
    video_bank = MemoryBank(config.train.bank_capacity, config.d_model, bank_rows)
    text_bank = MemoryBank(config.train.bank_capacity, config.d_model, bank_rows[::-1].copy())
    name = _END_TO_END_PARAMS[trial % len(_END_TO_END_PARAMS)]
    # a larger lambda_bank keeps the bank terms visible in the total
    loss = replace(config.loss, lambda_bank=1.0)

    def forward(p: ParamBinding) -> DiffValue:
        batch = embed_batch(videos, texts, p, config)
        return total_objective(batch, key_videos.data, key_texts.data, video_bank, text_bank, loss).total

    return _through_param(params, name, forward, None)


def run_check(check: GradCheck, seed: int, trials: int) -> CheckResult:
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        f, x = check.build(rng, trial)
        try:
            error = finite_difference_check(f, x, check.step)
        except GradientCheckError as e:
            logger.warning("%s trial %d: %s", check.name, trial, e)
            error = float("inf")
        worst = max(worst, error)
    return CheckResult(name=check.name, max_error=worst, tolerance=check.tolerance, trials=trials)


def run_suite(
    seed: int = 0, trials: int = DEFAULT_TRIALS, names: list[str] | None = None
) -> list[CheckResult]:
    """Runs every registered check (or those named) and returns one result per check."""
    selected = [check for check in CHECKS if names is None or check.name in names]
    results = []
    for check in selected:
        result = run_check(check, seed, trials)
        level = logging.DEBUG if result.passed else logging.WARNING
        logger.log(
            level, "%s: max error %.3e (tolerance %.0e)", check.name, result.max_error, check.tolerance
        )
        results.append(result)
    return results
