"""Thin wrappers over the op catalog; composites here only chain catalog ops."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np

from hise.errors import ShapeError
from hise.numcore.tape import DiffValue


def constant_like(x: DiffValue, data: Any) -> DiffValue:
    return x.tape.constant(data)


def matmul(a: DiffValue, b: DiffValue) -> DiffValue:
    return a.tape.apply("matmul", [a, b])


def add(a: DiffValue, b: DiffValue) -> DiffValue:
    return a.tape.apply("add", [a, b])


def scale(x: DiffValue, factor: float) -> DiffValue:
    return x.tape.apply("scale", [x], factor=factor)


def sub(a: DiffValue, b: DiffValue) -> DiffValue:
    return add(a, scale(b, -1.0))


def add_scalar(x: DiffValue, c: float) -> DiffValue:
    return add(x, constant_like(x, np.full(x.shape, c)))


def concat_columns(values: Sequence[DiffValue]) -> DiffValue:
    if not values:
        raise ShapeError("concat_columns: needs at least one input")
    return values[0].tape.apply("concat_columns", list(values))


def transpose(x: DiffValue) -> DiffValue:
    return x.tape.apply("transpose", [x])


def stack_rows(values: Sequence[DiffValue]) -> DiffValue:
    """Vertical concatenation, built from transposes around concat_columns."""
    if len(values) == 1:
        return values[0]
    return transpose(concat_columns([transpose(v) for v in values]))


def relu(x: DiffValue) -> DiffValue:
    return x.tape.apply("relu", [x])


def mean_rows(x: DiffValue) -> DiffValue:
    return x.tape.apply("mean_rows", [x])


def sum_all(x: DiffValue) -> DiffValue:
    return x.tape.apply("sum_all", [x])


def row_softmax(x: DiffValue) -> DiffValue:
    return x.tape.apply("row_softmax", [x])


def l2_normalize_rows(x: DiffValue) -> DiffValue:
    return x.tape.apply("l2_normalize_rows", [x])


def multiply(a: DiffValue, b: DiffValue) -> DiffValue:
    return a.tape.apply("multiply", [a, b])


def log(x: DiffValue) -> DiffValue:
    return x.tape.apply("log", [x])


def exp(x: DiffValue) -> DiffValue:
    return x.tape.apply("exp", [x])


def select_row(x: DiffValue, index: int) -> DiffValue:
    return x.tape.apply("select_row", [x], index=index)


def row_sums(x: DiffValue) -> DiffValue:
    """(m, n) -> (m, 1)."""
    return matmul(x, constant_like(x, np.ones((x.shape[1], 1))))


def column_sums(x: DiffValue) -> DiffValue:
    """(m, n) -> (1, n)."""
    return matmul(constant_like(x, np.ones((1, x.shape[0]))), x)


def mean_of(values: Sequence[DiffValue]) -> DiffValue:
    """Elementwise mean of equally shaped values."""
    if not values:
        raise ShapeError("mean_of: needs at least one input")
    total = values[0]
    for value in values[1:]:
        total = add(total, value)
    return total if len(values) == 1 else scale(total, 1.0 / len(values))


def affine(x: DiffValue, weight: DiffValue, bias: DiffValue | None = None) -> DiffValue:
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)
