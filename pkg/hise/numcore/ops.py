"""The closed operation catalog: forward value plus vector-Jacobian product per op.

Every op takes 2-D float64 arrays. `forward(inputs, attrs)` returns a `Forward`;
`backward(g, inputs, out, saved, attrs)` returns one gradient per input, shaped like it.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt

from hise.errors import ShapeError, UnknownOpError

Array = npt.NDArray[np.float64]
Attrs = Mapping[str, Any]

ZERO_ROW_WARNING = "l2_normalize_rows: zero row"


class Forward(NamedTuple):
    out: Array
    saved: Any = None
    # one entry per occurrence; the tape adds them to its warning counter
    warnings: tuple[str, ...] = ()


ForwardFn = Callable[[Sequence[Array], Attrs], Forward]
BackwardFn = Callable[[Array, Sequence[Array], Array, Any, Attrs], list[Array]]


@dataclass(frozen=True)
class OpSpec:
    name: str
    arity: int | None  # None: variadic
    forward: ForwardFn
    backward: BackwardFn


OPS: dict[str, OpSpec] = {}


def op(name: str, *, arity: int | None) -> Callable[[type], type]:
    """Registers a class with static `forward`/`backward` as catalog op `name`."""

    def decorator(cls: type) -> type:
        OPS[name] = OpSpec(name=name, arity=arity, forward=cls.forward, backward=cls.backward)
        return cls

    return decorator


def get_op(name: str) -> OpSpec:
    spec = OPS.get(name)
    if spec is None:
        raise UnknownOpError(f"unknown op {name!r}; known ops: {', '.join(sorted(OPS))}")
    return spec


def check_arity(spec: OpSpec, count: int) -> None:
    if spec.arity is None:
        if count < 1:
            raise ShapeError(f"{spec.name}: needs at least one input")
    elif count != spec.arity:
        raise ShapeError(f"{spec.name}: expects {spec.arity} input(s), got {count}")


def _shape(a: Array) -> str:
    return f"{a.shape[0]}x{a.shape[1]}"


@op("matmul", arity=2)
class MatMul:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        a, b = inputs
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: inner dimensions differ ({_shape(a)} @ {_shape(b)})")
        return Forward(a @ b)

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        a, b = inputs
        return [g @ b.T, a.T @ g]


@op("add", arity=2)
class Add:
    """a + b; b may be a single row broadcast over the rows of a (bias add)."""

    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        a, b = inputs
        if a.shape != b.shape and not (b.shape[0] == 1 and b.shape[1] == a.shape[1]):
            raise ShapeError(f"add: cannot add {_shape(b)} to {_shape(a)}")
        return Forward(a + b)

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        a, b = inputs
        grad_b = g if b.shape == a.shape else g.sum(axis=0, keepdims=True)
        return [g, grad_b]


@op("scale", arity=1)
class Scale:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        return Forward(inputs[0] * float(attrs["factor"]))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        return [g * float(attrs["factor"])]


@op("concat_columns", arity=None)
class ConcatColumns:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        rows = {a.shape[0] for a in inputs}
        if len(rows) != 1:
            shapes = ", ".join(_shape(a) for a in inputs)
            raise ShapeError(f"concat_columns: row counts differ ({shapes})")
        return Forward(np.concatenate(inputs, axis=1))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        bounds = np.cumsum([a.shape[1] for a in inputs])[:-1]
        return list(np.split(g, bounds, axis=1))


@op("relu", arity=1)
class Relu:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        return Forward(np.maximum(inputs[0], 0.0))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        # subgradient 0 at 0
        return [g * (inputs[0] > 0.0)]


@op("mean_rows", arity=1)
class MeanRows:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        x = inputs[0]
        if x.shape[0] == 0:
            raise ShapeError("mean_rows: input has no rows")
        return Forward(x.mean(axis=0, keepdims=True))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        x = inputs[0]
        return [np.broadcast_to(g / x.shape[0], x.shape).copy()]


@op("sum_all", arity=1)
class SumAll:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        return Forward(np.array([[inputs[0].sum()]]))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        return [np.full(inputs[0].shape, g[0, 0])]


@op("row_softmax", arity=1)
class RowSoftmax:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        x = inputs[0]
        shifted = np.exp(x - x.max(axis=1, keepdims=True))
        return Forward(shifted / shifted.sum(axis=1, keepdims=True))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        return [out * (g - (g * out).sum(axis=1, keepdims=True))]


@op("l2_normalize_rows", arity=1)
class L2NormalizeRows:
    """Zero rows stay zero (and are counted as warnings) instead of becoming NaN."""

    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        x = inputs[0]
        norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
        zero = norms[:, 0] == 0.0
        safe = np.where(norms == 0.0, 1.0, norms)
        out = np.where(zero[:, None], 0.0, x / safe)
        return Forward(out, saved=safe, warnings=(ZERO_ROW_WARNING,) * int(zero.sum()))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        # zero rows pass no gradient
        grad = (g - out * (g * out).sum(axis=1, keepdims=True)) / saved
        zero = (inputs[0] == 0.0).all(axis=1)
        grad[zero] = 0.0
        return [grad]


@op("multiply", arity=2)
class Multiply:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        a, b = inputs
        if a.shape != b.shape:
            raise ShapeError(f"multiply: shapes differ ({_shape(a)} vs {_shape(b)})")
        return Forward(a * b)

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        a, b = inputs
        return [g * b, g * a]


@op("transpose", arity=1)
class Transpose:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        return Forward(inputs[0].T.copy())

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        return [g.T.copy()]


@op("log", arity=1)
class Log:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        with np.errstate(divide="ignore", invalid="ignore"):
            return Forward(np.log(inputs[0]))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        with np.errstate(divide="ignore", invalid="ignore"):
            return [g / inputs[0]]


@op("exp", arity=1)
class Exp:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        with np.errstate(over="ignore"):
            return Forward(np.exp(inputs[0]))

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        return [g * out]


@op("select_row", arity=1)
class SelectRow:
    @staticmethod
    def forward(inputs: Sequence[Array], attrs: Attrs) -> Forward:
        x = inputs[0]
        index = int(attrs["index"])
        if not 0 <= index < x.shape[0]:
            raise ShapeError(f"select_row: row {index} out of range for {_shape(x)}")
        return Forward(x[index : index + 1].copy())

    @staticmethod
    def backward(g: Array, inputs: Sequence[Array], out: Array, saved: Any, attrs: Attrs) -> list[Array]:
        grad = np.zeros_like(inputs[0])
        grad[int(attrs["index"])] = g[0]
        return [grad]
