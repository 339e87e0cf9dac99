"""Recording tape for reverse-mode gradients over dense float64 matrices.

A tape is built fresh for every forward pass and never shared between threads.
Values are appended in execution order, so every record's inputs precede it and
backward is a single reverse sweep.
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from hise.errors import NonScalarRootError, ShapeError, TapeError
from hise.numcore.ops import Array, check_arity, get_op

logger = logging.getLogger(__name__)

_tape_ids = itertools.count()


def as_matrix(data: Any) -> Array:
    array = np.array(data, dtype=np.float64)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array with {array.ndim} dimensions")
    return array


class DiffValue:
    """A matrix recorded on a tape; `grad` has the shape of `data` and is filled by backward."""

    __slots__ = ("data", "grad", "tape_id", "index", "requires_grad", "tape")

    def __init__(self, data: Array, tape: Tape, index: int, requires_grad: bool) -> None:
        self.data = data
        self.grad = np.zeros_like(data)
        self.tape = tape
        self.tape_id = tape.id
        self.index = index
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.data.shape
        return rows, cols

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeError(f"item: value is {self.data.shape[0]}x{self.data.shape[1]}, not 1x1")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        kind = "var" if self.requires_grad else "const"
        rows, cols = self.data.shape
        return f"DiffValue({kind} #{self.index} {rows}x{cols} on tape {self.tape_id})"


@dataclass(frozen=True)
class Record:
    op: str
    inputs: tuple[int, ...]
    output: int
    saved: Any
    attrs: Mapping[str, Any]


class Tape:
    def __init__(self) -> None:
        self.id = next(_tape_ids)
        self.values: list[DiffValue] = []
        self.records: list[Record] = []
        self.warnings: Counter[str] = Counter()

    def _new(self, data: Any, requires_grad: bool) -> DiffValue:
        value = DiffValue(as_matrix(data), self, len(self.values), requires_grad)
        self.values.append(value)
        return value

    def variable(self, data: Any) -> DiffValue:
        """A leaf that receives a gradient."""
        return self._new(data, requires_grad=True)

    def constant(self, data: Any) -> DiffValue:
        """A leaf that never receives a gradient (bank rows, masks, momentum keys)."""
        return self._new(data, requires_grad=False)

    def apply(self, op_kind: str, inputs: Sequence[DiffValue], **attrs: Any) -> DiffValue:
        spec = get_op(op_kind)
        check_arity(spec, len(inputs))
        for value in inputs:
            if value.tape is not self:
                raise TapeError(f"{op_kind}: input {value!r} is not on tape {self.id}")

        result = spec.forward([value.data for value in inputs], attrs)
        if result.warnings:
            self.warnings.update(result.warnings)
            logger.debug("%s: %d warning(s) on tape %d", op_kind, len(result.warnings), self.id)

        out = self._new(result.out, requires_grad=any(value.requires_grad for value in inputs))
        self.records.append(
            Record(
                op=op_kind,
                inputs=tuple(value.index for value in inputs),
                output=out.index,
                saved=result.saved,
                attrs=attrs,
            )
        )
        return out

    def backward(self, root: DiffValue) -> None:
        """Fills every value's grad with d(root)/d(value); constants keep a zero grad."""
        if root.tape is not self:
            raise TapeError(f"backward: root {root!r} is not on tape {self.id}")
        if root.data.shape != (1, 1):
            rows, cols = root.data.shape
            raise NonScalarRootError(f"backward: root must be 1x1, got {rows}x{cols}")

        for value in self.values:
            value.grad = np.zeros_like(value.data)
        root.grad = np.ones((1, 1))

        for record in reversed(self.records[: self._last_record_for(root)]):
            out = self.values[record.output]
            if not out.requires_grad or not out.grad.any():
                continue
            inputs = [self.values[i] for i in record.inputs]
            spec = get_op(record.op)
            data = [value.data for value in inputs]
            grads = spec.backward(out.grad, data, out.data, record.saved, record.attrs)
            for value, grad in zip(inputs, grads, strict=True):
                if value.requires_grad:
                    value.grad = value.grad + grad

    def _last_record_for(self, root: DiffValue) -> int:
        # records after the root cannot affect it
        for position in range(len(self.records) - 1, -1, -1):
            if self.records[position].output <= root.index:
                return position + 1
        return 0


def apply(op_kind: str, inputs: Sequence[DiffValue], **attrs: Any) -> DiffValue:
    if not inputs:
        raise ShapeError(f"{op_kind}: needs at least one input")
    return inputs[0].tape.apply(op_kind, inputs, **attrs)


def backward(root: DiffValue) -> None:
    root.tape.backward(root)


class ParamBinding:
    """Binds a name -> array mapping onto a tape, creating each leaf on first use.

    `trainable=False` binds every parameter as a constant (momentum encoders).
    """

    def __init__(self, tape: Tape, arrays: Mapping[str, Array], *, trainable: bool = True) -> None:
        self.tape = tape
        self.arrays = arrays
        self.trainable = trainable
        self._bound: dict[str, DiffValue] = {}

    def __getitem__(self, name: str) -> DiffValue:
        value = self._bound.get(name)
        if value is None:
            if name not in self.arrays:
                raise KeyError(f"unknown parameter {name!r}")
            data = self.arrays[name]
            value = self.tape.variable(data) if self.trainable else self.tape.constant(data)
            self._bound[name] = value
        return value

    def override(self, name: str, value: DiffValue) -> None:
        """Uses `value` for `name` instead of a fresh leaf, e.g. to differentiate through one parameter."""
        if name not in self.arrays:
            raise KeyError(f"unknown parameter {name!r}")
        self._bound[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self.arrays

    def grads(self) -> dict[str, Array]:
        """A gradient for every parameter; zero for parameters the forward pass never read."""
        return {
            name: self._bound[name].grad.copy() if name in self._bound else np.zeros_like(array)
            for name, array in self.arrays.items()
        }
