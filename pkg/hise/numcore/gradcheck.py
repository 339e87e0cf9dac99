from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from hise.errors import GradientCheckError
from hise.numcore.ops import Array
from hise.numcore.tape import DiffValue, Tape, as_matrix

ScalarFn = Callable[[Tape, DiffValue], DiffValue]


def _evaluate(f: ScalarFn, x: Array) -> float:
    tape = Tape()
    root = f(tape, tape.variable(x))
    value = root.item()
    if not math.isfinite(value):
        raise GradientCheckError(f"function value is not finite ({value}) at the perturbed input")
    return value


def finite_difference_check(f: ScalarFn, x: Array, h: float = 1e-5) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|).

    `f(tape, x)` must build a 1x1 root on the given tape from the leaf `x`; every
    evaluation gets its own tape.
    """
    if h <= 0:
        raise GradientCheckError(f"step size must be > 0, got {h}")
    x = as_matrix(x)

    tape = Tape()
    leaf = tape.variable(x)
    root = f(tape, leaf)
    if not math.isfinite(root.item()):
        raise GradientCheckError(f"function value is not finite ({root.item()})")
    tape.backward(root)
    analytic = leaf.grad
    if not np.all(np.isfinite(analytic)):
        raise GradientCheckError("analytic gradient is not finite")

    worst = 0.0
    for index in np.ndindex(*x.shape):
        plus = x.copy()
        plus[index] += h
        minus = x.copy()
        minus[index] -= h
        numeric = (_evaluate(f, plus) - _evaluate(f, minus)) / (2.0 * h)
        a = float(analytic[index])
        worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return worst
