from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from hise import constants
from hise.errors import ShapeError
from hise.numcore.ops import Array


@dataclass
class AdamState:
    """Per-parameter first/second moments; `step` counts completed updates."""

    lr: float = constants.LEARNING_RATE
    beta1: float = constants.ADAM_BETA1
    beta2: float = constants.ADAM_BETA2
    eps: float = constants.ADAM_EPSILON
    step: int = 0
    m: dict[str, Array] = field(default_factory=dict)
    v: dict[str, Array] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, Array], grads: Mapping[str, Array], state: AdamState, lr: float | None = None
) -> dict[str, Array]:
    """One bias-corrected Adam update. Returns new parameter arrays and advances `state` in place.

    `lr` overrides `state.lr` for this step (cosine schedule).
    """
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            raise ShapeError(f"adam_step: no gradient for parameter {name!r}")
        if grad.shape != value.shape:
            raise ShapeError(f"adam_step: {name} is {value.shape} but its gradient is {grad.shape}")
        moment = state.m.get(name)
        if moment is not None and moment.shape != value.shape:
            raise ShapeError(f"adam_step: {name} is {value.shape} but its moments are {moment.shape}")

    state.step += 1
    step_lr = state.lr if lr is None else lr
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    updated: dict[str, Array] = {}
    for name, value in params.items():
        grad = grads[name]
        m = state.beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - state.beta1) * grad
        v = state.beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - state.beta2) * (grad * grad)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - step_lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated
