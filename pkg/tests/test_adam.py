import numpy as np
import pytest

from hise.errors import ShapeError
from hise.numcore import AdamState, adam_step


def test_first_step_moves_each_coordinate_by_lr() -> None:
    # bias correction makes the first update lr * g / |g|
    params = {"w": np.array([[1.0, -2.0, 3.0]])}
    grads = {"w": np.array([[0.5, -4.0, 1e-2]])}
    state = AdamState(lr=0.1)
    updated = adam_step(params, grads, state)
    np.testing.assert_allclose(updated["w"], [[0.9, -1.9, 2.9]], atol=1e-6)
    assert state.step == 1
    np.testing.assert_array_equal(params["w"], [[1.0, -2.0, 3.0]])


def test_first_step_by_hand() -> None:
    updated = adam_step({"w": np.array([[0.0]])}, {"w": np.array([[2.0]])}, AdamState(lr=1e-3))
    assert updated["w"][0, 0] == pytest.approx(-0.000999999995, abs=1e-15)


def test_zero_gradient_leaves_params() -> None:
    params = {"w": np.array([[1.5, -0.5]])}
    updated = adam_step(params, {"w": np.zeros((1, 2))}, AdamState())
    np.testing.assert_array_equal(updated["w"], params["w"])


def test_constant_gradient_steps_do_not_grow() -> None:
    state = AdamState(lr=1e-3)
    first = adam_step({"w": np.array([[0.0]])}, {"w": np.array([[2.0]])}, state)
    second = adam_step(first, {"w": np.array([[2.0]])}, state)
    assert abs(second["w"][0, 0] - first["w"][0, 0]) <= abs(first["w"][0, 0]) + 1e-18


def test_lr_override_wins_for_one_step() -> None:
    params = {"w": np.array([[1.0]])}
    grads = {"w": np.array([[1.0]])}
    state = AdamState(lr=0.1)
    updated = adam_step(params, grads, state, lr=0.01)
    np.testing.assert_allclose(updated["w"], [[0.99]], atol=1e-6)
    assert state.lr == 0.1


def test_minimizes_a_quadratic() -> None:
    target = np.array([[3.0, -1.0]])
    params = {"w": np.zeros((1, 2))}
    state = AdamState(lr=0.1)
    for _ in range(500):
        params = adam_step(params, {"w": 2.0 * (params["w"] - target)}, state)
    np.testing.assert_allclose(params["w"], target, atol=1e-2)


def test_missing_gradient() -> None:
    with pytest.raises(ShapeError, match="no gradient for parameter 'w'"):
        adam_step({"w": np.ones((1, 1))}, {}, AdamState())


def test_gradient_shape_mismatch() -> None:
    with pytest.raises(ShapeError, match=r"w is \(1, 2\) but its gradient is \(2, 1\)"):
        adam_step({"w": np.ones((1, 2))}, {"w": np.ones((2, 1))}, AdamState())
