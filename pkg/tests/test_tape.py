import numpy as np
import pytest

from hise.errors import NonScalarRootError, ShapeError, TapeError
from hise.numcore import ParamBinding, Tape, backward
from hise.numcore import functional as F
from hise.numcore.tape import as_matrix


def test_as_matrix_promotes_scalars_and_vectors() -> None:
    assert as_matrix(2.0).shape == (1, 1)
    assert as_matrix([1.0, 2.0, 3.0]).shape == (1, 3)
    with pytest.raises(ShapeError):
        as_matrix(np.zeros((2, 2, 2)))


def test_backward_fills_variables_and_leaves_constants_at_zero() -> None:
    tape = Tape()
    x = tape.variable(np.array([[1.0, 2.0]]))
    c = tape.constant(np.array([[3.0, 5.0]]))
    backward(F.sum_all(F.multiply(x, c)))
    np.testing.assert_array_equal(x.grad, [[3.0, 5.0]])
    np.testing.assert_array_equal(c.grad, [[0.0, 0.0]])
    assert not c.requires_grad


def test_backward_resets_gradients_each_call() -> None:
    tape = Tape()
    x = tape.variable(np.array([[2.0]]))
    root = F.multiply(x, x)
    tape.backward(root)
    tape.backward(root)
    np.testing.assert_array_equal(x.grad, [[4.0]])


def test_shared_value_accumulates_gradient() -> None:
    tape = Tape()
    x = tape.variable(np.array([[1.0, -1.0]]))
    root = F.sum_all(F.add(F.scale(x, 2.0), F.scale(x, 3.0)))
    tape.backward(root)
    np.testing.assert_array_equal(x.grad, [[5.0, 5.0]])


def test_non_scalar_root() -> None:
    tape = Tape()
    x = tape.variable(np.ones((2, 2)))
    with pytest.raises(NonScalarRootError, match="root must be 1x1, got 2x2"):
        tape.backward(F.scale(x, 2.0))


def test_values_from_another_tape_are_rejected() -> None:
    first, second = Tape(), Tape()
    a = first.variable(np.ones((1, 2)))
    b = second.variable(np.ones((1, 2)))
    with pytest.raises(TapeError, match="is not on tape"):
        first.apply("add", [a, b])


def test_param_binding_grads_cover_unread_parameters() -> None:
    arrays = {"used": np.array([[2.0]]), "unused": np.ones((2, 3))}
    tape = Tape()
    params = ParamBinding(tape, arrays)
    tape.backward(F.multiply(params["used"], params["used"]))
    grads = params.grads()
    np.testing.assert_array_equal(grads["used"], [[4.0]])
    np.testing.assert_array_equal(grads["unused"], np.zeros((2, 3)))
    assert params["used"] is params["used"]


def test_param_binding_constants_and_override() -> None:
    arrays = {"w": np.array([[1.0, 2.0]])}
    tape = Tape()
    frozen = ParamBinding(tape, arrays, trainable=False)
    assert not frozen["w"].requires_grad

    leaf = tape.variable(np.array([[5.0, 6.0]]))
    frozen.override("w", leaf)
    assert frozen["w"] is leaf
    with pytest.raises(KeyError, match="unknown parameter 'v'"):
        frozen.override("v", leaf)


def test_repeated_backward_gives_identical_gradients() -> None:
    rng = np.random.default_rng(5)
    tape = Tape()
    x = tape.variable(rng.standard_normal((3, 4)))
    w = tape.variable(rng.standard_normal((4, 2)))
    root = F.sum_all(F.log(F.row_sums(F.exp(F.l2_normalize_rows(F.matmul(x, w))))))
    tape.backward(root)
    first = (x.grad.copy(), w.grad.copy())
    tape.backward(root)
    np.testing.assert_array_equal(x.grad, first[0])
    np.testing.assert_array_equal(w.grad, first[1])
