import math

import numpy as np
import pytest

from autodiff import Tape, Tensor, grad_check, get_dtype, set_precision
from autodiff import ops
from autodiff.precision import precision_name
from utils.errors import DomainError, EmptyWindowError, NumericError, ShapeError


def test_matmul_identity_and_product():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(ops.matmul(Tensor(np.eye(2)), a).data, a.data)
    assert np.array_equal(ops.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data, [[11.0]])


def test_matmul_dimension_mismatch_names_both_dims():
    with pytest.raises(ShapeError, match=r"\[2, 3\].*\[2, 3\]"):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_backward_of_product_sum():
    a = Tensor([[1.0, 2.0]], requires_grad=True)
    b = Tensor([[3.0], [4.0]])
    with Tape() as tape:
        out = ops.sum(ops.matmul(a, b))
    tape.backward(out)
    assert np.allclose(a.grad, [[3.0, 4.0]])
    assert b.grad is None


def test_pointwise_values():
    assert ops.tanh(Tensor([0.0])).item() == 0.0
    assert ops.sigmoid(Tensor([0.0])).item() == 0.5
    assert np.allclose(ops.exp(Tensor([0.0, math.log(2.0)])).data, [1.0, 2.0])


def test_elementwise_dispatch_rejects_shape_mismatch():
    assert np.allclose(ops.elementwise("mul", [1.0, 2.0], [3.0, 4.0]).data, [3.0, 8.0])
    assert np.allclose(ops.elementwise("scale", [1.0, 2.0], k=0.5).data, [0.5, 1.0])
    with pytest.raises(ShapeError):
        ops.elementwise("add", [1.0, 2.0], [1.0, 2.0, 3.0])


def test_log_of_non_positive_is_a_domain_error():
    with pytest.raises(DomainError):
        ops.log(Tensor([1.0, 0.0]))


def test_overflow_raises_numeric_error_naming_the_op():
    with pytest.raises(NumericError) as info:
        ops.exp(Tensor([1000.0]))
    assert info.value.op == "exp"


def test_softmax_masked_examples():
    zeros = Tensor([[0.0, 0.0, 0.0]])
    assert np.allclose(ops.softmax_masked(zeros, np.ones((1, 3), bool)).data, [[1 / 3, 1 / 3, 1 / 3]])
    masked = ops.softmax_masked(zeros, np.array([[True, False, True]])).data
    assert masked[0, 1] == 0.0
    assert np.allclose(masked, [[0.5, 0.0, 0.5]])
    assert np.allclose(ops.softmax(Tensor([[1.0, 2.0, 3.0]])).data, [[0.09003, 0.24473, 0.66524]], atol=1e-5)


def test_softmax_masked_all_false_mask():
    with pytest.raises(EmptyWindowError):
        ops.softmax_masked(Tensor([[1.0, 2.0]]), np.zeros((1, 2), bool))


def test_concat_layout_and_gradient():
    assert np.array_equal(ops.concat([Tensor([1.0, 2.0]), Tensor([3.0])]).data, [1.0, 2.0, 3.0])
    a = Tensor([[1.0], [2.0]], requires_grad=True)
    b = Tensor([[3.0], [4.0]], requires_grad=True)
    with Tape() as tape:
        joined = ops.concat([a, b], axis=1)
        out = ops.sum(joined)
    assert np.array_equal(joined.data, [[1.0, 3.0], [2.0, 4.0]])
    tape.backward(out)
    assert np.array_equal(a.grad, np.ones((2, 1)))
    assert np.array_equal(b.grad, np.ones((2, 1)))


def test_broadcast_gradient_is_summed_back():
    a = Tensor(np.ones((3, 2)), requires_grad=True)
    b = Tensor([[1.0, 2.0]], requires_grad=True)
    with Tape() as tape:
        out = ops.sum(ops.mul(a, b))
    tape.backward(out)
    assert np.array_equal(b.grad, [[3.0, 3.0]])
    assert np.array_equal(a.grad, [[1.0, 2.0]] * 3)


def test_no_graph_outside_a_tape():
    a = Tensor([1.0], requires_grad=True)
    out = ops.add(a, a)
    assert not out.requires_grad


def test_tape_is_replayed_in_reverse_once():
    x = Tensor([2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.mul(x, x)
        z = ops.add(y, x)
    assert len(tape) == 2
    tape.backward(z)
    assert x.grad[0] == pytest.approx(5.0)


def test_backward_needs_a_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.scale(x, 2.0)
    with pytest.raises(ShapeError):
        tape.backward(y)


def test_grad_check_of_plain_sum_is_exact():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 2)))
    assert grad_check(lambda: ops.sum(x), [x]) == 0.0


def test_grad_check_restores_requires_grad(rng):
    frozen = Tensor(rng.normal(size=(2, 2)))
    trained = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
    assert grad_check(lambda: ops.sum(ops.mul(frozen, trained)), [frozen, trained]) < 1e-6
    assert frozen.requires_grad is False
    assert trained.requires_grad is True


def test_grad_check_of_tanh_layer(rng):
    W = Tensor(rng.normal(size=(4, 4)))
    x = Tensor(rng.normal(size=(4, 1)))
    assert grad_check(lambda: ops.sum(ops.tanh(ops.matmul(W, x))), [W, x]) < 1e-6


def test_grad_check_of_masked_softmax_and_pick(rng):
    logits = Tensor(rng.normal(size=(2, 4)))
    mask = np.array([[True, True, False, True], [True, True, True, True]])
    f = lambda: ops.sum(ops.log(ops.pick(ops.softmax_masked(logits, mask), np.array([1, 2]))))  # noqa: E731
    assert grad_check(f, [logits]) < 1e-6


def test_precision_switch():
    assert get_dtype() is np.float64
    set_precision("float32")
    assert Tensor([1.0]).data.dtype == np.float32
    assert precision_name() == "float32"
    set_precision("float64")
    with pytest.raises(ValueError):
        set_precision("float16")
