"""Finite-difference checks for every autodiff primitive, plus graph
semantics (re-running backward, NoRecordedGraph)."""

import numpy as np
import pytest

from gesturegen import autodiff as ad
from gesturegen.autodiff import Tensor
from gesturegen.errors import NoRecordedGraph


def _fd_check(build, shapes, seed=0, step=1e-6, tol=1e-6):
    """build(tensors) -> scalar Tensor; checks grads of every input."""
    rng = np.random.default_rng(seed)
    values = [rng.normal(size=s) * 0.7 + 0.3 for s in shapes]
    tensors = [Tensor(v.copy(), requires_grad=True) for v in values]
    out = build(*tensors)
    out.backward()
    for v, t in zip(values, tensors):
        flat = v.reshape(-1)
        grad = t.grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = float(build(*[Tensor(x) for x in values]).data)
            flat[i] = orig - step
            lo = float(build(*[Tensor(x) for x in values]).data)
            flat[i] = orig
            fd = (hi - lo) / (2 * step)
            assert abs(grad[i] - fd) <= tol * max(1.0, abs(fd)), (grad[i], fd)


def test_add_broadcast():
    _fd_check(lambda a, b: ad.tsum(ad.add(a, b)), [(3, 4), (4,)])


def test_mul_broadcast():
    _fd_check(lambda a, b: ad.tsum(ad.mul(a, b)), [(2, 3, 4), (3, 4)])


def test_matmul_2d():
    _fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(3, 4), (4, 2)])


def test_matmul_batched():
    _fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(2, 3, 4), (2, 4, 2)])


def test_matmul_broadcast_batch():
    _fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(2, 3, 4), (4, 2)])


def test_tanh_sigmoid_relu():
    _fd_check(lambda a: ad.tsum(ad.tanh(a)), [(5,)])
    _fd_check(lambda a: ad.tsum(ad.sigmoid(a)), [(5,)])
    _fd_check(lambda a: ad.tsum(ad.relu(ad.add(a, 0.1))), [(5,)])


def test_sqrt_and_power():
    _fd_check(lambda a: ad.tsum(ad.sqrt(ad.add(ad.mul(a, a), 0.5))), [(6,)])
    _fd_check(lambda a: ad.tsum(ad.power(ad.add(ad.mul(a, a), 0.5), -0.5)), [(6,)])


def test_sqrt_subgradient_at_zero():
    x = Tensor(np.zeros(3), requires_grad=True)
    out = ad.tsum(ad.sqrt(ad.mul(x, 1.0)))
    out.backward()
    assert np.all(np.isfinite(x.grad))
    assert np.array_equal(x.grad, np.zeros(3))


def test_softmax():
    _fd_check(lambda a: ad.tsum(ad.mul(ad.softmax(a, axis=-1), np.arange(8.0).reshape(2, 4))), [(2, 4)])


def test_reductions():
    _fd_check(lambda a: ad.tsum(ad.mul(ad.tsum(a, axis=1), ad.tsum(a, axis=1))), [(3, 4)])
    _fd_check(lambda a: ad.tmean(ad.mul(a, a)), [(3, 4)])
    _fd_check(lambda a: ad.tsum(ad.mul(ad.tmean(a, axis=0, keepdims=True), a)), [(3, 4)])


def test_concat_stack_take_reshape_transpose():
    _fd_check(lambda a, b: ad.tsum(ad.mul(ad.concat([a, b], axis=1), 1.5)), [(2, 3), (2, 2)])
    _fd_check(lambda a, b: ad.tsum(ad.mul(ad.stack([a, b], axis=1), np.ones((2, 2, 3)) * 0.5)), [(2, 3), (2, 3)])
    _fd_check(lambda a: ad.tsum(ad.mul(a[:, 1:], a[:, :-1])), [(2, 4)])
    _fd_check(lambda a: ad.tsum(ad.mul(ad.reshape(a, (6,)), np.arange(6.0))), [(2, 3)])
    _fd_check(lambda a: ad.tsum(ad.mul(ad.transpose(a), np.ones((3, 2)))), [(2, 3)])


def test_shared_subexpression_gradient():
    # y = sum(x * x + x): dy/dx = 2x + 1 with x reused by two ops
    x = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
    out = ad.tsum(ad.add(ad.mul(x, x), x))
    out.backward()
    assert np.allclose(x.grad, 2 * x.data + 1)


def test_backward_recomputes_not_accumulates():
    x = Tensor(np.array([2.0]), requires_grad=True)
    out = ad.tsum(ad.mul(x, x))
    out.backward()
    first = x.grad.copy()
    out.backward()
    assert np.array_equal(x.grad, first)


def test_no_recorded_graph():
    with pytest.raises(NoRecordedGraph):
        Tensor(np.ones(3), requires_grad=True).backward()


def test_eval_mode_records_nothing():
    a = Tensor(np.ones((2, 2)))
    b = Tensor(np.ones((2, 2)))
    out = ad.matmul(a, b)
    assert not out.requires_grad
    assert out._parents == ()


def test_dropout_train_scaling():
    rng = np.random.default_rng(0)
    x = Tensor(np.ones((200, 50)), requires_grad=True)
    y = ad.dropout(x, 0.1, rng)
    kept = y.data[y.data > 0]
    assert np.allclose(kept, 1.0 / 0.9)
    assert abs(y.data.mean() - 1.0) < 0.02
    assert ad.dropout(x, 0.0, rng) is x
