"""Autodiff ops against float64 central finite differences."""

import numpy as np
import pytest

from planmae.autodiff import Tensor, concat, gelu, layer_norm, softmax

EPS = 1e-6
TOL = 1e-6


def fd_check(build, inputs, tol=TOL, eps=EPS):
    """Compare analytic grads of sum(build(*tensors)) with central differences."""
    tensors = [Tensor(np.array(x, dtype=np.float64), requires_grad=True) for x in inputs]
    out = build(*tensors)
    loss = out.sum() if out.data.ndim else out
    loss.backward()
    for t, x in zip(tensors, inputs):
        x = np.array(x, dtype=np.float64)
        numeric = np.zeros_like(x)
        flat = x.ravel()
        for i in range(flat.size):
            bumped = flat.copy()
            bumped[i] += eps
            plus = build(*[
                Tensor(bumped.reshape(x.shape)) if u is t else Tensor(np.array(v, dtype=np.float64))
                for u, v in zip(tensors, inputs)
            ])
            bumped[i] -= 2 * eps
            minus = build(*[
                Tensor(bumped.reshape(x.shape)) if u is t else Tensor(np.array(v, dtype=np.float64))
                for u, v in zip(tensors, inputs)
            ])
            pv = plus.data.sum() if plus.data.ndim else float(plus.data)
            mv = minus.data.sum() if minus.data.ndim else float(minus.data)
            numeric.ravel()[i] = (pv - mv) / (2 * eps)
        assert t.grad is not None
        np.testing.assert_allclose(t.grad, numeric, rtol=tol, atol=tol)


def arr(seed, *shape):
    return np.random.default_rng(seed).standard_normal(shape)


def test_add_sub_mul_neg():
    a, b = arr(0, 3, 4), arr(1, 3, 4)
    fd_check(lambda x, y: x + y, [a, b])
    fd_check(lambda x, y: x - y, [a, b])
    fd_check(lambda x, y: x * y, [a, b])
    fd_check(lambda x: -x, [a])
    fd_check(lambda x: (2.0 * x + 1.0) * 0.5 - x / 4.0, [a])


def test_broadcasting_grads():
    a, b = arr(2, 2, 3, 4), arr(3, 4)  # bias-style broadcast
    fd_check(lambda x, y: x * y + y, [a, b])
    fd_check(lambda x, y: x + y.reshape(1, 1, 4), [a, b])


def test_square_and_chains():
    a = arr(4, 5)
    fd_check(lambda x: x.square(), [a])
    fd_check(lambda x: (x.square() + x).square(), [a])


def test_matmul():
    fd_check(lambda x, y: x @ y, [arr(5, 3, 4), arr(6, 4, 2)])
    # batched
    fd_check(lambda x, y: x @ y, [arr(7, 2, 3, 4), arr(8, 2, 4, 5)])
    # broadcast weight over batch
    fd_check(lambda x, y: x @ y, [arr(9, 2, 3, 4), arr(10, 4, 5)])


def test_reshape_transpose_take():
    a = arr(11, 2, 6)
    fd_check(lambda x: x.reshape(3, 4).square(), [a])
    fd_check(lambda x: x.transpose((1, 0)).square(), [a])
    b = arr(12, 2, 5, 3)
    fd_check(lambda x: x.take([4, 0, 2], axis=1).square(), [b])
    # repeated index must accumulate
    fd_check(lambda x: x.take([1, 1, 3], axis=1).square(), [b])


def test_sum_mean_axes():
    a = arr(13, 3, 4, 2)
    fd_check(lambda x: x.sum(), [a])
    fd_check(lambda x: x.sum(axis=1).square(), [a])
    fd_check(lambda x: x.sum(axis=2, keepdims=True).square(), [a])
    fd_check(lambda x: x.mean(), [a])


def test_concat():
    a, b, c = arr(14, 2, 3), arr(15, 2, 2), arr(16, 2, 4)
    fd_check(lambda x, y, z: concat([x, y, z], axis=1).square(), [a, b, c])


def test_softmax():
    a = arr(17, 4, 6)
    fd_check(lambda x: softmax(x).square(), [a], tol=1e-5)
    # rows sum to one
    s = softmax(Tensor(a)).data
    np.testing.assert_allclose(s.sum(axis=-1), np.ones(4), atol=1e-12)
    # invariant to a per-row shift
    shifted = softmax(Tensor(a + 100.0)).data
    np.testing.assert_allclose(s, shifted, atol=1e-12)


def test_gelu():
    a = arr(18, 5, 3) * 2.0
    fd_check(lambda x: gelu(x), [a], tol=1e-5)
    # exact values: gelu(0)=0, gelu(x) ~ x for large x, ~0 for large -x
    g = gelu(Tensor(np.array([0.0, 10.0, -10.0]))).data
    assert g[0] == 0.0
    assert abs(g[1] - 10.0) < 1e-6
    assert abs(g[2]) < 1e-6


def test_layer_norm():
    x = arr(19, 4, 6)
    scale, shift = arr(20, 6), arr(21, 6)
    fd_check(lambda a, s, t: layer_norm(a, s, t).square(), [x, scale, shift], tol=1e-5)
    # normalized output has zero mean / unit variance per row when scale=1, shift=0
    out = layer_norm(Tensor(x), Tensor(np.ones(6)), Tensor(np.zeros(6))).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-9)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-5)


def test_backward_requires_scalar():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ValueError):
        t.backward()


def test_grad_accumulates_across_uses():
    x = Tensor(np.array(3.0), requires_grad=True)
    y = x * x + x  # dy/dx = 2x + 1 = 7
    y.backward()
    assert float(x.grad) == pytest.approx(7.0)


def test_no_grad_tracking_when_not_required():
    a = Tensor(np.ones((2, 2)))
    b = Tensor(np.ones((2, 2)))
    out = (a @ b).sum()
    assert not out.requires_grad


def test_diamond_graph_single_visit():
    # y = (x + x) * (x + x): dy/dx = 8x; topo order must not double-count
    x = Tensor(np.array(2.0), requires_grad=True)
    s = x + x
    y = s * s
    y.backward()
    assert float(x.grad) == pytest.approx(16.0)


def test_deep_chain_iterative_backward():
    # 3000-node chain would blow the recursion limit if backward recursed
    x = Tensor(np.array(1.0), requires_grad=True)
    y = x
    for _ in range(3000):
        y = y + 0.0
    y.backward()
    assert float(x.grad) == 1.0
