import numpy as np
import numpy.testing as npt
import pytest

from distillkit import autograd as ag
from distillkit.autograd import Tensor
from distillkit.kernels import ShapeError


def test_conv2d_shape_same():
    x = np.zeros((3, 300, 300), np.float32)
    w = np.zeros((20, 3, 3, 3), np.float32)
    out = ag.conv2d(Tensor(x), Tensor(w))
    assert out.shape == (20, 300, 300)


def test_conv2d_center_sum():
    x = np.ones((1, 3, 3), np.float32)
    w = np.ones((1, 1, 3, 3), np.float32)
    out = ag.conv2d(Tensor(x), Tensor(w)).data
    assert out[0, 1, 1] == 9.0
    # corners only see a 2x2 patch
    assert out[0, 0, 0] == 4.0


def test_conv2d_zero_kernel():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 9, 7)).astype(np.float32)
    w = np.zeros((1, 4, 3, 3), np.float32)
    out = ag.conv2d(Tensor(x), Tensor(w)).data
    assert np.all(out == 0.0)


def test_conv2d_channel_mismatch():
    with pytest.raises(ShapeError):
        ag.conv2d(Tensor(np.zeros((3, 8, 8))), Tensor(np.zeros((2, 4, 3, 3))))


def test_conv2d_valid_and_stride():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 11, 11)).astype(np.float32)
    w = rng.normal(size=(5, 3, 3, 3)).astype(np.float32)
    out = ag.conv2d(Tensor(x), Tensor(w), padding="valid").data
    assert out.shape == (2, 5, 9, 9)
    out2 = ag.conv2d(Tensor(x), Tensor(w), stride=2, padding="valid").data
    assert out2.shape == (2, 5, 5, 5)
    # stride-2 rows/cols agree with the stride-1 result subsampled
    # (different summation order between the two code paths, so f32 slack)
    npt.assert_allclose(out2, out[:, :, ::2, ::2], rtol=1e-4, atol=1e-5)


def test_conv2d_matches_bruteforce():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 6, 5)).astype(np.float64)
    w = rng.normal(size=(3, 2, 3, 3)).astype(np.float64)
    out = ag.conv2d(Tensor(x), Tensor(w)).data
    xp = np.zeros((2, 8, 7))
    xp[:, 1:7, 1:6] = x
    ref = np.zeros((3, 6, 5))
    for co in range(3):
        for y in range(6):
            for xx in range(5):
                ref[co, y, xx] = (w[co] * xp[:, y:y + 3, xx:xx + 3]).sum()
    npt.assert_allclose(out, ref, atol=1e-10)


@pytest.mark.parametrize("hw,expect", [((75, 75), (38, 38)),
                                       ((19, 19), (10, 10)),
                                       ((300, 300), (150, 150)),
                                       ((1, 1), (1, 1))])
def test_maxpool_ceil_dims(hw, expect):
    x = np.zeros((1, 2) + hw, np.float32)
    out = ag.maxpool2d(Tensor(x)).data
    assert out.shape == (1, 2) + expect


def test_maxpool_constant():
    x = np.full((3, 7, 9), 2.5, np.float32)
    out = ag.maxpool2d(Tensor(x)).data
    assert np.all(out == 2.5)
    assert out.shape == (3, 4, 5)


def test_maxpool_dim_law():
    for n in range(1, 513):
        assert -(-n // 2) == (n + 1) // 2
    for n in (1, 2, 3, 17, 64, 511, 512):
        x = np.arange(n * n, dtype=np.float32).reshape(1, 1, n, n)
        out = ag.maxpool2d(Tensor(x)).data
        assert out.shape == (1, 1, (n + 1) // 2, (n + 1) // 2)


def test_maxpool_values():
    x = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]], np.float32).reshape(1, 1, 3, 3)
    out = ag.maxpool2d(Tensor(x)).data
    npt.assert_array_equal(out[0, 0], [[5, 6], [8, 9]])


def test_dense_identity_and_zero():
    x = np.arange(4, dtype=np.float32)
    out = ag.dense(Tensor(x), Tensor(np.eye(4, dtype=np.float32))).data
    npt.assert_array_equal(out, x)
    out = ag.dense(Tensor(x), Tensor(np.zeros((3, 4), np.float32))).data
    npt.assert_array_equal(out, np.zeros(3))


def test_dense_shape_error():
    with pytest.raises(ShapeError):
        ag.dense(Tensor(np.zeros(5)), Tensor(np.zeros((3, 4))))


def test_relu():
    out = ag.relu(Tensor(np.array([-1.0, 0.0, 2.0]))).data
    npt.assert_array_equal(out, [0.0, 0.0, 2.0])
    out = ag.relu(Tensor(np.array([-5.0, -0.1]))).data
    npt.assert_array_equal(out, [0.0, 0.0])
    x = np.array([0.0, 0.5, 7.0])
    npt.assert_array_equal(ag.relu(Tensor(x)).data, x)


def test_softmax_symmetry():
    npt.assert_allclose(ag.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    npt.assert_allclose(ag.softmax(Tensor([3.3] * 4)).data, [0.25] * 4)


def test_softmax_derived_value():
    out = ag.softmax(Tensor([np.log(3.0), 0.0])).data
    npt.assert_allclose(out, [0.75, 0.25], atol=1e-7)


def test_softmax_normalization_property():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z = rng.normal(scale=rng.uniform(0.1, 50), size=(4, 6))
        p = ag.softmax(Tensor(z)).data
        npt.assert_allclose(p.sum(axis=-1), np.ones(4), atol=1e-6)
        assert np.all(p > 0) and np.all(p < 1.0 + 1e-7)


def test_softmax_rejects_nonfinite():
    with pytest.raises(ShapeError):
        ag.softmax(Tensor(np.array([np.inf, 0.0])))


def test_backward_requires_scalar():
    t = Tensor(np.zeros(3), requires_grad=True)
    with pytest.raises(ShapeError):
        ag.relu(t).backward()


def test_backprop_linear_case():
    w = Tensor(np.arange(6, dtype=np.float64).reshape(2, 3), requires_grad=True)
    grads = ag.backprop(ag.tsum(w), {"w": w})
    npt.assert_array_equal(grads["w"], np.ones((2, 3)))


def test_backprop_quadratic_case():
    data = np.arange(5, dtype=np.float64) - 2.0
    w = Tensor(data.copy(), requires_grad=True)
    loss = ag.mul(ag.tsum(ag.mul(w, w)), 0.5)
    grads = ag.backprop(loss, {"w": w})
    npt.assert_allclose(grads["w"], data)


def test_backprop_unused_param_gets_zeros():
    w = Tensor(np.ones(3), requires_grad=True)
    v = Tensor(np.ones(2), requires_grad=True)
    grads = ag.backprop(ag.tsum(w), {"w": w, "v": v})
    npt.assert_array_equal(grads["v"], np.zeros(2))


def test_shared_gradient_arrays_are_not_aliased():
    # a + a feeds the same upstream array into both accumulation slots
    a = Tensor(np.ones(3), requires_grad=True)
    loss = ag.tsum(ag.add(a, a))
    grads = ag.backprop(loss, {"a": a})
    npt.assert_array_equal(grads["a"], np.full(3, 2.0))


def test_nll_loss_value_and_label_check():
    probs = Tensor(np.array([[0.5, 0.5], [0.9, 0.1]]))
    loss = ag.nll_loss(probs, np.array([0, 0]))
    expect = -(np.log(0.5) + np.log(0.9)) / 2
    npt.assert_allclose(loss.item(), expect, rtol=1e-6)
    with pytest.raises(ShapeError):
        ag.nll_loss(probs, np.array([0, 2]))


def test_forward_determinism_bitwise():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, 3, 9, 9)).astype(np.float32)
    w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
    a = ag.conv2d(Tensor(x), Tensor(w)).data
    b = ag.conv2d(Tensor(x), Tensor(w)).data
    assert np.array_equal(a, b)
