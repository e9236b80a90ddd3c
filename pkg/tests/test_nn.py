import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitnet.nn import (
    Adam,
    DenseLayer,
    ResidualBlock,
    ShapeError,
    Stack,
    cross_entropy_loss,
    finite_difference_check,
    he_uniform,
    lecun_uniform,
    relative_error,
    softmax,
    softmax_cross_entropy,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_he_and_lecun_bounds():
    w = he_uniform(rng(), 50, 200)
    assert w.shape == (50, 200)
    assert np.abs(w).max() <= np.sqrt(6 / 200)
    v = lecun_uniform(rng(), 50, 200)
    assert np.abs(v).max() <= np.sqrt(3 / 200)
    assert np.abs(w).max() > 0.9 * np.sqrt(6 / 200)


class TestDense:
    def test_forward_matches_manual(self):
        layer = DenseLayer(np.array([[1.0, -2.0], [0.5, 0.5]]), np.array([0.1, -3.0]), "relu")
        y, _ = layer.forward(np.array([[1.0, 1.0], [2.0, 0.0]]))
        np.testing.assert_allclose(y, [[0.0, 0.0], [2.1, 0.0]])

    def test_identity_keeps_negatives(self):
        layer = DenseLayer(np.array([[1.0]]), np.array([-2.0]), "identity")
        y, _ = layer.forward(np.array([[1.0]]))
        assert y[0, 0] == -1.0

    def test_wrong_width(self):
        layer = DenseLayer.initialize(3, 2, "relu", rng())
        with pytest.raises(ShapeError):
            layer.forward(np.ones((4, 5)))

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            DenseLayer(np.ones((2, 2)), np.zeros(2), "tanh")

    def test_zero_bias_init(self):
        assert not DenseLayer.initialize(4, 6, "relu", rng()).bias.any()


class TestResidual:
    def test_identity_skip_when_widths_match(self):
        block = ResidualBlock.initialize(6, 6, rng())
        assert block.projection is None
        block.inner2.weight[...] = 0.0
        x = rng(1).normal(size=(5, 6))
        y, _ = block.forward(x)
        np.testing.assert_allclose(y, np.maximum(x, 0.0))

    def test_projection_when_widths_differ(self):
        block = ResidualBlock.initialize(6, 4, rng())
        assert block.projection is not None
        assert block.projection.weight.shape == (4, 6)

    def test_projection_rule_enforced(self):
        a = DenseLayer.initialize(4, 4, "relu", rng())
        b = DenseLayer.initialize(4, 4, "identity", rng())
        p = DenseLayer.initialize(4, 4, "identity", rng())
        with pytest.raises(ShapeError):
            ResidualBlock(a, b, p)
        b3 = DenseLayer.initialize(4, 3, "identity", rng())
        with pytest.raises(ShapeError):
            ResidualBlock(a, b3, None)

    def test_output_nonnegative(self):
        block = ResidualBlock.initialize(7, 3, rng())
        y, _ = block.forward(rng(2).normal(size=(20, 7)))
        assert (y >= 0).all()


class TestStack:
    def test_widths(self):
        s = Stack.initialize([12, 25, 15, 10], rng())
        y, _ = s.forward(rng(1).normal(size=(3, 12)))
        assert y.shape == (3, 10)
        assert [b.out_dim for b in s.blocks] == [25, 15, 10]

    def test_parameter_names(self):
        s = Stack.initialize([4, 3, 3], rng())
        names = set(s.parameters())
        assert "0.projection.weight" in names
        assert "1.inner2.bias" in names
        assert "1.projection.weight" not in names


class TestSoftmax:
    def test_rows_sum_to_one(self):
        p = softmax(rng().normal(size=(50, 3)) * 30)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_large_logits_stable(self):
        p = softmax(np.array([[1000.0, 0.0, -1000.0]]))
        assert np.isfinite(p).all()
        assert p[0, 0] == 1.0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            softmax(np.array([[np.nan, 0.0, 0.0]]))

    def test_cross_entropy_clamps(self):
        loss = cross_entropy_loss(np.array([1.0, 0.0, 0.0]), 2)
        assert np.isclose(loss, -np.log(1e-12))

    def test_uniform_loss_is_log3(self):
        loss, grad, sat = softmax_cross_entropy(np.zeros((4, 3)), np.array([0, 1, 2, 1]))
        assert np.isclose(loss, np.log(3))
        assert sat == 0
        np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
    def test_shift_invariance(self, row):
        x = np.array([row])
        np.testing.assert_allclose(softmax(x), softmax(x + 17.5), atol=1e-12)


class TestAdam:
    def test_first_step_moves_by_lr(self):
        p = {"w": np.array([1.0, -1.0, 0.5])}
        Adam(learning_rate=0.1).step(p, {"w": np.array([3.0, -0.2, 1e-3])})
        # the first bias-corrected step is lr * g / (|g| + eps)
        np.testing.assert_allclose(p["w"], [0.9, -0.9, 0.4], atol=1e-5)

    def test_matches_reference_formula(self):
        r = rng(3)
        w = r.normal(size=5)
        p = {"w": w.copy()}
        opt = Adam(learning_rate=0.01)
        m = np.zeros(5)
        v = np.zeros(5)
        for t in range(1, 8):
            g = r.normal(size=5)
            opt.step(p, {"w": g})
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            w = w - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p["w"], w, rtol=1e-12, atol=1e-15)

    def test_minimizes_quadratic(self):
        p = {"x": np.array([5.0, -3.0])}
        opt = Adam(learning_rate=0.1)
        for _ in range(500):
            opt.step(p, {"x": 2 * p["x"]})
        assert np.abs(p["x"]).max() < 1e-2

    def test_nonfinite_gradient_names_block(self):
        p = {"layer.w": np.ones(2)}
        with pytest.raises(FloatingPointError, match="layer.w"):
            Adam().step(p, {"layer.w": np.array([1.0, np.inf])})
        assert (p["layer.w"] == 1.0).all()

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            Adam().step({"w": np.ones(2)}, {"w": np.ones(3)})


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-12, 0.0) == pytest.approx(1e-4)
    assert relative_error(2.0, 1.0) == 0.5


def test_gradcheck_catches_wrong_gradient():
    layer = DenseLayer.initialize(4, 3, "identity", rng())
    x = rng(1).normal(size=(6, 4))
    params = layer.parameters()

    def broken():
        y, cache = layer.forward(x)
        _, grads = layer.backward(np.ones_like(y), cache)
        grads["bias"] = grads["bias"] * 1.01
        return float(y.sum()), grads

    report = finite_difference_check(broken, params, tolerance=1e-6)
    assert not report.passed
    assert any(f[0] == "bias" for f in report.failures)


def test_gradcheck_restores_parameters():
    block = ResidualBlock.initialize(4, 3, rng())
    x = rng(1).normal(size=(6, 4))
    params = block.parameters()
    before = {k: v.copy() for k, v in params.items()}

    def fn():
        y, cache = block.forward(x)
        _, grads = block.backward(2 * y, cache)
        return float((y ** 2).sum()), grads

    report = finite_difference_check(fn, params, tolerance=1e-6)
    for k in params:
        np.testing.assert_array_equal(params[k], before[k])
    assert report.n_checked >= len(params)
