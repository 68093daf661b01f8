"""Tests for layers, the Adam optimizer, gradient checks and named RNG streams."""

from __future__ import annotations

import json
import unittest

import numpy as np
import pytest

from autodiff import ops
from autodiff.errors import AutodiffContractError, ShapeError
from autodiff.gradcheck import finite_difference_check, relative_error
from autodiff.layers import MLP, Conv2d, ConvTranspose2d, Linear, MaskedConv2d, raster_mask
from autodiff.optim import Adam, AdamState, adam_step
from autodiff.rng import RngRegistry, make_stream
from autodiff.tensor import Tensor, tensor


class TestModule(unittest.TestCase):
    def test_named_parameters_are_ordered_and_nested(self):
        mlp = MLP([3, 4, 2], np.random.default_rng(0))
        names = [name for name, _ in mlp.named_parameters()]
        self.assertEqual(names, ["layers.0.weight", "layers.0.bias", "layers.1.weight", "layers.1.bias"])

    def test_state_dict_round_trip(self):
        source = Linear(3, 2, np.random.default_rng(1))
        target = Linear(3, 2, np.random.default_rng(2))
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(target.weight.data, source.weight.data)

    def test_load_state_dict_shape_mismatch(self):
        source = Linear(3, 2, np.random.default_rng(1))
        target = Linear(3, 5, np.random.default_rng(2))
        with self.assertRaises(ShapeError):
            target.load_state_dict(source.state_dict())

    def test_same_seed_same_init(self):
        a = Conv2d(2, 3, 3, np.random.default_rng(5))
        b = Conv2d(2, 3, 3, np.random.default_rng(5))
        np.testing.assert_array_equal(a.weight.data, b.weight.data)

    def test_conv_transpose_layer_shape(self):
        layer = ConvTranspose2d(4, 3, 4, np.random.default_rng(0), stride=2, padding=1)
        out = layer(np.zeros((2, 4, 12, 12), dtype=np.float32))
        self.assertEqual(out.shape, (2, 3, 24, 24))


class TestMaskedConv(unittest.TestCase):
    def test_mask_type_a_hides_centre(self):
        mask = raster_mask(1, 1, 3, "A")[0, 0]
        np.testing.assert_array_equal(mask, [[1, 1, 1], [1, 0, 0], [0, 0, 0]])

    def test_mask_type_b_keeps_centre(self):
        mask = raster_mask(1, 1, 3, "B")[0, 0]
        np.testing.assert_array_equal(mask, [[1, 1, 1], [1, 1, 0], [0, 0, 0]])

    def test_invalid_mask_type(self):
        with self.assertRaises(ValueError):
            raster_mask(1, 1, 3, "C")

    def test_type_a_output_ignores_own_and_later_inputs(self):
        layer = MaskedConv2d(1, 1, 3, "A", np.random.default_rng(0))
        x = np.zeros((1, 1, 4, 4), dtype=np.float32)
        base = layer(x).data.copy()
        x[0, 0, 2, 1] = 5.0
        changed = layer(x).data
        diff = np.abs(changed - base)[0, 0]
        # raster index of (2,1) is 9; positions 0..9 must not move
        self.assertTrue(np.all(diff.reshape(-1)[:10] == 0.0))


@pytest.mark.parametrize("seed", range(10))
def test_linear_layer_gradcheck(seed, double_precision):
    rng = np.random.default_rng(seed)
    layer = Linear(4, 3, rng).to_dtype(np.float64)
    x = rng.normal(size=(5, 4))
    target = rng.normal(size=(5, 3))
    report = finite_difference_check(lambda: ops.mse_loss(layer(x), target), layer.named_parameters())
    assert report.max_rel_error < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_conv_layer_gradcheck(seed, double_precision):
    rng = np.random.default_rng(seed)
    layer = Conv2d(2, 3, 3, rng, stride=2, padding=1).to_dtype(np.float64)
    x = rng.normal(size=(2, 2, 5, 5))
    report = finite_difference_check(lambda: ops.square(layer(x)).mean(), layer.named_parameters())
    assert report.max_rel_error < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_composite_conv_relu_dense_cross_entropy(seed, double_precision):
    rng = np.random.default_rng(seed)
    conv = Conv2d(1, 2, 3, rng, padding=1).to_dtype(np.float64)
    dense = Linear(2 * 4 * 4, 5, rng).to_dtype(np.float64)
    x = rng.normal(size=(3, 1, 4, 4))
    targets = rng.integers(0, 5, size=3)

    def build():
        hidden = ops.relu(conv(x)).reshape(3, -1)
        return ops.cross_entropy_logits(dense(hidden), targets)

    params = list(conv.named_parameters(prefix="conv.")) + list(dense.named_parameters(prefix="dense."))
    report = finite_difference_check(build, params)
    assert report.max_rel_error < 1e-4, report.errors


def test_exempt_parameters_are_reported_but_not_held_to_tolerance():
    w = Tensor(np.array([1.0]), requires_grad=True)

    def build():
        # analytic gradient 0 from stop_gradient, numeric gradient 1
        return ops.stop_gradient(w).sum() + w.sum() * 0.0

    report = finite_difference_check(build, [("vq.codebook", w)], exempt=["vq"])
    assert report.errors["vq.codebook"] > 0.5
    assert report.passed
    assert report.max_rel_error == 0.0


def test_relative_error_zero_when_both_vanish():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0


class TestAdam(unittest.TestCase):
    def test_zero_gradient_is_identity(self):
        p = tensor([1.0, -2.0, 3.0], requires_grad=True)
        state = AdamState.for_params([p], lr=0.1)
        for _ in range(5):
            p.grad = np.zeros(3, dtype=np.float32)
            adam_step([p], state)
        np.testing.assert_array_equal(p.data, [1.0, -2.0, 3.0])

    def test_first_step_moves_by_learning_rate(self):
        p = tensor([0.5], requires_grad=True, dtype=np.float64)
        state = AdamState.for_params([p], lr=0.1)
        p.grad = np.ones(1)
        adam_step([p], state)
        self.assertAlmostEqual(float(p.data[0]), 0.4, places=6)
        self.assertEqual(state.step, 1)

    def test_decoupled_weight_decay(self):
        p = tensor([1.0], requires_grad=True, dtype=np.float64)
        state = AdamState.for_params([p], lr=0.1, weight_decay=0.1)
        p.grad = np.zeros(1)
        adam_step([p], state)
        self.assertAlmostEqual(float(p.data[0]), 0.99, places=12)

    def test_missing_gradient_raises(self):
        p = tensor([1.0], requires_grad=True)
        with self.assertRaises(AutodiffContractError):
            adam_step([p], AdamState.for_params([p]))

    def test_converges_on_quadratic(self):
        x = tensor([5.0], requires_grad=True, dtype=np.float64)
        optimizer = Adam([x], lr=0.1)
        for _ in range(1000):
            optimizer.zero_grad()
            (x * x).sum().backward()
            optimizer.step()
        self.assertLess(abs(float(x.data[0])), 1e-2)

    def test_state_parts_round_trip(self):
        p = tensor([1.0, 2.0], requires_grad=True)
        state = AdamState.for_params([p], lr=0.01)
        p.grad = np.ones(2, dtype=np.float32)
        adam_step([p], state)
        restored = AdamState.from_parts(state.to_dict(), state.arrays())
        self.assertEqual(restored.step, 1)
        np.testing.assert_array_equal(restored.v[0], state.v[0])


class TestRng(unittest.TestCase):
    def test_streams_are_deterministic_and_distinct(self):
        a = make_stream(7, "collect").random(4)
        b = make_stream(7, "collect").random(4)
        c = make_stream(7, "reset").random(4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_registry_state_survives_json(self):
        registry = RngRegistry(3)
        registry.get("policy").random(10)
        snapshot = json.loads(json.dumps(registry.state_dict()))
        expected = registry.get("policy").random(5)
        restored = RngRegistry.from_state_dict(snapshot)
        np.testing.assert_array_equal(restored.get("policy").random(5), expected)
