"""Tests for image augmentation, vector quantization and the VQVAE."""

from __future__ import annotations

import unittest

import numpy as np
import pytest

from autodiff.errors import ConvConfigError, ShapeError
from autodiff.rng import make_stream
from autodiff.tensor import tensor
from config import EnvConfig, VqvaeConfig
from deskworld.render import render
from deskworld.scenes import reset, sample_environment
from representation.augment import (
    AugmentParams,
    JitterFactors,
    augment,
    bilinear_resize,
    color_jitter,
    crop_box,
    hsv_to_rgb,
    rgb_to_hsv,
)
from representation.quantizer import codebook_usage, nearest_indices, quantize
from representation.training import reconstruction_mse, sample_images, train_vqvae
from representation.vqvae import VQVAE, latent_grid_size

TINY_VQVAE = VqvaeConfig(
    codebook_size=8,
    embedding_dim=2,
    conv_hidden=4,
    residual_layers=1,
    residual_hidden=4,
    epochs=2,
    batch_size=4,
)


def _scene_images(count: int, size: int = 16) -> np.ndarray:
    env = EnvConfig(image_size=size)
    images = []
    for seed in range(count):
        spec = sample_environment(seed, env)
        images.append(render(spec, reset(spec, seed), env))
    return np.stack(images)


class TestAugment(unittest.TestCase):
    def setUp(self):
        self.image = _scene_images(1)[0]

    def test_identity_params_leave_image_unchanged(self):
        out = augment(self.image, make_stream(0, "test"), AugmentParams.identity(16))
        np.testing.assert_allclose(out, self.image, atol=1e-6)

    def test_output_shape_range_and_dtype(self):
        out = augment(self.image, make_stream(0, "test"), AugmentParams(size=16))
        self.assertEqual(out.shape, (16, 16, 3))
        self.assertEqual(out.dtype, np.float32)
        self.assertGreaterEqual(out.min(), 0.0)
        self.assertLessEqual(out.max(), 1.0)

    def test_same_stream_same_augmentation(self):
        first = augment(self.image, make_stream(3, "test"), AugmentParams(size=16))
        second = augment(self.image, make_stream(3, "test"), AugmentParams(size=16))
        np.testing.assert_array_equal(first, second)

    def test_brightness_clamps(self):
        out = color_jitter(np.full((2, 2, 3), 0.8), JitterFactors(brightness=2.0))
        np.testing.assert_array_equal(out, np.ones((2, 2, 3)))

    def test_hsv_round_trip(self):
        rng = np.random.default_rng(0)
        colors = rng.random((50, 3))
        np.testing.assert_allclose(hsv_to_rgb(rgb_to_hsv(colors)), colors, atol=1e-9)

    def test_full_hue_turn_is_identity(self):
        colors = np.random.default_rng(1).random((4, 4, 3))
        np.testing.assert_allclose(color_jitter(colors, JitterFactors(hue=1.0)), colors, atol=1e-9)

    def test_crop_box_stays_inside(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            top, left, h, w = crop_box(48, 48, rng, (0.5, 1.0), (0.75, 1.33))
            self.assertGreaterEqual(top, 0)
            self.assertGreaterEqual(left, 0)
            self.assertLessEqual(top + h, 48)
            self.assertLessEqual(left + w, 48)

    def test_resize_to_same_size_is_identity(self):
        np.testing.assert_allclose(bilinear_resize(self.image, 16, 16), self.image, atol=1e-7)


class TestQuantizer(unittest.TestCase):
    def test_ties_pick_lowest_index(self):
        codebook = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        indices = nearest_indices(np.array([[0.0, 0.0], [0.9, 0.1]]), codebook)
        np.testing.assert_array_equal(indices, [0, 0])

    def test_quantized_values_are_codebook_rows(self):
        codebook = tensor(np.array([[0.0, 0.0], [1.0, 1.0]]), requires_grad=True)
        z_e = tensor(np.array([[[0.2, 0.1], [0.9, 0.8]]]), requires_grad=True)
        result = quantize(z_e, codebook)
        np.testing.assert_array_equal(result.indices, [[0, 1]])
        np.testing.assert_array_equal(result.quantized.data, [[[0.0, 0.0], [1.0, 1.0]]])

    def test_straight_through_routes_gradient_to_encoder(self):
        codebook = tensor(np.array([[0.0, 0.0], [1.0, 1.0]]), requires_grad=True)
        z_e = tensor(np.array([[0.2, 0.1], [0.9, 0.8]]), requires_grad=True)
        result = quantize(z_e, codebook)
        (result.quantized * 3.0).sum().backward()
        np.testing.assert_array_equal(z_e.grad, np.full((2, 2), 3.0))
        self.assertTrue(codebook.grad is None or not np.any(codebook.grad))

    def test_vq_loss_trains_codebook_only(self):
        codebook = tensor(np.array([[0.0, 0.0], [1.0, 1.0]]), requires_grad=True)
        z_e = tensor(np.array([[0.2, 0.1], [0.9, 0.8]]), requires_grad=True)
        quantize(z_e, codebook).vq_loss.backward()
        self.assertTrue(z_e.grad is None or not np.any(z_e.grad))
        self.assertTrue(np.any(codebook.grad))

    def test_commit_loss_trains_encoder_only(self):
        codebook = tensor(np.array([[0.0, 0.0], [1.0, 1.0]]), requires_grad=True)
        z_e = tensor(np.array([[0.2, 0.1], [0.9, 0.8]]), requires_grad=True)
        result = quantize(z_e, codebook, commitment_cost=0.25)
        result.commit_loss.backward()
        self.assertTrue(codebook.grad is None or not np.any(codebook.grad))
        # d/dz_e of beta * mean((z_e - e)^2) over 4 elements
        np.testing.assert_allclose(z_e.grad, 0.25 * 2.0 * (z_e.data - [[0, 0], [1, 1]]) / 4.0, rtol=1e-5)

    def test_embedding_size_mismatch(self):
        with self.assertRaises(ShapeError):
            quantize(tensor(np.zeros((2, 3))), tensor(np.zeros((4, 2))))

    def test_perplexity_bounds(self):
        _, single = codebook_usage(np.zeros(10, dtype=np.int64), 4)
        _, even = codebook_usage(np.arange(8) % 4, 4)
        self.assertAlmostEqual(single, 1.0)
        self.assertAlmostEqual(even, 4.0)


class TestVqvae(unittest.TestCase):
    def setUp(self):
        self.model = VQVAE(TINY_VQVAE, 16, make_stream(0, "vqvae.init"))
        self.images = _scene_images(3)

    def test_latent_grid(self):
        self.assertEqual(latent_grid_size(48), 12)
        self.assertEqual(self.model.grid, 4)
        self.assertEqual(self.model.latent_dim, 4 * 4 * 2)

    def test_incompatible_image_size(self):
        with self.assertRaises(ConvConfigError):
            latent_grid_size(18)
        with self.assertRaises(ConvConfigError):
            self.model.encode_batch(np.zeros((1, 20, 20, 3), dtype=np.float32))

    def test_encode_is_deterministic_and_uses_codebook_rows(self):
        indices, quantized = self.model.encode_batch(self.images)
        again, _ = self.model.encode_batch(self.images)
        np.testing.assert_array_equal(indices, again)
        self.assertEqual(indices.shape, (3, 4, 4))
        np.testing.assert_array_equal(quantized, self.model.codebook.data[indices])

    def test_single_image_encode(self):
        code = self.model.encode(self.images[0])
        self.assertEqual(code.flat.shape, (self.model.latent_dim,))

    def test_decode_range(self):
        recon = self.model.reconstruct(self.images)
        self.assertEqual(recon.shape, self.images.shape)
        self.assertGreaterEqual(recon.min(), 0.0)
        self.assertLessEqual(recon.max(), 1.0)

    def test_empty_batch(self):
        indices, quantized = self.model.encode_batch(np.zeros((0, 16, 16, 3), dtype=np.float32))
        self.assertEqual(indices.shape, (0, 4, 4))
        self.assertEqual(quantized.shape, (0, 4, 4, 2))

    def test_loss_parts(self):
        total, parts = self.model.loss(self.images)
        self.assertAlmostEqual(total.item(), parts["recon_mse"] + parts["vq_loss"] + parts["commit_loss"], places=5)


class TestVqvaeTraining(unittest.TestCase):
    def test_training_is_reproducible(self):
        images = _scene_images(6)
        first, log = train_vqvae(images, TINY_VQVAE, seed=2)
        second, _ = train_vqvae(images, TINY_VQVAE, seed=2)
        self.assertEqual(len(log.epochs), TINY_VQVAE.epochs)
        for key in ("recon_mse", "vq_loss", "commit_loss", "codes_used", "perplexity"):
            self.assertIn(key, log.final)
            self.assertTrue(np.isfinite(log.final[key]))
        for name, value in first.state_dict().items():
            np.testing.assert_array_equal(value, second.state_dict()[name], err_msg=name)

    def test_empty_images_rejected(self):
        with self.assertRaises(ValueError):
            train_vqvae(np.zeros((0, 16, 16, 3), dtype=np.float32), TINY_VQVAE)

    def test_on_epoch_callback(self):
        rows = []
        train_vqvae(_scene_images(4), TINY_VQVAE, seed=0, on_epoch=rows.append)
        self.assertEqual([row["epoch"] for row in rows], [0.0, 1.0])

    def test_reconstruction_mse_non_negative(self):
        model = VQVAE(TINY_VQVAE, 16, make_stream(0, "vqvae.init"))
        self.assertGreaterEqual(reconstruction_mse(model, _scene_images(2)), 0.0)


@pytest.mark.slow
def test_vqvae_learns_to_reconstruct_a_small_scene_set():
    images = _scene_images(16)
    cfg = VqvaeConfig(
        codebook_size=16,
        embedding_dim=3,
        conv_hidden=8,
        residual_layers=1,
        residual_hidden=8,
        epochs=25,
        batch_size=8,
        learning_rate=3e-3,
        augment=False,
    )
    untrained = VQVAE(cfg, 16, make_stream(1, "vqvae.init"))
    before = reconstruction_mse(untrained, images)
    model, _ = train_vqvae(images, cfg, seed=1)
    assert reconstruction_mse(model, images) < before


def test_sample_images_is_deterministic():
    class _Record:
        def __init__(self, offset):
            self.images = np.full((3, 2, 2, 3), offset, dtype=np.float32)

    records = [_Record(0.1), _Record(0.5)]
    first = sample_images(records, 4, seed=3)
    np.testing.assert_array_equal(first, sample_images(records, 4, seed=3))
    assert first.shape == (4, 2, 2, 3)
    assert sample_images(records, 100, seed=3).shape[0] == 6
