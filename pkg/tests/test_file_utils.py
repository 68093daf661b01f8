"""
test_file_utils.py

This module contains unit tests for the file_utils module.
It tests JSON saving/loading, PPM image dumps, grid tiling and error handling scenarios.
"""

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from config import EnvConfig
from deskworld.render import render
from deskworld.scenes import reset, sample_environment
from file_utils import image_grid, load_json, read_ppm, save_json, write_ppm


class TestJsonFiles(unittest.TestCase):
    """Test JSON helpers used for config snapshots and stage markers"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.test_json_path = os.path.join(self.temp_dir, "test.json")

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_save_json_success(self):
        test_data = {"completed": ["collect", "train-rep"], "rows": {"vqvae_train.csv": 3}}
        save_json(test_data, self.test_json_path)

        with open(self.test_json_path, "r", encoding="utf-8") as f:
            saved_data = json.load(f)
        self.assertEqual(saved_data, test_data)

    def test_save_json_sorts_keys(self):
        save_json({"b": 1, "a": 2}, self.test_json_path, indent=None)
        with open(self.test_json_path, "r", encoding="utf-8") as f:
            self.assertEqual(f.read(), '{"a": 2, "b": 1}')

    def test_save_json_directory_not_exists(self):
        """Nested parents are created on write"""
        nested_path = os.path.join(self.temp_dir, "nested", "subdir", "test.json")
        save_json({"test": "data"}, nested_path)
        self.assertEqual(load_json(nested_path), {"test": "data"})

    def test_save_json_parent_is_file(self):
        blocker = os.path.join(self.temp_dir, "blocker")
        with open(blocker, "w", encoding="utf-8") as f:
            f.write("x")
        with self.assertRaises(ValueError):
            save_json({}, os.path.join(blocker, "test.json"))

    def test_save_json_not_serializable(self):
        with self.assertRaises(TypeError):
            save_json({"bad": object()}, self.test_json_path)

    def test_load_json_file_not_found(self):
        with self.assertRaises(FileNotFoundError):
            load_json(os.path.join(self.temp_dir, "non_existent_file.json"))

    def test_load_json_invalid_json(self):
        with open(self.test_json_path, "w", encoding="utf-8") as f:
            f.write("{invalid json content")

        with self.assertRaises(json.JSONDecodeError):
            load_json(self.test_json_path)

    def test_json_encoding_handling(self):
        test_data = {"task": "서랍 열기", "note": "目标"}
        save_json(test_data, self.test_json_path)
        self.assertEqual(load_json(self.test_json_path), test_data)


class TestPpmImages(unittest.TestCase):
    """Test binary PPM dumps of rendered frames"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        env = EnvConfig(image_size=16)
        spec = sample_environment(2, env)
        self.image = render(spec, reset(spec, 0), env)

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_rendered_frame_survives_round_trip(self):
        path = write_ppm(self.image, os.path.join(self.temp_dir, "frames", "s0.ppm"))
        loaded = read_ppm(path)
        self.assertEqual(loaded.shape, (16, 16, 3))
        self.assertEqual(loaded.dtype, np.float32)
        np.testing.assert_allclose(loaded, self.image, atol=1.0 / 510.0)

    def test_header_is_binary_p6(self):
        path = write_ppm(np.zeros((2, 3, 3), dtype=np.float32), os.path.join(self.temp_dir, "black.ppm"))
        with open(path, "rb") as f:
            data = f.read()
        self.assertTrue(data.startswith(b"P6\n3 2\n255\n"))
        self.assertEqual(len(data), len(b"P6\n3 2\n255\n") + 2 * 3 * 3)

    def test_uint8_images_are_written_as_is(self):
        pixels = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
        path = write_ppm(pixels, os.path.join(self.temp_dir, "u8.ppm"))
        np.testing.assert_allclose(read_ppm(path) * 255.0, pixels, atol=1e-4)

    def test_rejects_non_rgb_images(self):
        with self.assertRaises(ValueError):
            write_ppm(np.zeros((4, 4)), os.path.join(self.temp_dir, "gray.ppm"))

    def test_rejects_other_formats(self):
        path = os.path.join(self.temp_dir, "ascii.ppm")
        with open(path, "wb") as f:
            f.write(b"P3\n1 1\n255\n0 0 0\n")
        with self.assertRaises(ValueError):
            read_ppm(path)

    def test_rejects_short_pixel_data(self):
        path = os.path.join(self.temp_dir, "short.ppm")
        with open(path, "wb") as f:
            f.write(b"P6\n2 2\n255\n" + bytes(5))
        with self.assertRaises(ValueError):
            read_ppm(path)

    def test_rejects_truncated_header(self):
        path = os.path.join(self.temp_dir, "header.ppm")
        with open(path, "wb") as f:
            f.write(b"P6\n2")
        with self.assertRaises(ValueError):
            read_ppm(path)


class TestImageGrid(unittest.TestCase):
    def test_tiles_row_major_with_padding(self):
        images = np.stack([np.full((2, 2, 3), value, dtype=np.float32) for value in (0.0, 0.25, 0.5)])
        grid = image_grid(images, columns=2, pad=1)
        self.assertEqual(grid.shape, (2 * 3 + 1, 2 * 3 + 1, 3))
        np.testing.assert_array_equal(grid[1:3, 1:3], images[0])
        np.testing.assert_array_equal(grid[1:3, 4:6], images[1])
        np.testing.assert_array_equal(grid[4:6, 1:3], images[2])
        # 빈 칸과 여백은 흰색
        np.testing.assert_array_equal(grid[4:6, 4:6], np.ones((2, 2, 3)))
        np.testing.assert_array_equal(grid[0], np.ones((7, 3)))

    def test_default_is_one_row(self):
        grid = image_grid(np.zeros((4, 3, 3, 3)), pad=0)
        self.assertEqual(grid.shape, (3, 12, 3))

    def test_empty_batch_rejected(self):
        with self.assertRaises(ValueError):
            image_grid(np.zeros((0, 2, 2, 3)))


if __name__ == "__main__":
    unittest.main()
