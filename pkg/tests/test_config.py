"""Unit tests for runtime environment settings and strict experiment config loading."""

import importlib
import json
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import config


class TestExperimentConfigLoading(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def _write(self, name: str, text: str) -> Path:
        path = Path(self.temp_dir) / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_no_file_returns_profile(self):
        cfg = config.load_experiment_config()
        self.assertEqual(cfg.to_dict(), config.ExperimentConfig().to_dict())

    def test_paper_profile_uses_full_scale(self):
        cfg = config.load_experiment_config(profile="paper")
        self.assertEqual(cfg.vqvae.codebook_size, 512)
        self.assertEqual(cfg.pixelcnn.layers, 15)
        self.assertEqual(cfg.rl.batch_size, 1024)

    def test_toml_overrides_are_layered(self):
        path = self._write("run.toml", "[rl]\ngamma = 0.9\npolicy_hidden = [32, 32]\n\n[env]\nimage_size = 24\n")
        cfg = config.load_experiment_config(path)
        self.assertEqual(cfg.rl.gamma, 0.9)
        self.assertEqual(cfg.rl.policy_hidden, (32, 32))
        self.assertEqual(cfg.env.image_size, 24)
        self.assertEqual(cfg.rl.batch_size, config.RlConfig().batch_size)

    def test_integer_promotes_to_float(self):
        path = self._write("run.toml", "[rl]\ntau = 1\n")
        cfg = config.load_experiment_config(path)
        self.assertIsInstance(cfg.rl.tau, float)

    def test_unknown_key_raises(self):
        path = self._write("run.toml", "[rl]\ngama = 0.9\n")
        with self.assertRaises(config.ConfigError) as ctx:
            config.load_experiment_config(path)
        self.assertIn("gama", str(ctx.exception))

    def test_unknown_section_raises(self):
        path = self._write("run.toml", "[optimizer]\nlr = 0.1\n")
        with self.assertRaises(config.ConfigError):
            config.load_experiment_config(path)

    def test_wrong_type_raises(self):
        path = self._write("run.toml", "[vqvae]\nema = \"yes\"\n")
        with self.assertRaises(config.ConfigError):
            config.load_experiment_config(path)

    def test_bool_is_not_an_int(self):
        path = self._write("run.toml", "[rl]\nbatch_size = true\n")
        with self.assertRaises(config.ConfigError):
            config.load_experiment_config(path)

    def test_malformed_toml_raises(self):
        path = self._write("run.toml", "[rl\ngamma = 0.9\n")
        with self.assertRaises(config.ConfigError):
            config.load_experiment_config(path)

    def test_missing_file_raises_config_error(self):
        with self.assertRaises(config.ConfigError):
            config.load_experiment_config(Path(self.temp_dir) / "missing.toml")

    def test_invariants_are_checked(self):
        cases = [
            "[rl]\ngamma = 1.0\n",
            "[rl]\nrelabel_preset = \"nope\"\n",
            "[pixelcnn]\ntemperature = 0.0\n",
            "[vqvae]\nema = true\n",
            "[env]\nimage_size = 30\n",
            "[eval]\ntask = \"fly\"\n",
            "[data]\npair_mode = \"middle\"\n",
        ]
        for text in cases:
            with self.subTest(text=text):
                with self.assertRaises(config.ConfigError):
                    config.load_experiment_config(self._write("bad.toml", text))

    def test_resolved_json_snapshot_round_trip(self):
        cfg = config.load_experiment_config(self._write("run.toml", "[seeds]\nrun = 4\n"))
        snapshot = Path(self.temp_dir) / "config.resolved.json"
        snapshot.write_text(json.dumps(cfg.to_dict()), encoding="utf-8")
        self.assertEqual(config.load_experiment_config(snapshot).to_dict(), cfg.to_dict())

    def test_with_seed_copies(self):
        cfg = config.ExperimentConfig()
        clone = cfg.with_seed(7)
        self.assertEqual(clone.seeds.run, 7)
        self.assertEqual(cfg.seeds.run, 0)

    def test_unknown_profile(self):
        with self.assertRaises(config.ConfigError):
            config.make_profile("laptop")

    def test_relabel_mixture_sums_to_one(self):
        for preset in config.RELABEL_PRESETS:
            cfg = config.RlConfig(relabel_preset=preset)
            self.assertAlmostEqual(sum(config.relabel_mixture(cfg)), 1.0)

    def test_shipped_configs_load(self):
        root = Path(config.__file__).parent / "configs"
        for name, profile in (("desk.toml", "desk"), ("paper.toml", "paper")):
            with self.subTest(name=name):
                cfg = config.load_experiment_config(root / name, profile=profile)
                self.assertEqual(cfg.to_dict(), config.make_profile(profile).to_dict())


class TestRuntimeConfig(unittest.TestCase):
    def test_thread_cap_exports_blas_variables(self):
        with patch.dict(os.environ, {}, clear=True):
            value = config.RuntimeConfig.apply_thread_cap(2)
            self.assertEqual(value, 2)
            for name in config.RuntimeConfig.THREAD_ENV_VARS:
                self.assertEqual(os.environ[name], "2")

    def test_thread_cap_keeps_explicit_values(self):
        with patch.dict(os.environ, {"OMP_NUM_THREADS": "3"}, clear=True):
            config.RuntimeConfig.apply_thread_cap(1)
            self.assertEqual(os.environ["OMP_NUM_THREADS"], "3")

    def test_invalid_thread_cap(self):
        with self.assertRaises(config.ConfigError):
            config.RuntimeConfig.apply_thread_cap(0)

    def test_get_config_has_both_layers(self):
        values = config.get_config()
        self.assertIn("runtime", values)
        self.assertEqual(values["experiment"]["rl"]["gamma"], 0.99)


class TestImportTimeConfigParsing(unittest.TestCase):
    """Small representative checks for import-time environment parsing."""

    @staticmethod
    def _load_reloaded_temp_module() -> object:
        source_path = Path(config.__file__)
        with tempfile.TemporaryDirectory() as temp_dir:
            module_name = "temp_config_for_import_tests"
            copied_module = Path(temp_dir) / f"{module_name}.py"
            shutil.copy2(source_path, copied_module)

            with patch.dict(os.environ, {"PYTHONPATH": temp_dir}, clear=False):
                sys.path.insert(0, temp_dir)
                try:
                    temp_module = importlib.import_module(module_name)
                    return importlib.reload(temp_module)
                finally:
                    sys.path.pop(0)
                    sys.modules.pop(module_name, None)

    def test_thread_count_parses_from_environment(self):
        with patch.dict(os.environ, {"VAL_THREADS": "4"}, clear=True):
            temp_config = self._load_reloaded_temp_module()

        self.assertEqual(temp_config.RuntimeConfig.THREADS, 4)

    def test_output_root_and_log_config_defaults(self):
        with patch.dict(os.environ, {}, clear=True):
            temp_config = self._load_reloaded_temp_module()

        self.assertEqual(temp_config.RuntimeConfig.OUTPUT_ROOT, "outputs/runs")
        self.assertEqual(temp_config.RuntimeConfig.LOG_CONFIG, "logging_config/logging_config.json")

    def test_output_root_override(self):
        with patch.dict(os.environ, {"VAL_OUTPUT_ROOT": "/tmp/val-runs"}, clear=True):
            temp_config = self._load_reloaded_temp_module()

        self.assertEqual(temp_config.get_config()["runtime"]["output_root"], "/tmp/val-runs")


if __name__ == "__main__":
    unittest.main()
