"""
test_logging_setup.py

This module contains unit tests for the logging_setup and mylogger modules.
It tests logging configuration setup, run-directory redirection, JSON records
and the stage context filter.
"""

import json
import logging
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, mock_open, patch

import logging_setup
from logging_setup import setup_logging
from mylogger import RunJSONFormatter, StageContextFilter, current_context, run_context

STREAM_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {"standard": {"format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"}},
    "handlers": {
        "default": {
            "level": "INFO",
            "formatter": "standard",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stdout",
        }
    },
    "root": {"handlers": ["default"], "level": "INFO"},
}


def _record(msg: str = "step %d", args: tuple = (3,), **extra) -> logging.LogRecord:
    record = logging.LogRecord("affordance.training", logging.INFO, __file__, 10, msg, args, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestLoggingSetup(unittest.TestCase):
    """Test logging_setup module functions"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config_file_path = os.path.join(self.temp_dir, "logging_config.json")

    def tearDown(self):
        logging_setup._stop_listeners()  # pylint: disable=protected-access
        root = logging.getLogger()
        for handler in list(root.handlers):
            handler.close()
        root.handlers.clear()
        shutil.rmtree(self.temp_dir)

    def _write_config(self, config: dict) -> str:
        with open(self.config_file_path, "w", encoding="utf-8") as f:
            json.dump(config, f)
        return self.config_file_path

    def test_setup_logging_success(self):
        applied = setup_logging(self._write_config(STREAM_CONFIG))
        self.assertTrue(len(logging.getLogger().handlers) > 0)
        self.assertEqual(applied["version"], 1)

    def test_log_file_redirects_file_handlers(self):
        config = {
            "version": 1,
            "disable_existing_loggers": False,
            "handlers": {"file": {"class": "logging.FileHandler", "filename": "elsewhere/test.log", "level": "INFO"}},
            "root": {"level": "INFO", "handlers": ["file"]},
        }
        log_file = Path(self.temp_dir) / "run" / "logs" / "run.jsonl"
        applied = setup_logging(self._write_config(config), log_file=log_file)

        self.assertEqual(applied["handlers"]["file"]["filename"], str(log_file))
        self.assertTrue(log_file.parent.is_dir())
        logging.getLogger("tests").info("hello")
        for handler in logging.getLogger().handlers:
            handler.flush()
        self.assertIn("hello", log_file.read_text(encoding="utf-8"))

    def test_file_handler_parent_is_created(self):
        target = os.path.join(self.temp_dir, "nested", "dir", "test.log")
        config = {
            "version": 1,
            "disable_existing_loggers": False,
            "handlers": {"file": {"class": "logging.FileHandler", "filename": target, "level": "INFO"}},
            "root": {"level": "INFO", "handlers": ["file"]},
        }
        setup_logging(self._write_config(config))
        self.assertTrue(os.path.isdir(os.path.dirname(target)))

    def test_shipped_config_writes_json_lines(self):
        log_file = Path(self.temp_dir) / "logs" / "run.jsonl"
        setup_logging(log_file=log_file)
        with run_context(stage="collect", run=7):
            logging.getLogger("tests").info("collected %d trajectories", 4, extra={"step": 4})
        # 리스너를 멈춰야 큐에 남은 레코드가 파일로 나감
        logging_setup._stop_listeners()  # pylint: disable=protected-access

        lines = [json.loads(line) for line in log_file.read_text(encoding="utf-8").splitlines() if line]
        record = next(line for line in lines if line["message"] == "collected 4 trajectories")
        self.assertEqual(record["stage"], "collect")
        self.assertEqual(record["run"], 7)
        self.assertEqual(record["step"], 4)
        self.assertEqual(record["level"], "INFO")

    def test_setup_logging_with_queue_handler(self):
        mock_file = mock_open(read_data=json.dumps(STREAM_CONFIG))
        with patch("builtins.open", mock_file):
            with patch("logging_setup.logging.getLogger") as mock_get_logger:
                mock_logger = MagicMock()
                mock_handler = MagicMock()
                mock_handler.listener = MagicMock()
                mock_logger.handlers = [mock_handler]
                mock_get_logger.return_value = mock_logger

                setup_logging()

                mock_handler.listener.start.assert_called_once()

        logging_setup._stop_listeners()  # pylint: disable=protected-access
        mock_handler.listener.stop.assert_called_once()

    def test_setup_logging_file_not_found(self):
        with self.assertRaises(FileNotFoundError):
            setup_logging(os.path.join(self.temp_dir, "missing.json"))

    def test_setup_logging_invalid_json(self):
        mock_file = mock_open(read_data="{invalid json content")
        with patch("builtins.open", mock_file):
            with self.assertRaises(json.JSONDecodeError):
                setup_logging()

    def test_setup_logging_empty_config(self):
        with self.assertRaises(ValueError):
            setup_logging(self._write_config({}))


class TestRunJSONFormatter(unittest.TestCase):
    def test_fmt_keys_and_extra_fields(self):
        formatter = RunJSONFormatter(fmt_keys={"level": "levelname", "logger": "name", "message": "message"})
        payload = json.loads(formatter.format(_record(stage="train-rep", step=3)))
        self.assertEqual(payload["level"], "INFO")
        self.assertEqual(payload["logger"], "affordance.training")
        self.assertEqual(payload["message"], "step 3")
        self.assertEqual(payload["stage"], "train-rep")
        self.assertEqual(payload["step"], 3)
        self.assertIn("timestamp", payload)

    def test_exception_is_rendered(self):
        formatter = RunJSONFormatter()
        try:
            raise RuntimeError("boom")
        except RuntimeError:
            record = logging.LogRecord("x", logging.ERROR, __file__, 1, "failed", (), sys.exc_info())
        payload = json.loads(formatter.format(record))
        self.assertIn("RuntimeError: boom", payload["exc_info"])

    def test_non_serializable_extra_falls_back_to_str(self):
        payload = json.loads(RunJSONFormatter().format(_record(path=Path("runs/a"))))
        self.assertEqual(payload["path"], str(Path("runs/a")))


class TestStageContext(unittest.TestCase):
    def test_context_nests_and_resets(self):
        self.assertEqual(current_context(), {})
        with run_context(run=1, seed=0):
            with run_context(stage="pretrain"):
                self.assertEqual(current_context(), {"run": 1, "seed": 0, "stage": "pretrain"})
            self.assertEqual(current_context(), {"run": 1, "seed": 0})
        self.assertEqual(current_context(), {})

    def test_filter_stamps_context(self):
        record = _record()
        with run_context(stage="finetune", run=2):
            self.assertTrue(StageContextFilter().filter(record))
        self.assertEqual(record.stage, "finetune")
        self.assertEqual(record.run, 2)

    def test_explicit_extra_wins(self):
        record = _record(stage="eval")
        with run_context(stage="finetune"):
            StageContextFilter().filter(record)
        self.assertEqual(record.stage, "eval")

    def test_context_reset_after_exception(self):
        with self.assertRaises(KeyError):
            with run_context(stage="collect"):
                raise KeyError("x")
        self.assertEqual(current_context(), {})


if __name__ == "__main__":
    unittest.main()
