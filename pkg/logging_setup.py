"""
logging_setup.py

Configures the logging system from a JSON dictConfig file.

Key Features:
    - JSON-based logging configuration (``RuntimeConfig.LOG_CONFIG`` by default)
    - Optional redirection of file handlers into a run directory
    - Queue handler support with automatic listener management

Note:
    - The queue handler, when present, is expected on the root logger
"""

import atexit
import json
import logging.config
import pathlib

from config import RuntimeConfig

_ACTIVE_LISTENERS: list = []


def _stop_listeners() -> None:
    while _ACTIVE_LISTENERS:
        _ACTIVE_LISTENERS.pop().stop()


def setup_logging(config_path: str | pathlib.Path | None = None, log_file: str | pathlib.Path | None = None) -> dict:
    """
    Initialize the logging system.

    Args:
        config_path: dictConfig JSON file; defaults to ``RuntimeConfig.LOG_CONFIG``
        log_file: If given, every handler with a ``filename`` writes there instead

    Returns:
        dict: The configuration that was applied

    Raises:
        FileNotFoundError: If the configuration file is not found
        json.JSONDecodeError: If the configuration file contains invalid JSON
    """
    config_file = pathlib.Path(config_path or RuntimeConfig.LOG_CONFIG)
    with open(config_file, encoding="utf-8") as f_in:
        config = json.load(f_in)

    # RotatingFileHandler는 파일은 생성하지만 디렉토리는 생성하지 않음
    handlers = config.get("handlers", {})
    for handler_config in handlers.values():
        if "filename" in handler_config:
            if log_file is not None:
                handler_config["filename"] = str(log_file)
            pathlib.Path(handler_config["filename"]).parent.mkdir(parents=True, exist_ok=True)

    _stop_listeners()
    logging.config.dictConfig(config)
    for handler in logging.getLogger().handlers:
        listener = getattr(handler, "listener", None)
        if listener is not None:
            listener.start()
            _ACTIVE_LISTENERS.append(listener)
    return config


atexit.register(_stop_listeners)
