"""
mylogger.py

Custom logging formatter and filter for structured JSON run logs.

Main Classes:
    - RunJSONFormatter: Renders log records as JSON lines, carrying ``extra=`` fields
    - StageContextFilter: Stamps records with the active pipeline stage and run id
"""

import contextlib
import contextvars
import datetime as dt
import json
import logging
from typing import Iterator

# typing.override는 Python 3.12+에서만 사용 가능하므로 조건부 import
try:
    from typing import override
except ImportError:

    def override(func):  # pylint: disable=unused-argument
        """Placeholder decorator for Python < 3.12"""
        return func


# Set of built-in attributes in LogRecord objects
LOG_RECORD_BUILTIN_ATTRS = {
    "args",
    "asctime",
    "created",
    "exc_info",
    "exc_text",
    "filename",
    "funcName",
    "levelname",
    "levelno",
    "lineno",
    "module",
    "msecs",
    "message",
    "msg",
    "name",
    "pathname",
    "process",
    "processName",
    "relativeCreated",
    "stack_info",
    "thread",
    "threadName",
    "taskName",
}

_RUN_CONTEXT: contextvars.ContextVar[dict[str, object]] = contextvars.ContextVar("run_context", default={})


@contextlib.contextmanager
def run_context(**fields: object) -> Iterator[None]:
    """
    Attach ``fields`` (for example ``stage``, ``run``, ``seed``) to every record logged inside.

    Nested contexts extend the outer one.
    """
    token = _RUN_CONTEXT.set({**_RUN_CONTEXT.get(), **fields})
    try:
        yield
    finally:
        _RUN_CONTEXT.reset(token)


def current_context() -> dict[str, object]:
    return dict(_RUN_CONTEXT.get())


class RunJSONFormatter(logging.Formatter):
    """
    Converts log records to JSON.

    Attributes:
        fmt_keys (dict[str, str]): Output field name -> log record attribute
    """

    def __init__(self, *, fmt_keys: dict[str, str] | None = None):
        super().__init__()
        self.fmt_keys = fmt_keys if fmt_keys is not None else {}

    @override
    def format(self, record: logging.LogRecord) -> str:
        message = self._prepare_log_dict(record)
        return json.dumps(message, default=str)

    def _prepare_log_dict(self, record: logging.LogRecord) -> dict:
        always_fields = {
            "message": record.getMessage(),
            "timestamp": dt.datetime.fromtimestamp(record.created, tz=dt.timezone.utc).isoformat(),
        }
        if record.exc_info is not None:
            always_fields["exc_info"] = self.formatException(record.exc_info)

        if record.stack_info is not None:
            always_fields["stack_info"] = self.formatStack(record.stack_info)

        message = {
            key: msg_val if (msg_val := always_fields.pop(val, None)) is not None else getattr(record, val, None)
            for key, val in self.fmt_keys.items()
        }
        message.update(always_fields)

        # extra= 로 넘긴 stage, step, seed 등
        for key, val in record.__dict__.items():
            if key not in LOG_RECORD_BUILTIN_ATTRS:
                message[key] = val

        return message


class StageContextFilter(logging.Filter):
    """
    Copies the active ``run_context`` fields onto each record.

    Fields passed explicitly through ``extra=`` win over the context.
    """

    # pylint: disable=too-few-public-methods

    @override
    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in _RUN_CONTEXT.get().items():
            if key not in record.__dict__:
                setattr(record, key, value)
        return True
