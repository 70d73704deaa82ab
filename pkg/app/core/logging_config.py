"""
Logging setup.

Plain text logs for local work, JSON records (python-json-logger) for batch runs.
"""

import logging
import sys

from pythonjsonlogger import jsonlogger

_TEXT_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"
_JSON_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def setup_logging(
    service_name: str,
    log_level: str = "INFO",
    json_logs: bool = True,
) -> logging.Logger:
    """
    Configure the root logger once and return the service logger.

    Args:
        service_name: Name of the service logger
        log_level: Level name (DEBUG, INFO, ...)
        json_logs: Emit JSON records instead of plain text

    Returns:
        Logger named after the service
    """
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(
            jsonlogger.JsonFormatter(_JSON_FORMAT, static_fields={"service": service_name})
        )
    else:
        handler.setFormatter(logging.Formatter(_TEXT_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(log_level.upper())

    return logging.getLogger(service_name)
