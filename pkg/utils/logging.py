import logging
import sys
from typing import Any

import structlog


def configure_structlog(level: str = "INFO", fmt: str = "json") -> None:
    """
    Configures structlog for one-record-per-line output.
    fmt="json" renders JSON (the default for run logs), fmt="console" renders
    human-readable lines. Records go to stderr so command output stays clean.
    """
    renderer = structlog.dev.ConsoleRenderer() if fmt == "console" else structlog.processors.JSONRenderer()
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level.upper(), logging.INFO)),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str) -> Any:
    """
    Returns a structlog logger with the bound name.
    """
    return structlog.get_logger(name=name)


def log_event(logger: Any, event_name: str, **fields: Any) -> None:
    """
    Helper to log an event with structured data.
    """
    logger.info(event_name, **fields)
