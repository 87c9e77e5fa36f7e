import logging
import logging.handlers
import os
import sys
from pathlib import Path

from src.config.config_loader import config

settings = config.logging


def _level(name: str) -> int:
    return getattr(logging, str(name).upper(), logging.INFO)


def _file_handler(formatter: logging.Formatter) -> logging.Handler:
    """Rotating lab log under <project>/<logging.dir>, rotated at logging.max_bytes."""
    log_directory = Path(__file__).resolve().parents[2] / settings.dir
    log_directory.mkdir(exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(
        filename=log_directory / settings.file_name,
        mode="a",
        maxBytes=int(settings.max_bytes),
        backupCount=int(settings.backup_count),
        encoding="utf-8",
    )
    handler.setFormatter(formatter)
    handler.setLevel(_level(os.environ.get(settings.level_env_var) or settings.level))
    return handler


def _console_handler(formatter: logging.Formatter, level: str) -> logging.Handler:
    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    handler.setLevel(_level(level))
    return handler


def _attach(name: str, level: int, *handlers: logging.Handler) -> logging.Logger:
    named_logger = logging.getLogger(name)
    named_logger.setLevel(level)
    named_logger.handlers.clear()
    for handler in handlers:
        named_logger.addHandler(handler)
    named_logger.propagate = False
    return named_logger


def _report_uncaught(target: logging.Logger) -> None:
    """Uncaught errors go to the lab log and, in red, to stderr."""

    def handle_unhandled_exception(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return
        error_message = f"{exc_type.__name__}: {exc_value}"
        target.error(error_message)
        print(f"\033[91m[Unhandled Exception] {error_message}\033[0m", file=sys.stderr)

    sys.excepthook = handle_unhandled_exception


def setup_logger() -> logging.Logger:
    """
    Lab logger: file handler at logging.level (LAB_LOG_LEVEL overrides), console
    handler at logging.console_level so sweeps stay quiet on the terminal.
    """
    formatter = logging.Formatter(settings.format, datefmt=settings.date_format)
    file_handler = _file_handler(formatter)
    lab_logger = _attach(
        settings.logger_name,
        file_handler.level,
        file_handler,
        _console_handler(formatter, settings.console_level),
    )
    _report_uncaught(lab_logger)
    lab_logger.info("Lab logger writing to %s at %s", settings.file_name, logging.getLevelName(file_handler.level))
    return lab_logger


def setup_test_logger() -> logging.Logger:
    """Console-only logger for the test suite; no log file is touched."""
    formatter = logging.Formatter(settings.format, datefmt=settings.test_date_format)
    return _attach(settings.test_logger_name, _level(settings.test_level),
                   _console_handler(formatter, settings.test_level))


logger = setup_logger()
