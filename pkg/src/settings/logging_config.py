"""Logging configuration for the lab.

Every module asks for its logger with `get_logger(__name__)`. Loggers share one
console handler on stderr (stdout is reserved for the JSON printed by the
command-line tools) and one file handler on `config.path_to_logs / config.log_file_name`.
Levels come from settings (`ERGODIC_CONSOLE_LOG_LEVEL`, `ERGODIC_FILE_LOG_LEVEL`);
the runner's `--quiet` flag raises the console level at run time.

Records carry the process name, so lines written by pool workers can be told
apart from the main process.
"""

import logging

from settings.config import config

LOG_FORMAT = "%(asctime)s - %(processName)s - %(name)s - %(levelname)s - %(message)s"

_console_handler: logging.Handler | None = None
_file_handler: logging.Handler | None = None


def _shared_handlers() -> tuple[logging.Handler, logging.Handler]:
    global _console_handler, _file_handler
    if _console_handler is None:
        _console_handler = logging.StreamHandler()
        _console_handler.setLevel(config.console_log_level)
        _console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

        log_file = config.path_to_logs / config.log_file_name
        log_file.parent.mkdir(parents=True, exist_ok=True)
        _file_handler = logging.FileHandler(log_file, encoding="utf-8")
        _file_handler.setLevel(config.file_log_level)
        _file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

        logging.getLogger("aiosqlite").setLevel(logging.WARNING)
    return _console_handler, _file_handler


def get_logger(name: str = __name__) -> logging.Logger:
    """Returns a logger attached to the shared console and file handlers.

    Args:
        name (str): The logger name, typically `__name__`.

    Returns:
        logging.Logger: A configured logger instance.
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        for handler in _shared_handlers():
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
        logger.propagate = False
    return logger


def set_console_level(level: int | str) -> None:
    """Changes the console threshold of every logger; the log file is unaffected."""
    console, _ = _shared_handlers()
    console.setLevel(level)
