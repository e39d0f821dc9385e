"""
vulcan_fem/logger.py

This module provides the logging front end used across vulcan_fem. Every record is enriched with
the caller's file name and line number, console output is colored through coloredlogs, and an
optional log file is written when a log directory is configured.

Environment:
    VULCAN_LOG_LEVEL: Minimum level for console and file output (default DEBUG).
    VULCAN_LOG_PATH: Directory for the log file; file logging is off when unset.
    VULCAN_LOG_NAME: Base name of the log file, ``.log`` is appended (default ``vulcan.log``).
"""


import inspect
import logging
import os
import sys
from functools import lru_cache
from typing import Callable, Dict, Optional

import coloredlogs

EXCLUDE = (
    'decorator.py',
    'logger.py',
    'logging/__init__.py',
    '<frozen importlib._bootstrap>'
)

LOG_FORMAT = (
    "%(asctime)s - %(name)s - %(levelname)s - %(message)s - "
    "(%(caller_filename)s:%(caller_lineno)d)"
)
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
DEFAULT_FILE_NAME = "vulcan.log"
_CREATED: Dict[str, "Logger"] = {}


class Logger:
    """
    Logger that records the caller's location with every message.

    Attributes:
        level (str): Effective level name, e.g. "INFO".
        file_name (str): Log file name used when file output is enabled.
        path (Optional[str]): Directory for the log file, None disables file output.
    """

    def __init__(
        self,
        name: str = __name__,
        level: Optional[str] = None,
        file_name: Optional[str] = None,
        path: Optional[str] = None
    ) -> None:
        """
        Configures the named logger.

        Args:
            name (str): Logger name, normally the calling module's ``__name__``.
            level (Optional[str]): Level name; falls back to VULCAN_LOG_LEVEL, then DEBUG.
            file_name (Optional[str]): Log file name; falls back to VULCAN_LOG_NAME.
            path (Optional[str]): Log directory; falls back to VULCAN_LOG_PATH.
        """

        self._logger = logging.getLogger(name)
        self.level = self._level(level)
        self.file_name = self._file_name(file_name)
        self.path = self._path(path)
        self._setup()

    def _path(self, path: Optional[str]) -> Optional[str]:
        """
        Resolves the log directory.

        Args:
            path (Optional[str]): Explicit directory.

        Returns:
            Optional[str]: The directory, or None when file logging stays off.
        """

        if path:
            return path
        return os.environ.get("VULCAN_LOG_PATH") or None

    def _level(self, level: Optional[str]) -> str:
        """
        Resolves the level name.

        Args:
            level (Optional[str]): Explicit level name.

        Returns:
            str: Upper-case level name.
        """

        if level:
            return level.upper()
        env_log_level = os.environ.get("VULCAN_LOG_LEVEL")
        if env_log_level:
            return env_log_level.upper()
        return "DEBUG"

    def _file_name(self, name: Optional[str]) -> str:
        """
        Resolves the log file name.

        Args:
            name (Optional[str]): Explicit file name, used verbatim.

        Returns:
            str: The file name.
        """

        if name:
            return name
        env_log_file_name = os.environ.get("VULCAN_LOG_NAME")
        if env_log_file_name:
            return f"{env_log_file_name}.log"
        return DEFAULT_FILE_NAME

    def _install_coloredlogs(self) -> None:
        """Installs the colored console handler on the wrapped logger."""

        try:
            coloredlogs.install(
                level=self.level,
                logger=self._logger,
                fmt=LOG_FORMAT,
                datefmt=DATE_FORMAT
            )
        except Exception as e:  # pylint: disable=broad-except
            self.error(f"Error installing coloredlogs: {e}")

    def _file_handler(self) -> None:
        """Adds a file handler writing to ``path/file_name`` when a path is configured."""

        if not self.path:
            return
        try:
            os.makedirs(self.path, exist_ok=True)
            file_handler = logging.FileHandler(
                os.path.join(self.path, self.file_name))
            file_handler.setLevel(self.level)
            file_handler.setFormatter(
                logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
            self._logger.addHandler(file_handler)
        except Exception as e:  # pylint: disable=broad-except
            self.error(f"Error creating log file handler: {e}")

    def _setup(self) -> None:
        self._install_coloredlogs()
        self._file_handler()

    def set_level(self, level: str) -> None:
        """Changes the level of the wrapped logger and its handlers."""

        self.level = level.upper()
        self._logger.setLevel(self.level)
        for handler in self._logger.handlers:
            handler.setLevel(self.level)

    def _stack_trace(self) -> dict:
        """
        Finds the first stack frame outside the logging machinery.

        Returns:
            dict: ``caller_filename`` and ``caller_lineno`` of the log call origin.
        """

        caller_info = {"caller_filename": "Unknown", "caller_lineno": 0}
        for frame_info in inspect.stack()[1:]:
            if not frame_info.filename.endswith(EXCLUDE):
                caller_info['caller_filename'] = os.path.basename(
                    frame_info.filename)
                caller_info['caller_lineno'] = frame_info.lineno
                break
        return caller_info

    def _exc_info(self) -> bool:
        """
        Returns:
            bool: True when an exception is currently being handled.
        """

        return sys.exc_info()[0] is not None

    def _base(self, func: Callable[..., None], message: str) -> None:
        """
        Emits a message through ``func`` with caller details and exception context.

        Args:
            func (Callable[..., None]): Bound method of the wrapped logging.Logger.
            message (str): The log message.
        """

        func(message, extra=self._stack_trace(), exc_info=self._exc_info())

    def debug(self, message: str) -> None:
        """Logs a debug message."""

        self._base(self._logger.debug, message)

    def info(self, message: str) -> None:
        """Logs an info message."""

        self._base(self._logger.info, message)

    def warning(self, message: str) -> None:
        """Logs a warning message."""

        self._base(self._logger.warning, message)

    def critical(self, message: str) -> None:
        """Logs a critical message."""

        self._base(self._logger.critical, message)

    def error(self, message: str) -> None:
        """Logs an error message."""

        self._base(self._logger.error, message)


@lru_cache(maxsize=None)
def get_logger(name: str) -> Logger:
    """
    Returns a shared Logger per name so hot paths do not reinstall handlers on every call.

    Args:
        name (str): Logger name.

    Returns:
        Logger: The cached instance.
    """

    logger = Logger(name)
    _CREATED[name] = logger
    return logger


def set_level(level: str) -> None:
    """
    Sets ``level`` on every logger handed out by :func:`get_logger` so far; loggers created later
    read it from VULCAN_LOG_LEVEL. The package logger itself never gets a handler.

    Args:
        level (str): Level name, e.g. "WARNING".
    """

    os.environ["VULCAN_LOG_LEVEL"] = level.upper()
    for logger in list(_CREATED.values()):
        logger.set_level(level)
