#!/usr/bin/env python3
"""
delaylab Utilities Module

This module provides shared utility functions including logging setup and common helpers
used throughout delaylab. It consolidates cross-cutting concerns like logging
configuration and number formatting so every component reports in the same way.

Logging goes to stderr. Standard output is reserved for machine-readable reports
(the CLI writes CSV/JSON to stdout when asked to with ``--out -``), so nothing in
this module ever prints to stdout.

Functions:
    setup_logging: Configure the delaylab logger with bracket formatting and optional rotation
    get_logger: Retrieve component loggers that share the configured handlers
    format_float: Round-trip safe, locale independent float formatting

Project: delaylab
Version: 1.0.0
License: MIT
"""

import logging
import logging.handlers
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

# Try to import colorama for colored output
try:
    import colorama
    from colorama import Fore, Style
    COLORAMA_AVAILABLE = True
except ImportError:
    COLORAMA_AVAILABLE = False
    colorama = None

    class Fore:
        """Dummy Fore class when colorama is not available."""
        RED = ''
        GREEN = ''
        YELLOW = ''
        BLUE = ''
        CYAN = ''
        WHITE = ''
        RESET = ''

    class Style:
        """Dummy Style class when colorama is not available."""
        DIM = ''
        NORMAL = ''
        BRIGHT = ''
        RESET_ALL = ''


VALID_LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
ROOT_LOGGER_NAME = "delaylab"


class BracketFormatter(logging.Formatter):
    """
    Log formatter producing ``[timestamp][LEVEL][logger.name] message`` lines.

    The bracket layout stays readable on a terminal and is trivial to split when a
    sweep log is post-processed. Colors are applied per level only when requested;
    the file handler always uses the plain variant.
    """

    def __init__(self, use_color_output: bool = False):
        super().__init__()
        self.use_colors = use_color_output and COLORAMA_AVAILABLE

        if self.use_colors:
            self.LEVEL_COLORS = {
                'DEBUG': Fore.CYAN,
                'INFO': Fore.GREEN,
                'WARNING': Fore.YELLOW,
                'ERROR': Fore.RED,
                'CRITICAL': Fore.RED + Style.BRIGHT
            }
            self.COMPONENT_COLOR = Fore.BLUE
            self.TIMESTAMP_COLOR = Fore.WHITE + Style.DIM
            self.RESET = Style.RESET_ALL
        else:
            self.LEVEL_COLORS = {}
            self.COMPONENT_COLOR = ''
            self.TIMESTAMP_COLOR = ''
            self.RESET = ''

    def format(self, record: logging.LogRecord) -> str:
        """
        Format a record, appending the traceback when one is attached.

        Args:
            record (LogRecord): Log record containing message and metadata

        Returns:
            str: Formatted log line, optionally with ANSI color codes
        """
        timestamp = datetime.fromtimestamp(
            record.created,
            tz=timezone.utc
        ).strftime('%Y-%m-%d %H:%M:%S UTC')
        message_text = record.getMessage()

        if self.use_colors:
            level_color = self.LEVEL_COLORS.get(record.levelname, '')
            formatted = (
                f"{self.TIMESTAMP_COLOR}[{timestamp}]{self.RESET}"
                f"{level_color}[{record.levelname}]{self.RESET}"
                f"{self.COMPONENT_COLOR}[{record.name}]{self.RESET} "
                f"{level_color}{message_text}{self.RESET}"
            )
        else:
            formatted = f"[{timestamp}][{record.levelname}][{record.name}] {message_text}"

        if record.exc_info:
            formatted = f"{formatted}\n{self.formatException(record.exc_info)}"
        return formatted


def _resolve_color(use_color: Optional[bool]) -> bool:
    """
    Decide whether console output should be colored.

    An explicit argument wins. Otherwise NO_COLOR disables colors, FORCE_COLOR
    enables them, and in all other cases colors follow whether stderr is a TTY.
    """
    if not COLORAMA_AVAILABLE:
        return False
    if use_color is not None:
        return use_color

    if os.environ.get('NO_COLOR', '').lower() in ('1', 'true', 'yes'):
        return False
    if os.environ.get('FORCE_COLOR', '').lower() in ('1', 'true', 'yes'):
        return True
    return hasattr(sys.stderr, 'isatty') and sys.stderr.isatty()


def setup_logging(log_level: str = "INFO", log_dir: Optional[str] = None,
                  use_color: Optional[bool] = None) -> logging.Logger:
    """
    Set up the ``delaylab`` logger with bracket formatting and optional file rotation.

    The console handler writes to stderr so that reports piped to stdout stay clean.
    When a log directory is given, a rotating file handler keeps ``delaylab.log``
    bounded (10MB per file, 5 backups) which matters for long parameter sweeps run
    at DEBUG level.

    Args:
        log_level (str): Python logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir (Optional[str]): Directory for ``delaylab.log``. No file logging when None.
        use_color (Optional[bool]): Force colors on or off. Auto-detected when None.

    Returns:
        logging.Logger: The configured ``delaylab`` logger

    Raises:
        ValueError: If log_level is not a valid Python logging level
        PermissionError: If the log directory cannot be created

    Example:
        ```python
        logger = setup_logging("DEBUG", "./logs")
        logger.info("Sweep starting")
        # [2025-01-15 10:30:45 UTC][INFO][delaylab] Sweep starting
        ```

    Note:
        Calling this more than once updates the level and adds a missing file
        handler; handlers are never duplicated, so tests and the CLI can both
        call it safely.
    """
    log_level_upper = log_level.upper()
    if log_level_upper not in VALID_LOG_LEVELS:
        raise ValueError(f"Invalid log level '{log_level}'. Must be one of: {VALID_LOG_LEVELS}")

    numeric_level = getattr(logging, log_level_upper)

    logger = logging.getLogger(ROOT_LOGGER_NAME)

    # Already configured: update the level, and add the file handler if a log
    # directory shows up later (the CLI only learns it after loading the run file)
    if logger.handlers:
        logger.setLevel(numeric_level)
        for handler in logger.handlers:
            handler.setLevel(numeric_level)
        has_file = any(isinstance(h, logging.handlers.RotatingFileHandler) for h in logger.handlers)
        if log_dir and not has_file:
            _add_file_handler(logger, log_dir, numeric_level)
        return logger

    logger.setLevel(numeric_level)
    logger.propagate = False

    colors = _resolve_color(use_color)
    if colors:
        colorama.init(autoreset=True, strip=False, convert=False)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(BracketFormatter(use_color_output=colors))
    logger.addHandler(console_handler)

    log_file_path = _add_file_handler(logger, log_dir, numeric_level) if log_dir else None

    logger.debug(f"Logging configured - level: {log_level_upper}, "
                 f"file: {log_file_path or 'disabled'}, colors: {colors}")
    return logger


def _add_file_handler(logger: logging.Logger, log_dir: str, level: int) -> Optional[Path]:
    """
    Attach a rotating ``delaylab.log`` handler (10MB per file, 5 backups).

    Returns:
        Optional[Path]: The log file, or None when it could not be opened

    Raises:
        PermissionError: If the log directory cannot be created
    """
    log_path = Path(log_dir)
    try:
        log_path.mkdir(parents=True, exist_ok=True)
    except PermissionError as e:
        raise PermissionError(f"Cannot create log directory '{log_dir}': {e}")

    log_file_path = log_path / "delaylab.log"
    try:
        file_handler = logging.handlers.RotatingFileHandler(
            filename=log_file_path,
            maxBytes=10 * 1024 * 1024,  # 10MB per file
            backupCount=5,
            encoding='utf-8',
            mode='a'
        )
    except PermissionError as e:
        logger.error(f"Cannot create log file '{log_file_path}': {e}")
        logger.warning("Continuing with console logging only")
        return None

    file_handler.setLevel(level)
    file_handler.setFormatter(BracketFormatter(use_color_output=False))
    logger.addHandler(file_handler)
    return log_file_path


def get_logger(name: str = ROOT_LOGGER_NAME) -> logging.Logger:
    """
    Get a component logger by name.

    Logger names are hierarchical: ``delaylab.recurrence``, ``delaylab.analysis``,
    ``delaylab.sweep`` and so on. Child loggers propagate to the ``delaylab``
    logger configured by setup_logging(), so they pick up its handlers and level
    without further setup. Before setup_logging() runs, records fall through to
    Python's last-resort handler (WARNING and above on stderr).

    Args:
        name (str): Logger name to retrieve. Defaults to the package logger.

    Returns:
        logging.Logger: Logger instance
    """
    return logging.getLogger(name)


def format_float(value: float) -> str:
    """
    Format a float with 17 significant digits.

    Seventeen digits make every IEEE double round-trip exactly. The result never
    depends on the process locale: Python's format mini-language always uses a
    decimal point and no grouping. Non-finite values are written as ``nan``,
    ``inf`` and ``-inf``.

    Example:
        ```python
        format_float(0.1)   # '0.10000000000000001'
        format_float(2.0)   # '2'
        ```
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, '.17g')
