"""
Loguru sinks and rich consoles shared by the library and the CLI.

Log records go to stderr so that a JSON report on stdout stays machine readable.
"""

import contextlib
import os
import sys
from pathlib import Path
from typing import Iterator, Optional, Union

from loguru import logger  # noqa
from rich.console import Console

stdout_console = Console(markup=True)
stderr_console = Console(markup=True, stderr=True)

LOG_LEVEL_ENV = "TWISTRED_LOG_LEVEL"

_TIME = "<green>{time:HH:mm:ss.SSS}</green>"
CONSOLE_FORMAT = _TIME + " <level>{level: <7}</level> | <level>{message}</level>"
DETAILED_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} {level: <7} "
    "{name}:{function}:{line} | {thread.name} | {message}"
)

_state = {"verbose": False, "sink": None}


def reset_logger(reset_all: bool = False, debug: bool = False) -> int:
    """(Re)install the stderr sink.

    Args:
        reset_all: drop every other sink as well, including loguru's default one.
        debug: DEBUG level with source locations; otherwise the level is read
            from ``TWISTRED_LOG_LEVEL`` (default INFO).
    """
    sink: Optional[int] = _state["sink"]
    if sink is not None:
        with contextlib.suppress(ValueError):
            logger.remove(sink)
    if reset_all:
        logger.remove()

    level = "DEBUG" if debug else os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    _state["sink"] = logger.add(
        sys.stderr,
        format=DETAILED_FORMAT if debug else CONSOLE_FORMAT,
        level=level,
    )
    return _state["sink"]


@contextlib.contextmanager
def log_to_file(file_path: Union[str, Path], level: str = "DEBUG") -> Iterator[int]:
    """Mirror log records of the enclosed block into a file (appended, uncolored)."""
    handle = logger.add(
        str(file_path),
        format=DETAILED_FORMAT,
        level=level,
        colorize=False,
        enqueue=True,
    )
    try:
        yield handle
    finally:
        with contextlib.suppress(ValueError):
            logger.remove(handle)


def set_verbose(verbose: bool) -> bool:
    _state["verbose"] = verbose
    reset_logger(debug=verbose)
    return verbose


def verbose_print(t, stderr: bool = False):
    """Rich-print only in verbose mode."""
    if _state["verbose"]:
        (stderr_console if stderr else stdout_console).print(t)


reset_logger(reset_all=True)
