import sys
from pathlib import Path
from typing import TextIO, Union

from loguru import logger

MESSAGE_FORMAT = ('<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <green>{elapsed}</green> | '
                  '<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>')


def verbosity_level(verbose: int) -> str:
    if verbose <= 0:
        return "WARNING"
    elif verbose == 1:
        return "INFO"
    return "DEBUG"


def add_logging_sink(sink: Union[TextIO, str, Path], verbose: int, colorize: bool = False,
                     serialize: bool = False) -> int:
    """Adds a logging sink to the global process logger.

    Parameters
    ----------
    sink
        A file path or a stream like ``sys.stderr``.
    verbose
        Verbosity of the logger.
    colorize
        Whether to use the colorization options from :mod:`loguru`.
    serialize
        Whether the logs should be converted to JSON before they're dumped
        to the logging sink.

    Returns
    -------
        The loguru handler id.

    """
    if isinstance(sink, Path):
        sink = str(sink)
    return logger.add(sink, colorize=colorize, level=verbosity_level(verbose), format=MESSAGE_FORMAT,
                      serialize=serialize)


def configure_logging_to_terminal(verbose: int):
    """Sets up logging to ``sys.stderr``, keeping ``sys.stdout`` free for reports.

    Parameters
    ----------
    verbose
        Verbosity of the logger.

    """
    logger.remove()  # Clear default configuration
    add_logging_sink(sys.stderr, verbose, colorize=True)
