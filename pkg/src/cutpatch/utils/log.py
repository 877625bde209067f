"""Logging setup for the command-line tool."""

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose=False, quiet=False, stream=None):
    """Install one stderr handler on the ``cutpatch`` logger.

    Args:
        verbose: Show INFO messages (default level is WARNING)
        quiet: Only show errors; wins over ``verbose``
        stream: Output stream (default: sys.stderr)

    Returns:
        logging.Logger: the configured package logger
    """
    level = logging.WARNING
    if verbose:
        level = logging.INFO
    if quiet:
        level = logging.ERROR

    logger = logging.getLogger("cutpatch")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
