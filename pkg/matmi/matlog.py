"""Logging set-up of the matmi package.

Importing this module attaches a console handler to the root logger. Only
records of the ``matmi`` loggers and of captured warnings pass it. The
command line later adds a log file with :func:`log_to_file` and picks the
verbosity with :func:`set_level`.
"""

import logging
import os
import sys
import warnings

PACKAGE = "matmi"
LOG_FILE = "matmi.log"
CONSOLE_LEVEL = "INFO"

LOG_FORMAT = "%(asctime)s - %(name)-20s - %(levelname)-8s - %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

logger = logging.getLogger(PACKAGE)


class PackageFilter(logging.Filter):
    """Pass records of the matmi loggers and of captured warnings"""

    def filter(self, record):
        name = record.name
        return (name == PACKAGE or name.startswith(PACKAGE + ".") or
                name == "py.warnings")


def _prepare(handler, level):
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
    handler.setLevel(level)
    handler.addFilter(PackageFilter())
    return handler


def _package_handlers(root=None):
    root = root or logging.getLogger()
    return [h for h in root.handlers
            if any(isinstance(f, PackageFilter) for f in h.filters)]


def to_level(level):
    """Logging level from a name such as "debug" or a number

    Raises
    ------
    ValueError
        For unknown names
    """
    if isinstance(level, int) or str(level).isdigit():
        return int(level)
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError(f"Unknown logging level '{level}'")
    return value


def set_level(level):
    """Set the level of the matmi handlers and of the package logger"""
    level = to_level(level)
    for handler in _package_handlers():
        handler.setLevel(level)
    logger.setLevel(level)
    logger.debug(f"Logging level {logging.getLevelName(level)}")


def log_to_file(path=LOG_FILE):
    """Write the matmi log to :attr:`path` instead of any previous file

    A ``.log`` extension is added if the name has none.

    Returns
    -------
    handler : :obj:`logging.FileHandler`
    """
    if not os.path.splitext(path)[1]:
        path += ".log"

    root = logging.getLogger()
    for handler in _package_handlers(root):
        if isinstance(handler, logging.FileHandler):
            root.removeHandler(handler)
            handler.close()

    level = logger.level or logging.getLevelName(CONSOLE_LEVEL)
    handler = _prepare(logging.FileHandler(path), level)
    root.addHandler(handler)
    logger.debug(f"Logging to {path}")
    return handler


def format_warning(message, category, filename, lineno, file=None,
                   line=None):
    """Single line warnings naming the category and origin"""
    return (f"{category.__name__} ({os.path.basename(filename)}:{lineno}): "
            f"{message}")


def log_uncaught(extype, exval, extraceback):
    """Exception hook sending uncaught exceptions to the log"""
    if issubclass(extype, KeyboardInterrupt):
        sys.__excepthook__(extype, exval, extraceback)
        return
    logger.critical(f"Uncaught {extype.__name__}: {exval}",
                    exc_info=(extype, exval, extraceback))


def configure():
    """Console output for the package, done once per process"""
    root = logging.getLogger()
    if any(not isinstance(h, logging.FileHandler)
           for h in _package_handlers(root)):
        return

    warnings.filterwarnings("once")
    logging.captureWarnings(True)
    logging.getLogger("py.warnings").setLevel(logging.WARNING)

    root.setLevel(logging.DEBUG)
    root.addHandler(_prepare(logging.StreamHandler(), CONSOLE_LEVEL))


configure()
sys.excepthook = log_uncaught
warnings.formatwarning = format_warning
