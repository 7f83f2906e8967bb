# -*- coding: utf-8 -*-
import configparser
import logging

from functools import wraps
from time import perf_counter

from psutil import cpu_count, virtual_memory

from matmi.exceptions import InputError

logger = logging.getLogger(__name__)


########################################################################
####################### Configuration files ###########################

_CONFIG_SECTION_ = "matmi"


def read_config(path):
    """Read a flat key-value configuration file.

    The file holds one ``key = value`` pair per line. Lines starting with
    ``#`` are comments. There are no sections.

    Parameters
    ----------
    path : :obj:`str`
        Path to the configuration file

    Returns
    -------
    config : :obj:`dict`
        Mapping of keys to their (string) values
    """
    logger.debug(f"Reading configuration file {path}")

    parser = configparser.ConfigParser(comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",),
                                       interpolation=None)
    # keep key case as written
    parser.optionxform = str

    try:
        with open(path) as f:
            parser.read_string(f"[{_CONFIG_SECTION_}]\n" + f.read())
    except OSError as err:
        raise InputError(f"Cannot read configuration file {path}: {err}")
    except configparser.Error as err:
        raise InputError(f"Malformed configuration file {path}: {err}")

    config = dict(parser[_CONFIG_SECTION_])
    logger.debug(f"Configuration keys: {', '.join(sorted(config))}")
    return config


def convert_value(value, kind):
    """Convert a configuration string to the type of a default value

    Parameters
    ----------
    value : :obj:`str`
        Raw value as read from a configuration file or the command line
    kind : :obj:`type`
        Target type. One of bool, int, float or str

    Returns
    -------
    converted
        :attr:`value` converted to :attr:`kind`. The strings "none" and
        "null" map to None.
    """
    if not isinstance(value, str):
        return value

    if value.strip().lower() in ("none", "null", ""):
        return None

    if kind is bool:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise InputError(f"Expected a boolean, got '{value}'")

    try:
        return kind(value.strip())
    except ValueError:
        raise InputError(f"Expected {kind.__name__}, got '{value}'")


def parse_float_list(inp):
    """Parse a comma separated list of numbers e.g "0,0.06,0.12"

    Parameters
    ----------
    inp : :obj:`str`
        Comma separated numbers

    Returns
    -------
    values : :obj:`list`
        The parsed floats
    """
    try:
        values = [float(_) for _ in inp.split(",") if _.strip() != ""]
    except ValueError:
        raise InputError(f"Cannot parse number list '{inp}'")

    logger.debug(f"Parsed number list {inp} --> {values}")
    return values


########################################################################
########################### Some useful functions ######################

def timed(func):
    """Decorator logging the wall time of each call of a command"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start = perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            logger.info(f"{func.__name__} took "
                        f"{perf_counter() - start:.2f} s")
    return wrapper


def resource_defaults(n_tasks=None):
    """Number of worker processes to use for concurrent runs

    One worker per physical core, further limited by :attr:`n_tasks` and by
    roughly 1GB of RAM per worker.

    Parameters
    ----------
    n_tasks : :obj:`int`
        Number of independent tasks that will be run

    Returns
    -------
    n_workers : :obj:`int`
        Number of workers
    """
    _GB_ = 2**30
    cores = cpu_count(logical=False) or cpu_count() or 1
    mems = virtual_memory()

    logger.debug(f"Total RAM size: ~{(mems.total / _GB_):.2f} GB")
    logger.debug(f"Total number of Cores: {cores}")

    n_workers = max(1, min(cores, int(mems.available // _GB_) or 1))
    if n_tasks is not None:
        n_workers = max(1, min(n_workers, n_tasks))

    logger.info(f"Using {n_workers} workers")
    return n_workers


STATUS_COLOURS = {True: "\033[0;92m", False: "\033[0;91m"}
COLOUR_OFF = "\033[0m"


def status_text(passed, colour=True):
    """Green "passed" or red "FAILED" for terminal summaries"""
    text = "passed" if passed else "FAILED"
    if not colour:
        return text
    return f"{STATUS_COLOURS[bool(passed)]}{text}{COLOUR_OFF}"
