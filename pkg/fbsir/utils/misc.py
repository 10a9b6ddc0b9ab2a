import argparse
import json
import logging
import os

import numpy as np
from rich.logging import RichHandler

logger = logging.getLogger(__name__)

LOGGING_FORMAT = "%(asctime)s - %(funcName)s -%(name)s - %(levelname)s - %(message)s"


def check_file_exist(file):
    """

    Args:
        file: Path of file to check

    Raises:
        IOError

    """
    if not os.path.isfile(file):
        raise IOError(f"{file} not found")


def setup_logging(verbose=False, log_file=None):
    """
    Configures the root logger for the scripts. Logs go to `log_file` when one
    is given, to a rich console handler otherwise.

    Args:
        verbose (bool): debug level instead of info
        log_file (str): path of the log file

    """
    level = logging.DEBUG if verbose else logging.INFO
    if log_file:
        logging.basicConfig(filename=log_file, level=level, format=LOGGING_FORMAT)
    else:
        logging.basicConfig(
            level=level,
            format=LOGGING_FORMAT,
            handlers=[RichHandler(rich_tracebacks=True)],
        )


class FbsirEncoder(json.JSONEncoder):
    """
    JSON encoder which understands numpy scalars and arrays
    """

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        else:
            return super(FbsirEncoder, self).default(obj)


class FbsirArgparseFormatter(
    argparse.ArgumentDefaultsHelpFormatter, argparse.RawTextHelpFormatter
):
    """
    Allows both Raw Text Formatting and Default Args
    """

    pass
