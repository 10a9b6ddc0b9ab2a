#!/usr/bin/env python3
"""
Print the thresholds of a scenario
"""
import argparse
import sys

from fbsir.cli import cmd_thresholds
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_thresholds.py",
        description="Print R0, the critical radius h0*, the vanishing bounds and the predicted regime",
        formatter_class=FbsirArgparseFormatter,
    )
    parser.add_argument(
        "-c", "--config", help="JSON scenario file", type=str, required=True
    )
    parser.add_argument(
        "--no_table",
        help="Print plain key=value lines, don't use rich.table",
        action="store_true",
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    values = parser.parse_args()
    setup_logging(values.verbose)

    sys.exit(cmd_thresholds(values.config, no_table=values.no_table))
