#!/usr/bin/env python3
"""
Grid refinement study of a scenario
"""
import argparse
import logging
import os
import sys
from datetime import datetime

from fbsir.cli import cmd_convergence
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_convergence.py",
        description="Rerun a scenario with halved grid spacings and time step, report observed orders",
        formatter_class=FbsirArgparseFormatter,
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    parser.add_argument(
        "-c", "--config", help="JSON scenario file", type=str, required=True
    )
    parser.add_argument(
        "-l", "--levels", help="Number of refinement levels", type=int, default=3
    )
    parser.add_argument(
        "-t",
        "--times",
        help="Times at which the mass balance residual is compared",
        nargs="+",
        type=float,
        default=[1.0, 5.0, 10.0],
    )
    parser.add_argument(
        "-r",
        "--refine",
        help="Halve dt and the grid spacings together, only the spacings, or only dt",
        choices=["both", "space", "time"],
        default="both",
    )
    parser.add_argument(
        "-o",
        "--outdir",
        help="Output directory (default: the scenario's output.outdir)",
        type=str,
        default=None,
    )
    parser.add_argument(
        "--no_log_file", help="Do not write a log file", action="store_true"
    )
    values = parser.parse_args()

    log_file = None
    if not values.no_log_file:
        log_dir = values.outdir or "."
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(
            log_dir,
            datetime.utcnow().strftime("fbsir_convergence_%Y_%m_%d_%H_%M_%S_%f.log"),
        )
    setup_logging(values.verbose, log_file)

    logging.info("Input Arguments:-")
    for arg, value in sorted(vars(values).items()):
        logging.info("%s: %r", arg, value)

    sys.exit(
        cmd_convergence(
            values.config,
            levels=values.levels,
            times=tuple(values.times),
            outdir=values.outdir,
            refine=values.refine,
        )
    )
