#!/usr/bin/env python3
"""
Run a free boundary SIR scenario
"""
import argparse
import logging
import os
import sys
import textwrap
from datetime import datetime

from fbsir.cli import cmd_run
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_run.py",
        description="Simulate a scenario and classify it as spreading or vanishing",
        formatter_class=FbsirArgparseFormatter,
        epilog=textwrap.dedent(
            """\
        Writes <name>_series.csv with the columns
        t,h,dhdt,sup_S,sup_I,sup_R,mass_I,balance_residual.
        The threshold report is printed as key=value lines, the last line is
        classification=SPREADING|VANISHING|UNDECIDED.
        Exit status: 0 ok, 1 invalid scenario, 2 solver failure.
            """
        ),
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    parser.add_argument(
        "-c", "--config", help="JSON scenario file", type=str, required=True
    )
    parser.add_argument(
        "-o",
        "--outdir",
        help="Output directory (default: the scenario's output.outdir)",
        type=str,
        default=None,
    )
    parser.add_argument(
        "--fixed_domain",
        help="Solve on the fixed ball of radius L instead of the moving domain",
        action="store_true",
    )
    parser.add_argument(
        "--profiles", help="Write the saved S, I, R profiles", action="store_true"
    )
    parser.add_argument("--svg", help="Write SVG charts", action="store_true")
    parser.add_argument("--h5", help="Write an HDF5 archive", action="store_true")
    parser.add_argument(
        "--dump_config",
        help="Write the parsed scenario, defaults filled in, to this file",
        type=str,
        default=None,
    )
    parser.add_argument(
        "--no_progress", help="Do not show the progress bar", action="store_true"
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
            log_dir, datetime.utcnow().strftime("fbsir_run_%Y_%m_%d_%H_%M_%S_%f.log")
        )
    setup_logging(values.verbose, log_file)

    logging.info("Input Arguments:-")
    for arg, value in sorted(vars(values).items()):
        logging.info("%s: %r", arg, value)

    sys.exit(
        cmd_run(
            values.config,
            fixed_domain=values.fixed_domain,
            profiles=values.profiles,
            svg=True if values.svg else None,
            h5=True if values.h5 else None,
            outdir=values.outdir,
            dump_config=values.dump_config,
            progress=not values.no_progress,
        )
    )
