#!/usr/bin/env python3
"""
Sweep a parameter of a scenario
"""
import argparse
import logging
import os

os.environ["OPENBLAS_NUM_THREADS"] = "1"
os.environ["MKL_NUM_THREADS"] = "1"

import sys
import textwrap
from datetime import datetime

from fbsir.cli import cmd_sweep
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_sweep.py",
        description="Classify a scenario over a range of h0, mu, beta or b, or bisect for the critical h0",
        formatter_class=FbsirArgparseFormatter,
        epilog=textwrap.dedent(
            """\
        Writes <name>_sweep_<param>.csv with the columns
        value,classification,h_end,sup_I_end.
        With --bisect, start and stop are the bracket on h0; its ends should
        classify VANISHING and SPREADING.
        Exit status: 0 ok, 1 invalid scenario, 3 invalid bracket.
            """
        ),
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    parser.add_argument(
        "-c", "--config", help="JSON scenario file", type=str, required=True
    )
    parser.add_argument(
        "-p",
        "--param",
        help="Parameter to sweep",
        type=str,
        choices=["h0", "mu", "beta", "b"],
        default="h0",
    )
    parser.add_argument("--start", help="First value", type=float, required=True)
    parser.add_argument("--stop", help="Last value", type=float, required=True)
    parser.add_argument("--steps", help="Number of values", type=int, default=8)
    parser.add_argument(
        "--bisect", help="Bisect for the critical h0", action="store_true"
    )
    parser.add_argument(
        "--iterations", help="Bisection iterations", type=int, default=8
    )
    parser.add_argument(
        "-n",
        "--nproc",
        type=int,
        help="number of processors to use in parallel",
        default=1,
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
            log_dir, datetime.utcnow().strftime("fbsir_sweep_%Y_%m_%d_%H_%M_%S_%f.log")
        )
    setup_logging(values.verbose, log_file)

    logging.info("Input Arguments:-")
    for arg, value in sorted(vars(values).items()):
        logging.info("%s: %r", arg, value)

    sys.exit(
        cmd_sweep(
            values.config,
            values.param,
            start=values.start,
            stop=values.stop,
            steps=values.steps,
            bisect=values.bisect,
            iterations=values.iterations,
            nproc=values.nproc,
            outdir=values.outdir,
        )
    )
