#!/usr/bin/env python3
"""
Integrate the homogeneous SIR model
"""
import argparse
import logging
import sys

from fbsir.cli import cmd_ode
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_ode.py",
        description="Integrate the spatially homogeneous model started from the initial profiles at r = 0",
        formatter_class=FbsirArgparseFormatter,
    )
    parser.add_argument(
        "-c", "--config", help="JSON scenario file", type=str, required=True
    )
    parser.add_argument(
        "--t_end", help="Final time (default: time.t_end)", type=float, default=None
    )
    parser.add_argument(
        "--dt", help="Time step (default: time.dt)", type=float, default=None
    )
    parser.add_argument(
        "--stride", help="Keep one sample every stride steps", type=int, default=1
    )
    parser.add_argument(
        "-o",
        "--outdir",
        help="Output directory (default: the scenario's output.outdir)",
        type=str,
        default=None,
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    values = parser.parse_args()
    setup_logging(values.verbose)

    logging.debug("Input Arguments:-")
    for arg, value in sorted(vars(values).items()):
        logging.debug("%s: %r", arg, value)

    sys.exit(
        cmd_ode(
            values.config,
            t_end=values.t_end,
            dt=values.dt,
            stride=values.stride,
            outdir=values.outdir,
        )
    )
