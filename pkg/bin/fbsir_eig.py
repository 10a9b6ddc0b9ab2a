#!/usr/bin/env python3
"""
Principal Dirichlet eigenvalue of a ball
"""
import argparse
import sys

from fbsir.cli import cmd_eig
from fbsir.utils.misc import FbsirArgparseFormatter, setup_logging

if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        prog="fbsir_eig.py",
        description="Print the principal Dirichlet eigenvalue of -Laplacian on the ball of radius R in dimension n",
        formatter_class=FbsirArgparseFormatter,
    )
    parser.add_argument(
        "-n", "--dimension", help="Dimension (1, 2 or 3)", type=int, default=1
    )
    parser.add_argument(
        "-r", "--radius", help="Radius of the ball", type=float, required=True
    )
    parser.add_argument("-v", "--verbose", help="Be verbose", action="store_true")
    values = parser.parse_args()
    setup_logging(values.verbose)

    sys.exit(cmd_eig(values.dimension, values.radius))
