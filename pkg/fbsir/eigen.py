"""
Principal Dirichlet eigenvalue of the Laplacian on a ball and its inversion
into the critical radius of the infected region.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

from fbsir.errors import NoCriticalRadiusError
from fbsir.model import compute_r0
from fbsir.utils.math import first_bessel_zero

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (1, 2, 3)


@dataclass(frozen=True)
class EigenQuery:
    """
    Ball on which the eigenvalue is computed.

    Args:
        radius (float): radius of the ball
        n (int): dimension

    """

    radius: float
    n: int

    def __post_init__(self):
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ValueError(f"radius should be strictly positive, got {self.radius}")
        if self.n not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"unsupported dimension n={self.n}, should be 1, 2 or 3")


def bessel_order(n):
    """Order n/2 - 1 of the Bessel function whose zeros give the eigenvalues."""
    return n / 2.0 - 1.0


@lru_cache(maxsize=None)
def first_zero(n):
    """
    First positive zero of J_{n/2 - 1}.

    Args:
        n (int): dimension

    Returns:
        float: j_{n/2-1,1}

    """
    if n not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"unsupported dimension n={n}, should be 1, 2 or 3")
    zero = first_bessel_zero(bessel_order(n))
    logger.debug(f"First Bessel zero for n={n}: {zero!r}")
    return zero


def lambda1(query):
    """
    Principal Dirichlet eigenvalue of -Laplacian on the ball of the query,
    (j_{nu,1} / R)^2 with nu = n/2 - 1.

    Args:
        query (EigenQuery): ball

    Returns:
        float: eigenvalue

    """
    return (first_zero(query.n) / query.radius) ** 2


def critical_radius(params):
    """
    Radius h0* at which the principal eigenvalue equals
    (mu2 + alpha) (R0 - 1) / d2.

    Args:
        params (ModelParams): model constants

    Returns:
        float: h0*

    Raises:
        NoCriticalRadiusError: R0 <= 1

    """
    r0 = compute_r0(params)
    if r0 <= 1:
        raise NoCriticalRadiusError(
            f"the critical radius only exists for R0 > 1, got R0 = {r0:.6g}"
        )
    target = (params.mu2 + params.alpha) * (r0 - 1.0) / params.d2
    return first_zero(params.n) / math.sqrt(target)
