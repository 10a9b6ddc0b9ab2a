import logging
import math

import numpy as np
from numba import njit
from scipy.optimize import bisect

logger = logging.getLogger(__name__)


def bessel_j(nu, x, tol=1e-17, max_terms=300):
    """
    Bessel function of the first kind from its power series

        J_nu(x) = sum_k (-1)^k / (k! Gamma(k + nu + 1)) (x / 2)^(2k + nu)

    The sum stops once a term is below tol times the largest term seen, so the
    absolute error is of the order of machine precision times that term. This
    is accurate for the small arguments used to locate the first zero.

    Args:
        nu (float): order, should be larger than -1
        x (float or np.ndarray): strictly positive argument(s)
        tol (float): relative truncation tolerance
        max_terms (int): maximum number of series terms

    Returns:
        float or np.ndarray: J_nu(x)

    """
    if nu <= -1:
        raise ValueError(f"nu should be larger than -1, got {nu}")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("x should be strictly positive")

    half = x / 2.0
    term = half**nu / math.gamma(nu + 1.0)
    total = term.copy()
    largest = np.abs(term)
    q = -(half**2)
    for k in range(1, max_terms):
        term = term * q / (k * (k + nu))
        total = total + term
        largest = np.maximum(largest, np.abs(term))
        if np.all(np.abs(term) <= tol * largest):
            break
    else:
        logger.warning(f"Bessel series did not converge in {max_terms} terms")

    if total.ndim:
        return total
    return float(total)


def first_bessel_zero(nu, step=0.05, xtol=1e-13):
    """
    First positive zero of J_nu. A sign change is bracketed by scanning in
    steps of `step` and then refined with bisection.

    Args:
        nu (float): order, larger than -1
        step (float): scan step
        xtol (float): absolute tolerance of the bisection

    Returns:
        float: j_{nu,1}

    """
    # j_{nu,1} < nu + 1.9 nu^(1/3) + 1 for nu > -1
    upper = nu + 1.9 * abs(nu) ** (1.0 / 3.0) + 3.0
    xs = np.arange(step, upper + step, step)
    values = bessel_j(nu, xs)
    crossing = np.nonzero(np.sign(values[1:]) != np.sign(values[:-1]))[0]
    if not len(crossing):
        raise ValueError(f"Could not bracket the first zero of J_{nu} below {upper}")
    left = xs[crossing[0]]
    right = xs[crossing[0] + 1]
    logger.debug(f"First zero of J_{nu} bracketed in [{left}, {right}]")
    return bisect(lambda x: bessel_j(nu, x), left, right, xtol=xtol, maxiter=200)


@njit
def thomas_solve(lower, diag, upper, rhs):
    """
    Solves a tridiagonal system with the Thomas algorithm.

    Row i reads lower[i] x[i - 1] + diag[i] x[i] + upper[i] x[i + 1] = rhs[i],
    lower[0] and upper[-1] are ignored. No pivoting, the matrix should be
    diagonally dominant.

    Args:
        lower (np.ndarray): sub diagonal
        diag (np.ndarray): diagonal
        upper (np.ndarray): super diagonal
        rhs (np.ndarray): right hand side

    Returns:
        np.ndarray: solution

    """
    n = rhs.shape[0]
    c_prime = np.empty(n)
    d_prime = np.empty(n)
    x = np.empty(n)
    c_prime[0] = upper[0] / diag[0]
    d_prime[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * c_prime[i - 1]
        if i < n - 1:
            c_prime[i] = upper[i] / denom
        else:
            c_prime[i] = 0.0
        d_prime[i] = (rhs[i] - lower[i] * d_prime[i - 1]) / denom
    x[n - 1] = d_prime[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d_prime[i] - c_prime[i] * x[i + 1]
    return x


def observed_order(coarse_error, fine_error, ratio=2.0):
    """
    Observed convergence order between two refinement levels.

    Args:
        coarse_error (float): error on the coarse level
        fine_error (float): error on the level refined by `ratio`
        ratio (float): refinement ratio

    Returns:
        float: log(coarse / fine) / log(ratio), nan if either error is zero

    """
    if coarse_error <= 0 or fine_error <= 0:
        return float("nan")
    return math.log(coarse_error / fine_error) / math.log(ratio)
