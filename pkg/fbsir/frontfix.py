"""
Grids and spatial operators of the front fixing formulation.

S lives on the physical grid r_i = i dr, i = 0..N_L. I and R live on the
computational grid s_j = j ds, j = 0..N_h, of the fixed interval [0, h0]. The
map s = h0 r / h(t) freezes the moving front at s = h0.
"""
import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from fbsir.errors import FrontEscapeError

logger = logging.getLogger(__name__)

MIN_INTERVALS = 16
ESCAPE_FRACTION = 0.95


@dataclass(frozen=True)
class GridSpec:
    """
    Spatial discretisation.

    Args:
        L (float): truncation radius of the susceptible domain
        n_l (int): number of intervals of the physical grid
        n_h (int): number of intervals of the computational grid
        n (int): spatial dimension

    """

    L: float
    n_l: int
    n_h: int
    n: int = 1

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L should be strictly positive, got {self.L}")
        for name in ("n_l", "n_h"):
            value = getattr(self, name)
            if int(value) != value or value < MIN_INTERVALS:
                raise ValueError(
                    f"{name} should be an integer of at least {MIN_INTERVALS}, got {value}"
                )
            object.__setattr__(self, name, int(value))
        if self.n not in (1, 2, 3):
            raise ValueError(f"n should be 1, 2 or 3, got {self.n}")

    @property
    def dr(self):
        return self.L / self.n_l

    @property
    def r_nodes(self):
        return np.linspace(0.0, self.L, self.n_l + 1)

    def ds(self, h0):
        return h0 / self.n_h

    def s_nodes(self, h0):
        return np.linspace(0.0, h0, self.n_h + 1)

    def check_domain(self, h0):
        """
        Raises when h0 does not fit in the susceptible domain and warns when
        the domain leaves little room for the front to move.

        Args:
            h0 (float): initial radius

        """
        if h0 >= self.L:
            raise ValueError(f"L ({self.L}) should be larger than h0 ({h0})")
        if self.L <= 4 * h0:
            logger.warning(
                f"L={self.L} is not larger than 4 h0 = {4 * h0}, the front may "
                "reach the end of the domain"
            )

    def refined(self, factor=2):
        return replace(self, n_l=self.n_l * factor, n_h=self.n_h * factor)


@dataclass(frozen=True)
class SimState:
    """
    State of the free boundary simulation.

    Args:
        t (float): time
        h (float): front position
        h0 (float): initial front position, fixes the computational grid
        s_phys (np.ndarray): S at the physical nodes
        v_comp (np.ndarray): I at the computational nodes
        w_comp (np.ndarray): R at the computational nodes

    """

    t: float
    h: float
    h0: float
    s_phys: np.ndarray
    v_comp: np.ndarray
    w_comp: np.ndarray

    @classmethod
    def initial(cls, init, grid):
        """
        Samples the initial data on both grids.

        Args:
            init (InitialData): initial data
            grid (GridSpec): grids

        Returns:
            SimState

        """
        s_nodes = grid.s_nodes(init.h0)
        v = init.i0_on(s_nodes)
        w = init.r0_on(s_nodes)
        v[-1] = 0.0
        w[-1] = 0.0
        return cls(
            t=0.0,
            h=init.h0,
            h0=init.h0,
            s_phys=init.s0_on(grid.r_nodes),
            v_comp=v,
            w_comp=w,
        )

    @property
    def ds(self):
        return self.h0 / (len(self.v_comp) - 1)

    @property
    def r_mapped(self):
        """Physical radii of the computational nodes."""
        return map_to_physical(np.linspace(0.0, self.h0, len(self.v_comp)), self.h, self.h0)


@dataclass(frozen=True)
class Frame:
    """
    Saved profiles at one time.

    Args:
        t (float): time
        h (float): front position
        r (np.ndarray): physical nodes
        s (np.ndarray): S on the physical nodes
        i (np.ndarray): I on the physical nodes
        rec (np.ndarray): R on the physical nodes
        r_mapped (np.ndarray): radii of the computational nodes
        i_mapped (np.ndarray): I on the computational nodes
        rec_mapped (np.ndarray): R on the computational nodes

    """

    t: float
    h: float
    r: np.ndarray
    s: np.ndarray
    i: np.ndarray
    rec: np.ndarray
    r_mapped: np.ndarray
    i_mapped: np.ndarray
    rec_mapped: np.ndarray


def map_to_physical(s, h, h0):
    """
    Physical radius of the computational coordinate s, r = s h / h0.

    Args:
        s (float or np.ndarray): computational coordinate in [0, h0]
        h (float): front position
        h0 (float): initial front position

    Returns:
        float or np.ndarray

    """
    return s * h / h0


def radial_laplacian_bands(num_nodes, spacing, n, outer="dirichlet"):
    """
    Tridiagonal bands of the radial Laplacian w'' + (n - 1) w' / r.

    The axis row uses the limit n w''(0) with the symmetric ghost node
    w(-dr) = w(dr). The last row is left empty for a Dirichlet condition
    (set by the caller) or closed with a zero slope ghost node for "neumann".

    Args:
        num_nodes (int): number of nodes, at least 3
        spacing (float): grid spacing
        n (int): dimension
        outer (str): "dirichlet" or "neumann"

    Returns:
        tuple: (lower, diag, upper) arrays of length num_nodes

    """
    if num_nodes < 3:
        raise ValueError(f"at least 3 nodes are needed, got {num_nodes}")
    if outer not in ("dirichlet", "neumann"):
        raise ValueError(f"outer should be dirichlet or neumann, got {outer}")
    inv = 1.0 / spacing**2
    lower = np.zeros(num_nodes)
    diag = np.zeros(num_nodes)
    upper = np.zeros(num_nodes)
    diag[0] = -2.0 * n * inv
    upper[0] = 2.0 * n * inv
    i = np.arange(1, num_nodes - 1)
    lower[i] = inv * (1.0 - (n - 1) / (2.0 * i))
    diag[i] = -2.0 * inv
    upper[i] = inv * (1.0 + (n - 1) / (2.0 * i))
    if outer == "neumann":
        lower[-1] = 2.0 * inv
        diag[-1] = -2.0 * inv
    return lower, diag, upper


@lru_cache(maxsize=32)
def cached_bands(num_nodes, spacing, n, outer):
    bands = radial_laplacian_bands(num_nodes, spacing, n, outer)
    for band in bands:
        band.flags.writeable = False
    return bands


def apply_bands(lower, diag, upper, field):
    out = diag * field
    out[1:] += lower[1:] * field[:-1]
    out[:-1] += upper[:-1] * field[1:]
    return out


def radial_laplacian(field, spacing, n, outer="dirichlet"):
    """
    Radial Laplacian of a field sampled on a uniform grid starting at r = 0.

    Args:
        field (np.ndarray): values, at least 3 nodes
        spacing (float): grid spacing
        n (int): dimension
        outer (str): condition closing the last node, "dirichlet" leaves it at
            zero, "neumann" uses a zero slope ghost node

    Returns:
        np.ndarray: Laplacian at every node

    """
    field = np.asarray(field, dtype=np.float64)
    lower, diag, upper = radial_laplacian_bands(len(field), spacing, n, outer)
    return apply_bands(lower, diag, upper, field)


def advection_term(v_comp, h, h_dot, h0):
    """
    First order upwind discretisation of (h'/h) s v_s. For h' >= 0 the term
    transports towards s = 0 and the forward difference is used.

    Args:
        v_comp (np.ndarray): field on the computational grid
        h (float): front position
        h_dot (float): front speed
        h0 (float): initial front position

    Returns:
        np.ndarray: advection term, zero at the front node

    """
    num = len(v_comp)
    ds = h0 / (num - 1)
    s = np.linspace(0.0, h0, num)
    diff = np.diff(v_comp) / ds
    slope = np.zeros(num)
    if h_dot >= 0:
        slope[:-1] = diff
    else:
        slope[1:] = diff
    out = (h_dot / h) * s * slope
    out[-1] = 0.0
    return out


def transformed_operator(v_comp, h, h_dot, h0, params, which="I"):
    """
    Spatial part of the transformed I or R equation,

        d (h0 / h)^2 Lap_s v + (h' / h) s v_s

    with d = d2 for I and d3 for R. Reaction terms are added by the solver.

    Args:
        v_comp (np.ndarray): field on the computational grid, zero at the front
        h (float): front position
        h_dot (float): front speed
        h0 (float): initial front position, end of the computational grid
        params (ModelParams): model constants
        which (str): "I" or "R"

    Returns:
        np.ndarray: operator values, zero at the front node

    """
    if which not in ("I", "R"):
        raise ValueError(f"which should be I or R, got {which}")
    d = params.d2 if which == "I" else params.d3
    v_comp = np.asarray(v_comp, dtype=np.float64)
    ds = h0 / (len(v_comp) - 1)
    lower, diag, upper = cached_bands(len(v_comp), ds, params.n, "dirichlet")
    out = d * (h0 / h) ** 2 * apply_bands(lower, diag, upper, v_comp)
    out += advection_term(v_comp, h, h_dot, h0)
    out[-1] = 0.0
    return out


def front_gradient(v_comp, ds):
    """
    Second order one sided derivative at the front node,
    (v[N-2] - 4 v[N-1] + 3 v[N]) / (2 ds).

    Args:
        v_comp (np.ndarray): field on the computational grid
        ds (float): computational spacing

    Returns:
        float: v_s at s = h0

    """
    return (v_comp[-3] - 4.0 * v_comp[-2] + 3.0 * v_comp[-1]) / (2.0 * ds)


def stefan_speed(v_comp, h, h0, mu):
    """
    Front speed h' = -mu I_r(h) = -mu (h0 / h) v_s(h0), floored at zero.

    Args:
        v_comp (np.ndarray): I on the computational grid
        h (float): front position
        h0 (float): initial front position
        mu (float): Stefan coefficient

    Returns:
        float: h'

    """
    ds = h0 / (len(v_comp) - 1)
    return max(-mu * (h0 / h) * front_gradient(v_comp, ds), 0.0)


def comp_to_physical(values, h, h0, r_nodes):
    """
    Interpolates a computational field onto physical nodes, zero at and beyond
    the front.

    Args:
        values (np.ndarray): field on the computational grid
        h (float): front position
        h0 (float): initial front position
        r_nodes (np.ndarray): physical nodes

    Returns:
        np.ndarray

    """
    s_nodes = np.linspace(0.0, h0, len(values))
    inside = r_nodes < h
    out = np.zeros_like(r_nodes)
    out[inside] = np.interp(r_nodes[inside] * h0 / h, s_nodes, values)
    return out


def cross_interpolate(state, grid):
    """
    Couples the two grids: S at the physical radii of the computational nodes
    and I at the physical nodes.

    Args:
        state (SimState): current state
        grid (GridSpec): grids

    Returns:
        tuple: (S on the computational nodes, I on the physical nodes)

    Raises:
        FrontEscapeError: the front reached 0.95 L

    """
    if state.h >= ESCAPE_FRACTION * grid.L:
        raise FrontEscapeError(
            f"front h={state.h:.6g} reached {ESCAPE_FRACTION} L, enlarge L",
            t=state.t,
            h=state.h,
        )
    r_nodes = grid.r_nodes
    s_comp = np.interp(state.r_mapped, r_nodes, state.s_phys)
    i_phys = comp_to_physical(state.v_comp, state.h, state.h0, r_nodes)
    return s_comp, i_phys


def to_frame(state, grid):
    """
    Profiles of a state on both grids.

    Args:
        state (SimState): state
        grid (GridSpec): grids

    Returns:
        Frame

    """
    r_nodes = grid.r_nodes
    return Frame(
        t=state.t,
        h=state.h,
        r=r_nodes,
        s=state.s_phys.copy(),
        i=comp_to_physical(state.v_comp, state.h, state.h0, r_nodes),
        rec=comp_to_physical(state.w_comp, state.h, state.h0, r_nodes),
        r_mapped=state.r_mapped,
        i_mapped=state.v_comp.copy(),
        rec_mapped=state.w_comp.copy(),
    )
