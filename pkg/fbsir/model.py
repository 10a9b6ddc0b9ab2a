import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Tuple

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline

from fbsir.errors import StepSizeError

logger = logging.getLogger(__name__)

PROFILE_SHAPES = ("constant", "zero", "bump", "tabulated")

REGIME_VANISHING_R0 = "VANISHING (R0<1)"
REGIME_VANISHING_SMALL = "VANISHING (small h0 and mu)"
REGIME_SPREADING = "SPREADING (h0>h0_star)"
REGIME_UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class ModelParams:
    """
    Constants of the free boundary SIR system.

    Args:
        b (float): recruitment rate of susceptibles
        beta (float): contact rate
        mu1 (float): death rate of susceptibles
        mu2 (float): death rate of infected
        mu3 (float): death rate of recovered
        alpha (float): recovery rate
        d1 (float): diffusion coefficient of S
        d2 (float): diffusion coefficient of I
        d3 (float): diffusion coefficient of R
        mu (float): Stefan expansion coefficient of the infected front
        n (int): spatial dimension, 1, 2 or 3

    """

    b: float
    beta: float
    mu1: float
    mu2: float
    mu3: float
    alpha: float
    d1: float
    d2: float
    d3: float
    mu: float
    n: int = 1

    def __post_init__(self):
        for name in ("b", "mu1", "mu2", "mu3", "d1", "d2", "d3", "mu"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} should be strictly positive, got {value}")
        for name in ("beta", "alpha"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} should be nonnegative, got {value}")
        if self.n not in (1, 2, 3):
            raise ValueError(f"n should be 1, 2 or 3, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.mu1 >= min(self.mu2, self.mu3):
            raise ValueError(
                f"mu1 ({self.mu1}) should be smaller than min(mu2, mu3) = "
                f"{min(self.mu2, self.mu3)}: susceptibles are assumed to outlive "
                "infected and recovered individuals"
            )

    @property
    def s_star(self):
        """Disease free susceptible level b/mu1."""
        return self.b / self.mu1


@dataclass(frozen=True)
class Profile:
    """
    Nonnegative radial profile.

    Shapes:
        constant: amplitude everywhere
        zero: identically zero
        bump: amplitude * (1 - (r / radius)^2) on [0, radius], zero beyond
        tabulated: cubic spline through (r, values) with zero slope at r = 0,
            held at the last value beyond r[-1], clipped at zero

    Args:
        shape (str): one of PROFILE_SHAPES
        amplitude (float): level of constant and bump shapes
        radius (float): support radius of the bump
        r (tuple): abscissae of a tabulated profile, starting at 0
        values (tuple): ordinates of a tabulated profile

    """

    shape: str
    amplitude: float = 0.0
    radius: float = 0.0
    r: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.shape not in PROFILE_SHAPES:
            raise ValueError(
                f"shape should be one of {', '.join(PROFILE_SHAPES)}, got {self.shape}"
            )
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise ValueError(f"amplitude should be nonnegative, got {self.amplitude}")
        if self.shape == "bump" and not self.radius > 0:
            raise ValueError(f"radius should be strictly positive, got {self.radius}")
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        if self.shape == "tabulated":
            r = np.array(self.r)
            values = np.array(self.values)
            if len(r) < 2 or len(r) != len(values):
                raise ValueError(
                    "r and values should have the same length of at least 2, "
                    f"got {len(r)} and {len(values)}"
                )
            if r[0] != 0 or np.any(np.diff(r) <= 0):
                raise ValueError("r should start at 0 and be strictly increasing")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise ValueError("values should be finite and nonnegative")

    @classmethod
    def constant(cls, amplitude):
        return cls("constant", amplitude=float(amplitude))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def bump(cls, amplitude, radius):
        return cls("bump", amplitude=float(amplitude), radius=float(radius))

    @classmethod
    def tabulated(cls, r, values):
        return cls("tabulated", r=tuple(r), values=tuple(values))

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.shape == "zero":
            return np.zeros_like(r)
        if self.shape == "constant":
            return np.full_like(r, self.amplitude)
        if self.shape == "bump":
            y = r / self.radius
            return np.where(y < 1.0, self.amplitude * (1.0 - y**2), 0.0)
        spline = CubicSpline(self.r, self.values, bc_type=((1, 0.0), (2, 0.0)))
        return np.clip(spline(np.clip(r, 0.0, self.r[-1])), 0.0, None)

    @property
    def sup(self):
        """Supremum of the profile over r >= 0."""
        if self.shape == "zero":
            return 0.0
        if self.shape in ("constant", "bump"):
            return self.amplitude
        grid = np.linspace(0.0, self.r[-1], 20 * len(self.r) + 1)
        return float(np.max(self(grid)))

    def rescaled(self, factor):
        """
        Profile stretched radially by `factor`, p(r / factor).

        Args:
            factor (float): stretch factor, strictly positive

        Returns:
            Profile

        """
        if not factor > 0:
            raise ValueError(f"factor should be strictly positive, got {factor}")
        if self.shape == "bump":
            return replace(self, radius=self.radius * factor)
        if self.shape == "tabulated":
            return replace(self, r=tuple(x * factor for x in self.r))
        return self

    def to_dict(self):
        if self.shape == "zero":
            return {"shape": "zero"}
        if self.shape == "constant":
            return {"shape": "constant", "amplitude": self.amplitude}
        if self.shape == "bump":
            return {"shape": "bump", "amplitude": self.amplitude, "radius": self.radius}
        return {"shape": "tabulated", "r": list(self.r), "values": list(self.values)}

    @classmethod
    def from_dict(cls, descriptor, default_radius=None):
        """
        Builds a profile from its descriptor.

        Args:
            descriptor (dict): profile descriptor, see Profile
            default_radius (float): bump radius used when the descriptor has none

        Returns:
            Profile

        """
        descriptor = dict(descriptor)
        shape = descriptor.pop("shape", None)
        if shape == "bump" and "radius" not in descriptor and default_radius:
            descriptor["radius"] = default_radius
        for key in ("r", "values"):
            if key in descriptor:
                descriptor[key] = tuple(descriptor[key])
        return cls(shape, **descriptor)


@dataclass(frozen=True)
class InitialData:
    """
    Initial state of the free boundary problem.

    Args:
        h0 (float): initial radius of the infected region
        s0 (Profile): susceptible profile on [0, L]
        i0 (Profile): infected profile on [0, h0]
        r0 (Profile): recovered profile on [0, h0]
        compact (bool): I0 and R0 vanish at h0 and are extended by zero beyond
            it. Only fixed domain runs can switch this off.

    """

    h0: float
    s0: Profile
    i0: Profile
    r0: Profile
    compact: bool = True

    def __post_init__(self):
        if not np.isfinite(self.h0) or self.h0 <= 0:
            raise ValueError(f"h0 should be strictly positive, got {self.h0}")
        if self.compact:
            for name in ("i0", "r0"):
                profile = getattr(self, name)
                edge = float(profile(self.h0))
                if edge > 1e-12 * max(profile.sup, 1.0):
                    raise ValueError(f"{name.upper()} should vanish at h0, got {edge}")
            # the identically zero I0 is kept as the disease free case
            if self.i0.shape != "zero":
                inner = np.linspace(0.0, self.h0, 513)[:-1]
                if np.any(self.i0(inner) <= 0):
                    raise ValueError("I0 should be strictly positive on [0, h0)")

    def s0_on(self, r):
        return self.s0(r)

    def i0_on(self, r):
        r = np.asarray(r, dtype=np.float64)
        values = self.i0(r)
        if self.compact:
            values = np.where(r < self.h0, values, 0.0)
        return values

    def r0_on(self, r):
        r = np.asarray(r, dtype=np.float64)
        values = self.r0(r)
        if self.compact:
            values = np.where(r < self.h0, values, 0.0)
        return values

    @property
    def i0_slope(self):
        """sup |I0'| on [0, h0]."""
        r = np.linspace(0.0, self.h0, 2049)
        return float(np.max(np.abs(np.gradient(self.i0_on(r), r))))

    def with_h0(self, h0):
        """
        Same data with the infected region rescaled to radius h0. S0 is left
        untouched, I0 and R0 are stretched radially.

        Args:
            h0 (float): new initial radius

        Returns:
            InitialData

        """
        factor = h0 / self.h0
        return replace(
            self, h0=h0, i0=self.i0.rescaled(factor), r0=self.r0.rescaled(factor)
        )


@dataclass(frozen=True)
class ThresholdReport:
    """
    Threshold quantities of a scenario.

    Attributes:
        r0: basic reproduction number
        k0: beta * c1 - mu2 - alpha
        c1: bound of S, max(sup S0, b / mu1)
        big_m: amplitude of the supersolution, 4/3 max(sup I0, sup R0)
        gamma: decay rate of the supersolution, d / (16 h0^2)
        h0_star: critical radius, inf when r0 <= 1
        h0_vanish_bound: largest h0 guaranteeing vanishing, computed with d
        mu_vanish_bound: largest mu guaranteeing vanishing, computed with d
        d_used: d = min(d2, d3)
        h0_vanish_bound_d2: radius bound computed with d2 alone
        mu_vanish_bound_d2: mu bound computed with d2 alone
        regime: which criterion, if any, decides the scenario

    """

    r0: float
    k0: float
    c1: float
    big_m: float
    gamma: float
    h0_star: float
    h0_vanish_bound: float
    mu_vanish_bound: float
    d_used: float
    h0_vanish_bound_d2: float
    mu_vanish_bound_d2: float
    regime: str

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class OdeTrajectory:
    """
    Sampled solution of the homogeneous model.

    Attributes:
        t (np.ndarray): sample times
        y (np.ndarray): (len(t), 3) array of S, I, R

    """

    t: np.ndarray
    y: np.ndarray

    @property
    def terminal(self):
        return tuple(float(x) for x in self.y[-1])


def compute_r0(params):
    """
    Basic reproduction number b beta / (mu1 (mu2 + alpha)).

    Args:
        params (ModelParams): model constants

    Returns:
        float: R0

    """
    return params.b * params.beta / (params.mu1 * (params.mu2 + params.alpha))


def ode_rhs(state, params):
    """
    Right hand side of the homogeneous SIR model.

    Args:
        state: (S, I, R), scalars or arrays
        params (ModelParams): model constants

    Returns:
        np.ndarray: (dS/dt, dI/dt, dR/dt)

    """
    s, i, r = (np.asarray(x, dtype=np.float64) for x in state)
    infection = params.beta * s * i
    return np.array(
        [
            params.b - infection - params.mu1 * s,
            infection - (params.mu2 + params.alpha) * i,
            params.alpha * i - params.mu3 * r,
        ]
    )


def equilibria(params):
    """
    Equilibria of the homogeneous model.

    Args:
        params (ModelParams): model constants

    Returns:
        dict: "disease_free" and "endemic" (S, I, R) tuples, endemic is None
        when R0 <= 1

    """
    out = {"disease_free": (params.b / params.mu1, 0.0, 0.0), "endemic": None}
    r0 = compute_r0(params)
    if r0 > 1:
        s = (params.mu2 + params.alpha) / params.beta
        i = params.mu1 * (r0 - 1.0) / params.beta
        out["endemic"] = (s, i, params.alpha * i / params.mu3)
    return out


def susceptible_envelope(params, s0_sup, t):
    """
    Homogeneous upper bound of S, b/mu1 + (sup S0 - b/mu1) exp(-mu1 t).

    Args:
        params (ModelParams): model constants
        s0_sup (float): sup of the initial susceptible profile
        t (float or np.ndarray): time(s)

    Returns:
        float or np.ndarray

    """
    return params.s_star + (s0_sup - params.s_star) * np.exp(-params.mu1 * t)


@njit
def _sir_rates(s, i, r, rates):
    infection = rates[1] * s * i
    return (
        rates[0] - infection - rates[2] * s,
        infection - (rates[3] + rates[5]) * i,
        rates[5] * i - rates[4] * r,
    )


@njit
def _rk4_path(y0, rates, dt, n_steps, stride):
    n_saved = n_steps // stride + 1
    if n_steps % stride:
        n_saved += 1
    ts = np.empty(n_saved)
    ys = np.empty((n_saved, 3))
    s, i, r = y0[0], y0[1], y0[2]
    ts[0] = 0.0
    ys[0, 0] = s
    ys[0, 1] = i
    ys[0, 2] = r
    count = 1
    for k in range(1, n_steps + 1):
        a1, b1, c1 = _sir_rates(s, i, r, rates)
        a2, b2, c2 = _sir_rates(
            s + 0.5 * dt * a1, i + 0.5 * dt * b1, r + 0.5 * dt * c1, rates
        )
        a3, b3, c3 = _sir_rates(
            s + 0.5 * dt * a2, i + 0.5 * dt * b2, r + 0.5 * dt * c2, rates
        )
        a4, b4, c4 = _sir_rates(s + dt * a3, i + dt * b3, r + dt * c3, rates)
        s = s + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        i = i + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        r = r + dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        if s < -1e-12 or i < -1e-12 or r < -1e-12:
            return ts[:count], ys[:count], k
        if k % stride == 0 or k == n_steps:
            ts[count] = k * dt
            ys[count, 0] = s
            ys[count, 1] = i
            ys[count, 2] = r
            count += 1
    return ts[:count], ys[:count], -1


def integrate_ode(initial, params, t_end, dt, stride=1):
    """
    Integrates the homogeneous model with the classical fourth order
    Runge-Kutta scheme at fixed step.

    Args:
        initial: (S, I, R) at t = 0
        params (ModelParams): model constants
        t_end (float): final time
        dt (float): time step, t_end should be a multiple of it
        stride (int): keep one sample every `stride` steps, the final state is
            always kept

    Returns:
        OdeTrajectory: sampled trajectory

    Raises:
        StepSizeError: a component went below -1e-12

    """
    if not dt > 0 or not t_end > 0:
        raise ValueError(f"dt and t_end should be positive, got {dt} and {t_end}")
    if stride < 1:
        raise ValueError(f"stride should be at least 1, got {stride}")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * t_end:
        logger.warning(f"t_end={t_end} is not a multiple of dt={dt}, using {n_steps * dt}")
    rates = np.array(
        [params.b, params.beta, params.mu1, params.mu2, params.mu3, params.alpha],
        dtype=np.float64,
    )
    ts, ys, failed = _rk4_path(
        np.asarray(initial, dtype=np.float64), rates, float(dt), n_steps, int(stride)
    )
    if failed >= 0:
        raise StepSizeError(
            "negative compartment in the ODE integration, reduce dt", t=failed * dt
        )
    logger.debug(f"Integrated {n_steps} RK4 steps, terminal state {ys[-1]}")
    return OdeTrajectory(t=ts, y=ys)


def thresholds(params, init):
    """
    Threshold quantities of the scenario.

    The vanishing bounds use d = min(d2, d3), the constant for which the
    supersolution inequalities of both the I and R equations hold. The bounds
    computed with d2 alone are reported next to them.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data

    Returns:
        ThresholdReport

    """
    from fbsir.eigen import critical_radius

    r0 = compute_r0(params)
    c1 = max(init.s0.sup, params.s_star)
    k0 = params.beta * c1 - params.mu2 - params.alpha
    big_m = 4.0 / 3.0 * max(init.i0.sup, init.r0.sup)
    d = min(params.d2, params.d3)
    gamma = d / (16.0 * init.h0**2)
    h0_star = critical_radius(params) if r0 > 1 else math.inf

    def radius_bound(d_value):
        return min(_sqrt_ratio(d_value, 16.0 * k0), _sqrt_ratio(d_value, 16.0 * params.alpha))

    def mu_bound(d_value):
        return d_value / (8.0 * big_m) if big_m > 0 else math.inf

    h0_bound = radius_bound(d)
    mu_max = mu_bound(d)

    if r0 < 1:
        regime = REGIME_VANISHING_R0
    elif r0 > 1 and init.h0 <= h0_bound and params.mu <= mu_max:
        regime = REGIME_VANISHING_SMALL
    elif r0 > 1 and init.h0 > h0_star:
        regime = REGIME_SPREADING
    else:
        regime = REGIME_UNDETERMINED

    report = ThresholdReport(
        r0=r0,
        k0=k0,
        c1=c1,
        big_m=big_m,
        gamma=gamma,
        h0_star=h0_star,
        h0_vanish_bound=h0_bound,
        mu_vanish_bound=mu_max,
        d_used=d,
        h0_vanish_bound_d2=radius_bound(params.d2),
        mu_vanish_bound_d2=mu_bound(params.d2),
        regime=regime,
    )
    logger.debug(f"Thresholds: {report}")
    return report


def _sqrt_ratio(numerator, denominator):
    if denominator <= 0:
        return math.inf
    return math.sqrt(numerator / denominator)


@dataclass(frozen=True)
class Supersolution:
    """
    Closed form upper solution of the free boundary problem

        h(t) = 2 h0 (2 - exp(-gamma t))
        I(r, t) = R(r, t) = M exp(-gamma t) (1 - (r / h(t))^2) on [0, h(t)]
        S(r, t) = C1

    Args:
        h0 (float): initial radius
        big_m (float): amplitude M
        gamma (float): decay rate
        c1 (float): bound of S
        verified (bool): the hypotheses on h0 and mu hold
        violations (tuple): description of every failed hypothesis

    """

    h0: float
    big_m: float
    gamma: float
    c1: float
    verified: bool = True
    violations: Tuple[str, ...] = field(default_factory=tuple)

    def h_bar(self, t):
        return 2.0 * self.h0 * (2.0 - np.exp(-self.gamma * np.asarray(t, dtype=np.float64)))

    def h_bar_dot(self, t):
        return 2.0 * self.h0 * self.gamma * np.exp(-self.gamma * np.asarray(t, dtype=np.float64))

    def s_bar(self, r, t):
        return np.full_like(np.asarray(r, dtype=np.float64), self.c1)

    def i_bar(self, r, t):
        r = np.asarray(r, dtype=np.float64)
        y = r / self.h_bar(t)
        return np.where(y < 1.0, self.big_m * np.exp(-self.gamma * t) * (1.0 - y**2), 0.0)

    def r_bar(self, r, t):
        return self.i_bar(r, t)

    def residuals(self, params, t, num_points=201, init=None):
        """
        Evaluates every differential inequality the upper solution has to
        satisfy, in closed form, at time t. All entries are nonnegative when
        the hypotheses hold.

        Args:
            params (ModelParams): model constants
            t (float): time
            num_points (int): number of radial points on [0, h_bar(t)]
            init (InitialData): if given, the domination of the initial data
                is checked as well

        Returns:
            dict: name -> np.ndarray of residuals

        """
        h = float(self.h_bar(t))
        h_dot = float(self.h_bar_dot(t))
        y = np.linspace(0.0, 1.0, num_points)
        v = 1.0 - y**2
        amp = self.big_m * math.exp(-self.gamma * t)
        k0 = params.beta * self.c1 - params.mu2 - params.alpha
        n = params.n
        # I_t - d2 Lap I - k0 I with I = amp * V(r / h)
        i_eq = amp * ((-self.gamma - k0) * v + 2.0 * y**2 * h_dot / h + 2.0 * n * params.d2 / h**2)
        # R_t - d3 Lap R - (alpha I - mu3 R) with R = I
        r_eq = amp * (
            (-self.gamma - params.alpha + params.mu3) * v
            + 2.0 * y**2 * h_dot / h
            + 2.0 * n * params.d3 / h**2
        )
        out = {
            "s_equation": np.array([params.mu1 * self.c1 - params.b]),
            "i_equation": i_eq,
            "r_equation": r_eq,
            "stefan": np.array([h_dot - 2.0 * params.mu * amp / h]),
            "front": np.array([float(self.h_bar(0.0)) - self.h0]),
        }
        if init is not None:
            r = np.linspace(0.0, init.h0, num_points)
            out["initial_s"] = self.c1 - init.s0_on(r)
            out["initial_i"] = self.i_bar(r, 0.0) - init.i0_on(r)
            out["initial_r"] = self.r_bar(r, 0.0) - init.r0_on(r)
        return out


def build_supersolution(params, init, report):
    """
    Upper solution certifying vanishing for small h0 and mu. The evaluators are
    returned even when the hypotheses fail, flagged as unverified.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data
        report (ThresholdReport): thresholds of the scenario

    Returns:
        Supersolution

    """
    violations = []
    if not report.r0 > 1:
        violations.append(f"R0 = {report.r0:.6g} should be larger than 1")
    if init.h0 > report.h0_vanish_bound:
        violations.append(
            f"h0 = {init.h0:.6g} exceeds the radius bound {report.h0_vanish_bound:.6g}"
        )
    if params.mu > report.mu_vanish_bound:
        violations.append(
            f"mu = {params.mu:.6g} exceeds the Stefan coefficient bound "
            f"{report.mu_vanish_bound:.6g}"
        )
    for violation in violations:
        logger.warning(f"Supersolution unverified: {violation}")
    return Supersolution(
        h0=init.h0,
        big_m=report.big_m,
        gamma=report.gamma,
        c1=report.c1,
        verified=not violations,
        violations=tuple(violations),
    )


def front_speed_bound(params, c1, c2, i0_slope):
    """
    Bound C3 of the front speed, h'(t) <= C3, given the bounds c1 of S and c2
    of I and R.

        M = max(sqrt(beta c1 / (2 d2)), 4 sup|I0'| / (3 c2))
        C3 = 2 M c2 mu

    Args:
        params (ModelParams): model constants
        c1 (float): bound of S
        c2 (float): bound of I and R
        i0_slope (float): sup |I0'| on [0, h0]

    Returns:
        float: C3

    """
    if not c1 > 0 or not c2 > 0:
        raise ValueError(f"c1 and c2 should be strictly positive, got {c1} and {c2}")
    big_m = max(
        math.sqrt(params.beta * c1 / (2.0 * params.d2)), 4.0 * i0_slope / (3.0 * c2)
    )
    if big_m == 0:
        logger.warning("Front speed bound is degenerate (beta = 0 and flat I0), C3 = 0")
        return 0.0
    return 2.0 * big_m * c2 * params.mu
