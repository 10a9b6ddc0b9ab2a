import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from rich.progress import Progress
from scipy.integrate import trapezoid

from fbsir.analysis import (
    SERIES_COLUMNS,
    RunOutcome,
    classify,
    fixed_domain_balance_residual,
    infected_mass,
    mass_balance_residual,
)
from fbsir.errors import NonFiniteError, PositivityError
from fbsir.frontfix import (
    Frame,
    SimState,
    advection_term,
    cached_bands,
    cross_interpolate,
    stefan_speed,
    to_frame,
)
from fbsir.model import front_speed_bound, susceptible_envelope, thresholds
from fbsir.utils.math import thomas_solve

logger = logging.getLogger(__name__)

STOP_FRACTION = 0.9


@dataclass(frozen=True)
class TimeStepConfig:
    """
    Time stepping controls.

    Args:
        dt (float): time step
        t_end (float): final time
        save_stride (int): record one frame every `save_stride` steps
        positivity_tol (float): fields below -positivity_tol abort the run,
            smaller negative values are clamped to zero
        dt_safety (float): safety factor of the admissible step
        save_profiles (bool): keep the profiles of every saved frame
        stop_on_escape (bool): end the run cleanly once the front passes
            0.9 L instead of failing at 0.95 L

    """

    dt: float
    t_end: float
    save_stride: int = 1
    positivity_tol: float = 1e-10
    dt_safety: float = 0.5
    save_profiles: bool = False
    stop_on_escape: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt should be strictly positive, got {self.dt}")
        if not self.t_end > self.dt:
            raise ValueError(f"t_end ({self.t_end}) should be larger than dt ({self.dt})")
        if not 0 < self.dt_safety <= 1:
            raise ValueError(f"dt_safety should be in (0, 1], got {self.dt_safety}")
        if int(self.save_stride) != self.save_stride or self.save_stride < 1:
            raise ValueError(
                f"save_stride should be a positive integer, got {self.save_stride}"
            )
        object.__setattr__(self, "save_stride", int(self.save_stride))
        if self.positivity_tol < 0:
            raise ValueError(
                f"positivity_tol should be nonnegative, got {self.positivity_tol}"
            )

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def refined(self, factor=2):
        return replace(self, dt=self.dt / factor, save_stride=self.save_stride * factor)


@dataclass(frozen=True)
class FixedState:
    """
    State of the fixed domain simulation, all fields on the physical grid.

    Args:
        t (float): time
        s (np.ndarray): susceptible
        i (np.ndarray): infected
        rec (np.ndarray): recovered

    """

    t: float
    s: np.ndarray
    i: np.ndarray
    rec: np.ndarray


def stefan_cfl(state, params, grid, cfg):
    """
    Admissible time step for the explicit parts of the scheme: the front may
    not cross more than one computational cell per step and the explicit
    reaction has to keep the fields nonnegative.

    Args:
        state (SimState): current state
        params (ModelParams): model constants
        grid (GridSpec): grids
        cfg (TimeStepConfig): time stepping controls

    Returns:
        float: dt_safety * min(front limit, reaction limit)

    """
    h_dot = stefan_speed(state.v_comp, state.h, state.h0, params.mu)
    if h_dot > 0:
        front_limit = grid.ds(state.h0) * state.h / (state.h0 * h_dot)
    else:
        front_limit = math.inf
    rate = max(
        params.beta * float(np.max(state.s_phys)) + params.mu2 + params.alpha,
        params.beta * float(np.max(state.v_comp)) + params.mu1,
        params.mu3,
    )
    return cfg.dt_safety * min(front_limit, 1.0 / rate)


def _implicit_diffusion(bands, coef, rhs, dirichlet):
    lower, diag, upper = bands
    a_lower = -coef * lower
    a_diag = 1.0 - coef * diag
    a_upper = -coef * upper
    if dirichlet:
        a_lower[-1] = 0.0
        a_diag[-1] = 1.0
        rhs[-1] = 0.0
    return thomas_solve(a_lower, a_diag, a_upper, rhs)


def _check_fields(fields, t, tol):
    for name, values in fields.items():
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(f"non finite value in {name}", t=t)
    lowest = min(float(np.min(values)) for values in fields.values())
    if lowest < -tol:
        raise PositivityError(
            f"field value {lowest:.3g} below -{tol:.1g}, reduce dt", t=t
        )
    return lowest


def _advance(state, params, grid, cfg, dt):
    h0, h = state.h0, state.h
    v, w, s = state.v_comp, state.w_comp, state.s_phys
    h_dot = stefan_speed(v, h, h0, params.mu)
    s_comp, i_phys = cross_interpolate(state, grid)

    comp_bands = cached_bands(grid.n_h + 1, grid.ds(h0), params.n, "dirichlet")
    scale = dt * (h0 / h) ** 2
    rhs_v = v + dt * (
        advection_term(v, h, h_dot, h0)
        + v * (params.beta * s_comp - params.mu2 - params.alpha)
    )
    rhs_w = w + dt * (advection_term(w, h, h_dot, h0) + params.alpha * v - params.mu3 * w)
    v_new = _implicit_diffusion(comp_bands, scale * params.d2, rhs_v, True)
    w_new = _implicit_diffusion(comp_bands, scale * params.d3, rhs_w, True)

    phys_bands = cached_bands(grid.n_l + 1, grid.dr, params.n, "neumann")
    rhs_s = s + dt * (params.b - params.beta * s * i_phys - params.mu1 * s)
    s_new = _implicit_diffusion(phys_bands, dt * params.d1, rhs_s, False)

    t_new = state.t + dt
    lowest = _check_fields({"S": s_new, "I": v_new, "R": w_new}, t_new, cfg.positivity_tol)
    new_state = SimState(
        t=t_new,
        h=h + dt * h_dot,
        h0=h0,
        s_phys=np.maximum(s_new, 0.0),
        v_comp=np.maximum(v_new, 0.0),
        w_comp=np.maximum(w_new, 0.0),
    )
    return new_state, lowest


def step(state, params, grid, cfg):
    """
    One IMEX step of length cfg.dt: diffusion backward Euler, reaction and
    advection forward Euler, front from the Stefan law evaluated at the old
    state.

    Args:
        state (SimState): current state
        params (ModelParams): model constants
        grid (GridSpec): grids
        cfg (TimeStepConfig): time stepping controls

    Returns:
        SimState: state at t + dt

    Raises:
        PositivityError: a field went below -positivity_tol
        NonFiniteError: a field is not finite
        FrontEscapeError: the front reached the end of the domain

    """
    return _advance(state, params, grid, cfg, cfg.dt)[0]


class _InvariantTracker:
    """
    Running checks of the properties the continuous problem guarantees.
    """

    def __init__(self, params, init, report, cfg):
        self.params = params
        self.init = init
        self.c1 = report.c1
        self.tol = cfg.positivity_tol
        self.s0_sup = init.s0.sup
        self.min_pre_clamp = math.inf
        self.front_monotone = True
        self.max_sup_s = -math.inf
        self.max_sup_i = 0.0
        self.max_sup_r = 0.0
        self.max_front_speed = 0.0
        self.envelope_excess = -math.inf
        self.substeps = 0

    def observe_step(self, h_old, h_new, lowest):
        self.min_pre_clamp = min(self.min_pre_clamp, lowest)
        if h_new < h_old:
            self.front_monotone = False

    def observe_record(self, t, h_dot, sup_s, sup_i, sup_r):
        self.max_front_speed = max(self.max_front_speed, h_dot)
        self.max_sup_s = max(self.max_sup_s, sup_s)
        self.max_sup_i = max(self.max_sup_i, sup_i)
        self.max_sup_r = max(self.max_sup_r, sup_r)
        envelope = susceptible_envelope(self.params, self.s0_sup, t)
        self.envelope_excess = max(self.envelope_excess, sup_s - envelope)

    def summary(self, stopped_early=False):
        sup_s_bound = self.c1 * (1.0 + 1e-6)
        c2 = 1.1 * max(self.max_sup_i, self.max_sup_r)
        if c2 > 0:
            speed_bound = front_speed_bound(self.params, self.c1, c2, self.init.i0_slope)
        else:
            speed_bound = 0.0
        out = {
            "min_pre_clamp": self.min_pre_clamp,
            "positivity_ok": self.min_pre_clamp >= -self.tol,
            "front_monotone": self.front_monotone,
            "max_sup_s": self.max_sup_s,
            "sup_s_bound": sup_s_bound,
            "sup_s_ok": self.max_sup_s <= sup_s_bound,
            "c2_observed": c2,
            "speed_bound": speed_bound,
            "max_front_speed": self.max_front_speed,
            "speed_ok": self.max_front_speed <= 1.1 * speed_bound + 1e-12,
            "envelope_excess": self.envelope_excess,
            "cfl_substeps": self.substeps,
            "stopped_early": stopped_early,
        }
        for key in ("positivity_ok", "front_monotone", "sup_s_ok", "speed_ok"):
            if not out[key]:
                logger.warning(f"Invariant check {key} failed: {out}")
        return out


def run(params, init, grid, cfg, progress=False, sink=None):
    """
    Solves the free boundary problem up to cfg.t_end.

    Steps above the admissible step of `stefan_cfl` are split into equal
    substeps, saved frames stay on the dt grid.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data
        grid (GridSpec): grids, grid.n should match params.n
        cfg (TimeStepConfig): time stepping controls
        progress (bool): show a progress bar
        sink (callable): called with (record, frame) for every saved frame,
            frame is None unless cfg.save_profiles

    Returns:
        RunOutcome

    Raises:
        ValueError: dimension mismatch or initial data without compact support
        SolverError: the run failed, the error carries the failing time

    """
    if grid.n != params.n:
        raise ValueError(f"grid dimension {grid.n} differs from model dimension {params.n}")
    if not init.compact:
        raise ValueError(
            "free boundary runs need compactly supported I0 and R0, use run_fixed_domain"
        )
    grid.check_domain(init.h0)
    report = thresholds(params, init)
    tracker = _InvariantTracker(params, init, report, cfg)
    state = SimState.initial(init, grid)
    n_steps = cfg.n_steps
    logger.info(
        f"Running free boundary problem: {n_steps} steps of dt={cfg.dt}, "
        f"N_h={grid.n_h}, N_L={grid.n_l}, R0={report.r0:.6g}"
    )

    records = []
    frames = []

    def save(current, residual):
        h_dot = stefan_speed(current.v_comp, current.h, current.h0, params.mu)
        record = (
            current.t,
            current.h,
            h_dot,
            float(np.max(current.s_phys)),
            float(np.max(current.v_comp)),
            float(np.max(current.w_comp)),
            infected_mass(current, params.n),
            residual,
        )
        records.append(record)
        tracker.observe_record(current.t, h_dot, record[3], record[4], record[5])
        frame = to_frame(current, grid) if cfg.save_profiles else None
        if frame is not None:
            frames.append(frame)
        if sink is not None:
            sink(dict(zip(SERIES_COLUMNS, record)), frame)

    save(state, math.nan)
    stopped_early = False
    with Progress() as bar:
        task = bar.add_task("[green]Solving...", total=n_steps, visible=progress)
        for k in range(1, n_steps + 1):
            if cfg.stop_on_escape and state.h >= STOP_FRACTION * grid.L:
                logger.info(f"Front reached {STOP_FRACTION} L at t={state.t:.6g}, stopping")
                stopped_early = True
                break
            limit = stefan_cfl(state, params, grid, cfg)
            n_sub = max(1, math.ceil(cfg.dt / limit - 1e-9))
            if n_sub > 1:
                logger.debug(f"Splitting step {k} into {n_sub} substeps")
                tracker.substeps += n_sub - 1
            previous = state
            for _ in range(n_sub):
                new_state, lowest = _advance(state, params, grid, cfg, cfg.dt / n_sub)
                tracker.observe_step(state.h, new_state.h, lowest)
                state = new_state
                if cfg.stop_on_escape and state.h >= STOP_FRACTION * grid.L:
                    stopped_early = True
                    break
            if stopped_early:
                logger.info(f"Front reached {STOP_FRACTION} L at t={state.t:.6g}, stopping")
                save(state, mass_balance_residual(previous, state, params, grid))
                break
            state = replace(state, t=k * cfg.dt)
            if k % cfg.save_stride == 0 or k == n_steps:
                save(state, mass_balance_residual(previous, state, params, grid))
                bar.update(task, completed=k)

    if stopped_early and (not records or records[-1][0] != state.t):
        save(state, math.nan)
    series = pd.DataFrame(records, columns=SERIES_COLUMNS)
    diagnostics = tracker.summary(stopped_early=stopped_early)
    classification = classify(series, params, report, init.h0)
    logger.info(
        f"Finished at t={state.t:.6g}: h={state.h:.6g}, classification={classification}"
    )
    return RunOutcome(
        series=series,
        classification=classification,
        diagnostics=diagnostics,
        report=report,
        params=params,
        init=init,
        grid=grid,
        cfg=cfg,
        frames=frames,
    )


def _advance_fixed(state, params, grid, cfg, dt, bands):
    s, i, rec = state.s, state.i, state.rec
    infection = params.beta * s * i
    rhs_s = s + dt * (params.b - infection - params.mu1 * s)
    rhs_i = i + dt * (infection - (params.mu2 + params.alpha) * i)
    rhs_r = rec + dt * (params.alpha * i - params.mu3 * rec)
    s_new = _implicit_diffusion(bands, dt * params.d1, rhs_s, False)
    i_new = _implicit_diffusion(bands, dt * params.d2, rhs_i, False)
    r_new = _implicit_diffusion(bands, dt * params.d3, rhs_r, False)
    t_new = state.t + dt
    lowest = _check_fields({"S": s_new, "I": i_new, "R": r_new}, t_new, cfg.positivity_tol)
    return (
        FixedState(
            t=t_new,
            s=np.maximum(s_new, 0.0),
            i=np.maximum(i_new, 0.0),
            rec=np.maximum(r_new, 0.0),
        ),
        lowest,
    )


def _fixed_cfl(state, params, cfg):
    rate = max(
        params.beta * float(np.max(state.s)) + params.mu2 + params.alpha,
        params.beta * float(np.max(state.i)) + params.mu1,
        params.mu3,
    )
    return cfg.dt_safety / rate


def run_fixed_domain(params, init, grid, cfg, progress=False, sink=None):
    """
    Solves the problem on the fixed ball of radius L with zero flux at r = L.
    There is no front: the series reports h = L and h' = 0.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data, used on [0, L]
        grid (GridSpec): grids, only the physical grid is used
        cfg (TimeStepConfig): time stepping controls
        progress (bool): show a progress bar
        sink (callable): called with (record, frame) for every saved frame

    Returns:
        RunOutcome

    """
    if grid.n != params.n:
        raise ValueError(f"grid dimension {grid.n} differs from model dimension {params.n}")
    report = thresholds(params, init)
    tracker = _InvariantTracker(params, init, report, cfg)
    r_nodes = grid.r_nodes
    bands = cached_bands(grid.n_l + 1, grid.dr, params.n, "neumann")
    state = FixedState(
        t=0.0, s=init.s0_on(r_nodes), i=init.i0_on(r_nodes), rec=init.r0_on(r_nodes)
    )
    n_steps = cfg.n_steps
    logger.info(f"Running fixed domain problem: {n_steps} steps of dt={cfg.dt}, N_L={grid.n_l}")

    records = []
    frames = []
    weight = r_nodes ** (params.n - 1)

    def save(current, residual):
        record = (
            current.t,
            grid.L,
            0.0,
            float(np.max(current.s)),
            float(np.max(current.i)),
            float(np.max(current.rec)),
            float(trapezoid(weight * current.i, r_nodes)),
            residual,
        )
        records.append(record)
        tracker.observe_record(current.t, 0.0, record[3], record[4], record[5])
        frame = None
        if cfg.save_profiles:
            frame = Frame(
                t=current.t,
                h=grid.L,
                r=r_nodes,
                s=current.s.copy(),
                i=current.i.copy(),
                rec=current.rec.copy(),
                r_mapped=r_nodes,
                i_mapped=current.i.copy(),
                rec_mapped=current.rec.copy(),
            )
            frames.append(frame)
        if sink is not None:
            sink(dict(zip(SERIES_COLUMNS, record)), frame)

    save(state, math.nan)
    with Progress() as bar:
        task = bar.add_task("[green]Solving...", total=n_steps, visible=progress)
        for k in range(1, n_steps + 1):
            n_sub = max(1, math.ceil(cfg.dt / _fixed_cfl(state, params, cfg) - 1e-9))
            tracker.substeps += n_sub - 1
            previous = state
            for _ in range(n_sub):
                state, lowest = _advance_fixed(state, params, grid, cfg, cfg.dt / n_sub, bands)
                tracker.observe_step(0.0, 0.0, lowest)
            state = replace(state, t=k * cfg.dt)
            if k % cfg.save_stride == 0 or k == n_steps:
                save(
                    state,
                    fixed_domain_balance_residual(previous, state, params, grid),
                )
                bar.update(task, completed=k)

    series = pd.DataFrame(records, columns=SERIES_COLUMNS)
    classification = classify(series, params, report, init.h0, has_front=False)
    logger.info(f"Finished fixed domain run, classification={classification}")
    return RunOutcome(
        series=series,
        classification=classification,
        diagnostics=tracker.summary(),
        report=report,
        params=params,
        init=init,
        grid=grid,
        cfg=cfg,
        frames=frames,
        fixed_domain=True,
    )
