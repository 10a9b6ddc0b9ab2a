"""
Post processing of runs: classification of the long time behaviour, discrete
mass balance, comparison with the closed form upper solution, sweeps over the
initial radius and other parameters, and refinement studies.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from fbsir.errors import (
    BracketError,
    FrontEscapeError,
    InconclusiveBracketError,
    NoCriticalRadiusError,
    SolverError,
)
from fbsir.frontfix import cross_interpolate, front_gradient
from fbsir.model import compute_r0, thresholds
from fbsir.utils.math import observed_order

logger = logging.getLogger(__name__)

SPREADING = "SPREADING"
VANISHING = "VANISHING"
UNDECIDED = "UNDECIDED"
FAILED = "FAILED"

SERIES_COLUMNS = (
    "t",
    "h",
    "dhdt",
    "sup_S",
    "sup_I",
    "sup_R",
    "mass_I",
    "balance_residual",
)

SWEEP_COLUMNS = ("value", "classification", "h_end", "sup_I_end")

SWEEPABLE = ("h0", "mu", "beta", "b")
REFINE_MODES = ("both", "space", "time")


@dataclass(frozen=True)
class ClassifyTolerances:
    """
    Thresholds of the classifier.

    Args:
        vanish_sup_i (float): sup I at t_end below which the infection is gone
        stagnation (float): front increase over the trailing window, relative
            to h0, below which the front has stopped
        spread_sup_i (float): sup I over the trailing window above which the
            infection persists
        trailing_fraction (float): length of the trailing window as a fraction
            of the simulated time

    """

    vanish_sup_i: float = 1e-8
    stagnation: float = 1e-4
    spread_sup_i: float = 1e-6
    trailing_fraction: float = 0.1


@dataclass
class RunOutcome:
    """
    Result of a run.

    Attributes:
        series (pd.DataFrame): one row per saved frame, columns SERIES_COLUMNS
        classification (str): SPREADING, VANISHING or UNDECIDED
        diagnostics (dict): invariant checks recorded during the run
        report (ThresholdReport): thresholds of the scenario
        params (ModelParams): model constants
        init (InitialData): initial data
        grid (GridSpec): grids
        cfg (TimeStepConfig): time stepping controls
        frames (list): saved profiles, empty unless cfg.save_profiles
        fixed_domain (bool): the run had no free boundary

    """

    series: pd.DataFrame
    classification: str
    diagnostics: Dict[str, Any]
    report: Any
    params: Any
    init: Any
    grid: Any
    cfg: Any
    frames: List[Any] = field(default_factory=list)
    fixed_domain: bool = False


def spread_radius(h0, h0_star):
    """Radius the front has to pass to count as spreading, max(4 h0, 2 h0*)."""
    if math.isfinite(h0_star):
        return max(4.0 * h0, 2.0 * h0_star)
    return 4.0 * h0


def classify(series, params, report, h0, tolerances=None, has_front=True):
    """
    Classifies a run from its time series.

    VANISHING: sup I(t_end) below tolerance and the front stagnated over the
    trailing window. SPREADING: h(t_end) beyond max(4 h0, 2 h0*) and sup I
    above tolerance over the whole trailing window. UNDECIDED otherwise. A
    fixed domain run is never SPREADING.

    Args:
        series (pd.DataFrame): time series of the run
        params (ModelParams): model constants
        report (ThresholdReport): thresholds of the scenario
        h0 (float): initial radius
        tolerances (ClassifyTolerances): thresholds, defaults if None
        has_front (bool): the run had a free boundary

    Returns:
        str: classification

    """
    tol = tolerances or ClassifyTolerances()
    t = series["t"].to_numpy()
    h = series["h"].to_numpy()
    sup_i = series["sup_I"].to_numpy()
    t_start = t[-1] - tol.trailing_fraction * (t[-1] - t[0])
    window = t >= t_start
    h_start = float(np.interp(t_start, t, h))

    stagnant = (h[-1] - h_start) < tol.stagnation * h0
    if sup_i[-1] < tol.vanish_sup_i and stagnant:
        return VANISHING
    if (
        has_front
        and h[-1] > spread_radius(h0, report.h0_star)
        and np.min(sup_i[window]) > tol.spread_sup_i
    ):
        return SPREADING
    return UNDECIDED


def infected_mass(state, n):
    """
    Integral of r^(n-1) I over [0, h], on the mapped computational nodes.

    Args:
        state (SimState): state
        n (int): dimension

    Returns:
        float

    """
    r = state.r_mapped
    return float(trapezoid(r ** (n - 1) * state.v_comp, r))


def _balance_rate(state, params, grid):
    r = state.r_mapped
    n = params.n
    s_comp, _ = cross_interpolate(state, grid)
    growth = trapezoid(
        state.v_comp * (params.beta * s_comp - params.mu2 - params.alpha) * r ** (n - 1), r
    )
    # d2 h^(n-1) I_r(h), the flux through the front
    flux = params.d2 * state.h ** (n - 1) * (state.h0 / state.h) * front_gradient(
        state.v_comp, state.ds
    )
    return flux + growth


def mass_balance_residual(state_a, state_b, params, grid):
    """
    Defect of the discrete infected mass balance between two consecutive
    frames,

        d/dt int r^(n-1) I = d2 h^(n-1) I_r(h) + int I (beta S - mu2 - alpha) r^(n-1)

    where d2 h^(n-1) I_r(h) = -(d2 / mu) h^(n-1) h'. The time derivative is a
    difference quotient and the right hand side a trapezoidal average of the
    two frames.

    Args:
        state_a (SimState): earlier frame
        state_b (SimState): later frame
        params (ModelParams): model constants
        grid (GridSpec): grids

    Returns:
        float: absolute defect

    """
    dt = state_b.t - state_a.t
    if not dt > 0:
        raise ValueError("frames should be in increasing time order")
    rate = (infected_mass(state_b, params.n) - infected_mass(state_a, params.n)) / dt
    rhs = 0.5 * (_balance_rate(state_a, params, grid) + _balance_rate(state_b, params, grid))
    return abs(rate - rhs)


def fixed_domain_balance_residual(state_a, state_b, params, grid):
    """
    Same defect as mass_balance_residual on the fixed domain, where no mass
    leaves through r = L.

    Args:
        state_a (FixedState): earlier frame
        state_b (FixedState): later frame
        params (ModelParams): model constants
        grid (GridSpec): grids

    Returns:
        float: absolute defect

    """
    r = grid.r_nodes
    weight = r ** (params.n - 1)

    def growth(state):
        return trapezoid(
            weight * state.i * (params.beta * state.s - params.mu2 - params.alpha), r
        )

    dt = state_b.t - state_a.t
    rate = (trapezoid(weight * state_b.i, r) - trapezoid(weight * state_a.i, r)) / dt
    return float(abs(rate - 0.5 * (growth(state_a) + growth(state_b))))


@dataclass(frozen=True)
class ComparisonReport:
    """
    Result of the comparison of a run with an upper solution.

    Attributes:
        certified (bool): the preconditions of the comparison hold
        passed (bool): certified and no violation found
        preconditions (tuple): failed preconditions
        first_violation (dict): time, radius, quantity and excess of the first
            violation, None if there is none
        max_front_excess (float): max of h - h_bar over the frames
        max_infected_excess (float): max of I - I_bar over frames and nodes
        frames_checked (int): number of frames compared

    """

    certified: bool
    passed: bool
    preconditions: Tuple[str, ...] = ()
    first_violation: Optional[Dict[str, Any]] = None
    max_front_excess: float = math.nan
    max_infected_excess: float = math.nan
    frames_checked: int = 0


def comparison_check(outcome, supersolution, tol):
    """
    Checks h(t) <= h_bar(t) + tol and I(r, t) <= I_bar(r, t) + tol at every saved
    frame and computational node. The check refuses to certify when the
    hypotheses of the upper solution do not hold.

    Args:
        outcome (RunOutcome): run with saved profiles
        supersolution (Supersolution): upper solution
        tol (float): absolute tolerance

    Returns:
        ComparisonReport

    """
    preconditions = list(supersolution.violations)
    if not supersolution.verified and not preconditions:
        preconditions.append("upper solution is not verified")
    if not float(supersolution.h_bar(0.0)) > outcome.init.h0:
        preconditions.append(
            f"h_bar(0) = {float(supersolution.h_bar(0.0)):.6g} should exceed "
            f"h0 = {outcome.init.h0:.6g}"
        )
    if not outcome.frames:
        preconditions.append("no saved profiles, run with save_profiles")
    if outcome.fixed_domain:
        preconditions.append("fixed domain runs have no front")
    if preconditions:
        for item in preconditions:
            logger.warning(f"Comparison not certified: {item}")
        return ComparisonReport(
            certified=False, passed=False, preconditions=tuple(preconditions)
        )

    first = None
    max_front = -math.inf
    max_infected = -math.inf
    for frame in outcome.frames:
        front_excess = frame.h - float(supersolution.h_bar(frame.t))
        infected_excess = frame.i_mapped - supersolution.i_bar(frame.r_mapped, frame.t)
        worst = int(np.argmax(infected_excess))
        max_front = max(max_front, front_excess)
        max_infected = max(max_infected, float(infected_excess[worst]))
        if first is None and front_excess > tol:
            first = {"t": frame.t, "r": frame.h, "quantity": "h", "excess": front_excess}
        if first is None and infected_excess[worst] > tol:
            first = {
                "t": frame.t,
                "r": float(frame.r_mapped[worst]),
                "quantity": "I",
                "excess": float(infected_excess[worst]),
            }
    if first is not None:
        logger.warning(f"Comparison violated: {first}")
    return ComparisonReport(
        certified=True,
        passed=first is None,
        first_violation=first,
        max_front_excess=max_front,
        max_infected_excess=max_infected,
        frames_checked=len(outcome.frames),
    )


@dataclass(frozen=True)
class SweepResult:
    """
    Result of the bisection on h0.

    Attributes:
        lower (float): lower end of the final bracket
        upper (float): upper end of the final bracket
        h0_star (float): theoretical critical radius
        evaluations (pd.DataFrame): every run of the bisection, sorted by h0

    """

    lower: float
    upper: float
    h0_star: float
    evaluations: pd.DataFrame

    @property
    def width(self):
        return self.upper - self.lower


def _scenario_with(params, init, name, value):
    if name == "h0":
        return params, init.with_h0(value)
    return replace(params, **{name: value}), init


def _classify_value(task):
    """
    Runs one sweep scenario. Top level so that it can be sent to a Pool.

    Args:
        task (tuple): (params, init, grid, cfg, name, value, tolerances)

    Returns:
        dict: value, classification, h_end, sup_I_end and error message

    """
    from fbsir.solver import run

    params, init, grid, cfg, name, value, tolerances = task
    row = {
        "value": value,
        "classification": FAILED,
        "h_end": math.nan,
        "sup_I_end": math.nan,
        "error": "",
    }
    try:
        params, init = _scenario_with(params, init, name, value)
        outcome = run(params, init, grid, cfg)
        last = outcome.series.iloc[-1]
        label = outcome.classification
        if tolerances is not None:
            label = classify(outcome.series, params, outcome.report, init.h0, tolerances)
        row.update(classification=label, h_end=last["h"], sup_I_end=last["sup_I"])
    except FrontEscapeError as e:
        report = thresholds(params, init)
        row.update(h_end=e.h, error=str(e))
        if e.h is not None and e.h > spread_radius(init.h0, report.h0_star):
            row["classification"] = SPREADING
    except (SolverError, ValueError) as e:
        logger.error(f"Sweep point {name}={value} failed: {e}")
        row["error"] = str(e)
    logger.info(f"Sweep point {name}={value}: {row['classification']}")
    return row


def _map_tasks(tasks, nproc):
    if nproc > 1 and len(tasks) > 1:
        with Pool(processes=min(nproc, len(tasks))) as pool:
            return pool.map(_classify_value, tasks, chunksize=1)
    return [_classify_value(task) for task in tasks]


def sweep_parameter(params, init, grid, cfg, name, values, nproc=1, tolerances=None):
    """
    Runs one scenario per value of a parameter. A failed run is recorded with
    classification FAILED and the sweep continues.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data
        grid (GridSpec): grids
        cfg (TimeStepConfig): time stepping controls
        name (str): one of h0, mu, beta, b
        values (list): parameter values
        nproc (int): number of worker processes
        tolerances (ClassifyTolerances): classifier thresholds

    Returns:
        pd.DataFrame: one row per value with SWEEP_COLUMNS and error

    """
    if name not in SWEEPABLE:
        raise ValueError(f"name should be one of {', '.join(SWEEPABLE)}, got {name}")
    cfg = replace(cfg, stop_on_escape=True, save_profiles=False)
    tasks = [
        (params, init, grid, cfg, name, float(value), tolerances) for value in values
    ]
    rows = _map_tasks(tasks, nproc)
    table = pd.DataFrame(rows, columns=list(SWEEP_COLUMNS) + ["error"])
    flips = count_flips(table["classification"].tolist())
    if flips > 1:
        logger.warning(f"Classification flips {flips} times along the {name} sweep")
    return table


def count_flips(labels):
    """Number of changes between VANISHING and SPREADING along a sweep."""
    decided = [label for label in labels if label in (VANISHING, SPREADING)]
    return sum(1 for a, b in zip(decided[:-1], decided[1:]) if a != b)


def sweep_critical_h0(
    params,
    init,
    grid,
    cfg,
    bracket,
    iterations,
    nproc=1,
    tolerances=None,
):
    """
    Bisection on h0 between a vanishing and a spreading initial radius. Each
    round evaluates 2^k - 1 evenly spaced interior points concurrently, with
    k = floor(log2(nproc + 1)), which is worth k bisection iterations when the
    classification is monotone in h0.

    Args:
        params (ModelParams): model constants, R0 > 1
        init (InitialData): template initial data, rescaled to every h0
        grid (GridSpec): grids, L should leave room for the largest h0
        cfg (TimeStepConfig): time stepping controls
        bracket (tuple): (lower, upper) initial radii
        iterations (int): number of bisection iterations
        nproc (int): number of worker processes
        tolerances (ClassifyTolerances): classifier thresholds

    Returns:
        SweepResult

    Raises:
        NoCriticalRadiusError: R0 <= 1
        BracketError: both ends have the same classification
        InconclusiveBracketError: a point is UNDECIDED or failed

    """
    r0 = compute_r0(params)
    if r0 <= 1:
        raise NoCriticalRadiusError(f"h0 sweeps need R0 > 1, got R0 = {r0:.6g}")
    from fbsir.eigen import critical_radius

    h0_star = critical_radius(params)
    lower, upper = float(bracket[0]), float(bracket[1])
    if not 0 < lower < upper:
        raise ValueError(f"bracket should satisfy 0 < lower < upper, got {bracket}")
    if iterations < 0:
        raise ValueError(f"iterations should be nonnegative, got {iterations}")
    if iterations == 0:
        return SweepResult(lower, upper, h0_star, pd.DataFrame(columns=SWEEP_COLUMNS))

    cfg = replace(cfg, stop_on_escape=True, save_profiles=False)

    def evaluate(points):
        tasks = [(params, init, grid, cfg, "h0", p, tolerances) for p in points]
        rows = _map_tasks(tasks, nproc)
        for row in rows:
            if row["classification"] in (UNDECIDED, FAILED):
                raise InconclusiveBracketError(
                    f"h0={row['value']:.10g} is {row['classification']} {row['error']}, "
                    "try a longer t_end"
                )
        return rows

    evaluations = evaluate([lower, upper])
    low_label = evaluations[0]["classification"]
    high_label = evaluations[1]["classification"]
    if low_label == high_label:
        raise BracketError(
            f"both ends of the bracket [{lower}, {upper}] are {low_label}"
        )

    per_round = max(1, int(math.floor(math.log2(nproc + 1))))
    remaining = iterations
    while remaining > 0:
        k = min(per_round, remaining)
        width = upper - lower
        points = [lower + width * j / 2**k for j in range(1, 2**k)]
        rows = evaluate(points)
        evaluations.extend(rows)
        labels = [low_label] + [row["classification"] for row in rows] + [high_label]
        grid_points = [lower] + points + [upper]
        change = next(j for j in range(len(labels)) if labels[j] != low_label)
        lower, upper = grid_points[change - 1], grid_points[change]
        remaining -= k
        logger.info(f"Bisection bracket [{lower:.10g}, {upper:.10g}], {remaining} left")

    table = pd.DataFrame(evaluations, columns=list(SWEEP_COLUMNS) + ["error"])
    table = table.sort_values("value").reset_index(drop=True)
    return SweepResult(lower, upper, h0_star, table)


def convergence_study(
    params, init, grid, cfg, levels=3, times=(1.0, 5.0, 10.0), refine="both"
):
    """
    Refines the discretization by factors of two and reports h(t_end), the
    mass balance residual at the requested times and the observed orders
    between consecutive levels. The requested times should be saved frame
    times on the coarsest level.

    With refine="both" dt, ds and dr are halved together and h_order measures
    the first order error of the time stepping. refine="time" halves dt on
    fixed grids, refine="space" halves ds and dr at fixed dt.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data
        grid (GridSpec): coarsest grids
        cfg (TimeStepConfig): coarsest time stepping controls
        levels (int): number of refinement levels, at least 2
        times (tuple): times at which the residual is reported
        refine (str): one of "both", "space", "time"

    Returns:
        pd.DataFrame: one row per level with n_h, n_l, dt, h_end, residual_<t>
        columns, and h_ratio, h_order, residual_ratio_<t> comparing with the
        previous level

    """
    from fbsir.solver import run

    if levels < 2:
        raise ValueError(f"levels should be at least 2, got {levels}")
    if refine not in REFINE_MODES:
        raise ValueError(f"refine should be one of {REFINE_MODES}, got {refine!r}")
    rows = []
    for level in range(levels):
        factor = 2**level
        level_grid = grid
        level_cfg = cfg
        if factor > 1 and refine != "time":
            level_grid = grid.refined(factor)
        if factor > 1 and refine != "space":
            level_cfg = cfg.refined(factor)
        outcome = run(params, init, level_grid, level_cfg)
        series = outcome.series
        row = {
            "level": level,
            "n_h": level_grid.n_h,
            "n_l": level_grid.n_l,
            "dt": level_cfg.dt,
            "h_end": float(series["h"].iloc[-1]),
        }
        for t in times:
            index = int(np.argmin(np.abs(series["t"].to_numpy() - t)))
            if not np.isclose(series["t"].iloc[index], t, rtol=0, atol=1e-9 * max(t, 1)):
                raise ValueError(f"t={t} is not a saved frame time")
            row[f"residual_{t:g}"] = float(series["balance_residual"].iloc[index])
        rows.append(row)
        logger.info(f"Convergence level {level} ({refine}): {row}")

    table = pd.DataFrame(rows)
    h_end = table["h_end"].to_numpy()
    h_ratios = [math.nan, math.nan]
    h_orders = [math.nan, math.nan]
    for level in range(2, levels):
        coarse = abs(h_end[level - 2] - h_end[level - 1])
        fine = abs(h_end[level - 1] - h_end[level])
        h_ratios.append(coarse / fine if fine > 0 else math.nan)
        h_orders.append(observed_order(coarse, fine))
    table["h_ratio"] = h_ratios[:levels]
    table["h_order"] = h_orders[:levels]
    for t in times:
        column = table[f"residual_{t:g}"].to_numpy()
        ratios = [math.nan] + [column[j - 1] / column[j] for j in range(1, levels)]
        table[f"residual_ratio_{t:g}"] = ratios
    return table


def outcome_summary(outcome):
    """Flat dictionary of the scalar results of a run."""
    last = outcome.series.iloc[-1]
    out = {"classification": outcome.classification, "t_end": float(last["t"])}
    out.update({f"final_{key}": float(last[key]) for key in SERIES_COLUMNS[1:]})
    out.update(asdict(outcome.report))
    out.update(outcome.diagnostics)
    return out
