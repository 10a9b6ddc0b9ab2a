"""
Commands behind the fbsir_* scripts. Every command returns its exit status:
0 success, 1 config error, 2 solver error, 3 sweep bracket error.
"""
import logging
import math
import os
from dataclasses import replace

import numpy as np
import pandas as pd
from rich import box
from rich.console import Console
from rich.table import Table

from fbsir.analysis import (
    SWEEP_COLUMNS,
    SWEEPABLE,
    convergence_study,
    count_flips,
    sweep_critical_h0,
    sweep_parameter,
)
from fbsir.config import load_scenario
from fbsir.eigen import EigenQuery, lambda1
from fbsir.errors import BracketError, ConfigError, NoCriticalRadiusError, SolverError
from fbsir.model import equilibria, integrate_ode, thresholds
from fbsir.solver import run, run_fixed_domain
from fbsir.writer import FLOAT_FORMAT, Writer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_BRACKET = 3


def format_value(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return f"{value}"


def nice_print(dic):
    """
    Prints key=value lines.

    Args:
        dic (dict): values to print

    """
    for key, item in dic.items():
        print(f"{key}={format_value(item)}")


def table_print(dic, title=None):
    """
    Prints a dictionary using rich.Table

    Args:
        dic (dict): values to print
        title (str): table title

    """
    console = Console()
    table = Table(
        show_header=True, header_style="bold red", box=box.DOUBLE_EDGE, title=title
    )
    table.add_column("Quantity", justify="right")
    table.add_column("Value")
    for key, item in dic.items():
        table.add_row(key, format_value(item))
    console.print(table)


def _load(config_path):
    try:
        return load_scenario(config_path)
    except (ConfigError, IOError) as e:
        logger.error(f"Invalid configuration: {e}")
        return None


def cmd_run(
    config_path,
    fixed_domain=False,
    profiles=False,
    svg=None,
    h5=None,
    outdir=None,
    dump_config=None,
    progress=False,
):
    """
    Runs a scenario and writes its artifacts: the time series CSV, and
    optionally profile snapshots, SVG charts and an HDF5 archive. Prints the
    threshold report, the last line is classification=<label>.

    Args:
        config_path (str): scenario file
        fixed_domain (bool): solve on the fixed ball of radius L
        profiles (bool): write the saved profiles, turns on save_profiles
        svg (bool): write SVG charts, the scenario decides when None
        h5 (bool): write the HDF5 archive, the scenario decides when None
        outdir (str): output directory, the scenario decides when None
        dump_config (str): write the parsed scenario to this path
        progress (bool): show a progress bar

    Returns:
        int: exit status

    """
    scenario = _load(config_path)
    if scenario is None:
        return EXIT_CONFIG
    if dump_config:
        scenario.dump(dump_config)
    if not fixed_domain and not scenario.init.compact:
        logger.error(
            f"{config_path}: initial data is not compactly supported, "
            "only the fixed domain solver (--fixed_domain) accepts it"
        )
        return EXIT_CONFIG

    cfg = scenario.time
    if profiles and not cfg.save_profiles:
        cfg = replace(cfg, save_profiles=True)
    solve = run_fixed_domain if fixed_domain else run
    try:
        outcome = solve(scenario.params, scenario.init, scenario.grid, cfg, progress=progress)
    except SolverError as e:
        logger.error(f"Solver failed: {e}")
        print(f"error={e}")
        return EXIT_SOLVER

    output = scenario.output
    writer = Writer(
        outcome,
        outdir=outdir or output.outdir,
        outname=output.name,
        progress=progress,
    )
    writer.to_csv()
    if profiles or cfg.save_profiles:
        writer.to_profiles()
    if output.svg if svg is None else svg:
        writer.to_svg()
    if output.h5 if h5 is None else h5:
        writer.to_h5()

    nice_print(outcome.report.to_dict())
    last = outcome.series.iloc[-1]
    nice_print({"t_end": float(last["t"]), "h_end": float(last["h"]), "sup_I_end": float(last["sup_I"])})
    print(f"classification={outcome.classification}")
    return EXIT_OK


def cmd_thresholds(config_path, no_table=True):
    """
    Prints R0, h0*, the vanishing bounds and the regime of a scenario.

    Args:
        config_path (str): scenario file
        no_table (bool): print key=value lines instead of a rich table

    Returns:
        int: exit status

    """
    scenario = _load(config_path)
    if scenario is None:
        return EXIT_CONFIG
    report = thresholds(scenario.params, scenario.init)
    values = report.to_dict()
    values["h0"] = scenario.init.h0
    values["mu"] = scenario.params.mu
    regime = values.pop("regime")
    if no_table:
        nice_print(values)
    else:
        table_print(values, title="Thresholds")
    print(f"regime={regime}")
    return EXIT_OK


def cmd_sweep(
    config_path,
    param,
    start=None,
    stop=None,
    steps=None,
    bisect=False,
    iterations=8,
    nproc=1,
    outdir=None,
):
    """
    Sweeps a parameter over evenly spaced values, or bisects on h0 between
    `start` and `stop`. Writes <name>_sweep_<param>.csv with the columns
    value,classification,h_end,sup_I_end.

    Args:
        config_path (str): scenario file
        param (str): one of h0, mu, beta, b
        start (float): first value, or lower end of the bisection bracket
        stop (float): last value, or upper end of the bisection bracket
        steps (int): number of values
        bisect (bool): bisect on h0 instead of sweeping
        iterations (int): bisection iterations
        nproc (int): number of worker processes
        outdir (str): output directory, the scenario decides when None

    Returns:
        int: exit status

    """
    scenario = _load(config_path)
    if scenario is None:
        return EXIT_CONFIG
    if param not in SWEEPABLE:
        logger.error(f"Cannot sweep {param}, choose one of {', '.join(SWEEPABLE)}")
        return EXIT_CONFIG
    if start is None or stop is None:
        logger.error("Both ends of the sweep range are needed")
        return EXIT_CONFIG
    outdir = outdir or scenario.output.outdir
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{scenario.output.name}_sweep_{param}.csv")
    args = (scenario.params, scenario.init, scenario.grid, scenario.time)

    if bisect:
        if param != "h0":
            logger.error("Bisection is only available for h0")
            return EXIT_CONFIG
        try:
            result = sweep_critical_h0(*args, (start, stop), iterations, nproc=nproc)
        except (BracketError, NoCriticalRadiusError) as e:
            logger.error(f"Invalid bracket: {e}")
            print(f"error={e}")
            return EXIT_BRACKET
        except ValueError as e:
            logger.error(f"Invalid bisection request: {e}")
            return EXIT_CONFIG
        result.evaluations[list(SWEEP_COLUMNS)].to_csv(
            path, index=False, float_format=FLOAT_FORMAT, na_rep="nan"
        )
        nice_print(
            {
                "h0_lower": result.lower,
                "h0_upper": result.upper,
                "width": result.width,
                "h0_star": result.h0_star,
            }
        )
        return EXIT_OK

    if not steps or steps < 1:
        logger.error(f"steps should be a positive integer, got {steps}")
        return EXIT_CONFIG
    values = np.linspace(start, stop, int(steps))
    table = sweep_parameter(*args, param, values, nproc=nproc)
    table[list(SWEEP_COLUMNS)].to_csv(
        path, index=False, float_format=FLOAT_FORMAT, na_rep="nan"
    )
    for _, row in table.iterrows():
        if row["error"]:
            logger.warning(f"{param}={row['value']} failed: {row['error']}")
    flips = count_flips(table["classification"].tolist())
    nice_print({"rows": len(table), "flips": flips, "monotone": flips <= 1})
    logger.info(f"Sweep written to {path}")
    return EXIT_OK


def cmd_eig(n, radius):
    """
    Prints the principal Dirichlet eigenvalue of the ball to 12 significant
    digits.

    Args:
        n (int): dimension
        radius (float): radius

    Returns:
        int: exit status

    """
    try:
        query = EigenQuery(radius=radius, n=n)
    except (ValueError, TypeError) as e:
        logger.error(f"Invalid eigenvalue query: {e}")
        return EXIT_CONFIG
    print(f"{lambda1(query):.12g}")
    return EXIT_OK


def cmd_ode(config_path, t_end=None, dt=None, stride=1, outdir=None):
    """
    Integrates the homogeneous model from the values of the initial profiles
    at r = 0 and writes <name>_ode.csv with the columns t,S,I,R.

    Args:
        config_path (str): scenario file
        t_end (float): final time, the scenario decides when None
        dt (float): time step, the scenario decides when None
        stride (int): keep one sample every `stride` steps
        outdir (str): output directory, the scenario decides when None

    Returns:
        int: exit status

    """
    scenario = _load(config_path)
    if scenario is None:
        return EXIT_CONFIG
    init = scenario.init
    start = [float(init.s0_on(0.0)), float(init.i0_on(0.0)), float(init.r0_on(0.0))]
    t_end = t_end or scenario.time.t_end
    dt = dt or scenario.time.dt
    try:
        trajectory = integrate_ode(start, scenario.params, t_end, dt, stride=stride)
    except SolverError as e:
        logger.error(f"ODE integration failed: {e}")
        print(f"error={e}")
        return EXIT_SOLVER
    except ValueError as e:
        logger.error(f"Invalid ODE request: {e}")
        return EXIT_CONFIG

    outdir = outdir or scenario.output.outdir
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{scenario.output.name}_ode.csv")
    table = pd.DataFrame(trajectory.y, columns=["S", "I", "R"])
    table.insert(0, "t", trajectory.t)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"ODE trajectory written to {path}")

    s, i, r = trajectory.terminal
    points = equilibria(scenario.params)
    nice_print({"S_end": s, "I_end": i, "R_end": r})
    endemic = points["endemic"]
    if endemic is not None:
        nice_print({"S_endemic": endemic[0], "I_endemic": endemic[1], "R_endemic": endemic[2]})
    else:
        nice_print({"S_disease_free": points["disease_free"][0]})
    return EXIT_OK


def cmd_convergence(
    config_path, levels=3, times=(1.0, 5.0, 10.0), outdir=None, refine="both"
):
    """
    Runs the scenario on successively halved grids and time steps and prints
    the observed orders. Writes <name>_convergence.csv.

    Args:
        config_path (str): scenario file
        levels (int): number of refinement levels
        times (tuple): times at which the mass balance residual is compared
        outdir (str): output directory, the scenario decides when None
        refine (str): what is halved, "both", "space" or "time"

    Returns:
        int: exit status

    """
    scenario = _load(config_path)
    if scenario is None:
        return EXIT_CONFIG
    try:
        table = convergence_study(
            scenario.params,
            scenario.init,
            scenario.grid,
            scenario.time,
            levels=levels,
            times=tuple(times),
            refine=refine,
        )
    except SolverError as e:
        logger.error(f"Solver failed: {e}")
        print(f"error={e}")
        return EXIT_SOLVER
    except ValueError as e:
        logger.error(f"Invalid convergence request: {e}")
        return EXIT_CONFIG

    outdir = outdir or scenario.output.outdir
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{scenario.output.name}_convergence.csv")
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
    last = table.iloc[-1]
    summary = {"levels": levels, "h_order": float(last["h_order"])}
    for t in times:
        summary[f"residual_ratio_{t:g}"] = float(last[f"residual_ratio_{t:g}"])
    nice_print(summary)
    if any(math.isfinite(v) and v < 1.8 for k, v in summary.items() if k.startswith("residual_ratio")):
        logger.warning("Mass balance residual did not halve under refinement")
    return EXIT_OK
