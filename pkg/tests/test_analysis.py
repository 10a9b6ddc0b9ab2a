import math

import numpy as np
import pandas as pd
import pytest
from pytest import approx

import fbsir.analysis as analysis
from fbsir.analysis import *
from fbsir.errors import BracketError, InconclusiveBracketError, NoCriticalRadiusError
from fbsir.frontfix import GridSpec, SimState
from fbsir.model import InitialData, ModelParams, Profile, Supersolution, thresholds
from fbsir.solver import TimeStepConfig, run, run_fixed_domain

RATES = dict(b=1.0, beta=1.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4, d1=1.0, d2=1.0, d3=1.0)


def make_params(**kwargs):
    values = dict(RATES, mu=1.0)
    values.update(kwargs)
    return ModelParams(**values)


def make_init(h0=1.0, amplitude=0.5):
    return InitialData(
        h0=h0, s0=Profile.constant(2.0), i0=Profile.bump(amplitude, h0), r0=Profile.zero()
    )


def make_series(t, h, sup_i):
    n = len(t)
    return pd.DataFrame(
        {
            "t": t,
            "h": h,
            "dhdt": np.zeros(n),
            "sup_S": np.full(n, 2.0),
            "sup_I": sup_i,
            "sup_R": np.zeros(n),
            "mass_I": np.zeros(n),
            "balance_residual": np.zeros(n),
        },
        columns=SERIES_COLUMNS,
    )


@pytest.fixture(scope="module")
def report():
    return thresholds(make_params(), make_init())


def test_spread_radius():
    assert spread_radius(1.0, 3.0) == 6.0
    assert spread_radius(1.0, 0.2) == 4.0
    assert spread_radius(1.0, math.inf) == 4.0


def test_classify(report):
    params = make_params()
    t = np.linspace(0.0, 100.0, 101)
    vanishing = make_series(t, 1.0 + 0.5 * (1 - np.exp(-t)), 0.5 * np.exp(-t))
    assert classify(vanishing, params, report, 1.0) == VANISHING

    spreading = make_series(t, 1.0 + 0.2 * t, np.full(101, 0.5))
    assert report.h0_star == approx(math.pi / 2)
    assert classify(spreading, params, report, 1.0) == SPREADING
    assert classify(spreading, params, report, 1.0, has_front=False) == UNDECIDED

    # front still moving while the infection fades
    creeping = make_series(t, 1.0 + 0.01 * t, 0.5 * np.exp(-t))
    assert classify(creeping, params, report, 1.0) == UNDECIDED

    # not far enough yet
    slow = make_series(t, 1.0 + 0.01 * t, np.full(101, 0.5))
    assert classify(slow, params, report, 1.0) == UNDECIDED


def test_classify_tolerances(report):
    params = make_params()
    t = np.linspace(0.0, 10.0, 11)
    series = make_series(t, np.ones(11), np.full(11, 1e-7))
    assert classify(series, params, report, 1.0) == UNDECIDED
    loose = ClassifyTolerances(vanish_sup_i=1e-6)
    assert classify(series, params, report, 1.0, tolerances=loose) == VANISHING


def test_infected_mass():
    init = make_init(amplitude=0.5)
    grid = GridSpec(L=8.0, n_l=64, n_h=64)
    state = SimState.initial(init, grid)
    mass = infected_mass(state, 1)
    assert mass == approx(1.0 / 3.0, rel=1e-3)
    moved = SimState(t=1.0, h=2.0, h0=1.0, s_phys=state.s_phys, v_comp=state.v_comp, w_comp=state.w_comp)
    assert infected_mass(moved, 1) == approx(2.0 * mass)
    assert infected_mass(moved, 3) == approx(8.0 * infected_mass(state, 3))


def test_mass_balance_residual_requires_ordered_frames():
    grid = GridSpec(L=8.0, n_l=64, n_h=32)
    state = SimState.initial(make_init(), grid)
    with pytest.raises(ValueError):
        mass_balance_residual(state, state, make_params(), grid)


def test_mass_balance_residual_disease_free():
    grid = GridSpec(L=8.0, n_l=64, n_h=32)
    init = InitialData(h0=1.0, s0=Profile.constant(2.0), i0=Profile.zero(), r0=Profile.zero())
    a = SimState.initial(init, grid)
    b = SimState(t=0.5, h=a.h, h0=a.h0, s_phys=a.s_phys, v_comp=a.v_comp, w_comp=a.w_comp)
    assert mass_balance_residual(a, b, make_params(), grid) == 0.0


def test_convergence_of_mass_balance():
    params = make_params(mu=0.5)
    grid = GridSpec(L=10.0, n_l=200, n_h=100)
    cfg = TimeStepConfig(dt=0.01, t_end=10.0, save_stride=10)
    table = convergence_study(params, make_init(), grid, cfg, levels=3, times=(1.0, 5.0, 10.0))
    assert list(table["n_h"]) == [100, 200, 400]
    assert list(table["dt"]) == approx([0.01, 0.005, 0.0025])
    for t in ("1", "5", "10"):
        residuals = table[f"residual_{t}"].to_numpy()
        assert np.all(np.diff(residuals) < 0)
        assert table[f"residual_ratio_{t}"].iloc[-1] >= 1.8
    assert math.isnan(table["h_order"].iloc[0])
    # dt and ds halve together, h(t_end) converges at first order
    assert table["h_ratio"].iloc[-1] >= 1.8
    assert table["h_order"].iloc[-1] == approx(1.0, abs=0.25)


def test_convergence_study_time_refinement():
    params = make_params(mu=0.5)
    grid = GridSpec(L=10.0, n_l=100, n_h=50)
    cfg = TimeStepConfig(dt=0.02, t_end=10.0, save_stride=5)
    table = convergence_study(
        params, make_init(), grid, cfg, levels=3, times=(5.0, 10.0), refine="time"
    )
    assert list(table["n_h"]) == [50, 50, 50]
    assert list(table["n_l"]) == [100, 100, 100]
    assert list(table["dt"]) == approx([0.02, 0.01, 0.005])
    assert 0.8 <= table["h_order"].iloc[-1] <= 1.3


def test_convergence_study_space_refinement():
    grid = GridSpec(L=10.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.05, t_end=1.0, save_stride=2)
    table = convergence_study(
        make_params(), make_init(), grid, cfg, levels=2, times=(1.0,), refine="space"
    )
    assert list(table["n_h"]) == [16, 32]
    assert list(table["n_l"]) == [32, 64]
    assert list(table["dt"]) == approx([0.05, 0.05])
    assert table["h_end"].iloc[1] > 1.0


def test_convergence_study_validation():
    grid = GridSpec(L=10.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.1, t_end=1.0)
    with pytest.raises(ValueError):
        convergence_study(make_params(), make_init(), grid, cfg, levels=1)
    with pytest.raises(ValueError, match="saved frame"):
        convergence_study(make_params(), make_init(), grid, cfg, levels=2, times=(0.55,))
    with pytest.raises(ValueError, match="refine"):
        convergence_study(
            make_params(), make_init(), grid, cfg, levels=2, times=(1.0,), refine="dt"
        )


@pytest.fixture(scope="module")
def short_outcome():
    params = make_params(mu=0.1)
    grid = GridSpec(L=2.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.01, t_end=1.0, save_stride=10, save_profiles=True)
    return run(params, make_init(h0=0.2), grid, cfg)


def test_comparison_check_refusals(short_outcome):
    unverified = Supersolution(
        h0=0.2, big_m=1.0, gamma=1.0, c1=2.0, verified=False, violations=("mu too large",)
    )
    result = comparison_check(short_outcome, unverified, tol=1e-3)
    assert not result.certified
    assert not result.passed
    assert result.preconditions == ("mu too large",)

    upper = Supersolution(h0=0.2, big_m=1.0, gamma=1.0, c1=2.0)
    short_outcome_without_frames = RunOutcome(
        series=short_outcome.series,
        classification=short_outcome.classification,
        diagnostics=short_outcome.diagnostics,
        report=short_outcome.report,
        params=short_outcome.params,
        init=short_outcome.init,
        grid=short_outcome.grid,
        cfg=short_outcome.cfg,
    )
    result = comparison_check(short_outcome_without_frames, upper, tol=1e-3)
    assert not result.certified
    assert "save_profiles" in result.preconditions[0]


def test_comparison_check_detects_violation(short_outcome):
    # an upper solution far too small for the data
    tiny = Supersolution(h0=0.2, big_m=1e-3, gamma=1.0, c1=2.0)
    result = comparison_check(short_outcome, tiny, tol=1e-6)
    assert result.certified
    assert not result.passed
    assert result.first_violation["quantity"] == "I"
    assert result.first_violation["t"] == 0.0
    assert result.max_infected_excess > 0.4


def test_comparison_check_refuses_fixed_domain():
    params = make_params()
    grid = GridSpec(L=2.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.05, t_end=0.5, save_stride=5, save_profiles=True)
    outcome = run_fixed_domain(params, make_init(h0=0.2), grid, cfg)
    upper = Supersolution(h0=0.2, big_m=1.0, gamma=1.0, c1=2.0)
    result = comparison_check(outcome, upper, tol=1e-3)
    assert not result.certified


def test_count_flips():
    assert count_flips([VANISHING, VANISHING, SPREADING, SPREADING]) == 1
    assert count_flips([VANISHING, SPREADING, VANISHING]) == 2
    assert count_flips([VANISHING, UNDECIDED, FAILED, VANISHING]) == 0
    assert count_flips([]) == 0


THRESHOLD = 0.7


def threshold_rows(tasks, nproc, batches=None, undecided=()):
    if batches is not None:
        batches.append(len(tasks))
    rows = []
    for task in tasks:
        value = task[5]
        label = SPREADING if value > THRESHOLD else VANISHING
        if any(abs(value - u) < 1e-12 for u in undecided):
            label = UNDECIDED
        rows.append(
            {"value": value, "classification": label, "h_end": value, "sup_I_end": 0.0, "error": ""}
        )
    return rows


@pytest.mark.parametrize(
    "nproc, expected_batches",
    [(1, [2] + [1] * 8), (3, [2, 3, 3, 3, 3]), (7, [2, 7, 7, 3])],
)
def test_sweep_critical_h0_bisection(monkeypatch, nproc, expected_batches):
    batches = []
    monkeypatch.setattr(
        analysis, "_map_tasks", lambda tasks, n: threshold_rows(tasks, n, batches)
    )
    params = make_params()
    grid = GridSpec(L=20.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.1, t_end=1.0)
    result = sweep_critical_h0(params, make_init(), grid, cfg, (0.1, 2.0), 8, nproc=nproc)
    assert batches == expected_batches
    assert result.width == approx(1.9 / 256)
    assert result.lower <= THRESHOLD <= result.upper
    assert 0.1 <= result.lower < result.upper <= 2.0
    assert result.h0_star == approx(math.pi / 2)
    assert len(result.evaluations) == sum(expected_batches)
    assert list(result.evaluations.columns) == list(SWEEP_COLUMNS) + ["error"]
    assert result.evaluations["value"].is_monotonic_increasing


def test_sweep_critical_h0_errors(monkeypatch):
    params = make_params()
    grid = GridSpec(L=20.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.1, t_end=1.0)
    monkeypatch.setattr(analysis, "_map_tasks", lambda tasks, n: threshold_rows(tasks, n))

    with pytest.raises(BracketError):
        sweep_critical_h0(params, make_init(), grid, cfg, (1.0, 2.0), 4)
    with pytest.raises(ValueError):
        sweep_critical_h0(params, make_init(), grid, cfg, (2.0, 1.0), 4)
    with pytest.raises(NoCriticalRadiusError):
        sweep_critical_h0(make_params(beta=0.25), make_init(), grid, cfg, (0.1, 2.0), 4)

    monkeypatch.setattr(
        analysis, "_map_tasks", lambda tasks, n: threshold_rows(tasks, n, undecided=(1.05,))
    )
    with pytest.raises(InconclusiveBracketError):
        sweep_critical_h0(params, make_init(), grid, cfg, (0.1, 2.0), 4)


def test_sweep_critical_h0_zero_iterations(monkeypatch):
    def fail(tasks, nproc):
        raise AssertionError("no run expected")

    monkeypatch.setattr(analysis, "_map_tasks", fail)
    grid = GridSpec(L=20.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.1, t_end=1.0)
    result = sweep_critical_h0(make_params(), make_init(), grid, cfg, (0.1, 2.0), 0)
    assert (result.lower, result.upper) == (0.1, 2.0)
    assert result.evaluations.empty


def test_sweep_critical_h0_real_runs():
    params = make_params()
    h0_star = math.pi / 2
    bracket = (0.1 * h0_star, 2.0 * h0_star)
    grid = GridSpec(L=16.0, n_l=320, n_h=50)
    cfg = TimeStepConfig(dt=0.02, t_end=150.0, save_stride=50)
    result = sweep_critical_h0(params, make_init(), grid, cfg, bracket, 8, nproc=3)
    assert result.h0_star == approx(h0_star)
    assert result.width == approx((bracket[1] - bracket[0]) / 256)
    assert bracket[0] <= result.lower < result.upper <= result.h0_star
    table = result.evaluations
    assert len(table) == 2 + 4 * 3
    assert set(table[table["value"] <= result.lower]["classification"]) == {VANISHING}
    assert set(table[table["value"] >= result.upper]["classification"]) == {SPREADING}


@pytest.fixture(scope="module")
def cheap_scenario():
    params = make_params(beta=0.2)
    grid = GridSpec(L=4.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.05, t_end=60.0, save_stride=20)
    return params, make_init(), grid, cfg


def test_sweep_parameter_pool(cheap_scenario):
    params, init, grid, cfg = cheap_scenario
    table = sweep_parameter(params, init, grid, cfg, "beta", [0.1, 0.2, 0.3], nproc=2)
    assert list(table.columns) == list(SWEEP_COLUMNS) + ["error"]
    assert list(table["value"]) == [0.1, 0.2, 0.3]
    assert list(table["classification"]) == [VANISHING] * 3
    assert np.all(table["sup_I_end"] < 1e-8)
    assert np.all(table["h_end"] >= init.h0)


def test_sweep_parameter_records_failures(cheap_scenario):
    params, init, grid, cfg = cheap_scenario
    table = sweep_parameter(params, init, grid, cfg, "mu", [-1.0, 0.5], nproc=1)
    assert list(table["classification"]) == [FAILED, VANISHING]
    assert "mu" in table["error"].iloc[0]
    assert math.isnan(table["h_end"].iloc[0])
    with pytest.raises(ValueError):
        sweep_parameter(params, init, grid, cfg, "d2", [1.0])


def test_sweep_parameter_h0_rescales_initial_data(cheap_scenario):
    params, init, grid, cfg = cheap_scenario
    table = sweep_parameter(params, init, grid, cfg, "h0", [0.5, 1.0], nproc=1)
    assert list(table["classification"]) == [VANISHING, VANISHING]
    assert table["h_end"].iloc[0] >= 0.5
    assert table["h_end"].iloc[0] < table["h_end"].iloc[1]


def test_outcome_summary(short_outcome):
    summary = outcome_summary(short_outcome)
    assert summary["classification"] == short_outcome.classification
    assert summary["t_end"] == approx(1.0)
    assert "final_sup_I" in summary
    assert "regime" in summary
    assert "front_monotone" in summary
