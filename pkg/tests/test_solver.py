import math

import numpy as np
import pytest
from pytest import approx

from fbsir.analysis import SERIES_COLUMNS, SPREADING, UNDECIDED, VANISHING, comparison_check
from fbsir.errors import FrontEscapeError, PositivityError
from fbsir.frontfix import GridSpec, SimState, stefan_speed
from fbsir.model import (
    REGIME_VANISHING_SMALL,
    InitialData,
    ModelParams,
    Profile,
    build_supersolution,
    integrate_ode,
    thresholds,
)
from fbsir.solver import *

SPREADING_SETS = [
    dict(b=1.0, beta=1.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4),
    dict(b=1.0, beta=0.75, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4),
    dict(b=1.5, beta=1.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4),
]

SMALL_SETS = [
    dict(b=1.0, beta=1.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4, d1=1.0, d2=1.0, d3=1.0, n=1),
    dict(b=1.0, beta=0.8, mu1=0.4, mu2=0.5, mu3=0.8, alpha=0.3, d1=1.0, d2=1.5, d3=1.0, n=1),
    dict(b=0.5, beta=1.0, mu1=0.25, mu2=0.7, mu3=0.5, alpha=0.2, d1=1.0, d2=0.8, d3=1.2, n=2),
]


def bump_init(h0, amplitude, s0):
    return InitialData(
        h0=h0, s0=Profile.constant(s0), i0=Profile.bump(amplitude, h0), r0=Profile.zero()
    )


def vanishing_sets(count=5, seed=2021):
    rng = np.random.default_rng(seed)
    out = []
    for r0 in rng.uniform(0.3, 0.9, count):
        # R0 = b beta / (mu1 (mu2 + alpha)) = 2 beta
        out.append(
            ModelParams(
                b=1.0,
                beta=r0 / 2.0,
                mu1=0.5,
                mu2=0.6,
                mu3=0.7,
                alpha=0.4,
                d1=rng.uniform(0.5, 1.5),
                d2=rng.uniform(0.5, 1.5),
                d3=rng.uniform(0.5, 1.5),
                mu=rng.uniform(0.5, 2.0),
            )
        )
    return out


def check_invariants(outcome):
    diagnostics = outcome.diagnostics
    assert diagnostics["positivity_ok"]
    assert diagnostics["min_pre_clamp"] >= -1e-10
    assert diagnostics["front_monotone"]
    assert diagnostics["sup_s_ok"]
    assert diagnostics["speed_ok"]
    assert diagnostics["max_front_speed"] >= 0.0
    assert np.all(np.diff(outcome.series["h"].to_numpy()) >= 0)
    bound = outcome.report.c1 * (1 + 1e-6)
    assert outcome.series["sup_S"].max() <= bound


def test_time_step_config():
    cfg = TimeStepConfig(dt=0.01, t_end=1.0, save_stride=10)
    assert cfg.n_steps == 100
    finer = cfg.refined(2)
    assert finer.dt == approx(0.005)
    assert finer.save_stride == 20
    with pytest.raises(ValueError):
        TimeStepConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        TimeStepConfig(dt=1.0, t_end=0.5)
    with pytest.raises(ValueError):
        TimeStepConfig(dt=0.1, t_end=1.0, dt_safety=1.5)
    with pytest.raises(ValueError):
        TimeStepConfig(dt=0.1, t_end=1.0, save_stride=0)
    with pytest.raises(ValueError):
        TimeStepConfig(dt=0.1, t_end=1.0, positivity_tol=-1.0)


def test_stefan_cfl():
    params = ModelParams(mu=2.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    init = bump_init(1.0, 0.5, 2.0)
    grid = GridSpec(L=8.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.01, t_end=1.0)
    state = SimState.initial(init, grid)
    h_dot = stefan_speed(state.v_comp, state.h, state.h0, params.mu)
    assert h_dot == approx(2.0 * 0.5 * 2.0, rel=1e-10)
    front = grid.ds(1.0) / h_dot
    reaction = 1.0 / (1.0 * 2.0 + 0.6 + 0.4)
    assert stefan_cfl(state, params, grid, cfg) == approx(0.5 * min(front, reaction))


def test_step_without_infection_keeps_disease_free_state():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    init = InitialData(h0=1.0, s0=Profile.constant(2.0), i0=Profile.zero(), r0=Profile.zero())
    grid = GridSpec(L=4.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.1, t_end=1.0)
    state = step(SimState.initial(init, grid), params, grid, cfg)
    assert state.t == approx(0.1)
    assert state.h == 1.0
    assert state.s_phys == approx(np.full(33, 2.0))
    assert np.all(state.v_comp == 0.0)


def test_step_decay_without_contact():
    params = ModelParams(
        b=1.0, beta=0.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4, d1=1.0, d2=1.0, d3=1.0, mu=1.0
    )
    init = bump_init(1.0, 0.5, 2.0)
    grid = GridSpec(L=4.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.01, t_end=1.0)
    state = SimState.initial(init, grid)
    for _ in range(10):
        new = step(state, params, grid, cfg)
        factor = math.exp(-(params.mu2 + params.alpha) * cfg.dt)
        assert new.v_comp.max() <= factor * state.v_comp.max() + 1e-15
        assert new.h >= state.h
        state = new


def test_step_positivity_error():
    params = ModelParams(
        b=1.0, beta=0.0, mu1=0.5, mu2=0.6, mu3=0.7, alpha=0.4, d1=1.0, d2=1.0, d3=1.0, mu=1.0
    )
    init = bump_init(1.0, 0.5, 2.0)
    grid = GridSpec(L=4.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=10.0, t_end=20.0)
    with pytest.raises(PositivityError) as e:
        step(SimState.initial(init, grid), params, grid, cfg)
    assert e.value.t == approx(10.0)


def test_run_dimension_mismatch():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, n=2, **SPREADING_SETS[0])
    with pytest.raises(ValueError):
        run(params, bump_init(1.0, 0.5, 2.0), GridSpec(L=4.0, n_l=32, n_h=16), TimeStepConfig(dt=0.1, t_end=1.0))


def test_run_needs_compact_support():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    init = InitialData(
        h0=1.0,
        s0=Profile.constant(2.0),
        i0=Profile.constant(0.5),
        r0=Profile.constant(0.5),
        compact=False,
    )
    grid = GridSpec(L=8.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.05, t_end=1.0)
    with pytest.raises(ValueError, match="compact"):
        run(params, init, grid, cfg)
    outcome = run_fixed_domain(params, init, grid, cfg)
    assert outcome.fixed_domain


def test_run_series_and_frames():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    grid = GridSpec(L=8.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.05, t_end=1.0, save_stride=5, save_profiles=True)
    records = []
    outcome = run(params, bump_init(1.0, 0.5, 2.0), grid, cfg, sink=lambda r, f: records.append((r, f)))
    series = outcome.series
    assert tuple(series.columns) == SERIES_COLUMNS
    assert series["t"].to_numpy() == approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert math.isnan(series["balance_residual"].iloc[0])
    assert np.all(np.isfinite(series["balance_residual"].iloc[1:]))
    assert series["h"].iloc[0] == 1.0
    assert series["mass_I"].iloc[0] == approx(0.5 * 2.0 / 3.0, rel=1e-3)
    assert len(outcome.frames) == 5
    assert len(records) == 5
    assert records[-1][0]["t"] == approx(1.0)
    assert records[-1][1] is outcome.frames[-1]
    assert not outcome.fixed_domain
    assert not outcome.diagnostics["stopped_early"]
    check_invariants(outcome)


@pytest.mark.parametrize("params", vanishing_sets())
def test_vanishing_below_threshold(params):
    assert params.beta * params.b / (params.mu1 * (params.mu2 + params.alpha)) < 1
    init = bump_init(1.0, 0.5, params.s_star)
    grid = GridSpec(L=8.0, n_l=320, n_h=200)
    cfg = TimeStepConfig(dt=0.01, t_end=200.0, save_stride=100, save_profiles=True)
    outcome = run(params, init, grid, cfg)
    series = outcome.series
    last = series.iloc[-1]
    assert last["sup_I"] < 1e-6
    assert last["sup_R"] < 1e-5
    assert outcome.frames[-1].s[0] == approx(params.s_star, abs=1e-3)
    trailing = series[series["t"] >= 180.0]["h"]
    assert trailing.iloc[-1] - trailing.iloc[0] < 1e-4 * init.h0
    assert series["h"].max() <= 4 * init.h0
    assert outcome.classification == VANISHING
    check_invariants(outcome)


def spreading_case(rates, factor=1):
    params = ModelParams(mu=2.0, d1=1.0, d2=1.0, d3=1.0, n=1, **rates)
    report = thresholds(params, bump_init(1.0, 0.5, params.s_star))
    h0 = 2.0 * report.h0_star
    init = bump_init(h0, 0.5, params.s_star)
    grid = GridSpec(L=12.0 * h0, n_l=400, n_h=100)
    cfg = TimeStepConfig(dt=0.02, t_end=150.0, save_stride=10, stop_on_escape=True)
    if factor > 1:
        grid = grid.refined(factor)
        cfg = cfg.refined(factor)
    return params, init, grid, cfg


@pytest.mark.parametrize("rates", SPREADING_SETS)
def test_spreading_above_critical_radius(rates):
    params, init, grid, cfg = spreading_case(rates)
    outcome = run(params, init, grid, cfg)
    assert 1.5 <= outcome.report.r0 <= 3.0
    series = outcome.series
    assert series["h"].iloc[-1] > 4 * init.h0
    window = series[series["t"] >= series["t"].iloc[-1] * 0.9]
    assert window["sup_I"].min() > 1e-6
    assert outcome.classification == SPREADING
    check_invariants(outcome)

    finer = run(*spreading_case(rates, factor=2))
    assert finer.classification == outcome.classification


def test_front_escape_without_stop():
    params, init, grid, cfg = spreading_case(SPREADING_SETS[2])
    grid = GridSpec(L=3.0 * init.h0, n_l=120, n_h=60)
    with pytest.raises(FrontEscapeError) as e:
        run(params, init, grid, TimeStepConfig(dt=0.02, t_end=100.0))
    assert e.value.h >= 0.95 * grid.L


def test_stop_on_escape():
    params, init, grid, cfg = spreading_case(SPREADING_SETS[2])
    grid = GridSpec(L=3.0 * init.h0, n_l=120, n_h=60)
    outcome = run(params, init, grid, cfg)
    assert outcome.diagnostics["stopped_early"]
    assert outcome.series["h"].iloc[-1] >= 0.9 * grid.L
    assert outcome.series["t"].iloc[-1] < cfg.t_end


def test_stop_on_escape_within_substeps():
    params = ModelParams(mu=10.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    grid = GridSpec(L=2.0, n_l=64, n_h=32)
    cfg = TimeStepConfig(dt=0.5, t_end=5.0, stop_on_escape=True)
    outcome = run(params, bump_init(1.0, 0.5, 2.0), grid, cfg)
    diagnostics = outcome.diagnostics
    assert diagnostics["stopped_early"]
    assert diagnostics["cfl_substeps"] > 0
    h_end = outcome.series["h"].iloc[-1]
    assert 0.9 * grid.L <= h_end < 0.95 * grid.L
    t_end = outcome.series["t"].iloc[-1]
    assert 0.0 < t_end < cfg.t_end
    assert np.isfinite(outcome.series["balance_residual"].iloc[-1])


@pytest.mark.parametrize("rates", SMALL_SETS)
def test_vanishing_for_small_radius_and_coefficient(rates):
    base = ModelParams(mu=1.0, **rates)
    s0 = base.s_star
    bounds = thresholds(base, bump_init(0.1, 0.5, s0))
    init = bump_init(0.9 * bounds.h0_vanish_bound, 0.5, s0)
    params = ModelParams(mu=0.9 * bounds.mu_vanish_bound, **rates)
    report = thresholds(params, init)
    assert report.r0 > 1
    assert report.regime == REGIME_VANISHING_SMALL

    grid = GridSpec(L=4.0, n_l=400, n_h=100, n=params.n)
    cfg = TimeStepConfig(dt=0.01, t_end=200.0, save_stride=200, save_profiles=True)
    outcome = run(params, init, grid, cfg)
    assert outcome.series["h"].max() <= 4 * init.h0
    check_invariants(outcome)

    upper = build_supersolution(params, init, report)
    comparison = comparison_check(outcome, upper, tol=1e-3 * report.big_m)
    assert comparison.certified
    assert comparison.passed
    assert comparison.first_violation is None
    assert comparison.frames_checked == len(outcome.frames)


ODE_SETS = [
    (dict(b=0.1, beta=0.1, mu1=0.1, mu2=0.1, mu3=0.15, alpha=0.1), (1.5, 0.3, 0.1)),
    (dict(b=0.2, beta=0.2, mu1=0.1, mu2=0.1, mu3=0.15, alpha=0.1), (2.0, 0.1, 0.0)),
]


@pytest.mark.parametrize("rates, start", ODE_SETS)
def test_fixed_domain_matches_ode(rates, start):
    params = ModelParams(d1=1.0, d2=1.0, d3=1.0, mu=1.0, **rates)
    s0, i0, r0 = start
    init = InitialData(
        h0=0.5,
        s0=Profile.constant(s0),
        i0=Profile.constant(i0),
        r0=Profile.constant(r0),
        compact=False,
    )
    grid = GridSpec(L=1.0, n_l=16, n_h=16)
    dt = 5e-4
    cfg = TimeStepConfig(dt=dt, t_end=50.0, save_stride=200)
    outcome = run_fixed_domain(params, init, grid, cfg)
    assert outcome.fixed_domain
    series = outcome.series
    assert np.all(series["h"] == 1.0)
    assert np.all(series["dhdt"] == 0.0)

    reference = integrate_ode(start, params, t_end=50.0, dt=dt / 10, stride=2000)
    assert series["t"].to_numpy() == approx(reference.t)
    simulated = series[["sup_S", "sup_I", "sup_R"]].to_numpy()
    assert np.max(np.abs(simulated - reference.y)) < 1e-4
    assert outcome.classification in (VANISHING, UNDECIDED)


def test_fixed_domain_never_spreads():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    grid = GridSpec(L=4.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.05, t_end=20.0, save_stride=20, save_profiles=True)
    outcome = run_fixed_domain(params, bump_init(1.0, 0.5, 2.0), grid, cfg)
    assert outcome.classification == UNDECIDED
    assert len(outcome.frames) == len(outcome.series)
    check_invariants(outcome)


def test_fixed_domain_positive_after_first_step():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    grid = GridSpec(L=2.0, n_l=32, n_h=16)
    cfg = TimeStepConfig(dt=0.05, t_end=0.1, save_stride=1, save_profiles=True)
    outcome = run_fixed_domain(params, bump_init(0.5, 0.5, 2.0), grid, cfg)
    first, second = outcome.frames[0], outcome.frames[1]
    assert first.t == 0.0
    assert np.any(first.i == 0.0)
    assert second.t == approx(0.05)
    assert np.all(second.i > 0.0)


def test_fixed_domain_time_step_halving():
    params = ModelParams(mu=1.0, d1=1.0, d2=1.0, d3=1.0, **SPREADING_SETS[0])
    start = (2.0, 0.1, 0.0)
    init = InitialData(
        h0=0.5,
        s0=Profile.constant(start[0]),
        i0=Profile.constant(start[1]),
        r0=Profile.constant(start[2]),
        compact=False,
    )
    grid = GridSpec(L=1.0, n_l=16, n_h=16)
    reference = integrate_ode(start, params, t_end=10.0, dt=1e-3, stride=1000)
    errors = []
    for dt in (0.02, 0.01):
        cfg = TimeStepConfig(dt=dt, t_end=10.0, save_stride=round(1.0 / dt))
        series = run_fixed_domain(params, init, grid, cfg).series
        assert series["t"].to_numpy() == approx(reference.t)
        simulated = series[["sup_S", "sup_I", "sup_R"]].to_numpy()
        errors.append(np.max(np.abs(simulated - reference.y)))
    assert 1.7 <= errors[0] / errors[1] <= 2.3
