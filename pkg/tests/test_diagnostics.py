import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gearkdv import Grid, State, WeightConfig
from gearkdv import diagnostics as dg
from gearkdv.dynamics import StepperConfig, run


@pytest.fixture(scope="module")
def short_run():
    from gearkdv import DampingProfile, ModelParams
    p, prof, w = ModelParams(), DampingProfile(), WeightConfig()
    g = Grid(L=15.0, N=600)
    u = 0.5 * np.exp(-(g.x - 4) ** 2)
    u[0] = u[-1] = 0
    tr = run(State(0.0, u, np.zeros_like(u)), 1.0, StepperConfig(dt=2e-3, stride=5), p, prof, w, g)
    return tr, p, prof, w, g


def test_agmon_closed_form():
    # u = e^{-x}, b = 1/2: sup = 1, |u|^2 = |u_x|^2 = 1 - e^{-L}, so ratio = 1/(sqrt(3) 2^{1/4})
    g = Grid(L=15.0, N=3000)
    s = State(0.0, np.exp(-g.x), np.zeros_like(g.x))
    lhs, rhs, ratio = dg.agmon_check(s, WeightConfig(b=0.5), g)
    expect = 1.0 / (np.sqrt(3.0) * 2.0 ** 0.25)
    assert lhs == pytest.approx(1.0)
    assert ratio == pytest.approx(expect, rel=1e-3)
    assert ratio == pytest.approx(0.485, abs=0.01)


def test_agmon_zero_state():
    g = Grid(L=5.0, N=50)
    assert dg.agmon_check(State.zeros(g), WeightConfig(), g) == (0.0, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.3, 3.0), st.integers(1, 3), st.floats(-2, 2))
def test_agmon_holds_for_decaying_fields(b, excess, p, c):
    g = Grid(L=15.0, N=1500)
    u = g.x ** p * np.exp(-(b + excess) * g.x)
    v = c * g.x * np.exp(-(b + excess + 0.5) * g.x)
    assert dg.agmon_check(State(0.0, u, v), WeightConfig(b=b), g)[2] < 1


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(2.0, 10.0), st.floats(0.3, 2.0), st.floats(-2, 2))
def test_poincare_holds_for_bumps(b, c, w, a):
    g = Grid(L=15.0, N=1500)
    z = (g.x - c) / w
    bump = np.where(np.abs(z) < 1, np.cos(0.5 * np.pi * z) ** 2, 0.0)
    lhs, rhs = dg.poincare_check(State(0.0, bump, a * bump), WeightConfig(b=b), g)
    assert lhs <= rhs


def test_poincare_rejects_bad_support():
    g = Grid(L=5.0, N=100)
    with pytest.raises(ValueError):
        dg.poincare_check(State(0.0, np.ones_like(g.x), np.zeros_like(g.x)), WeightConfig(), g)
    u = g.x.copy()
    u[-1] = 0.0
    with pytest.raises(ValueError):
        dg.poincare_check(State(0.0, u, np.zeros_like(u)), WeightConfig(), g)
    assert dg.poincare_check(State.zeros(g), WeightConfig(), g) == (0.0, 0.0)


def test_fit_decay_exact_exponential():
    t = np.linspace(0, 10, 101)
    fit = dg.fit_decay(t, 2.0 * np.exp(-0.3 * t))
    assert fit.eta == pytest.approx(0.3, rel=1e-10)
    assert fit.C == pytest.approx(2.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.window == (1.0, 10.0)


def test_fit_decay_needs_samples():
    with pytest.raises(ValueError):
        dg.fit_decay(np.arange(5.0), np.ones(5))


def test_identities_small_residual(short_run):
    tr, p, prof, w, g = short_run
    assert dg.dissipation_identity_residual(tr, p, prof, g).relative < 5e-3
    res = dg.weighted_identity_residual(tr, p, prof, w, g)
    assert res.relative < 5e-3
    assert len(res.terms) == 10
    with pytest.raises(ValueError):
        dg.weighted_identity_residual(tr, p, prof, WeightConfig(b=0.5), g)


def test_identity_partial_window(short_run):
    tr, p, prof, w, g = short_run
    assert dg.dissipation_identity_residual(tr, p, prof, g, T=0.5).relative < 5e-3
    with pytest.raises(ValueError):
        dg.dissipation_identity_residual(tr, p, prof, g, T=5.0)


def test_series_matches_state_functionals(short_run):
    tr, p, prof, w, g = short_run
    last = tr.states[-1]
    assert dg.series_energy(tr, p, g)[-1] == pytest.approx(dg.energy(last, p, g), rel=1e-12)
    assert dg.series_lyapunov(tr, w, g)[-1] == pytest.approx(dg.lyapunov(last, p, w, g), rel=1e-12)


def test_lyapunov_bounds(short_run):
    tr, p, prof, w, g = short_run
    rep = dg.lyapunov_bound_checks(tr, p, prof, w, g)
    assert 0 < rep["c7_ratio"] <= 1
    assert rep["c8_constant"] > 0
    assert set(rep) >= {"c7_lhs", "c7_rhs", "c8_lhs", "c8_bracket"}


def test_energy_monotone(short_run):
    tr, p, prof, w, g = short_run
    assert dg.energy_violation(tr, p, g) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.3, 3.0), st.floats(-2, 2))
def test_agmon_without_left_boundary_condition(b, excess, c):
    # H^1_b fields need not vanish at x = 0
    g = Grid(L=15.0, N=1500)
    u = (1 + c * g.x) * np.exp(-(b + excess) * g.x)
    assert dg.agmon_check(State(0.0, u, 0.5 * u), WeightConfig(b=b), g)[2] < 1
