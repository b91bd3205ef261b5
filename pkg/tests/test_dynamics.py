import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings
from hypothesis import strategies as st

from gearkdv import DampingProfile, Grid, ModelParams, State, WeightConfig
from gearkdv.core import damping_eval
from gearkdv.diagnostics import energy, energy_violation
from gearkdv.dynamics import (StepperConfig, assemble_linear, linear_operator, run, state_vector,
                              step, to_interleaved, vector_state)


def manufactured(params, L):
    """Exact fields and the forcing that makes them solve the forced system."""
    x, t, a = sym.symbols("x t a")
    u = sym.Rational(1, 1000) * x * (L - x) ** 2 * sym.cos(t)
    v = sym.Rational(1, 1000) * x * (L - x) ** 2 * sym.exp(-t) * sym.sin(x)
    p = params
    fu = (u.diff(t) + u.diff(x, 3) + p.a3 * v.diff(x, 3) + a * u
          + u * u.diff(x) + p.a1 * v * v.diff(x) + p.a2 * (u * v).diff(x))
    fv = (p.b1 * v.diff(t) + p.r * v.diff(x) + v.diff(x, 3) + p.b2 * p.a3 * u.diff(x, 3) + a * v
          + v * v.diff(x) + p.a2 * p.b2 * u * u.diff(x) + p.a1 * p.b2 * (u * v).diff(x))
    lam = lambda e, *args: sym.lambdify(args, e, "numpy")
    return lam(u, x, t), lam(v, x, t), lam(fu, x, t, a), lam(fv, x, t, a)


def mms_errors(levels, T=1.0):
    params, prof, weight = ModelParams(), DampingProfile(), WeightConfig()
    L = 15.0
    U, V, FU, FV = manufactured(params, L)
    errs = []
    for N, dt in levels:
        g = Grid(L=L, N=N)
        xi = g.interior
        a = damping_eval(prof, xi)

        def forcing(t):
            return to_interleaved(FU(xi, t, a), FV(xi, t, a) / params.b1)

        init = State(0.0, U(g.x, 0.0) + 0 * g.x, V(g.x, 0.0) + 0 * g.x)
        tr = run(init, T, StepperConfig(dt=dt, stride=10 ** 9), params, prof, weight, g,
                 forcing=forcing)
        f = tr.states[-1]
        errs.append(np.sqrt(g.h * np.sum((f.u - U(g.x, T)) ** 2 + (f.v - V(g.x, T)) ** 2)))
    return np.array(errs)


def test_manufactured_solution_second_order():
    errs = mms_errors([(150, 4e-3), (300, 2e-3), (600, 1e-3)])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(orders >= 1.9), orders


def test_step_matches_run(params, profile, weight, small_grid):
    g = small_grid
    u = 0.3 * np.exp(-(g.x - 4) ** 2)
    u[0] = u[-1] = 0
    init = State(0.0, u, 0.5 * u)
    cfg = StepperConfig(dt=1e-3, stride=1)
    m = assemble_linear(params, profile, g, cfg.dt)
    hist, s = {}, init
    for _ in range(20):
        s = step(s, cfg, m, params, profile, g, history=hist)
    tr = run(init, 0.02, cfg, params, profile, weight, g, matrix=m)
    np.testing.assert_allclose(s.u, tr.states[-1].u, rtol=1e-13, atol=1e-15)
    assert tr.states[-1].t == pytest.approx(0.02)


def test_run_is_deterministic(params, profile, weight, small_grid):
    g = small_grid
    u = 0.5 * np.exp(-(g.x - 4) ** 2)
    u[0] = u[-1] = 0
    init = State(0.0, u, u.copy())
    cfg = StepperConfig(dt=1e-3, stride=10)
    a = run(init, 0.2, cfg, params, profile, weight, g)
    b = run(init, 0.2, cfg, params, profile, weight, g)
    np.testing.assert_array_equal(a.series, b.series)


def test_interleave_roundtrip(rng):
    U = rng.standard_normal(20)
    np.testing.assert_array_equal(state_vector(vector_state(U, 0.0)), U)


def test_linear_operator_structure(params, profile, small_grid):
    A = linear_operator(params, profile, small_grid)
    dense = A.to_dense() if hasattr(A, "to_dense") else A.toarray()
    n2 = 2 * small_grid.n_interior
    assert dense.shape == (n2, n2)
    rows, cols = np.nonzero(dense)
    assert (rows - cols).max() <= 5 and (cols - rows).max() <= 7


def test_zero_state_stays_zero(params, profile, weight, small_grid):
    tr = run(State.zeros(small_grid), 0.05, StepperConfig(dt=1e-3), params, profile, weight,
             small_grid)
    assert np.all(tr.series[:, 1:] == 0)


def test_bad_final_time(params, profile, weight, small_grid):
    with pytest.raises(ValueError):
        run(State.zeros(small_grid), 0.0105, StepperConfig(dt=1e-3), params, profile, weight,
            small_grid)


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(2.0, 8.0), st.floats(0.5, 2.0))
def test_linear_energy_nonincreasing(cu, cv, center, width):
    params, prof, weight = ModelParams(), DampingProfile(), WeightConfig()
    g = Grid(L=15.0, N=300)
    shape = np.exp(-((g.x - center) / width) ** 2) * (1 - np.exp(-3 * g.x))
    shape[-1] = 0.0
    init = State(0.0, cu * shape, cv * shape)
    tr = run(init, 0.5, StepperConfig(dt=1e-3), params, prof, weight, g, linear=True)
    E0 = energy(init, params, g)
    if E0 > 0:
        assert energy_violation(tr, params, g) <= 1e-8


def test_truncation_length_insensitive():
    # the damping beyond beta absorbs outgoing waves before they reach x = L
    from gearkdv.cli import simulate_config
    from gearkdv.config import parse_config
    a = simulate_config(parse_config("", ["N=600", "dt=2e-3", "T=5"]), store_states=True)
    b = simulate_config(parse_config("", ["N=900", "L=22.5", "dt=2e-3", "T=5"]), store_states=True)
    ua, ub = a.states[-1], b.states[-1]
    k = len(ua.u)
    scale = np.abs(ub.u).max() + np.abs(ub.v).max()
    assert max(np.abs(ua.u - ub.u[:k]).max(), np.abs(ua.v - ub.v[:k]).max()) < 1e-3 * scale
