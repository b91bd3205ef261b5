"""The twelve acceptance criteria on the default damped scenario.

Each test records one pass/fail line, printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from gearkdv import Grid, State, WeightConfig
from gearkdv import diagnostics as dg
from gearkdv.cli import random_compact_state, random_decaying_state, simulate_config
from gearkdv.config import parse_config
from gearkdv.discretization import build_d3
from gearkdv.dynamics import StepperConfig, assemble_linear, run
from gearkdv.spectral import assemble_B, lambda_paper, rayleigh_sup
from gearkdv.wellposedness import (contraction_factor, f_norm, linear_flow, picard_solve,
                                   sample_trajectory)
from test_dynamics import mms_errors

pytestmark = pytest.mark.slow


def record(k, ok, detail):
    ACCEPTANCE.append((k, bool(ok), detail))
    assert ok, detail


@pytest.fixture(scope="module")
def coarse():
    cfg = parse_config("")
    t0 = time.perf_counter()
    traj = simulate_config(cfg)
    return cfg, traj, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fine():
    cfg = parse_config("", ["N=3000", "dt=5e-4", "stride=20"])
    t0 = time.perf_counter()
    traj = simulate_config(cfg)
    return cfg, traj, time.perf_counter() - t0


def test_c01_energy_dissipation(coarse):
    cfg, traj, secs = coarse
    ev = dg.energy_violation(traj, cfg.params(), cfg.grid())
    record(1, ev <= 1e-8 and secs <= 120,
           f"max increase/E0 = {ev:.2e} (<= 1e-8), runtime {secs:.1f} s")


def _refinement(k, coarse, fine, residual):
    (c1, t1, s1), (c2, t2, s2) = coarse, fine
    r1 = residual(c1, t1).relative
    r2 = residual(c2, t2).relative
    record(k, r1 <= 5e-3 and r1 / r2 >= 3 and s1 + s2 <= 600,
           f"relative residual {r1:.2e} -> {r2:.2e}, factor {r1 / r2:.2f} (>= 3)")


def test_c02_dissipation_identity(coarse, fine):
    _refinement(2, coarse, fine, lambda c, t: dg.dissipation_identity_residual(
        t, c.params(), c.profile(), c.grid()))


def test_c03_weighted_identity(coarse, fine):
    _refinement(3, coarse, fine, lambda c, t: dg.weighted_identity_residual(
        t, c.params(), c.profile(), c.weight(), c.grid()))


def test_c04_exponential_decay(coarse):
    cfg, traj, _ = coarse
    t = np.array([d.t for d in traj.diagnostics])
    y = np.sqrt([d.weighted_norm_sq for d in traj.diagnostics])
    fit = dg.fit_decay(t, y, (1.0, 10.0))
    m = (t >= 1.0 - 1e-12) & (t <= 10.0 + 1e-12)
    over = float(np.max(fit.envelope(t[m]) / y[m]) - 1)
    record(4, fit.eta > 0 and fit.r_squared >= 0.98 and over <= 0.10,
           f"eta = {fit.eta:.4f}, r2 = {fit.r_squared:.4f}, max over-prediction {over:.3f}")


def test_c05_lyapunov_decrease(coarse):
    cfg, traj, _ = coarse
    g = cfg.grid()
    drops = []
    for cb in (0.5, 1.0, 2.0):
        lyap = dg.series_lyapunov(traj, WeightConfig(b=cfg.b, cb=cb), g)
        drops.append(lyap[-1] / lyap[0])
    record(5, all(d < 1 for d in drops),
           "L(T)/L(0) = " + ", ".join(f"{d:.2e}" for d in drops) + " for cb = 0.5, 1, 2")


def test_c06_certificate():
    cfg = parse_config("")
    t0 = time.perf_counter()
    p, prof = cfg.params(), cfg.profile()
    g = cfg.grid(400)
    sups, lams = [], []
    for b in (0.1, 0.25, 0.5):
        w = WeightConfig(b=b, cb=cfg.cb)
        sups.append(rayleigh_sup(assemble_B(p, prof, w, g), p, g, method="dense"))
        lams.append(lambda_paper(p, w))
    small = cfg.grid(100)
    B = assemble_B(p, prof, cfg.weight(), small)
    dense = rayleigh_sup(B, p, small, method="dense")
    power = rayleigh_sup(B, p, small, method="power")
    agree = abs(dense - power) <= 1e-6 * max(1.0, abs(dense))
    secs = time.perf_counter() - t0
    ok = all(s <= lam + 1e-3 for s, lam in zip(sups, lams)) and agree and secs <= 60
    record(6, ok, "sup/lambda = " + ", ".join(f"{s:.4g}/{lam:.4g}" for s, lam in zip(sups, lams))
           + f"; dense-power gap {abs(dense - power):.1e}")


def test_c07_agmon():
    g = Grid(L=15.0, N=1500)
    rng = np.random.default_rng(7)
    w = WeightConfig(b=0.25)
    ratios = [dg.agmon_check(random_decaying_state(rng, g, w.b), w, g)[2] for _ in range(100)]
    fine = Grid(L=15.0, N=3000)
    closed = dg.agmon_check(State(0.0, np.exp(-fine.x), 0 * fine.x), WeightConfig(b=0.5), fine)[2]
    held = sum(r < 1 for r in ratios)
    record(7, held == 100 and abs(closed - 0.485) <= 0.01,
           f"{held}/100 fields hold (max ratio {max(ratios):.3f}); e^-x ratio {closed:.4f}")


def test_c08_poincare():
    g = Grid(L=15.0, N=1500)
    rng = np.random.default_rng(8)
    w = WeightConfig(b=0.25)
    held = 0
    for _ in range(100):
        lhs, rhs = dg.poincare_check(random_compact_state(rng, g), w, g)
        held += lhs <= rhs
    record(8, held == 100, f"{held}/100 fields hold")


def test_c09_kato_smoothing():
    vals = {}
    for N, dt in ((1500, 1e-3), (3000, 5e-4)):
        for amp in (0.5, 1.0):
            cfg = parse_config("", [f"N={N}", f"dt={dt}", "linear=true", f"ic_amplitude={amp}"])
            vals[N, amp] = dg.smoothing_ratio(simulate_config(cfg), cfg.weight(), cfg.grid())
    refine = abs(vals[3000, 0.5] / vals[1500, 0.5] - 1)
    amp = max(abs(vals[N, 1.0] / vals[N, 0.5] - 1) for N in (1500, 3000))
    record(9, refine <= 0.2 and amp <= 1e-8,
           f"ratio {vals[1500, 0.5]:.5f}, refinement change {refine:.1e}, amplitude change {amp:.1e}")


def test_c10_picard():
    cfg = parse_config("", ["ic_amplitude=0.1"])
    p, prof, w = cfg.params(), cfg.profile(), cfg.weight()
    g = cfg.grid(cfg.picard_N)
    dt, T = cfg.picard_dt, 0.1
    m = assemble_linear(p, prof, g, dt)
    U0 = cfg.initial_state(g)
    res = picard_solve(U0, T, p, prof, w, g, dt, matrix=m)
    geometric = res.converged and all(r < 0.5 for r in res.ratios[1:])
    tr = run(U0, T, StepperConfig(dt=dt, stride=1), p, prof, w, g, matrix=m)
    imex = sample_trajectory(tr.states, g)
    diff = f_norm(res.field - imex, w, g) / f_norm(imex, w, g)
    base = linear_flow(U0, T, dt, m)
    r1 = contraction_factor(base, 0.5 * base, T, p, prof, w, g, dt, matrix=m)
    r2 = contraction_factor(0.5 * base, 0.25 * base, T, p, prof, w, g, dt, matrix=m)
    halving = r2 / r1
    record(10, geometric and diff <= 1e-3 and abs(halving - 0.5) <= 0.125,
           f"max ratio after it. 2 {max(res.ratios[1:]):.3f}, IMEX gap {diff:.1e}, "
           f"contraction ratio halves by {halving:.3f}")


def test_c11_c7_bound(coarse, fine):
    ratios = []
    for cfg, traj, _ in (coarse, fine):
        for cb in (0.5, 1.0, 2.0):
            w = WeightConfig(b=cfg.b, cb=cb)
            ratios.append(dg.lyapunov_bound_checks(traj, cfg.params(), cfg.profile(), w,
                                                   cfg.grid())["c7_ratio"])
    record(11, max(ratios) <= 1, f"max ratio {max(ratios):.4f} over {len(ratios)} runs")


def test_c12_scheme_convergence():
    errs = mms_errors([(150, 4e-3), (300, 2e-3), (600, 1e-3)])
    orders = np.log2(errs[:-1] / errs[1:])
    g = Grid(L=15.0, N=60)
    d3 = build_d3(g) @ (g.interior * (g.L - g.interior) ** 2)
    exact = float(np.max(np.abs(d3 / 6.0 - 1)))
    record(12, orders.min() >= 1.9 and exact <= 1e-10,
           "orders " + ", ".join(f"{o:.3f}" for o in orders) + f"; D3 cubic error {exact:.1e}")
