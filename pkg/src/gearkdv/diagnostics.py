"""Energy, Lyapunov and identity bookkeeping plus the standalone inequalities.

Time integrals over a trajectory use the trapezoid rule over every step; the
per-step integrands come from ``Trajectory.series`` (see
:data:`gearkdv.dynamics.SERIES_COLUMNS`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (DampingProfile, Grid, ModelParams, State, Trajectory,
                   WeightConfig, trapezoid)
from .discretization import gradient_nodes
from .dynamics import COL, boundary_form


@dataclass
class IdentityResidual:
    """Signed residual of a balance law and the magnitudes of its terms."""

    residual: float
    terms: dict = field(default_factory=dict)

    @property
    def scale(self) -> float:
        return float(sum(abs(v) for v in self.terms.values()))

    @property
    def relative(self) -> float:
        s = self.scale
        return abs(self.residual) / s if s > 0 else 0.0


@dataclass
class DecayFit:
    C: float
    eta: float
    r_squared: float
    window: tuple

    def envelope(self, t):
        return self.C * np.exp(-self.eta * np.asarray(t))


def energy(state: State, params: ModelParams, grid: Grid) -> float:
    """E = 1/2 int (b2 u^2 + b1 v^2)."""
    return 0.5 * trapezoid(params.b2 * state.u ** 2 + params.b1 * state.v ** 2, grid.h)


def lyapunov(state: State, params: ModelParams, weight: WeightConfig, grid: Grid) -> float:
    """1/2 int (b2 u^2 + b1 v^2) e^{2bx} + cb int (b2 u^2 + b1 v^2)."""
    q = params.b2 * state.u ** 2 + params.b1 * state.v ** 2
    ew = np.exp(2 * weight.b * grid.x)
    return 0.5 * trapezoid(q * ew, grid.h) + weight.cb * trapezoid(q, grid.h)


def _upto(traj: Trajectory, T: float | None) -> np.ndarray:
    S = traj.series
    if S is None or len(S) < 2:
        raise ValueError("trajectory too short: need per-step series with at least two rows")
    if T is None:
        return S
    k = int(round((T - S[0, 0]) / traj.dt))
    if k < 1 or k >= len(S):
        raise ValueError(f"T={T} outside the recorded window")
    return S[: k + 1]


def _tint(f: np.ndarray, dt: float) -> float:
    return trapezoid(f, dt)


def series_energy(traj: Trajectory, params: ModelParams, grid: Grid) -> np.ndarray:
    return 0.5 * grid.h * traj.series[:, COL["P"]]


def series_weighted_norm_sq(traj: Trajectory, grid: Grid) -> np.ndarray:
    return grid.h * traj.series[:, COL["Nw"]]


def series_lyapunov(traj: Trajectory, weight: WeightConfig, grid: Grid) -> np.ndarray:
    S = traj.series
    return grid.h * (0.5 * S[:, COL["Pw"]] + weight.cb * S[:, COL["P"]])


def series_boundary_form(traj: Trajectory, params: ModelParams) -> np.ndarray:
    S = traj.series
    return boundary_form(params, S[:, COL["ux0"]], S[:, COL["vx0"]])


def energy_violation(traj: Trajectory, params: ModelParams, grid: Grid) -> float:
    """Largest step-to-step increase of E relative to E(0) (<= 0 if monotone)."""
    E = series_energy(traj, params, grid)
    if E[0] == 0:
        return float(np.max(np.diff(E), initial=0.0))
    return float(np.max(np.diff(E)) / E[0])


def dissipation_identity_residual(traj: Trajectory, params: ModelParams, profile: DampingProfile,
                                  grid: Grid, T: float | None = None) -> IdentityResidual:
    """E(T) - E(0) + int Q dt + int int a (b2 u^2 + v^2) dx dt."""
    S = _upto(traj, T)
    h, dt = grid.h, traj.dt
    E = 0.5 * h * S[:, COL["P"]]
    Q = boundary_form(params, S[:, COL["ux0"]], S[:, COL["vx0"]])
    terms = {
        "energy_change": E[-1] - E[0],
        "boundary": _tint(Q, dt),
        "damping": _tint(h * S[:, COL["D"]], dt),
    }
    return IdentityResidual(float(sum(terms.values())), terms)


def weighted_identity_residual(traj: Trajectory, params: ModelParams, profile: DampingProfile,
                               weight: WeightConfig, grid: Grid,
                               T: float | None = None) -> IdentityResidual:
    """Residual of the e^{2bx}-weighted energy identity (all terms summed)."""
    if traj.weight is not None and traj.weight.b != weight.b:
        raise ValueError("trajectory integrands were recorded with a different weight b")
    S = _upto(traj, T)
    h, dt = grid.h, traj.dt
    b, r, a1, a3, b2 = weight.b, params.r, params.a1, params.a3, params.b2

    def I(name):
        return _tint(h * S[:, COL[name]], dt)

    Q = boundary_form(params, S[:, COL["ux0"]], S[:, COL["vx0"]])
    terms = {
        "weighted_energy_change": 0.5 * h * (S[-1, COL["Pw"]] - S[0, COL["Pw"]]),
        "cross_gradient": 6 * b * a3 * b2 * I("UxVx"),
        "gradient": 3 * b * I("G"),
        "quadratic": -4 * b ** 3 * I("Qw"),
        "cubic": -(2 * b / 3) * I("C3"),
        "cross_quadratic": -8 * b ** 3 * a3 * b2 * I("UV"),
        "mixed_cubic": -2 * b * a1 * b2 * I("M3"),
        "boundary": _tint(Q, dt),
        "drift": -b * r * I("V2"),
        "weighted_damping": I("Dw"),
    }
    return IdentityResidual(float(sum(terms.values())), terms)


def _weighted_parts(u, v, b, grid):
    ew = np.exp(2 * b * grid.x)
    ux = gradient_nodes(u, grid.h)
    vx = gradient_nodes(v, grid.h)
    l2 = trapezoid((u ** 2 + v ** 2) * ew, grid.h)
    g2 = trapezoid((ux ** 2 + vx ** 2) * ew, grid.h)
    return l2, g2


def agmon_check(state: State, weight: WeightConfig, grid: Grid) -> tuple[float, float, float]:
    """Weighted sup bound: max |U| e^{bx} against sqrt(2+2b) |U|^{1/2} |U|_{H^1_b}^{1/2}.

    Does not require u(0) = 0; a zero state gives ratio 0.
    """
    u, v, b = state.u, state.v, weight.b
    lhs = float(np.max(np.sqrt(u ** 2 + v ** 2) * np.exp(b * grid.x)))
    l2, g2 = _weighted_parts(u, v, b, grid)
    rhs = float(np.sqrt(2 + 2 * b) * l2 ** 0.25 * (l2 + g2) ** 0.25)
    if rhs == 0:
        return 0.0, 0.0, 0.0
    return lhs, rhs, lhs / rhs


def poincare_check(state: State, weight: WeightConfig, grid: Grid) -> tuple[float, float]:
    """(int |U|^2 e^{2bx}, b^{-2} int |U_x|^2 e^{2bx}) for compactly supported U."""
    u, v = state.u, state.v
    scale = max(np.abs(u).max(), np.abs(v).max())
    if scale == 0:
        return 0.0, 0.0
    if abs(u[0]) > 1e-12 * scale or abs(v[0]) > 1e-12 * scale:
        raise ValueError("poincare_check needs u(0) = v(0) = 0")
    if max(abs(u[-1]), abs(v[-1]), abs(u[-2]), abs(v[-2])) > 1e-12 * scale:
        raise ValueError("support touches x = L")
    l2, g2 = _weighted_parts(u, v, weight.b, grid)
    return float(l2), float(g2 / weight.b ** 2)


def fit_decay(t, values, window: tuple | None = None) -> DecayFit:
    """Least-squares fit of log(values) = log C - eta t on ``window``.

    The default window is [T/10, T]. Values below 1e-14 of the first value
    are dropped before fitting.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is None:
        window = (t[-1] / 10.0, t[-1])
    lo, hi = window
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if y.size and y[0] > 0:
        m &= y >= 1e-14 * y[0]
    ts, ys = t[m], y[m]
    if np.any(ys <= 0):
        raise ValueError("fit_decay needs positive values in the window")
    if ts.size < 10:
        raise ValueError(f"fit_decay needs at least 10 samples, got {ts.size}")
    ly = np.log(ys)
    slope, intercept = np.polyfit(ts, ly, 1)
    pred = intercept + slope * ts
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(C=float(np.exp(intercept)), eta=float(-slope), r_squared=r2, window=(lo, hi))


def smoothing_ratio(traj: Trajectory, weight: WeightConfig, grid: Grid,
                    T: float | None = None) -> float:
    """(int_0^T |U_x|^2_{L^2_b} dt)^{1/2} / |U_0|_{L^2_b}."""
    S = _upto(traj, T)
    n0 = grid.h * S[0, COL["Nw"]]
    if n0 <= 0:
        raise ValueError("smoothing ratio undefined for zero initial data")
    return float(np.sqrt(_tint(grid.h * S[:, COL["Gs"]], traj.dt) / n0))


def lyapunov_bound_checks(traj: Trajectory, params: ModelParams, profile: DampingProfile,
                          weight: WeightConfig, grid: Grid, T: float | None = None) -> dict:
    """Both sides of the integrated Lyapunov bound and the initial-value bound.

    ``c7_ratio`` uses the explicit constant (cb + 1/2)(1 + b1)/b^2;
    ``c8_constant`` is the measured ratio of L(U_0) to the bracket of
    boundary, gradient and integrated Lyapunov terms.
    """
    S = _upto(traj, T)
    h, dt, b, cb = grid.h, traj.dt, weight.b, weight.cb
    lyap = h * (0.5 * S[:, COL["Pw"]] + cb * S[:, COL["P"]])
    grad = _tint(h * S[:, COL["G"]], dt)
    lhs7 = _tint(lyap, dt)
    const = (cb + 0.5) * (1 + params.b1) / b ** 2 if b > 0 else np.inf
    rhs7 = const * grad
    Q = boundary_form(params, S[:, COL["ux0"]], S[:, COL["vx0"]])
    bracket = 2 * _tint(Q, dt) + grad + lhs7
    if rhs7 == 0 or not np.isfinite(rhs7):
        ratio7 = 0.0
    else:
        ratio7 = lhs7 / rhs7
    return {
        "c7_lhs": float(lhs7),
        "c7_rhs": float(rhs7),
        "c7_ratio": float(ratio7),
        "c8_lhs": float(lyap[0]),
        "c8_bracket": float(bracket),
        "c8_constant": float(lyap[0] / bracket) if bracket > 0 else 0.0,
    }
