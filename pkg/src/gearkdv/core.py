"""Domain types, parameter validation, damping profile and quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants of the damped Gear-Grimshaw system."""

    r: float = 0.01
    a1: float = 1.0
    a2: float = 1.0
    a3: float = 0.5
    b1: float = 1.0
    b2: float = 1.0


@dataclass(frozen=True)
class DampingProfile:
    """Two-interval damping a(x) supported on (0, delta) and (beta, inf).

    With ``ramp > 0`` the left edge falls linearly over (delta, delta+ramp)
    and the right edge rises over (beta-ramp, beta+ramp); ``baseline`` is the
    value on the gap.
    """

    a0: float = 5.0
    delta: float = 0.5
    beta: float = 5.0
    baseline: float = 0.0
    ramp: float = 0.0


@dataclass(frozen=True)
class WeightConfig:
    b: float = 0.25
    cb: float = 1.0


@dataclass(frozen=True)
class Grid:
    """Uniform mesh x_i = i*h, i = 0..N on [0, L]."""

    L: float = 15.0
    N: int = 1500

    def __post_init__(self):
        if self.N < 8:
            raise ValueError(f"N must be >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]

    @property
    def n_interior(self) -> int:
        return self.N - 1


@dataclass
class State:
    """Fields u, v at nodes 0..N at time t."""

    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ValueError("u and v must be 1-D arrays of equal length")

    @classmethod
    def from_interior(cls, t: float, u_in: np.ndarray, v_in: np.ndarray) -> "State":
        u = np.concatenate(([0.0], u_in, [0.0]))
        v = np.concatenate(([0.0], v_in, [0.0]))
        return cls(t, u, v)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "State":
        return cls(t, np.zeros(grid.N + 1), np.zeros(grid.N + 1))

    def check(self) -> None:
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise FloatingPointError(f"non-finite state at t={self.t}")
        if self.u[0] != 0 or self.v[0] != 0 or self.u[-1] != 0 or self.v[-1] != 0:
            raise ValueError("boundary values must vanish at x=0 and x=L")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    weighted_norm_sq: float
    lyapunov: float
    ux0: float
    vx0: float
    boundary_form: float
    damping_integral: float


@dataclass
class Trajectory:
    """Recorded history of a run.

    ``states`` and ``diagnostics`` are stored every ``stride`` steps;
    ``traces`` and ``series`` (raw identity integrands, see
    :func:`gearkdv.diagnostics.identity_integrands`) are stored every step.
    """

    states: list = field(default_factory=list)
    traces: np.ndarray | None = None
    diagnostics: list = field(default_factory=list)
    series: np.ndarray | None = None
    dt: float = 0.0
    stride: int = 1
    weight: WeightConfig | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def validate(params: ModelParams, weight: WeightConfig | None = None,
             profile: DampingProfile | None = None, grid: Grid | None = None) -> list:
    """Return the list of violated invariants (empty when valid)."""
    bad = []
    if not params.b1 > 0:
        bad.append("b1 <= 0")
    if not params.b2 > 0:
        bad.append("b2 <= 0")
    if not params.a3 ** 2 * params.b2 < 1:
        bad.append("a3^2*b2 >= 1")
    if params.a1 != params.a2:
        bad.append("a1 != a2")
    if not params.r >= 0:
        bad.append("r < 0")
    if weight is not None:
        b = weight.b
        if not b > 0:
            bad.append("b <= 0")
        if not weight.cb > 0:
            bad.append("cb <= 0")
        if not params.r ** 2 / 2 - 3 * b * (1 - params.a3 ** 2 * params.b2) < 0:
            bad.append("r^2/2 - 3b(1 - a3^2*b2) >= 0")
        if grid is not None and b * grid.L > 60:
            bad.append("b*L > 60")
    if profile is not None:
        if not 0 < profile.delta < profile.beta:
            bad.append("delta, beta must satisfy 0 < delta < beta")
        if profile.a0 < 0 or profile.baseline < 0 or profile.ramp < 0:
            bad.append("a0, baseline and ramp must be nonnegative")
        if grid is not None and grid.L < profile.beta + damping_margin(profile):
            bad.append("L < beta + margin")
    if grid is not None and grid.N < 8:
        bad.append("N < 8")
    return bad


def damping_margin(profile: DampingProfile) -> float:
    """Truncation margin beyond beta: five e-folding lengths 1/a0."""
    return 5.0 / profile.a0 if profile.a0 > 0 else 5.0


def damping_eval(profile: DampingProfile, x) -> np.ndarray | float:
    """Evaluate a(x) for x >= 0 (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("damping profile is defined for x >= 0 only")
    a0, base, w = profile.a0, profile.baseline, profile.ramp
    d, be = profile.delta, profile.beta
    if w > 0:
        left = np.clip((d + w - xa) / w, 0.0, 1.0)
        right = np.clip((xa - (be - w)) / (2 * w), 0.0, 1.0)
    else:
        left = (xa < d).astype(float)
        right = (xa > be).astype(float)
    frac = np.maximum(left, right)
    out = base + (a0 - base) * frac
    return float(out) if np.ndim(x) == 0 else out


def trapezoid(f: np.ndarray, h: float) -> float:
    """Composite trapezoid rule on a uniform grid."""
    f = np.asarray(f, dtype=float)
    return h * (f.sum() - 0.5 * (f[0] + f[-1]))


def weighted_norm_sq(state: State, weight: WeightConfig, grid: Grid) -> float:
    """Trapezoid approximation of the integral of (u^2 + v^2) e^{2bx}."""
    ew = np.exp(2 * weight.b * grid.x)
    return trapezoid((state.u ** 2 + state.v ** 2) * ew, grid.h)


def x_inner_product(p, q, phi, psi, params: ModelParams, grid: Grid) -> float:
    """Inner product of X: (b2/b1) int p*phi + int q*psi."""
    return (params.b2 / params.b1) * trapezoid(np.asarray(p) * phi, grid.h) \
        + trapezoid(np.asarray(q) * psi, grid.h)
