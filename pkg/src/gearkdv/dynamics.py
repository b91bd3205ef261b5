"""Nonlinear term, coupled linear operator and the IMEX CN-AB2 stepper.

Unknowns are interleaved as (u_1, v_1, u_2, v_2, ..., u_{N-1}, v_{N-1}).
The v-rows are divided by b1, so the semi-discrete system reads
U' + A U = F(U) with A = M^{-1} L_h and M = diag(1, b1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .core import (DampingProfile, DiagnosticsRecord, Grid, ModelParams, State,
                   Trajectory, WeightConfig, damping_eval)
from .discretization import BandedOperator, build_d1, build_d3

# columns of Trajectory.series
SERIES_COLUMNS = (
    "t", "P", "Pw", "Nw", "D", "UxVx", "G", "Qw", "C3", "UV", "M3", "V2",
    "Dw", "Gs", "ux0", "vx0",
)
COL = {name: k for k, name in enumerate(SERIES_COLUMNS)}


def interleave(blocks: dict, n: int) -> sp.csr_matrix:
    """Assemble a 2x2 block operator into interleaved ordering.

    ``blocks`` maps (row_component, col_component) to an n x n sparse matrix.
    """
    rows, cols, vals = [], [], []
    for (c, d), B in blocks.items():
        coo = sp.coo_matrix(B)
        rows.append(2 * coo.row + c)
        cols.append(2 * coo.col + d)
        vals.append(coo.data)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(2 * n, 2 * n))


def to_interleaved(u_in: np.ndarray, v_in: np.ndarray) -> np.ndarray:
    U = np.empty(2 * len(u_in))
    U[0::2] = u_in
    U[1::2] = v_in
    return U


def state_vector(state: State) -> np.ndarray:
    return to_interleaved(state.u[1:-1], state.v[1:-1])


def vector_state(U: np.ndarray, t: float) -> State:
    return State.from_interior(t, U[0::2], U[1::2])


def nonlinear_rhs(state: State, params: ModelParams, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """N(U) at the nodes; derivatives by central differences.

    First component -(u u_x + a1 v v_x + a2 (uv)_x), second
    -(v v_x + a2 b2 u u_x + a1 b2 (uv)_x)/b1. Boundary entries are zero.
    """
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
        raise FloatingPointError("non-finite state in nonlinear_rhs")
    f = kernels.nonlinear_interleaved(state.u[1:-1], state.v[1:-1], grid.h,
                                      params.a1, params.a2, params.b1, params.b2)
    z = np.zeros(1)
    return np.concatenate((z, f[0::2], z)), np.concatenate((z, f[1::2], z))


def coupling_gram(params: ModelParams) -> np.ndarray:
    """G = [[b2, a3 b2], [a3 b2, 1]]; positive definite iff a3^2 b2 < 1."""
    b2, a3 = params.b2, params.a3
    return np.array([[b2, a3 * b2], [a3 * b2, 1.0]])


def linear_operator(params: ModelParams, profile: DampingProfile, grid: Grid,
                    d3: BandedOperator | None = None, d1: BandedOperator | None = None) -> sp.csr_matrix:
    """Interleaved A = M^{-1} L_h (dispersion, coupling, r v_x, damping)."""
    n = grid.n_interior
    D3 = (d3 or build_d3(grid)).to_sparse()
    D1 = (d1 or build_d1(grid)).to_sparse()
    a = sp.diags(damping_eval(profile, grid.interior))
    b1, b2, a3, r = params.b1, params.b2, params.a3, params.r
    blocks = {
        (0, 0): D3 + a,
        (1, 1): (D3 + r * D1 + a) / b1,
    }
    if a3 != 0:
        blocks[(0, 1)] = a3 * D3
        blocks[(1, 0)] = (b2 * a3 / b1) * D3
    return interleave(blocks, n)


@dataclass
class LinearSystemMatrix:
    """Factorized (I/dt + A/2) for the Crank-Nicolson solve.

    ``lhs`` is the band matrix; ``lu``/``piv`` its pivoted LU factors, reused
    for every step with the same dt.
    """

    A: BandedOperator
    lhs: BandedOperator
    dt: float
    lu: np.ndarray
    piv: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return kernels.band_lu_solve(self.lu, self.piv, self.lhs.kl, self.lhs.ku, rhs)

    def explicit_part(self, U: np.ndarray) -> np.ndarray:
        """(I/dt - A/2) U = 2U/dt - lhs U."""
        return (2.0 / self.dt) * U - self.lhs.matvec(U)

    def propagate(self, U: np.ndarray, steps: int = 1) -> np.ndarray:
        """Apply the linear CN one-step map ``steps`` times."""
        for _ in range(steps):
            U = self.solve(self.explicit_part(U))
        return U


def assemble_linear(params: ModelParams, profile: DampingProfile, grid: Grid, dt: float,
                    A: sp.spmatrix | None = None) -> LinearSystemMatrix:
    """Assemble and factorize the CN system matrix."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if A is None:
        A = linear_operator(params, profile, grid)
    Ab = BandedOperator.from_sparse(A, kl=5, ku=7)
    lhs = BandedOperator.from_sparse(0.5 * A + sp.identity(A.shape[0]) / dt, kl=5, ku=7)
    kl, ku = lhs.kl, lhs.ku
    work = np.zeros((2 * kl + ku + 1, lhs.size))
    work[kl:] = lhs.band
    lu, piv, info = kernels.band_lu_factor(work, kl, ku)
    if info != 0:
        raise np.linalg.LinAlgError(f"singular CN matrix (zero pivot at {info}); check dt and h")
    return LinearSystemMatrix(Ab, lhs, dt, lu, piv)


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    stride: int = 10
    scheme: str = "CN-AB2"
    c_cfl: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.scheme != "CN-AB2":
            raise ValueError(f"unknown scheme {self.scheme!r}")


Forcing = Callable[[float], np.ndarray]


class _Rhs:
    """Explicit right-hand side F(t, U) = N(U) + forcing(t)."""

    def __init__(self, params: ModelParams, grid: Grid, forcing: Forcing | None, linear: bool):
        self.p = params
        self.h = grid.h
        self.forcing = forcing
        self.linear = linear

    def __call__(self, t: float, U: np.ndarray) -> np.ndarray:
        if self.linear:
            f = np.zeros_like(U)
        else:
            p = self.p
            f = kernels.nonlinear_interleaved(U[0::2], U[1::2], self.h, p.a1, p.a2, p.b1, p.b2)
        if self.forcing is not None:
            f = f + self.forcing(t)
        return f


def _advance(U: np.ndarray, t: float, matrix: LinearSystemMatrix, rhs: _Rhs,
             history: dict) -> np.ndarray:
    dt = matrix.dt
    fn = rhs(t, U)
    base = matrix.explicit_part(U)
    prev = history.get("f")
    if prev is None:
        # Euler predictor, CN corrector with trapezoid average
        Up = matrix.solve(base + fn)
        f = 0.5 * (fn + rhs(t + dt, Up))
    else:
        f = 1.5 * fn - 0.5 * prev
    history["f"] = fn
    return matrix.solve(base + f)


def step(state: State, stepper: StepperConfig, matrix: LinearSystemMatrix, params: ModelParams,
         profile: DampingProfile, grid: Grid, history: dict | None = None,
         forcing: Forcing | None = None, linear: bool = False) -> State:
    """Advance one CN-AB2 step.

    ``history`` carries the previous explicit term between calls; pass the
    same dict on consecutive steps. An empty or missing dict triggers the
    predictor-corrector start.
    """
    if history is None:
        history = {}
    if abs(matrix.dt - stepper.dt) > 1e-15 * stepper.dt:
        raise ValueError("matrix was assembled for a different dt")
    U = _advance(state_vector(state), state.t, matrix, _Rhs(params, grid, forcing, linear), history)
    if not np.all(np.isfinite(U)):
        raise FloatingPointError(f"non-finite state after step at t={state.t + stepper.dt}")
    return vector_state(U, state.t + stepper.dt)


def _series_row(t, U, ew, a, h, params):
    u = U[0::2]
    v = U[1::2]
    s = kernels.integrand_sums(u, v, ew, a, h, params.b1, params.b2)
    ux0 = (4.0 * u[0] - u[1]) / (2.0 * h)
    vx0 = (4.0 * v[0] - v[1]) / (2.0 * h)
    return np.concatenate(([t], s, [ux0, vx0]))


def boundary_form(params: ModelParams, ux0, vx0):
    """Q = 1/2 (sqrt(b2) ux0 + sqrt(a3^2 b2) vx0)^2 + 1/2 (1 - a3^2 b2) vx0^2."""
    b2, a3 = params.b2, params.a3
    return 0.5 * (np.sqrt(b2) * ux0 + np.sqrt(a3 * a3 * b2) * vx0) ** 2 \
        + 0.5 * (1 - a3 * a3 * b2) * vx0 ** 2


def records_from_series(series: np.ndarray, params: ModelParams, weight: WeightConfig,
                        grid: Grid) -> list[DiagnosticsRecord]:
    h = grid.h
    out = []
    for row in series:
        E = 0.5 * h * row[COL["P"]]
        lyap = 0.5 * h * row[COL["Pw"]] + weight.cb * h * row[COL["P"]]
        ux0, vx0 = row[COL["ux0"]], row[COL["vx0"]]
        out.append(DiagnosticsRecord(
            t=float(row[0]), energy=E, weighted_norm_sq=h * row[COL["Nw"]], lyapunov=lyap,
            ux0=ux0, vx0=vx0, boundary_form=float(boundary_form(params, ux0, vx0)),
            damping_integral=h * row[COL["D"]]))
    return out


def run(initial: State, T_final: float, stepper: StepperConfig, params: ModelParams,
        profile: DampingProfile, weight: WeightConfig, grid: Grid,
        forcing: Forcing | None = None, linear: bool = False, store_states: bool = True,
        matrix: LinearSystemMatrix | None = None) -> Trajectory:
    """Integrate from ``initial`` to ``T_final``.

    States and diagnostics are stored every ``stepper.stride`` steps (and at
    the final step); boundary traces and identity integrands every step.
    """
    dt = stepper.dt
    nsteps = int(round(T_final / dt))
    if nsteps < 0 or abs(nsteps * dt - T_final) > 1e-9 * max(1.0, T_final):
        raise ValueError(f"T_final={T_final} is not a multiple of dt={dt}")
    if matrix is None:
        matrix = assemble_linear(params, profile, grid, dt)
    rhs = _Rhs(params, grid, forcing, linear)
    ew = np.exp(2 * weight.b * grid.interior)
    a = np.asarray(damping_eval(profile, grid.interior), dtype=float)
    h = grid.h

    U = state_vector(initial)
    t0 = initial.t
    series = np.empty((nsteps + 1, len(SERIES_COLUMNS)))
    series[0] = _series_row(t0, U, ew, a, h, params)
    states = [vector_state(U, t0)]
    history: dict = {}
    cfl_warned = False
    for k in range(1, nsteps + 1):
        U = _advance(U, t0 + (k - 1) * dt, matrix, rhs, history)
        t = t0 + k * dt
        if not np.all(np.isfinite(U)):
            raise FloatingPointError(f"non-finite state at t={t}")
        if not cfl_warned and not linear:
            speed = 1.0 + np.abs(U).max()
            if dt > stepper.c_cfl * h / speed:
                warnings.warn(f"CFL guard exceeded at t={t}: dt={dt} > {stepper.c_cfl}*h/{speed:.3g}")
                cfl_warned = True
        series[k] = _series_row(t, U, ew, a, h, params)
        if store_states and (k % stepper.stride == 0 or k == nsteps):
            states.append(vector_state(U, t))
    if not store_states and nsteps > 0:
        states.append(vector_state(U, t0 + nsteps * dt))
    rec_idx = sorted(set(range(0, nsteps + 1, stepper.stride)) | {nsteps})
    traj = Trajectory(
        states=states,
        traces=series[:, [0, COL["ux0"], COL["vx0"]]].copy(),
        diagnostics=records_from_series(series[rec_idx], params, weight, grid),
        series=series,
        dt=dt,
        stride=stepper.stride,
        weight=weight,
    )
    return traj
