"""Linear propagator, Duhamel map, Picard iteration and contraction ratios.

Space-time fields are sampled on the uniform grid t_k = k*dt, k = 0..m, as
interleaved interior vectors (see :mod:`gearkdv.dynamics`). The propagator
S(dt) is the Crank-Nicolson one-step map of the linear system, so the
trapezoid Duhamel sum obeys the one-step recursion

    I_{k+1} = S(dt) (I_k + dt/2 f_k) + dt/2 f_{k+1},

which is algebraically identical to sum_j w_j S(t_k - s_j) f_j.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import DampingProfile, Grid, ModelParams, State, WeightConfig, trapezoid
from .dynamics import LinearSystemMatrix, assemble_linear, state_vector, vector_state


class NonContractionError(RuntimeError):
    def __init__(self, message, ratios):
        super().__init__(message)
        self.ratios = list(ratios)


@dataclass
class SpaceTimeField:
    t: np.ndarray
    U: np.ndarray  # shape (m+1, 2n)

    def __sub__(self, other):
        return SpaceTimeField(self.t, self.U - other.U)

    def __mul__(self, c):
        return SpaceTimeField(self.t, self.U * c)

    __rmul__ = __mul__

    def state(self, k: int) -> State:
        return vector_state(self.U[k], self.t[k])


class PropagatorCache:
    """Memoized applications of S(t_k - t_j) to a field attached to t_j.

    Keys are (tag, j, k) where ``tag`` identifies the source field; distinct
    keys may be inserted concurrently.
    """

    def __init__(self, matrix: LinearSystemMatrix):
        self.matrix = matrix
        self.dt = matrix.dt
        self._memo: dict = {}
        self._lock = threading.Lock()

    def apply(self, vec: np.ndarray, j: int, k: int, tag=None) -> np.ndarray:
        if k < j:
            raise ValueError("target time precedes source time")
        key = (tag, j, k)
        if tag is not None:
            with self._lock:
                hit = self._memo.get(key)
            if hit is not None:
                return hit
        # reuse the longest cached prefix for this source
        start, out = j, vec
        if tag is not None:
            with self._lock:
                for kk in range(k - 1, j, -1):
                    if (tag, j, kk) in self._memo:
                        start, out = kk, self._memo[(tag, j, kk)]
                        break
        out = self.matrix.propagate(out, k - start)
        if tag is not None:
            with self._lock:
                self._memo[key] = out
        return out

    def __len__(self):
        return len(self._memo)


def linear_propagate(U0: State, t: float, params: ModelParams, profile: DampingProfile,
                     grid: Grid, dt: float, matrix: LinearSystemMatrix | None = None) -> State:
    """CN solution of the linear system at time t (a multiple of dt)."""
    steps = int(round(t / dt))
    if steps < 0 or abs(steps * dt - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"t={t} is not a nonnegative multiple of dt={dt}")
    if matrix is None:
        matrix = assemble_linear(params, profile, grid, dt)
    return vector_state(matrix.propagate(state_vector(U0), steps), U0.t + t)


def _nl(U: np.ndarray, params: ModelParams, grid: Grid) -> np.ndarray:
    return kernels.nonlinear_interleaved(U[0::2], U[1::2], grid.h,
                                         params.a1, params.a2, params.b1, params.b2)


def f_norm(Fld: SpaceTimeField, weight: WeightConfig, grid: Grid) -> float:
    """sup_t |U(t)|_{L^2_b} + (int_0^T |U_x(t)|^2_{L^2_b} dt)^{1/2}."""
    ew = np.exp(2 * weight.b * grid.interior)
    a = np.zeros(grid.n_interior)
    sup, grad = 0.0, np.empty(len(Fld.t))
    for k, U in enumerate(Fld.U):
        s = kernels.integrand_sums(U[0::2], U[1::2], ew, a, grid.h, 1.0, 1.0)
        sup = max(sup, np.sqrt(grid.h * s[2]))
        grad[k] = grid.h * s[12]
    if len(Fld.t) < 2:
        return float(sup)
    return float(sup + np.sqrt(trapezoid(grad, Fld.t[1] - Fld.t[0])))


def _time_grid(T: float, dt: float) -> np.ndarray:
    m = int(round(T / dt))
    if m < 1 or abs(m * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not a positive multiple of dt={dt}")
    return np.arange(m + 1) * dt


def duhamel_map(U: SpaceTimeField, U0: State | None, T: float, params: ModelParams,
                profile: DampingProfile, weight: WeightConfig, grid: Grid, dt: float,
                matrix: LinearSystemMatrix | None = None, method: str = "recursive",
                workers: int = 1, cache: PropagatorCache | None = None) -> SpaceTimeField:
    """Gamma(U)(t) = S(t) U0 + int_0^t S(t-s) N(U(s)) ds, trapezoid in s.

    ``method="literal"`` evaluates the double sum with memoized propagator
    applications (O(m^2) solves); ``"recursive"`` uses the equivalent
    one-step recursion (O(m) solves).
    """
    t = _time_grid(T, dt)
    if U.U.shape[0] != len(t):
        raise ValueError("space-time field not sampled on the run's time grid")
    if matrix is None:
        matrix = assemble_linear(params, profile, grid, dt)
    n2 = 2 * grid.n_interior
    u0 = np.zeros(n2) if U0 is None else state_vector(U0)
    f = np.array([_nl(Uk, params, grid) for Uk in U.U])
    m = len(t) - 1
    out = np.empty((m + 1, n2))
    if method == "recursive":
        G = u0.copy()
        out[0] = G
        for k in range(m):
            G = matrix.propagate(G + 0.5 * dt * f[k]) + 0.5 * dt * f[k + 1]
            out[k + 1] = G
        return SpaceTimeField(t, out)
    if method != "literal":
        raise ValueError(f"unknown method {method!r}")
    cache = cache or PropagatorCache(matrix)
    src = id(U)

    def column(j):
        # contributions of source j to all later targets
        return [(k, cache.apply(f[j], j, k, tag=src)) for k in range(j, m + 1)]

    lin = [u0]
    for k in range(m):
        lin.append(matrix.propagate(lin[-1]))
    out[:] = np.array(lin)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            cols = list(ex.map(column, range(m + 1)))
    else:
        cols = [column(j) for j in range(m + 1)]
    for j, col in enumerate(cols):
        for k, val in col:
            if k == 0:
                continue
            w = 0.5 * dt if (j == 0 or j == k) else dt
            out[k] += w * val
    return SpaceTimeField(t, out)


@dataclass
class PicardResult:
    field: SpaceTimeField
    increments: list = field(default_factory=list)
    converged: bool = False

    @property
    def ratios(self) -> list:
        inc = self.increments
        return [inc[i + 1] / inc[i] for i in range(len(inc) - 1) if inc[i] > 0]

    @property
    def iterations(self) -> int:
        return len(self.increments)


def picard_solve(U0: State, T: float, params: ModelParams, profile: DampingProfile,
                 weight: WeightConfig, grid: Grid, dt: float, tol: float = 1e-10,
                 max_iter: int = 50, matrix: LinearSystemMatrix | None = None) -> PicardResult:
    """Iterate U^{k+1} = Gamma(U^k) from U^0 = S(t) U0.

    Stops when the F-norm increment falls below ``tol`` times the F-norm of
    the iterate (or is exactly zero). Raises :class:`NonContractionError`
    when increments fail to decrease three times in a row.
    """
    t = _time_grid(T, dt)
    if matrix is None:
        matrix = assemble_linear(params, profile, grid, dt)
    zero = SpaceTimeField(t, np.zeros((len(t), 2 * grid.n_interior)))
    Uk = duhamel_map(zero, U0, T, params, profile, weight, grid, dt, matrix=matrix)
    res = PicardResult(Uk)
    growth = 0
    for _ in range(max_iter):
        Un = duhamel_map(Uk, U0, T, params, profile, weight, grid, dt, matrix=matrix)
        inc = f_norm(Un - Uk, weight, grid)
        res.increments.append(inc)
        Uk = Un
        res.field = Uk
        if inc == 0 or inc <= tol * f_norm(Uk, weight, grid):
            res.converged = True
            return res
        if len(res.increments) >= 2 and inc >= res.increments[-2]:
            growth += 1
            if growth >= 3:
                raise NonContractionError(
                    f"Picard increments failed to decrease 3 times (T={T})", res.ratios)
        else:
            growth = 0
    return res


def contraction_factor(U1: SpaceTimeField, U2: SpaceTimeField, T: float, params: ModelParams,
                       profile: DampingProfile, weight: WeightConfig, grid: Grid, dt: float,
                       matrix: LinearSystemMatrix | None = None) -> float:
    """|Gamma(U2) - Gamma(U1)|_F / |U2 - U1|_F (the S(t)U0 part cancels)."""
    den = f_norm(U2 - U1, weight, grid)
    if den == 0:
        raise ValueError("contraction_factor needs U1 != U2")
    if matrix is None:
        matrix = assemble_linear(params, profile, grid, dt)
    g1 = duhamel_map(U1, None, T, params, profile, weight, grid, dt, matrix=matrix)
    g2 = duhamel_map(U2, None, T, params, profile, weight, grid, dt, matrix=matrix)
    return f_norm(g2 - g1, weight, grid) / den


def sample_trajectory(states: list, grid: Grid) -> SpaceTimeField:
    """Pack a list of stored states into a space-time field."""
    return SpaceTimeField(np.array([s.t for s in states]), np.array([state_vector(s) for s in states]))


def linear_flow(U0: State, T: float, dt: float, matrix: LinearSystemMatrix) -> SpaceTimeField:
    """S(t_k) U0 on the time grid."""
    t = _time_grid(T, dt)
    out = [state_vector(U0)]
    for _ in range(len(t) - 1):
        out.append(matrix.propagate(out[-1]))
    return SpaceTimeField(t, np.array(out))


__all__ = [
    "NonContractionError", "PicardResult", "PropagatorCache", "SpaceTimeField",
    "contraction_factor", "duhamel_map", "f_norm", "linear_flow", "linear_propagate",
    "picard_solve", "sample_trajectory",
]
