"""Banded finite-difference operators on the interior nodes 1..N-1.

Boundary values u_0 = u_N = 0 are eliminated, so every operator acts on the
N-1 interior unknowns. The third-derivative operator additionally encodes the
truncation condition u_x(L) = 0 in its last row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .core import Grid, State

# central 5-point third derivative, offsets -2..2, times 1/(2h^3)
_D3_CENTRAL = np.array([-1.0, 2.0, 0.0, -2.0, 1.0])


@dataclass
class BandedOperator:
    """Square band matrix in compact storage ``A[i, j] = band[ku + i - j, j]``."""

    size: int
    kl: int
    ku: int
    band: np.ndarray

    @classmethod
    def empty(cls, size: int, kl: int, ku: int) -> "BandedOperator":
        return cls(size, kl, ku, np.zeros((kl + ku + 1, size)))

    @classmethod
    def from_dense(cls, A: np.ndarray, kl: int, ku: int) -> "BandedOperator":
        n = A.shape[0]
        op = cls.empty(n, kl, ku)
        for k in range(-kl, ku + 1):
            d = np.diagonal(A, k)
            if k >= 0:
                op.band[ku - k, k:] = d
            else:
                op.band[ku - k, : n + k] = d
        return op

    @classmethod
    def from_sparse(cls, A, kl: int | None = None, ku: int | None = None) -> "BandedOperator":
        coo = sp.coo_matrix(A)
        off = coo.col - coo.row
        kl = int(max(0, -off.min())) if kl is None else kl
        ku = int(max(0, off.max())) if ku is None else ku
        op = cls.empty(coo.shape[0], kl, ku)
        np.add.at(op.band, (ku - off, coo.col), coo.data)
        return op

    def set(self, i: int, j: int, value: float) -> None:
        if not -self.kl <= j - i <= self.ku:
            raise IndexError(f"entry ({i}, {j}) outside band")
        self.band[self.ku + i - j, j] = value

    def get(self, i: int, j: int) -> float:
        if not -self.kl <= j - i <= self.ku:
            return 0.0
        return self.band[self.ku + i - j, j]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return kernels.band_matvec(self.band, self.kl, self.ku, np.ascontiguousarray(x, dtype=float))

    def __matmul__(self, x):
        return self.matvec(x)

    def apply_full(self, f: np.ndarray) -> np.ndarray:
        """Apply to a node field 0..N (boundary values assumed zero)."""
        return self.matvec(np.asarray(f, dtype=float)[1:-1])

    def to_sparse(self) -> sp.csr_matrix:
        offsets = list(range(-self.kl, self.ku + 1))
        data = [self.band[self.ku - k] for k in offsets]
        return sp.dia_matrix((np.array(data), offsets), shape=(self.size, self.size)).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def _check(grid: Grid) -> None:
    if grid.N < 8:
        raise ValueError(f"N = {grid.N} too small for the boundary closures (need >= 8)")


def build_d1(grid: Grid) -> BandedOperator:
    """Central first difference (u_{i+1} - u_{i-1})/(2h)."""
    _check(grid)
    n = grid.n_interior
    op = BandedOperator.empty(n, 1, 1)
    c = 1.0 / (2 * grid.h)
    op.band[0, 1:] = c
    op.band[2, :-1] = -c
    return op


def build_d2(grid: Grid) -> BandedOperator:
    """Central second difference (u_{i+1} - 2u_i + u_{i-1})/h^2."""
    _check(grid)
    n = grid.n_interior
    op = BandedOperator.empty(n, 1, 1)
    c = 1.0 / grid.h ** 2
    op.band[0, 1:] = c
    op.band[1, :] = -2 * c
    op.band[2, :-1] = c
    return op


def left_closure_weights() -> np.ndarray:
    """Weights on nodes 0..4 giving u'''(x_1) exactly for quartics (unit h)."""
    xs = np.arange(5, dtype=float) - 1.0
    V = np.vander(xs, 5, increasing=True)
    e = np.zeros(5)
    e[3] = 6.0
    return np.linalg.solve(V.T, e)


def right_closure_weights() -> np.ndarray:
    """Weights on nodes N-3..N for u'''(x_{N-1}) (unit h).

    The central stencil needs a ghost value u_{N+1}; it is taken from the
    quartic through nodes N-3..N with p'(L) = 0.
    """
    xs = np.arange(-3, 1, dtype=float)
    M = np.zeros((5, 5))
    for k, x in enumerate(xs):
        M[k] = x ** np.arange(5)
    M[4] = [0.0, 1.0, 0.0, 0.0, 0.0]
    ghost = (np.ones(5) @ np.linalg.inv(M))[:4]
    w = np.array([-1.0, 2.0, 0.0, -2.0]) + ghost
    return w / 2.0


def d3_full_rows(grid: Grid) -> sp.csr_matrix:
    """D3 as an (N-1) x (N+1) matrix acting on all nodes.

    Columns 0 and N hold the weights of the eliminated boundary values.
    """
    _check(grid)
    N, h = grid.N, grid.h
    rows, cols, vals = [], [], []
    wl = left_closure_weights()
    for j in range(5):
        rows.append(0), cols.append(j), vals.append(wl[j])
    for i in range(2, N - 1):
        for o, c in zip(range(-2, 3), _D3_CENTRAL / 2.0):
            if c != 0.0:
                rows.append(i - 1), cols.append(i + o), vals.append(c)
    wr = right_closure_weights()
    for k in range(4):
        rows.append(N - 2), cols.append(N - 3 + k), vals.append(wr[k])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(N - 1, N + 1))
    return A / h ** 3


def build_d3(grid: Grid) -> BandedOperator:
    """Third-difference operator with one-sided closures at both ends.

    Interior rows use the central 5-point stencil. Row 1 uses the
    quartic-exact one-sided stencil on nodes 0..4; row N-1 uses the central
    stencil with a ghost value fixed by u_x(L) = 0.
    """
    return BandedOperator.from_sparse(d3_full_rows(grid)[:, 1:-1], kl=2, ku=3)


def boundary_slope(state: State, grid: Grid) -> tuple[float, float]:
    """Second-order one-sided estimate of (u_x(0), v_x(0))."""
    h = grid.h
    u, v = state.u, state.v
    ux0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    vx0 = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    return float(ux0), float(vx0)


def gradient_nodes(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order derivative at every node (one-sided at the ends)."""
    return np.gradient(np.asarray(f, dtype=float), h, edge_order=2)
