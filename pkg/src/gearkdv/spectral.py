"""Discrete weighted operator B and its dissipativity certificate.

B acts on W = (p, q) = e^{bx} U and is assembled with (d/dx - b)^3 expanded
as D3 - 3b D2 + 3b^2 D1 - b^3 I. The certificate compares the largest
eigenvalue of the X-symmetric part of B with the explicit constant
``lambda_paper``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .core import DampingProfile, Grid, ModelParams, WeightConfig, damping_eval
from .discretization import build_d1, build_d2, build_d3
from .dynamics import interleave


@dataclass
class DiscreteOperatorB:
    """Interleaved sparse matrix of B and the diagonal X-Gram weights."""

    matrix: sp.csr_matrix
    gram: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DissipativityCertificate:
    lambda_paper: float
    rayleigh_sup: float
    tolerance: float = 1e-3

    @property
    def margin(self) -> float:
        return self.lambda_paper - self.rayleigh_sup

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance


def x_gram(params: ModelParams, grid: Grid) -> np.ndarray:
    """Diagonal trapezoid weights of the X inner product (interleaved)."""
    g = np.empty(2 * grid.n_interior)
    g[0::2] = grid.h * params.b2 / params.b1
    g[1::2] = grid.h
    return g


def assemble_B(params: ModelParams, profile: DampingProfile, weight: WeightConfig,
               grid: Grid) -> DiscreteOperatorB:
    b = weight.b
    n = grid.n_interior
    I = sp.identity(n, format="csr")
    D1 = build_d1(grid).to_sparse()
    P = build_d3(grid).to_sparse() - 3 * b * build_d2(grid).to_sparse() \
        + 3 * b ** 2 * D1 - b ** 3 * I
    a = sp.diags(damping_eval(profile, grid.interior))
    b1, b2, a3, r = params.b1, params.b2, params.a3, params.r
    blocks = {
        (0, 0): -P - a,
        (1, 1): -(r / b1) * (D1 - b * I) - P / b1 - a / b1,
    }
    if a3 != 0:
        blocks[(0, 1)] = -a3 * P
        blocks[(1, 0)] = -(a3 * b2 / b1) * P
    return DiscreteOperatorB(interleave(blocks, n), x_gram(params, grid))


def lambda_paper(params: ModelParams, weight: WeightConfig) -> float:
    """(1/b1)[(b1+1)(b^3+br) + b^3|a3|(b1+b2) + b1/(2 b2)]."""
    b, b1, b2 = weight.b, params.b1, params.b2
    return ((b1 + 1) * (b ** 3 + b * params.r) + b ** 3 * abs(params.a3) * (b1 + b2)
            + b1 / (2 * b2)) / b1


def symmetric_part(B: DiscreteOperatorB) -> sp.csr_matrix:
    """S = (Bt + Bt^T)/2 with Bt = G^{1/2} B G^{-1/2}; same spectrum as (B + B^dag_X)/2."""
    s = np.sqrt(B.gram)
    Bt = sp.diags(s) @ B.matrix @ sp.diags(1.0 / s)
    return (0.5 * (Bt + Bt.T)).tocsr()


def _as_operator(B, params, grid) -> DiscreteOperatorB:
    if isinstance(B, DiscreteOperatorB):
        return B
    M = sp.csr_matrix(B)
    if params is None or grid is None:
        gram = np.ones(M.shape[0])
    else:
        gram = x_gram(params, grid)
    return DiscreteOperatorB(M, gram)


def _upper_band(S: sp.csr_matrix):
    coo = S.tocoo()
    off = coo.col - coo.row
    u = int(max(0, off.max())) if off.size else 0
    ab = np.zeros((u + 1, S.shape[0]))
    m = off >= 0
    ab[u - off[m], coo.col[m]] = coo.data[m]
    return ab, u


def _is_upper_bound(ab, u, sigma):
    """True iff sigma*I - S is positive definite (all eigenvalues of S < sigma)."""
    c = -ab.copy()
    c[u] += sigma
    try:
        return sla.cholesky_banded(c, lower=False), True
    except np.linalg.LinAlgError:
        return None, False


def _power_top(S: sp.csr_matrix, tol: float, max_iter: int, seed: int = 0) -> float:
    ab, u = _upper_band(S)
    diag = S.diagonal()
    absrow = np.asarray(abs(S).sum(axis=1)).ravel()
    lo = float(diag.max())
    hi = float((diag + (absrow - np.abs(diag))).max()) + 1.0
    scale = max(1.0, abs(lo), abs(hi))
    # bracket the top eigenvalue by Cholesky inertia tests
    while hi - lo > 1e-7 * scale:
        mid = 0.5 * (lo + hi)
        _, ok = _is_upper_bound(ab, u, mid)
        if ok:
            hi = mid
        else:
            lo = mid
    sigma = hi + 1e-9 * scale
    chol, ok = _is_upper_bound(ab, u, sigma)
    if not ok:
        raise RuntimeError("inertia bracket inconsistent")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(S.shape[0])
    x /= np.linalg.norm(x)
    rho_old = np.inf
    for _ in range(max_iter):
        # inverse iteration on (sigma I - S): dominant mode is the top of S
        x = sla.cho_solve_banded((chol, False), x)
        x /= np.linalg.norm(x)
        rho = float(x @ (S @ x))
        if abs(rho - rho_old) <= tol * scale:
            res = np.linalg.norm(S @ x - rho * x)
            if res <= np.sqrt(tol) * scale:
                return rho
        rho_old = rho
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


def rayleigh_sup(B, params: ModelParams | None = None, grid: Grid | None = None,
                 tol: float = 1e-12, method: str = "auto", max_iter: int = 500) -> float:
    """Largest eigenvalue of the X-symmetric part of B.

    ``method`` is ``"dense"`` (symmetric eigensolve), ``"power"`` (shifted
    inverse power iteration with a Cholesky-inertia bracket) or ``"auto"``
    (dense up to 802 unknowns).
    """
    op = _as_operator(B, params, grid)
    S = symmetric_part(op)
    if method == "auto":
        method = "dense" if S.shape[0] <= 802 else "power"
    if method == "dense":
        return float(sla.eigvalsh(S.toarray(), subset_by_index=[S.shape[0] - 1, S.shape[0] - 1])[0])
    if method == "power":
        return _power_top(S, tol, max_iter)
    raise ValueError(f"unknown method {method!r}")


def rayleigh_sup_interior(B, skip: int = 2) -> float:
    """Top eigenvalue of the symmetric part with the first and last ``skip``
    nodes (the boundary-closure rows) removed; a diagnostic only."""
    S = symmetric_part(_as_operator(B, None, None)).toarray()
    k = 2 * skip
    return float(sla.eigvalsh(S[k:-k, k:-k])[-1])


def spectrum(B, count: int = 10) -> np.ndarray:
    """The ``count`` eigenvalues of B with largest real part, sorted descending."""
    M = B.matrix if isinstance(B, DiscreteOperatorB) else B
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    ev = sla.eigvals(M)
    order = np.lexsort((-ev.imag, -ev.real))
    return ev[order][:count]


def certificate(params: ModelParams, profile: DampingProfile, weight: WeightConfig, grid: Grid,
                tolerance: float = 1e-3, method: str = "auto") -> DissipativityCertificate:
    B = assemble_B(params, profile, weight, grid)
    return DissipativityCertificate(lambda_paper(params, weight),
                                    rayleigh_sup(B, params, grid, method=method), tolerance)
