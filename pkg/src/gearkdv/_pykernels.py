"""Pure numpy/LAPACK implementations of the hot kernels.

These mirror the compiled versions in ``_ckernels.pyx`` one to one and are
used when the extension is unavailable or ``GEARKDV_PURE_PYTHON=1``.
"""

import numpy as np
from scipy.linalg import lapack


def band_lu_factor(ab, kl, ku):
    """LU factorization with partial pivoting of a general band matrix.

    Parameters
    ----------
    ab : ndarray, shape (2*kl + ku + 1, n)
        LAPACK band storage, ``A[i, j] = ab[kl + ku + i - j, j]``. The top
        ``kl`` rows are workspace for fill-in.
    kl, ku : int
        Lower and upper bandwidths.

    Returns
    -------
    lu : ndarray
        Factors in the same layout.
    piv : ndarray of int
        Pivot indices.
    info : int
        0 on success, ``k > 0`` if ``U[k-1, k-1]`` is exactly zero.
    """
    lu, piv, info = lapack.dgbtrf(np.asarray(ab, dtype=float), kl, ku)
    return lu, piv, int(info)


def band_lu_solve(lu, piv, kl, ku, rhs):
    x, info = lapack.dgbtrs(lu, kl, ku, np.asarray(rhs, dtype=float), piv)
    if info != 0:
        raise ValueError(f"dgbtrs failed with info={info}")
    return x


def band_matvec(ab, kl, ku, x):
    """y = A x for compact band storage ``A[i, j] = ab[ku + i - j, j]``."""
    n = x.shape[0]
    y = np.zeros(n)
    for k in range(-kl, ku + 1):
        row = ab[ku - k]
        if k >= 0:
            y[: n - k] += row[k:] * x[k:]
        else:
            y[-k:] += row[: n + k] * x[: n + k]
    return y


def _central(f, h):
    d = np.empty_like(f)
    d[1:-1] = f[2:] - f[:-2]
    d[0] = f[1]
    d[-1] = -f[-2]
    return d / (2.0 * h)


def nonlinear_interleaved(u, v, h, a1, a2, b1, b2):
    """Interleaved nonlinear term on interior nodes (boundary values zero)."""
    ux = _central(u, h)
    vx = _central(v, h)
    wx = _central(u * v, h)
    out = np.empty(2 * u.shape[0])
    out[0::2] = -(u * ux + a1 * v * vx + a2 * wx)
    out[1::2] = -(v * vx + a2 * b2 * u * ux + a1 * b2 * wx) / b1
    return out


def integrand_sums(u, v, ew, a, h, b1, b2):
    """Raw node sums for the energy and weighted identities.

    Gradient sums use the trapezoid rule with the one-sided slope at x=0 and
    u_x(L)=0; all other integrands vanish at both ends.
    """
    ux = _central(u, h)
    vx = _central(v, h)
    ux0 = (4.0 * u[0] - u[1]) / (2.0 * h)
    vx0 = (4.0 * v[0] - v[1]) / (2.0 * h)
    u2 = u * u
    v2 = v * v
    q = b2 * u2 + v2
    s = np.empty(13)
    s[0] = np.sum(b2 * u2 + b1 * v2)
    s[1] = np.sum((b2 * u2 + b1 * v2) * ew)
    s[2] = np.sum((u2 + v2) * ew)
    s[3] = np.sum(a * q)
    s[4] = np.sum(ux * vx * ew) + 0.5 * ux0 * vx0
    s[5] = np.sum((b2 * ux * ux + vx * vx) * ew) + 0.5 * (b2 * ux0 * ux0 + vx0 * vx0)
    s[6] = np.sum(q * ew)
    s[7] = np.sum((b2 * u2 * u + v2 * v) * ew)
    s[8] = np.sum(u * v * ew)
    s[9] = np.sum((u * v2 + v * u2) * ew)
    s[10] = np.sum(v2 * ew)
    s[11] = np.sum(a * q * ew)
    s[12] = np.sum((ux * ux + vx * vx) * ew) + 0.5 * (ux0 * ux0 + vx0 * vx0)
    return s
