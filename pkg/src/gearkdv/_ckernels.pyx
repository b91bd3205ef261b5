# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: banded LU, band matvec, fused nonlinear term and
identity integrand sums. Signatures match ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def band_lu_factor(ab_in, int kl, int ku):
    """Unblocked banded LU with partial pivoting (gbtf2 layout)."""
    cdef double[:, ::1] ab = np.array(ab_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = ab.shape[1]
    cdef int kv = kl + ku
    cdef cnp.ndarray[cnp.int32_t, ndim=1] piv_arr = np.zeros(n, dtype=np.int32)
    cdef int[::1] piv = piv_arr
    cdef Py_ssize_t i, j, c, jp, km, ju, jlast
    cdef double amax, val, pivot, lij, tmp
    cdef int info = 0
    # fill-in rows start zeroed
    for j in range(n):
        for i in range(kl):
            ab[i, j] = 0.0
    ju = 0
    with nogil:
        for j in range(n):
            km = kl if kl < n - 1 - j else n - 1 - j
            jp = 0
            amax = fabs(ab[kv, j])
            for i in range(1, km + 1):
                val = fabs(ab[kv + i, j])
                if val > amax:
                    amax = val
                    jp = i
            piv[j] = <int>(j + jp)
            if ab[kv + jp, j] != 0.0:
                jlast = j + ku + jp
                if jlast > n - 1:
                    jlast = n - 1
                if jlast > ju:
                    ju = jlast
                if jp != 0:
                    for c in range(ju - j + 1):
                        tmp = ab[kv + jp - c, j + c]
                        ab[kv + jp - c, j + c] = ab[kv - c, j + c]
                        ab[kv - c, j + c] = tmp
                if km > 0:
                    pivot = 1.0 / ab[kv, j]
                    for i in range(1, km + 1):
                        ab[kv + i, j] *= pivot
                    for c in range(1, ju - j + 1):
                        val = ab[kv - c, j + c]
                        if val != 0.0:
                            for i in range(1, km + 1):
                                ab[kv + i - c, j + c] -= ab[kv + i, j] * val
            elif info == 0:
                info = <int>(j + 1)
    return np.asarray(ab), piv_arr, info


def band_lu_solve(lu_in, piv_in, int kl, int ku, rhs):
    cdef double[:, ::1] lu = np.ascontiguousarray(lu_in, dtype=np.float64)
    cdef int[::1] piv = np.ascontiguousarray(piv_in, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.array(rhs, dtype=np.float64)
    cdef double[::1] x = out
    cdef Py_ssize_t n = lu.shape[1]
    cdef int kv = kl + ku
    cdef Py_ssize_t i, j, l, lm
    cdef double tmp, xj
    with nogil:
        if kl > 0:
            for j in range(n - 1):
                lm = kl if kl < n - 1 - j else n - 1 - j
                l = piv[j]
                if l != j:
                    tmp = x[l]
                    x[l] = x[j]
                    x[j] = tmp
                xj = x[j]
                if xj != 0.0:
                    for i in range(1, lm + 1):
                        x[j + i] -= lu[kv + i, j] * xj
        for j in range(n - 1, -1, -1):
            x[j] /= lu[kv, j]
            xj = x[j]
            lm = kv if kv < j else j
            for i in range(1, lm + 1):
                x[j - i] -= lu[kv - i, j] * xj
    return out


def band_matvec(ab_in, int kl, int ku, x_in):
    cdef double[:, ::1] ab = np.ascontiguousarray(ab_in, dtype=np.float64)
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n)
    cdef double[::1] y = out
    cdef Py_ssize_t i, j, j0, j1
    cdef double acc
    with nogil:
        for i in range(n):
            j0 = i - kl if i > kl else 0
            j1 = i + ku if i + ku < n - 1 else n - 1
            acc = 0.0
            for j in range(j0, j1 + 1):
                acc += ab[ku + i - j, j] * x[j]
            y[i] = acc
    return out


cdef inline double _cdiff(const double[::1] f, Py_ssize_t i, Py_ssize_t n) nogil:
    cdef double fp = f[i + 1] if i + 1 < n else 0.0
    cdef double fm = f[i - 1] if i > 0 else 0.0
    return fp - fm


def nonlinear_interleaved(u_in, v_in, double h, double a1, double a2, double b1, double b2):
    cdef const double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef const double[::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(2 * n)
    cdef double[::1] f = out
    cdef Py_ssize_t i
    cdef double ih = 0.5 / h
    cdef double ux, vx, wx, wp, wm
    with nogil:
        for i in range(n):
            ux = _cdiff(u, i, n) * ih
            vx = _cdiff(v, i, n) * ih
            wp = u[i + 1] * v[i + 1] if i + 1 < n else 0.0
            wm = u[i - 1] * v[i - 1] if i > 0 else 0.0
            wx = (wp - wm) * ih
            f[2 * i] = -(u[i] * ux + a1 * v[i] * vx + a2 * wx)
            f[2 * i + 1] = -(v[i] * vx + a2 * b2 * u[i] * ux + a1 * b2 * wx) / b1
    return out


def integrand_sums(u_in, v_in, ew_in, a_in, double h, double b1, double b2):
    cdef const double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef const double[::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef const double[::1] ew = np.ascontiguousarray(ew_in, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(13)
    cdef double[::1] s = out
    cdef Py_ssize_t i
    cdef double ih = 0.5 / h
    cdef double ux, vx, uu, vv, q, e, ux0, vx0
    with nogil:
        for i in range(n):
            ux = _cdiff(u, i, n) * ih
            vx = _cdiff(v, i, n) * ih
            uu = u[i] * u[i]
            vv = v[i] * v[i]
            q = b2 * uu + vv
            e = ew[i]
            s[0] += b2 * uu + b1 * vv
            s[1] += (b2 * uu + b1 * vv) * e
            s[2] += (uu + vv) * e
            s[3] += a[i] * q
            s[4] += ux * vx * e
            s[5] += (b2 * ux * ux + vx * vx) * e
            s[6] += q * e
            s[7] += (b2 * uu * u[i] + vv * v[i]) * e
            s[8] += u[i] * v[i] * e
            s[9] += (u[i] * vv + v[i] * uu) * e
            s[10] += vv * e
            s[11] += a[i] * q * e
            s[12] += (ux * ux + vx * vx) * e
        ux0 = (4.0 * u[0] - u[1]) * ih
        vx0 = (4.0 * v[0] - v[1]) * ih
        s[4] += 0.5 * ux0 * vx0
        s[5] += 0.5 * (b2 * ux0 * ux0 + vx0 * vx0)
        s[12] += 0.5 * (ux0 * ux0 + vx0 * vx0)
    return out
