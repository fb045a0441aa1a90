# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels; same signatures as ``_kernels_py``."""
import numpy as np

from libc.math cimport sqrt, pow, fabs, isfinite, expm1, log1p, INFINITY

cdef double REL_SLACK = 1e-12


cdef inline double _spow(double s, double e) noexcept nogil:
    # s^e for s = |U|^2; quarter-integer exponents up to 4 avoid pow
    cdef double q4 = 4.0 * e, out = 1.0, rs
    cdef int k, n
    if q4 != <int>q4 or e < 0.0 or e > 4.0:
        return pow(s, e)
    n = <int>q4
    for k in range(n // 4):
        out *= s
    n = n % 4
    if n:
        rs = sqrt(s)
        if n == 1:
            out *= sqrt(rs)
        elif n == 2:
            out *= rs
        else:
            out *= rs * sqrt(rs)
    return out


def grad_psi(data, double r):
    cdef double[:, ::1] src = np.ascontiguousarray(data, dtype=np.float64).reshape(2, -1)
    out = np.empty_like(src)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, m = src.shape[1]
    cdef double a, b, s, w, e = 0.5 * (r - 2.0)
    with nogil:
        for i in range(m):
            a = src[0, i]
            b = src[1, i]
            s = a * a + b * b
            w = _spow(s, e) if s > 0 else 0.0
            dst[0, i] = w * a
            dst[1, i] = w * b
    return out.reshape(np.shape(data))


def abs_pow(data, double r):
    cdef double[:, ::1] src = np.ascontiguousarray(data, dtype=np.float64).reshape(2, -1)
    out = np.empty(src.shape[1])
    cdef double[::1] dst = out
    cdef Py_ssize_t i, m = src.shape[1]
    cdef double e = 0.5 * r
    with nogil:
        for i in range(m):
            dst[i] = _spow(src[0, i] * src[0, i] + src[1, i] * src[1, i], e)
    return out.reshape(np.shape(data)[1:])


cdef double _radius(double a, double mu, double r, double tol, int max_iter) except -1.0:
    cdef double hi = pow(a / mu, 1.0 / (r - 1.0))
    if a < hi:
        hi = a
    cdef double lo = 0.0, s = hi, g, gp, step
    cdef int it
    for it in range(max_iter):
        g = s + mu * pow(s, r - 1.0) - a
        if g == 0:
            return s
        if g < 0:
            lo = s
        else:
            hi = s
        gp = 1.0 + mu * (r - 1.0) * pow(s, r - 2.0)
        step = s - g / gp
        if not isfinite(step) or step < lo or step > hi:
            step = 0.5 * (lo + hi)
        if fabs(step - s) <= tol * a:
            return step
        s = step
    raise RuntimeError("resolvent Newton iteration did not converge")


def resolvent_psi(data, double mu, double r, double tol=1e-13, int max_iter=200):
    cdef double[:, ::1] src = np.ascontiguousarray(data, dtype=np.float64).reshape(2, -1)
    out = np.zeros_like(src)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, m = src.shape[1]
    cdef double a, s
    for i in range(m):
        a = sqrt(src[0, i] * src[0, i] + src[1, i] * src[1, i])
        if a > 0:
            s = _radius(a, mu, r, tol, max_iter)
            dst[0, i] = src[0, i] * (s / a)
            dst[1, i] = src[1, i] * (s / a)
    return out.reshape(np.shape(data))


cdef inline double _pow_diff(double a, double b, double pa, double pb, double da_b, double p):
    """``a^p - b^p`` without cancellation, given ``a - b`` accurately."""
    if a > 0 and b > 0 and fabs(da_b) <= 0.5 * (a if a > b else b):
        return pb * expm1(p * log1p(da_b / b))
    return pa - pb


def lipschitz_scan(u, v, double r, double d, double dtilde):
    cdef double[:, ::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] V = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t k, i, j, m = U.shape[0]
    cdef double nu_, nv_, pu, pv, dpow, dnorm, dist, lhs, rhs, val, ratio
    cdef double g[2]
    cdef double w[2]
    cdef double worst = 0.0, worst3 = 0.0
    cdef long viol = 0, viol3 = 0
    cdef bint check3
    for k in range(m):
        nu_ = sqrt(U[k, 0] * U[k, 0] + U[k, 1] * U[k, 1])
        nv_ = sqrt(V[k, 0] * V[k, 0] + V[k, 1] * V[k, 1])
        pu = pow(nu_, r - 2.0) if nu_ > 0 else 0.0
        pv = pow(nv_, r - 2.0) if nv_ > 0 else 0.0
        w[0] = U[k, 0] - V[k, 0]
        w[1] = U[k, 1] - V[k, 1]
        dist = sqrt(w[0] * w[0] + w[1] * w[1])
        if nu_ + nv_ > 0:
            dnorm = (w[0] * (U[k, 0] + V[k, 0]) + w[1] * (U[k, 1] + V[k, 1])) / (nu_ + nv_)
        else:
            dnorm = 0.0
        dpow = _pow_diff(nu_, nv_, pu, pv, dnorm, r - 2.0)
        g[0] = pu * w[0] + dpow * V[k, 0]
        g[1] = pu * w[1] + dpow * V[k, 1]
        lhs = 0.0
        for i in range(2):
            for j in range(2):
                val = fabs(g[i] * w[j])
                if val > lhs:
                    lhs = val
        rhs = d * (pu + pv) * dist * dist
        if rhs > 0:
            ratio = lhs / rhs
        elif lhs > 0:
            ratio = INFINITY
        else:
            ratio = 0.0
        if ratio > worst:
            worst = ratio
        if lhs > rhs * (1.0 + REL_SLACK):
            viol += 1

        check3 = (nu_ > 0 and nv_ > 0) or r >= 3
        if check3:
            lhs = fabs(dpow)
            rhs = dtilde * (pow(nu_, r - 3.0) + pow(nv_, r - 3.0)) * dist
            if rhs > 0:
                ratio = lhs / rhs
            elif lhs > 0:
                ratio = INFINITY
            else:
                ratio = 0.0
            if ratio > worst3:
                worst3 = ratio
            if lhs > rhs * (1.0 + REL_SLACK):
                viol3 += 1
    return float(worst), float(worst3), int(viol), int(viol3)
