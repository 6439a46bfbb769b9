# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""
Compiled recursions for the ARMA-AGARCH quantile filter.

Every function here has a line-by-line twin in ``_kernels_python`` that
performs the same floating point operations in the same order, so both
backends return bitwise identical results.
"""
from libc.math cimport sqrt, log

import numpy as np

cdef double EXPLOSION_LIMIT = 1e30


cdef inline double _presample_y(const double[::1] phi):
    cdef Py_ssize_t j
    cdef double phi1 = 1.0
    for j in range(1, phi.shape[0]):
        phi1 -= phi[j]
    return phi[0] / phi1


cdef inline double _presample_h2(const double[::1] beta):
    cdef Py_ssize_t j
    cdef double b1 = 1.0
    for j in range(beta.shape[0]):
        b1 -= beta[j]
    return 1.0 / b1


def filter_values(const double[::1] y, double xi, const double[::1] phi,
                  const double[::1] psi, const double[::1] g1,
                  const double[::1] g2, const double[::1] beta,
                  double[::1] eps, double[::1] h2, double[::1] q):
    """Fill ``eps``, ``h2`` and ``q`` with the truncated filter."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t P = phi.shape[0] - 1
    cdef Py_ssize_t Q = psi.shape[0]
    cdef Py_ssize_t qq = g1.shape[0]
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double y_pre = _presample_y(phi)
    cdef double h2_pre = _presample_h2(beta)
    cdef double loc, h, e
    for i in range(n):
        loc = phi[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi[j] * y[s]
            else:
                loc += phi[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi[j - 1] * eps[s]
        eps[i] = y[i] - loc
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = eps[s]
                if e > 0.0:
                    h += g1[j - 1] * (e * e)
                else:
                    h += g2[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta[j - 1] * h2[s]
            else:
                h += beta[j - 1] * h2_pre
        h2[i] = h
        q[i] = loc + xi * sqrt(h)


def qr_loss(const double[::1] y, double xi, const double[::1] phi,
            const double[::1] psi, const double[::1] g1, const double[::1] g2,
            const double[::1] beta, double tau, double[::1] eps,
            double[::1] h2):
    """Mean check loss of ``y - q`` with the filter evaluated in one pass."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t P = phi.shape[0] - 1
    cdef Py_ssize_t Q = psi.shape[0]
    cdef Py_ssize_t qq = g1.shape[0]
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double y_pre = _presample_y(phi)
    cdef double h2_pre = _presample_h2(beta)
    cdef double loc, h, e, r
    cdef double total = 0.0
    for i in range(n):
        loc = phi[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi[j] * y[s]
            else:
                loc += phi[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi[j - 1] * eps[s]
        eps[i] = y[i] - loc
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = eps[s]
                if e > 0.0:
                    h += g1[j - 1] * (e * e)
                else:
                    h += g2[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta[j - 1] * h2[s]
            else:
                h += beta[j - 1] * h2_pre
        h2[i] = h
        r = y[i] - (loc + xi * sqrt(h))
        if r < 0.0:
            total += r * (tau - 1.0)
        else:
            total += r * tau
    return total / n


def qmle_terms(const double[::1] y, const double[::1] phi,
               const double[::1] psi, const double[::1] g1,
               const double[::1] g2, const double[::1] beta,
               double[::1] eps, double[::1] h2):
    """Return ``(sum log h2, sum eps**2 / h2)`` for the Gaussian likelihood."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t P = phi.shape[0] - 1
    cdef Py_ssize_t Q = psi.shape[0]
    cdef Py_ssize_t qq = g1.shape[0]
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double y_pre = _presample_y(phi)
    cdef double h2_pre = _presample_h2(beta)
    cdef double loc, h, e
    cdef double sum_log = 0.0
    cdef double sum_sq = 0.0
    for i in range(n):
        loc = phi[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi[j] * y[s]
            else:
                loc += phi[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi[j - 1] * eps[s]
        e = y[i] - loc
        eps[i] = e
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = eps[s]
                if e > 0.0:
                    h += g1[j - 1] * (e * e)
                else:
                    h += g2[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta[j - 1] * h2[s]
            else:
                h += beta[j - 1] * h2_pre
        h2[i] = h
        sum_sq += eps[i] * eps[i] / h
    for i in range(n):
        sum_log += log(h2[i])
    return sum_log, sum_sq


def filter_gradient(const double[::1] y, double xi, const double[::1] phi,
                    const double[::1] psi, const double[::1] g1,
                    const double[::1] g2, const double[::1] beta,
                    double[::1] eps, double[::1] h2, double[::1] q,
                    double[:, ::1] deps, double[:, ::1] dh2,
                    double[:, ::1] dq):
    """
    Filter values plus forward-mode derivatives.

    ``deps`` is (n, 1+P+Q) over the ARMA block, ``dh2`` is (n, m) over the
    model block (ARMA, gamma1, gamma2, beta) and ``dq`` is (n, 1+m) with
    the xi derivative in column 0.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t P = phi.shape[0] - 1
    cdef Py_ssize_t Q = psi.shape[0]
    cdef Py_ssize_t qq = g1.shape[0]
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t na = 1 + P + Q
    cdef Py_ssize_t m = na + 2 * qq + p
    cdef Py_ssize_t i, j, s, a
    cdef double phi1 = 1.0, b1 = 1.0
    for j in range(1, P + 1):
        phi1 -= phi[j]
    for j in range(p):
        b1 -= beta[j]
    cdef double y_pre = phi[0] / phi1
    cdef double h2_pre = 1.0 / b1
    cdef double dy_pre_phi0 = 1.0 / phi1
    cdef double dy_pre_phij = phi[0] / (phi1 * phi1)
    cdef double dh2_pre_beta = 1.0 / (b1 * b1)
    cdef double loc, h, hs, e, w, coef
    cdef double[::1] dloc = np.zeros(na)
    for i in range(n):
        loc = phi[0]
        dloc[0] = 1.0
        for a in range(1, na):
            dloc[a] = 0.0
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi[j] * y[s]
                dloc[j] += y[s]
            else:
                loc += phi[j] * y_pre
                dloc[j] += y_pre
                dloc[0] += phi[j] * dy_pre_phi0
                for a in range(1, P + 1):
                    dloc[a] += phi[j] * dy_pre_phij
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi[j - 1] * eps[s]
                dloc[P + j] += eps[s]
                for a in range(na):
                    dloc[a] += psi[j - 1] * deps[s, a]
        eps[i] = y[i] - loc
        for a in range(na):
            deps[i, a] = -dloc[a]
        h = 1.0
        for a in range(m):
            dh2[i, a] = 0.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = eps[s]
                if e > 0.0:
                    h += g1[j - 1] * (e * e)
                    dh2[i, na + j - 1] += e * e
                    coef = 2.0 * g1[j - 1] * e
                else:
                    h += g2[j - 1] * (e * e)
                    dh2[i, na + qq + j - 1] += e * e
                    coef = 2.0 * g2[j - 1] * e
                for a in range(na):
                    dh2[i, a] += coef * deps[s, a]
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta[j - 1] * h2[s]
                dh2[i, na + 2 * qq + j - 1] += h2[s]
                for a in range(m):
                    dh2[i, a] += beta[j - 1] * dh2[s, a]
            else:
                h += beta[j - 1] * h2_pre
                dh2[i, na + 2 * qq + j - 1] += h2_pre
                for a in range(na + 2 * qq, m):
                    dh2[i, a] += beta[j - 1] * dh2_pre_beta
        h2[i] = h
        hs = sqrt(h)
        q[i] = loc + xi * hs
        dq[i, 0] = hs
        w = xi / (2.0 * hs)
        for a in range(na):
            dq[i, 1 + a] = dloc[a] + w * dh2[i, a]
        for a in range(na, m):
            dq[i, 1 + a] = w * dh2[i, a]


def simulate(const double[::1] u, const double[::1] phi,
             const double[::1] psi, const double[::1] g1,
             const double[::1] g2, const double[::1] beta,
             double[::1] y, double[::1] eps, double[::1] h2):
    """
    Run the data-generating recursion driven by innovations ``u``.

    Returns -1 on success or the first index where ``h2`` exceeds the
    explosion limit.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t P = phi.shape[0] - 1
    cdef Py_ssize_t Q = psi.shape[0]
    cdef Py_ssize_t qq = g1.shape[0]
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double y_pre = _presample_y(phi)
    cdef double h2_pre = _presample_h2(beta)
    cdef double loc, h, e
    for i in range(n):
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = eps[s]
                if e > 0.0:
                    h += g1[j - 1] * (e * e)
                else:
                    h += g2[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta[j - 1] * h2[s]
            else:
                h += beta[j - 1] * h2_pre
        if not (h <= EXPLOSION_LIMIT):
            return i
        h2[i] = h
        eps[i] = sqrt(h) * u[i]
        loc = phi[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi[j] * y[s]
            else:
                loc += phi[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi[j - 1] * eps[s]
        y[i] = loc + eps[i]
    return -1
