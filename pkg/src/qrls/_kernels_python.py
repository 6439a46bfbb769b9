"""
Pure-Python versions of the compiled recursions in ``_kernels.pyx``.

Used when the extension is unavailable or ``QRLS_PURE_PYTHON=1``.  The loop
structure and floating point operation order match the compiled kernels so
results agree bit for bit; only speed differs.
"""

from __future__ import annotations

from math import log, sqrt

EXPLOSION_LIMIT = 1e30


def _presample_y(phi) -> float:
    phi1 = 1.0
    for j in range(1, len(phi)):
        phi1 -= phi[j]
    return phi[0] / phi1


def _presample_h2(beta) -> float:
    b1 = 1.0
    for j in range(len(beta)):
        b1 -= beta[j]
    return 1.0 / b1


def _lists(*arrays):
    return [list(map(float, a)) for a in arrays]


def filter_values(y, xi, phi, psi, g1, g2, beta, eps, h2, q) -> None:
    """Fill ``eps``, ``h2`` and ``q`` with the truncated filter."""
    y_, phi_, psi_, g1_, g2_, beta_ = _lists(y, phi, psi, g1, g2, beta)
    n, P, Q, qq, p = len(y_), len(phi_) - 1, len(psi_), len(g1_), len(beta_)
    xi = float(xi)
    y_pre = _presample_y(phi_)
    h2_pre = _presample_h2(beta_)
    e_ = [0.0] * n
    h_ = [0.0] * n
    q_ = [0.0] * n
    for i in range(n):
        loc = phi_[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi_[j] * y_[s]
            else:
                loc += phi_[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi_[j - 1] * e_[s]
        e_[i] = y_[i] - loc
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = e_[s]
                if e > 0.0:
                    h += g1_[j - 1] * (e * e)
                else:
                    h += g2_[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta_[j - 1] * h_[s]
            else:
                h += beta_[j - 1] * h2_pre
        h_[i] = h
        q_[i] = loc + xi * sqrt(h)
    eps[:] = e_
    h2[:] = h_
    q[:] = q_


def qr_loss(y, xi, phi, psi, g1, g2, beta, tau, eps, h2) -> float:
    """Mean check loss of ``y - q`` with the filter evaluated in one pass."""
    y_, phi_, psi_, g1_, g2_, beta_ = _lists(y, phi, psi, g1, g2, beta)
    n, P, Q, qq, p = len(y_), len(phi_) - 1, len(psi_), len(g1_), len(beta_)
    xi, tau = float(xi), float(tau)
    y_pre = _presample_y(phi_)
    h2_pre = _presample_h2(beta_)
    e_ = [0.0] * n
    h_ = [0.0] * n
    total = 0.0
    for i in range(n):
        loc = phi_[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi_[j] * y_[s]
            else:
                loc += phi_[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi_[j - 1] * e_[s]
        e_[i] = y_[i] - loc
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = e_[s]
                if e > 0.0:
                    h += g1_[j - 1] * (e * e)
                else:
                    h += g2_[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta_[j - 1] * h_[s]
            else:
                h += beta_[j - 1] * h2_pre
        h_[i] = h
        r = y_[i] - (loc + xi * sqrt(h))
        if r < 0.0:
            total += r * (tau - 1.0)
        else:
            total += r * tau
    eps[:] = e_
    h2[:] = h_
    return total / n


def qmle_terms(y, phi, psi, g1, g2, beta, eps, h2) -> tuple[float, float]:
    """Return ``(sum log h2, sum eps**2 / h2)`` for the Gaussian likelihood."""
    y_, phi_, psi_, g1_, g2_, beta_ = _lists(y, phi, psi, g1, g2, beta)
    n, P, Q, qq, p = len(y_), len(phi_) - 1, len(psi_), len(g1_), len(beta_)
    y_pre = _presample_y(phi_)
    h2_pre = _presample_h2(beta_)
    e_ = [0.0] * n
    h_ = [0.0] * n
    sum_log = 0.0
    sum_sq = 0.0
    for i in range(n):
        loc = phi_[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi_[j] * y_[s]
            else:
                loc += phi_[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi_[j - 1] * e_[s]
        e_[i] = y_[i] - loc
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = e_[s]
                if e > 0.0:
                    h += g1_[j - 1] * (e * e)
                else:
                    h += g2_[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta_[j - 1] * h_[s]
            else:
                h += beta_[j - 1] * h2_pre
        h_[i] = h
        sum_sq += e_[i] * e_[i] / h
    for i in range(n):
        sum_log += log(h_[i])
    eps[:] = e_
    h2[:] = h_
    return sum_log, sum_sq


def filter_gradient(y, xi, phi, psi, g1, g2, beta, eps, h2, q, deps, dh2, dq) -> None:
    """Filter values plus forward-mode derivatives (see the compiled twin)."""
    y_, phi_, psi_, g1_, g2_, beta_ = _lists(y, phi, psi, g1, g2, beta)
    n, P, Q, qq, p = len(y_), len(phi_) - 1, len(psi_), len(g1_), len(beta_)
    xi = float(xi)
    na = 1 + P + Q
    m = na + 2 * qq + p
    phi1 = 1.0
    b1 = 1.0
    for j in range(1, P + 1):
        phi1 -= phi_[j]
    for j in range(p):
        b1 -= beta_[j]
    y_pre = phi_[0] / phi1
    h2_pre = 1.0 / b1
    dy_pre_phi0 = 1.0 / phi1
    dy_pre_phij = phi_[0] / (phi1 * phi1)
    dh2_pre_beta = 1.0 / (b1 * b1)
    e_ = [0.0] * n
    h_ = [0.0] * n
    q_ = [0.0] * n
    de_ = [None] * n
    dh_ = [None] * n
    dq_ = [None] * n
    for i in range(n):
        loc = phi_[0]
        dloc = [0.0] * na
        dloc[0] = 1.0
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi_[j] * y_[s]
                dloc[j] += y_[s]
            else:
                loc += phi_[j] * y_pre
                dloc[j] += y_pre
                dloc[0] += phi_[j] * dy_pre_phi0
                for a in range(1, P + 1):
                    dloc[a] += phi_[j] * dy_pre_phij
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi_[j - 1] * e_[s]
                dloc[P + j] += e_[s]
                ds = de_[s]
                for a in range(na):
                    dloc[a] += psi_[j - 1] * ds[a]
        e_[i] = y_[i] - loc
        de_[i] = [-v for v in dloc]
        h = 1.0
        dh = [0.0] * m
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = e_[s]
                if e > 0.0:
                    h += g1_[j - 1] * (e * e)
                    dh[na + j - 1] += e * e
                    coef = 2.0 * g1_[j - 1] * e
                else:
                    h += g2_[j - 1] * (e * e)
                    dh[na + qq + j - 1] += e * e
                    coef = 2.0 * g2_[j - 1] * e
                ds = de_[s]
                for a in range(na):
                    dh[a] += coef * ds[a]
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta_[j - 1] * h_[s]
                dh[na + 2 * qq + j - 1] += h_[s]
                ds = dh_[s]
                for a in range(m):
                    dh[a] += beta_[j - 1] * ds[a]
            else:
                h += beta_[j - 1] * h2_pre
                dh[na + 2 * qq + j - 1] += h2_pre
                for a in range(na + 2 * qq, m):
                    dh[a] += beta_[j - 1] * dh2_pre_beta
        h_[i] = h
        dh_[i] = dh
        hs = sqrt(h)
        q_[i] = loc + xi * hs
        w = xi / (2.0 * hs)
        row = [hs]
        for a in range(na):
            row.append(dloc[a] + w * dh[a])
        for a in range(na, m):
            row.append(w * dh[a])
        dq_[i] = row
    eps[:] = e_
    h2[:] = h_
    q[:] = q_
    if n:
        deps[:, :] = de_
        dh2[:, :] = dh_
        dq[:, :] = dq_


def simulate(u, phi, psi, g1, g2, beta, y, eps, h2) -> int:
    """Data-generating recursion; -1 on success else first exploding index."""
    u_, phi_, psi_, g1_, g2_, beta_ = _lists(u, phi, psi, g1, g2, beta)
    n, P, Q, qq, p = len(u_), len(phi_) - 1, len(psi_), len(g1_), len(beta_)
    y_pre = _presample_y(phi_)
    h2_pre = _presample_h2(beta_)
    y_ = [0.0] * n
    e_ = [0.0] * n
    h_ = [0.0] * n
    status = -1
    for i in range(n):
        h = 1.0
        for j in range(1, qq + 1):
            s = i - j
            if s >= 0:
                e = e_[s]
                if e > 0.0:
                    h += g1_[j - 1] * (e * e)
                else:
                    h += g2_[j - 1] * (e * e)
        for j in range(1, p + 1):
            s = i - j
            if s >= 0:
                h += beta_[j - 1] * h_[s]
            else:
                h += beta_[j - 1] * h2_pre
        if not (h <= EXPLOSION_LIMIT):
            status = i
            break
        h_[i] = h
        e_[i] = sqrt(h) * u_[i]
        loc = phi_[0]
        for j in range(1, P + 1):
            s = i - j
            if s >= 0:
                loc += phi_[j] * y_[s]
            else:
                loc += phi_[j] * y_pre
        for j in range(1, Q + 1):
            s = i - j
            if s >= 0:
                loc += psi_[j - 1] * e_[s]
        y_[i] = loc + e_[i]
    y[:] = y_
    eps[:] = e_
    h2[:] = h_
    return status
