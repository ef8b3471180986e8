# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: BCJR recursions and BP flooding iterations.

Mirrors the semantics of the numpy fallback module exactly; see fallback.py
for the reference formulation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, log, log1p

cnp.import_array()

COMPILED = True


cdef inline double logaddexp(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        a, b = b, a
    return a + log1p(exp(b - a))


def bcjr_extrinsic(const double[::1] y, const double[::1] la, double sigma2,
                   const double[:, ::1] levels, const int[:, ::1] next_state,
                   const int[:, ::1] prev_state, const int[:, ::1] prev_bit,
                   int init_state, bint final_known, double cap):
    cdef Py_ssize_t T = y.shape[0]
    cdef Py_ssize_t n_data = la.shape[0]
    cdef Py_ssize_t S = levels.shape[0]
    cdef double inv = 1.0 / (2.0 * sigma2)
    cdef Py_ssize_t t, s, b
    cdef double d0, d1, m, half_la, g0, g1, lp0, lp1

    G_np = np.empty((T, S, 2))
    alpha_np = np.full((T + 1, S), -np.inf)
    beta_np = np.empty((T + 1, S))
    acum_np = np.zeros(T + 1)
    bcum_np = np.zeros(T + 1)
    le_np = np.empty(n_data)
    ev_np = np.empty(n_data)
    cdef double[:, :, ::1] G = G_np
    cdef double[:, ::1] alpha = alpha_np
    cdef double[:, ::1] beta = beta_np
    cdef double[::1] acum = acum_np
    cdef double[::1] bcum = bcum_np
    cdef double[::1] le = le_np
    cdef double[::1] ev = ev_np

    with nogil:
        for t in range(T):
            half_la = 0.5 * la[t] if t < n_data else 0.0
            for s in range(S):
                d0 = y[t] - levels[s, 0]
                d1 = y[t] - levels[s, 1]
                G[t, s, 0] = -d0 * d0 * inv + half_la
                if t < n_data:
                    G[t, s, 1] = -d1 * d1 * inv - half_la
                else:
                    G[t, s, 1] = -INFINITY

        alpha[0, init_state] = 0.0
        for t in range(T):
            m = -INFINITY
            for s in range(S):
                d0 = alpha[t, prev_state[s, 0]] + G[t, prev_state[s, 0], prev_bit[s, 0]]
                d1 = alpha[t, prev_state[s, 1]] + G[t, prev_state[s, 1], prev_bit[s, 1]]
                d0 = logaddexp(d0, d1)
                alpha[t + 1, s] = d0
                if d0 > m:
                    m = d0
            for s in range(S):
                alpha[t + 1, s] -= m
            acum[t + 1] = acum[t] + m

        if final_known:
            for s in range(S):
                beta[T, s] = -INFINITY
            beta[T, 0] = 0.0
        else:
            for s in range(S):
                beta[T, s] = 0.0
        for t in range(T - 1, -1, -1):
            m = -INFINITY
            for s in range(S):
                d0 = G[t, s, 0] + beta[t + 1, next_state[s, 0]]
                d1 = G[t, s, 1] + beta[t + 1, next_state[s, 1]]
                d0 = logaddexp(d0, d1)
                beta[t, s] = d0
                if d0 > m:
                    m = d0
            for s in range(S):
                beta[t, s] -= m
            bcum[t] = bcum[t + 1] + m

        for t in range(n_data):
            lp0 = -INFINITY
            lp1 = -INFINITY
            for s in range(S):
                g0 = alpha[t, s] + G[t, s, 0] + beta[t + 1, next_state[s, 0]]
                g1 = alpha[t, s] + G[t, s, 1] + beta[t + 1, next_state[s, 1]]
                lp0 = logaddexp(lp0, g0)
                lp1 = logaddexp(lp1, g1)
            d0 = lp0 - lp1 - la[t]
            if d0 > cap:
                d0 = cap
            elif d0 < -cap:
                d0 = -cap
            le[t] = d0
            ev[t] = logaddexp(lp0, lp1) + acum[t] + bcum[t + 1]

    return le_np, ev_np


def bcjr_forward_logz(const double[::1] y, double sigma2, const double[:, ::1] levels,
                      const int[:, ::1] next_state, const int[:, ::1] prev_state,
                      const int[:, ::1] prev_bit, int init_state):
    cdef Py_ssize_t T = y.shape[0]
    cdef Py_ssize_t S = levels.shape[0]
    cdef double inv = 1.0 / (2.0 * sigma2)
    cdef Py_ssize_t t, s
    cdef double m, d0, d1, acc = 0.0

    work = np.full((2, S), -np.inf)
    cdef double[:, ::1] ab = work
    lv_np = np.empty((2, S))
    cdef double[:, ::1] lv = lv_np
    for s in range(S):
        lv[0, s] = levels[prev_state[s, 0], prev_bit[s, 0]]
        lv[1, s] = levels[prev_state[s, 1], prev_bit[s, 1]]

    ab[0, init_state] = 0.0
    with nogil:
        for t in range(T):
            m = -INFINITY
            for s in range(S):
                d0 = y[t] - lv[0, s]
                d1 = y[t] - lv[1, s]
                d0 = ab[0, prev_state[s, 0]] - d0 * d0 * inv
                d1 = ab[0, prev_state[s, 1]] - d1 * d1 * inv
                d0 = logaddexp(d0, d1)
                ab[1, s] = d0
                if d0 > m:
                    m = d0
            for s in range(S):
                ab[0, s] = ab[1, s] - m
            acc += m
        m = -INFINITY
        for s in range(S):
            m = logaddexp(m, ab[0, s])
        acc += m
    return acc


def bp_iterate(const int[::1] edge_vn, const int[::1] edge_cn, double[::1] m_cv,
               const double[::1] det, Py_ssize_t n_cn, double cap):
    cdef Py_ssize_t E = edge_vn.shape[0]
    cdef Py_ssize_t n_vn = det.shape[0]
    cdef Py_ssize_t e
    cdef int vtmp
    cdef double x, mag, t, ph, rest, u

    buf_vn = np.zeros(n_vn)
    buf_phi = np.zeros(n_cn)
    buf_par = np.zeros(n_cn, dtype=np.int32)
    mvc_np = np.empty(E)
    phie_np = np.empty(E)
    nege_np = np.empty(E, dtype=np.int32)
    cdef double[::1] sum_cv = buf_vn
    cdef double[::1] phis = buf_phi
    cdef int[::1] par = buf_par
    cdef double[::1] m_vc = mvc_np
    cdef double[::1] phie = phie_np
    cdef int[::1] nege = nege_np

    with nogil:
        for e in range(E):
            sum_cv[edge_vn[e]] += m_cv[e]
        for e in range(E):
            x = det[edge_vn[e]] + sum_cv[edge_vn[e]] - m_cv[e]
            if x > cap:
                x = cap
            elif x < -cap:
                x = -cap
            m_vc[e] = x
            mag = fabs(x)
            if mag < 1e-12:
                mag = 1e-12
            t = exp(-mag)
            ph = log1p(t) - log1p(-t)
            phie[e] = ph
            phis[edge_cn[e]] += ph
            vtmp = 1 if x < 0.0 else 0
            nege[e] = vtmp
            par[edge_cn[e]] += vtmp
        for e in range(E):
            rest = phis[edge_cn[e]] - phie[e]
            if rest < 1e-300:
                rest = 1e-300
            u = exp(-rest)
            if u >= 1.0:
                mag = cap
            else:
                mag = log1p(u) - log1p(-u)
                if mag > cap:
                    mag = cap
            if (par[edge_cn[e]] - nege[e]) % 2 == 1:
                m_cv[e] = -mag
            else:
                m_cv[e] = mag
    return None
