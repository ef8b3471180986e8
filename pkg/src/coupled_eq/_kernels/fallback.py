"""Pure-numpy implementations of the hot kernels.

Same call signatures and semantics as the compiled extension `_corex`; used
when the extension is absent or explicitly disabled. The BCJR recursions loop
over time steps in Python with state-vectorized numpy bodies; belief
propagation iterations are fully vectorized over edges.
"""

import numpy as np

COMPILED = False


def _logsumexp(v):
    m = v.max()
    if m == -np.inf:
        return -np.inf
    return m + np.log(np.exp(v - m).sum())


def bcjr_extrinsic(y, la, sigma2, levels, next_state, prev_state, prev_bit,
                   init_state, final_known, cap):
    """Log-domain BCJR on an ISI trellis; returns (extrinsic, evidence).

    y has len(la) data steps plus optional termination steps that force input
    bit 0 and carry no prior. evidence[t] is the total log-likelihood
    accumulated at step t (constant across t up to rounding).
    """
    y = np.asarray(y, dtype=np.float64)
    la = np.asarray(la, dtype=np.float64)
    T = len(y)
    n_data = len(la)
    S = levels.shape[0]
    inv = 1.0 / (2.0 * sigma2)

    # branch metrics G[t, s, b]
    G = -((y[:, None, None] - levels[None, :, :]) ** 2) * inv
    G[:n_data, :, 0] += 0.5 * la[:, None]
    G[:n_data, :, 1] -= 0.5 * la[:, None]
    G[n_data:, :, 1] = -np.inf

    alpha = np.empty((T + 1, S))
    acum = np.zeros(T + 1)
    alpha[0] = -np.inf
    alpha[0, init_state] = 0.0
    p0, p1 = prev_state[:, 0], prev_state[:, 1]
    b0, b1 = prev_bit[:, 0], prev_bit[:, 1]
    for t in range(T):
        g = G[t]
        a = np.logaddexp(alpha[t, p0] + g[p0, b0], alpha[t, p1] + g[p1, b1])
        m = a.max()
        alpha[t + 1] = a - m
        acum[t + 1] = acum[t] + m

    beta = np.empty((T + 1, S))
    bcum = np.zeros(T + 1)
    if final_known:
        beta[T] = -np.inf
        beta[T, 0] = 0.0
    else:
        beta[T] = 0.0
    ns0, ns1 = next_state[:, 0], next_state[:, 1]
    for t in range(T - 1, -1, -1):
        g = G[t]
        b = np.logaddexp(g[:, 0] + beta[t + 1, ns0], g[:, 1] + beta[t + 1, ns1])
        m = b.max()
        beta[t] = b - m
        bcum[t] = bcum[t + 1] + m

    le = np.empty(n_data)
    evidence = np.empty(n_data)
    for t in range(n_data):
        g = G[t]
        lp0 = _logsumexp(alpha[t] + g[:, 0] + beta[t + 1, ns0])
        lp1 = _logsumexp(alpha[t] + g[:, 1] + beta[t + 1, ns1])
        le[t] = lp0 - lp1 - la[t]
        evidence[t] = np.logaddexp(lp0, lp1) + acum[t] + bcum[t + 1]
    np.clip(le, -cap, cap, out=le)
    return le, evidence


def bcjr_forward_logz(y, sigma2, levels, next_state, prev_state, prev_bit,
                      init_state):
    """Forward-only accumulated log sum over all input sequences with the
    Gaussian branch exponents (no prior term, no normalization constants)."""
    y = np.asarray(y, dtype=np.float64)
    T = len(y)
    S = levels.shape[0]
    inv = 1.0 / (2.0 * sigma2)
    alpha = np.full(S, -np.inf)
    alpha[init_state] = 0.0
    p0, p1 = prev_state[:, 0], prev_state[:, 1]
    b0, b1 = prev_bit[:, 0], prev_bit[:, 1]
    lv0 = levels[p0, b0]
    lv1 = levels[p1, b1]
    acc = 0.0
    for t in range(T):
        g0 = -((y[t] - lv0) ** 2) * inv
        g1 = -((y[t] - lv1) ** 2) * inv
        a = np.logaddexp(alpha[p0] + g0, alpha[p1] + g1)
        m = a.max()
        alpha = a - m
        acc += m
    return acc + _logsumexp(alpha)


def bp_iterate(edge_vn, edge_cn, m_cv, det, n_cn, cap):
    """One flooding iteration (VN pass then CN pass); updates m_cv in place."""
    n_vn = len(det)
    sum_cv = np.bincount(edge_vn, weights=m_cv, minlength=n_vn)
    m_vc = det[edge_vn] + sum_cv[edge_vn] - m_cv
    np.clip(m_vc, -cap, cap, out=m_vc)

    mag = np.clip(np.abs(m_vc), 1e-12, cap)
    t = np.exp(-mag)
    ph = np.log1p(t) - np.log1p(-t)
    tot = np.bincount(edge_cn, weights=ph, minlength=n_cn)
    rest = np.clip(tot[edge_cn] - ph, 1e-300, None)
    u = np.exp(-rest)
    with np.errstate(divide="ignore"):
        mags = np.log1p(u) - np.log1p(-u)
    np.clip(mags, None, cap, out=mags)

    neg = (m_vc < 0).astype(np.float64)
    parity = np.bincount(edge_cn, weights=neg, minlength=n_cn)
    odd = (parity[edge_cn] - neg) % 2
    m_cv[:] = np.where(odd > 0.5, -mags, mags)
    return None
