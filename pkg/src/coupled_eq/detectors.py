"""Soft-input soft-output channel detectors.

Both detectors consume a-priori LLRs on the data symbols and return extrinsic
LLRs: bcjr_detect runs the exact a-posteriori recursion on the channel
trellis, lmmse_detect the time-varying linear MMSE equalizer with soft
interference cancellation. LLR convention L = log(P(bit=0)/P(bit=1)).
"""

import numpy as np

from . import _kernels
from .llrops import LLR_CAP
from .trellis import build_trellis


def bcjr_detect(y, apriori, sigma, trellis, init_state=0, final_known=True,
                cap=LLR_CAP, full_output=False):
    """Extrinsic LLRs from the exact BCJR recursion.

    len(y) - len(apriori) termination steps (0 or the channel memory) force
    input bit 0 and carry no prior. init_state pins the left boundary;
    final_known=False leaves the right edge uniform (mid-chain windows).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    apriori = np.ascontiguousarray(apriori, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    n_term = len(y) - len(apriori)
    nu = trellis.next_state.shape[0].bit_length() - 1
    if n_term not in (0, nu):
        raise ValueError(f"len(y)-len(apriori) = {n_term}, expected 0 or {nu}")
    le, evidence = _kernels.bcjr_extrinsic(
        y, apriori, sigma * sigma, trellis.levels, trellis.next_state,
        trellis.prev_state, trellis.prev_bit, init_state, bool(final_known), cap)
    if full_output:
        return le, {"evidence": evidence}
    return le


def default_lmmse_window(h):
    """(N1, N2) = (3(nu+1), 3(nu+1)): a few channel lengths each side."""
    k = 3 * (h.memory + 1)
    return (k, k)


class LmmseEqualizer:
    """Sliding-window time-varying LMMSE estimator for one channel/window.

    Precomputes the local convolution matrix for interior symbols; edge
    symbols near block boundaries get individual clipped-window solves.
    """

    def __init__(self, h, window=None, sigma=None):
        if window is None:
            window = default_lmmse_window(h)
        n1, n2 = int(window[0]), int(window[1])
        if n1 < h.memory or n2 < h.memory:
            raise ValueError(f"window {window} shorter than channel memory {h.memory}")
        self.h = h
        self.n1, self.n2 = n1, n2
        self.taps = np.asarray(h.taps)
        self.nu = h.memory
        w = n1 + n2 + 1
        self.Hw = _conv_matrix(self.taps, w)
        self.target_col = n1 + self.nu

    def __call__(self, y, apriori, sigma, prefix_symbols=None, cap=LLR_CAP):
        return lmmse_detect(y, apriori, sigma, self.h, window=(self.n1, self.n2),
                            prefix_symbols=prefix_symbols, cap=cap, _eq=self)


def _conv_matrix(taps, rows):
    """rows x (rows+nu) banded Toeplitz: row r models y_r over symbols r..r+nu
    (column r+nu-i holds tap i)."""
    nu = len(taps) - 1
    H = np.zeros((rows, rows + nu))
    for i, t in enumerate(taps):
        idx = np.arange(rows)
        H[idx, idx + nu - i] = t
    return H


def lmmse_detect(y, apriori, sigma, h, window=None, prefix_symbols=None,
                 cap=LLR_CAP, _eq=None):
    """Extrinsic LLRs from the windowed time-varying LMMSE equalizer.

    For each data symbol t, observations y_{t-N1..t+N2} (clipped to the block)
    are modeled with soft symbol means tanh(L_A/2) and variances 1-mean^2 for
    all involved symbols except symbol t itself, whose prior is excluded
    (mean 0, variance 1). Termination symbols and the nu symbols before the
    block (prefix_symbols, default all +1) are known exactly.
    """
    if _eq is None:
        _eq = LmmseEqualizer(h, window)
    y = np.asarray(y, dtype=np.float64)
    apriori = np.asarray(apriori, dtype=np.float64)
    nu = _eq.nu
    T = len(y)
    n_data = len(apriori)
    n_term = T - n_data
    if n_term not in (0, nu):
        raise ValueError(f"len(y)-len(apriori) = {n_term}, expected 0 or {nu}")
    if prefix_symbols is None:
        prefix_symbols = np.ones(nu)
    prefix_symbols = np.asarray(prefix_symbols, dtype=np.float64)
    if prefix_symbols.shape != (nu,):
        raise ValueError(f"prefix_symbols must have length {nu}")
    sigma2 = sigma * sigma

    la = np.clip(apriori, -cap, cap)
    xbar_data = np.tanh(0.5 * la)
    # ext index k+nu holds symbol k; prefix and termination symbols are known
    xb = np.concatenate([prefix_symbols, xbar_data, np.ones(n_term)])
    v = np.concatenate([np.zeros(nu), 1.0 - xbar_data ** 2, np.zeros(n_term)])

    n1, n2 = _eq.n1, _eq.n2
    le = np.empty(n_data)
    interior = np.arange(max(n1, 0), min(n_data, T - n2), dtype=np.int64)
    edge = np.setdiff1d(np.arange(n_data, dtype=np.int64), interior)

    if len(interior):
        _lmmse_interior(y, xb, v, _eq, sigma2, interior, le)
    for t in edge:
        le[t] = _lmmse_single(y, xb, v, _eq, sigma2, int(t))
    np.clip(le, -cap, cap, out=le)
    return le


def _lmmse_interior(y, xb, v, eq, sigma2, ts, out, chunk=512):
    Hw = eq.Hw
    w, wsym = Hw.shape
    p = eq.target_col
    hcol = Hw[:, p]
    for lo in range(0, len(ts), chunk):
        tt = ts[lo:lo + chunk]
        B = len(tt)
        # symbol ext-window [t-n1, t+n2+nu], obs window [t-n1, t+n2]
        sym_idx = tt[:, None] - eq.n1 + np.arange(wsym)[None, :]
        vb = v[sym_idx]
        xbb = xb[sym_idx]
        vb[:, p] = 1.0
        xbb[:, p] = 0.0
        C = np.einsum("rk,bk,sk->brs", Hw, vb, Hw, optimize=True)
        C[:, np.arange(w), np.arange(w)] += sigma2 + 1e-12
        f = np.linalg.solve(C, np.broadcast_to(hcol[:, None], (B, w, 1)))[..., 0]
        mu = f @ hcol
        obs_idx = tt[:, None] - eq.n1 + np.arange(w)[None, :]
        resid = y[obs_idx] - np.einsum("rk,bk->br", Hw, xbb)
        xhat = np.einsum("br,br->b", f, resid)
        out[tt] = 2.0 * xhat / np.maximum(1.0 - mu, 1e-12)


def _lmmse_single(y, xb, v, eq, sigma2, t):
    T = len(y)
    nu = eq.nu
    r_lo = max(0, t - eq.n1)
    r_hi = min(T, t + eq.n2 + 1)
    rows = r_hi - r_lo
    H = _conv_matrix(eq.taps, rows)
    sl = slice(r_lo, r_hi + nu)          # ext indices r_lo .. r_hi-1+nu
    vb = v[sl].copy()
    xbb = xb[sl].copy()
    p = t - r_lo + nu
    vb[p] = 1.0
    xbb[p] = 0.0
    C = (H * vb) @ H.T
    C[np.arange(rows), np.arange(rows)] += sigma2 + 1e-12
    hcol = H[:, p]
    f = np.linalg.solve(C, hcol)
    mu = f @ hcol
    xhat = f @ (y[r_lo:r_hi] - H @ xbb)
    return 2.0 * xhat / max(1.0 - mu, 1e-12)


def make_detector(kind, h, window=None):
    """Uniform detector interface: fn(y, apriori, sigma, **boundary_kwargs)."""
    if kind == "bcjr":
        trellis = build_trellis(h)

        def detect(y, apriori, sigma, init_state=0, final_known=True,
                   prefix_symbols=None, cap=LLR_CAP):
            return bcjr_detect(y, apriori, sigma, trellis,
                               init_state=init_state, final_known=final_known,
                               cap=cap)
    elif kind == "lmmse":
        eq = LmmseEqualizer(h, window)

        def detect(y, apriori, sigma, init_state=0, final_known=True,
                   prefix_symbols=None, cap=LLR_CAP):
            return eq(y, apriori, sigma, prefix_symbols=prefix_symbols, cap=cap)
    else:
        raise ValueError(f"unknown detector {kind!r}; have bcjr, lmmse")
    detect.kind = kind
    detect.channel = h
    return detect
