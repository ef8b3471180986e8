"""Symmetric information rate of ISI channels, estimated by simulation.

For iid equiprobable BPSK inputs, the achievable rate I(X;Y)/n of a
discrete-time ISI channel with AWGN is estimated from one long
realization: log p(y|x) is the white Gaussian exponent of the actual
noise, and log p(y) follows from a forward recursion over the channel
trellis that sums over all input sequences. Gaussian normalization
constants cancel in the difference; the uniform input prior contributes
exactly one bit per symbol.
"""

import numpy as np

from ._kernels import bcjr_forward_logz
from .channel import awgn, bpsk_map, isi_filter, sigma_from_ezn0
from .trellis import build_trellis

_LN2 = float(np.log(2.0))


def sir(channel, ezn0_db, n_sym=100_000, seed=0):
    """Information rate in bits per channel use at the given Ez/N0 (dB)."""
    sigma = sigma_from_ezn0(ezn0_db)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=n_sym, dtype=np.uint8)
    x = bpsk_map(bits)
    z = isi_filter(x, channel)
    y = awgn(z, sigma, rng)
    tr = build_trellis(channel)
    log_py = bcjr_forward_logz(
        y, sigma * sigma, tr.levels, tr.next_state, tr.prev_state, tr.prev_bit, 0
    )
    log_cond = -float(((y - z) ** 2).sum()) / (2.0 * sigma * sigma)
    return (log_cond - log_py) / (n_sym * _LN2) + 1.0


def sir_threshold(
    channel,
    rate=0.5,
    n_sym=1_000_000,
    seed=0,
    lo_ezn0_db=-8.0,
    hi_ezn0_db=8.0,
    tol_db=0.02,
):
    """Smallest SNR at which the information rate reaches the code rate.

    Bisects Ez/N0 until the bracket is tol_db wide; each probe reuses the
    same seed, so the rate estimate is monotone in SNR and the final
    point satisfies |sir - rate| well inside 0.005 bits. Returns both the
    Ez/N0 and the Eb/N0 form of the threshold (Eb = Ez / rate).
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    lo, hi = float(lo_ezn0_db), float(hi_ezn0_db)
    probes = []

    def probe(ez_db):
        val = sir(channel, ez_db, n_sym=n_sym, seed=seed)
        probes.append({"ezn0_db": ez_db, "sir": val})
        return val

    if probe(lo) >= rate or probe(hi) < rate:
        raise ValueError("bracket does not straddle the target rate")
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if probe(mid) >= rate:
            hi = mid
        else:
            lo = mid
    ez_star = 0.5 * (lo + hi)
    return {
        "ezn0_db": ez_star,
        "ebn0_db": ez_star - 10.0 * np.log10(rate),
        "rate": rate,
        "n_sym": n_sym,
        "probes": probes,
    }
