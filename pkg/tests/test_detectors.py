import itertools

import numpy as np
import pytest

from coupled_eq.channel import (ImpulseResponse, bpsk_map, isi_filter,
                                standard_channel)
from coupled_eq.detectors import (LmmseEqualizer, bcjr_detect,
                                  default_lmmse_window, lmmse_detect,
                                  make_detector)
from coupled_eq.trellis import build_trellis

CHANNELS = ("ch1", "ch2", "ch3")


def exhaustive_app(y, la, sigma, h):
    """Brute-force a-posteriori LLRs by summing over every input sequence."""
    n = len(la)
    nu = h.memory
    seqs = np.array(list(itertools.product([0, 1], repeat=n)))
    full = np.hstack([seqs, np.zeros((len(seqs), nu), dtype=int)])
    x = 1.0 - 2.0 * full
    ext = np.hstack([np.ones((len(seqs), nu)), x])
    taps = np.asarray(h.taps)
    z = np.stack([np.convolve(row, taps)[nu:nu + n + nu] for row in ext])
    ll = -np.sum((y - z) ** 2, axis=1) / (2 * sigma ** 2)
    ll = ll + np.where(seqs == 0, 0.5, -0.5) @ np.broadcast_to(la, (n,))
    lapp = np.empty(n)
    for t in range(n):
        lp0 = np.logaddexp.reduce(ll[seqs[:, t] == 0])
        lp1 = np.logaddexp.reduce(ll[seqs[:, t] == 1])
        lapp[t] = lp0 - lp1
    return lapp


def test_trellis_identity_channel():
    tr = build_trellis(ImpulseResponse((1.0,)))
    assert tr.num_states == 1
    assert sorted(tr.levels.ravel().tolist()) == [-1.0, 1.0]


def test_trellis_ch1_levels():
    tr = build_trellis(standard_channel("ch1"))
    assert tr.num_states == 2
    levels = np.unique(np.round(tr.levels, 4))
    np.testing.assert_array_equal(levels, [-1.4142, 0.0, 1.4142])


def test_trellis_ch3_size():
    tr = build_trellis(standard_channel("ch3"))
    assert tr.num_states == 16
    assert tr.next_state.shape == (16, 2)


def test_trellis_levels_match_convolution():
    # walking any input sequence through next_state must reproduce the filter
    h = standard_channel("ch2")
    tr = build_trellis(h)
    rng = np.random.default_rng(5)
    bits = rng.integers(2, size=30)
    z = isi_filter(bpsk_map(bits), h)
    s = 0
    for t, b in enumerate(bits):
        assert tr.levels[s, b] == pytest.approx(z[t], abs=1e-12)
        s = tr.next_state[s, b]


def test_trellis_rejects_large_memory():
    stub = type("H", (), {"memory": 17, "taps": (1.0,) + (0.0,) * 17})()
    with pytest.raises(ValueError):
        build_trellis(stub)


def test_bcjr_identity_channel_is_matched_filter():
    tr = build_trellis(ImpulseResponse((1.0,)))
    rng = np.random.default_rng(0)
    y = rng.normal(size=8)
    le = bcjr_detect(y, np.zeros(8), 0.7, tr)
    np.testing.assert_allclose(le, 2 * y / 0.49, atol=1e-12)


@pytest.mark.parametrize("name", CHANNELS)
def test_bcjr_matches_exhaustive_map(name):
    h = standard_channel(name)
    tr = build_trellis(h)
    rng = np.random.default_rng(42)
    n = 6
    for _ in range(100):
        sigma = float(rng.uniform(0.4, 1.5))
        la = rng.normal(0, 2, size=n)
        bits = rng.integers(2, size=n)
        y, _ = _transmit(bits, h, sigma, rng)
        le = bcjr_detect(y, la, sigma, tr)
        lapp = exhaustive_app(y, la, sigma, h)
        np.testing.assert_allclose(le + la, lapp, atol=1e-9)


def test_bcjr_matches_exhaustive_map_n10():
    h = standard_channel("ch2")
    tr = build_trellis(h)
    rng = np.random.default_rng(1)
    for _ in range(5):
        la = rng.normal(0, 1.5, size=10)
        bits = rng.integers(2, size=10)
        y, _ = _transmit(bits, h, 0.8, rng)
        le = bcjr_detect(y, la, 0.8, tr)
        np.testing.assert_allclose(le + la, exhaustive_app(y, la, 0.8, h), atol=1e-9)


def _transmit(bits, h, sigma, rng):
    nu = h.memory
    x = bpsk_map(np.concatenate([bits, np.zeros(nu, dtype=int)]))
    z = isi_filter(x, h)
    return z + rng.normal(0, sigma, size=len(z)), x


def test_bcjr_zero_observation_matches_oracle():
    # degenerate all-zero observation; boundary states still matter
    h = standard_channel("ch2")
    tr = build_trellis(h)
    n = 10
    y = np.zeros(n + h.memory)
    la = np.zeros(n)
    le = bcjr_detect(y, la, 0.9, tr)
    np.testing.assert_allclose(le, exhaustive_app(y, la, 0.9, h), atol=1e-9)


def test_bcjr_evidence_constant_across_positions():
    h = standard_channel("ch3")
    tr = build_trellis(h)
    rng = np.random.default_rng(9)
    bits = rng.integers(2, size=40)
    y, _ = _transmit(bits, h, 0.7, rng)
    la = rng.normal(size=40)
    _, info = bcjr_detect(y, la, 0.7, tr, full_output=True)
    assert np.ptp(info["evidence"]) <= 1e-9


def test_bcjr_extrinsic_independent_of_own_prior():
    h = standard_channel("ch1")
    tr = build_trellis(h)
    rng = np.random.default_rng(12)
    bits = rng.integers(2, size=10)
    y, _ = _transmit(bits, h, 0.8, rng)
    la = rng.normal(size=10)
    le = bcjr_detect(y, la, 0.8, tr)
    for t in (0, 4, 9):
        for eps in (1e-4, -1e-4):
            la2 = la.copy()
            la2[t] += eps
            le2 = bcjr_detect(y, la2, 0.8, tr)
            assert abs(le2[t] - le[t]) / abs(eps) <= 1e-5


def test_bcjr_rejects_bad_lengths():
    tr = build_trellis(standard_channel("ch2"))
    with pytest.raises(ValueError):
        bcjr_detect(np.zeros(10), np.zeros(5), 1.0, tr)
    with pytest.raises(ValueError):
        bcjr_detect(np.full(10, np.nan), np.zeros(8), 1.0, tr)


def test_lmmse_identity_channel_is_matched_filter():
    h = ImpulseResponse((1.0,))
    rng = np.random.default_rng(2)
    y = rng.normal(size=9)
    le = lmmse_detect(y, np.zeros(9), 0.6, h, window=(2, 2))
    np.testing.assert_allclose(le, 2 * y / 0.36, atol=1e-9)


def _dense_windowed_mmse(y, sigma, h, n1, n2):
    """Independent oracle: full-block convolution model, per-symbol window
    carved from the dense matrix, inverse via np.linalg.inv."""
    T = len(y)
    nu = h.memory
    n = T - nu
    taps = np.asarray(h.taps)
    Hfull = np.zeros((T, T + nu))
    for i, tap in enumerate(taps):
        idx = np.arange(T)
        Hfull[idx, idx + nu - i] = tap
    xmean = np.zeros(T + nu)
    xmean[:nu] = 1.0
    xmean[nu + n:] = 1.0
    var = np.zeros(T + nu)
    var[nu:nu + n] = 1.0
    out = np.empty(n)
    for t in range(n):
        rows = np.arange(max(0, t - n1), min(T, t + n2 + 1))
        Hw = Hfull[rows]
        keep = np.flatnonzero(Hw.any(axis=0))
        Hw = Hw[:, keep]
        v = var[keep].copy()
        xm = xmean[keep].copy()
        pos = np.flatnonzero(keep == t + nu)[0]
        v[pos] = 1.0
        xm[pos] = 0.0
        C = Hw @ np.diag(v) @ Hw.T + (sigma ** 2 + 1e-12) * np.eye(len(rows))
        f = np.linalg.inv(C) @ Hw[:, pos]
        mu = f @ Hw[:, pos]
        xhat = f @ (y[rows] - Hw @ xm)
        out[t] = 2 * xhat / (1 - mu)
    return out


@pytest.mark.parametrize("name", CHANNELS)
def test_lmmse_zero_priors_match_dense_oracle(name):
    h = standard_channel(name)
    n1, n2 = default_lmmse_window(h)
    rng = np.random.default_rng(21)
    bits = rng.integers(2, size=64)
    y, _ = _transmit(bits, h, 0.7, rng)
    le = lmmse_detect(y, np.zeros(64), 0.7, h)
    oracle = _dense_windowed_mmse(y, 0.7, h, n1, n2)
    np.testing.assert_allclose(le, oracle, atol=1e-9)


def test_lmmse_perfect_priors_cancel_interference():
    h = standard_channel("ch2")
    rng = np.random.default_rng(23)
    n = 40
    bits = rng.integers(2, size=n)
    y, x = _transmit(bits, h, 0.8, rng)
    la = np.where(bits == 0, 50.0, -50.0)
    le = lmmse_detect(y, la, 0.8, h)
    # cleaned observation: subtract every symbol's contribution except bit t
    taps = np.asarray(h.taps)
    nu = h.memory
    xfull = np.concatenate([np.ones(nu), x])
    expect = np.empty(n)
    for t in range(n):
        rows = np.arange(t, t + nu + 1)
        contrib = np.array([
            sum(taps[i] * xfull[nu + r - i] for i in range(nu + 1)
                if r - i != t) for r in rows])
        resid = y[rows] - contrib
        expect[t] = 2 * (taps @ resid) / 0.64
    np.testing.assert_allclose(le, expect, atol=1e-5)


def test_lmmse_matches_bcjr_for_memoryless_channel():
    h = ImpulseResponse((1.0,))
    tr = build_trellis(h)
    rng = np.random.default_rng(31)
    y = rng.normal(size=20)
    la = rng.normal(size=20)
    lb = bcjr_detect(y, la, 0.9, tr)
    lm = lmmse_detect(y, la, 0.9, h, window=(3, 3))
    np.testing.assert_allclose(lm, lb, atol=1e-9)


def test_lmmse_window_validation():
    h = standard_channel("ch3")
    with pytest.raises(ValueError):
        LmmseEqualizer(h, window=(2, 2))


def test_make_detector_interface():
    h = standard_channel("ch1")
    det_b = make_detector("bcjr", h)
    det_l = make_detector("lmmse", h)
    rng = np.random.default_rng(4)
    bits = rng.integers(2, size=30)
    y, _ = _transmit(bits, h, 0.6, rng)
    la = np.zeros(30)
    assert det_b(y, la, 0.6).shape == (30,)
    assert det_l(y, la, 0.6).shape == (30,)
    with pytest.raises(ValueError):
        make_detector("viterbi", h)
