"""Joint iterative receiver: LDPC belief propagation interleaved with
detector passes, whole-block or sliding-window over a coupled chain.

Message conventions: det_llr holds the detector->VN extrinsic per bit; the
VN->detector message is the full node-perspective sum of all CN inputs.
Hard decision is the sign of the total VN LLR, exact zero toward bit 0.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .llrops import LLR_CAP

# committed bits enter BP pinned far above the cap so their outgoing
# messages clip to exactly +-cap every round
_PIN = 1e6


@dataclass
class Schedule:
    inner_iters: int = 30
    outer_iters: int = 20
    window: int = None
    early_stop: bool = True
    cap: float = LLR_CAP

    def __post_init__(self):
        if self.inner_iters < 1 or self.outer_iters < 1:
            raise ValueError("inner_iters and outer_iters must be >= 1")


@dataclass
class ReceiverState:
    m_cv: np.ndarray
    det_llr: np.ndarray
    cap: float = LLR_CAP

    @classmethod
    def fresh(cls, graph, det_llr=None, cap=LLR_CAP):
        det = np.zeros(graph.n) if det_llr is None else np.asarray(det_llr, dtype=np.float64)
        return cls(m_cv=np.zeros(graph.n_edges), det_llr=det, cap=cap)


def bp_round(graph, state):
    """One flooding iteration (VN pass then CN pass) over the whole graph."""
    _kernels.bp_iterate(graph.edge_vn, graph.edge_cn, state.m_cv,
                        state.det_llr, graph.m_rows, state.cap)
    return state


def vn_totals(graph, state):
    return state.det_llr + np.bincount(graph.edge_vn, weights=state.m_cv,
                                       minlength=graph.n)


def turbo_equalize(y, graph, detector, sigma, schedule, truth=None):
    """Joint decoding of one block: outer rounds of detector pass followed by
    inner_iters BP rounds; early-stops when the syndrome clears."""
    return _decode(y, graph, None, detector, sigma, schedule, truth)


def window_decode(y, graph, layout, detector, sigma, schedule, truth=None):
    """Sliding-window decoding of a coupled chain, committing the oldest
    position per slide (the final window commits the whole tail)."""
    if layout is None:
        raise ValueError("window decoding needs the coupled layout")
    if schedule.window is None or schedule.window <= layout.spec.m:
        raise ValueError("need window W > m")
    return _decode(y, graph, layout, detector, sigma, schedule, truth)


def _decode(y, graph, layout, detector, sigma, schedule, truth):
    n = graph.n
    nu = detector.channel.memory
    y = np.asarray(y, dtype=np.float64)
    if len(y) != n + nu:
        raise ValueError(f"len(y) = {len(y)}, expected n + nu = {n + nu}")

    if layout is None:
        L, W, N = 1, 1, n
        pos_cn = np.ones(graph.m_rows, dtype=np.int32)
    else:
        L, W, N = layout.spec.L, schedule.window, layout.spec.N
        pos_cn = layout.position_of_cn
    m_cpl = 0 if layout is None else layout.spec.m

    m_cv = np.zeros(graph.n_edges)
    det_llr = np.zeros(n)
    hard = np.zeros(n, dtype=np.uint8)
    committed = np.zeros(n, dtype=bool)
    stats = {"rounds": [], "symbols_per_slide": [], "early_stopped": True}

    # CN-major edge order makes every window's CN range one contiguous slice
    cn_pos_edges = pos_cn[graph.edge_cn]

    last_w0 = max(L - W + 1, 1)
    for w0 in range(1, last_w0 + 1):
        final = w0 == last_w0
        we = L if final else min(w0 + W - 1, L)
        v_lo, v_hi = (w0 - 1) * N, we * N
        vb_lo = max(w0 - 1 - m_cpl, 0) * N
        # CNs at positions > we (non-final) touch future VNs and stay outside
        cn_hi = we + m_cpl + 1 if final else we + 1
        e_lo, e_hi = np.searchsorted(cn_pos_edges, [w0, cn_hi])
        evn = graph.edge_vn[e_lo:e_hi]
        ecn = graph.edge_cn[e_lo:e_hi]
        mcv_w = m_cv[e_lo:e_hi]
        evn_l = np.ascontiguousarray(evn - vb_lo, dtype=np.int32)
        c_base = int(ecn[0]) if len(ecn) else 0
        ecn_l = np.ascontiguousarray(ecn - c_base, dtype=np.int32)
        n_cn_l = (int(ecn[-1]) - c_base + 1) if len(ecn) else 0

        det_l = np.empty(v_hi - vb_lo)
        pin = np.where(hard[vb_lo:v_lo] == 0, _PIN, -_PIN)

        yw = y[v_lo: len(y) if final else v_hi]
        if v_lo >= nu:
            left_bits = hard[v_lo - nu:v_lo]
        else:
            left_bits = np.concatenate([np.zeros(nu - v_lo, dtype=np.uint8), hard[:v_lo]])
        init_state = 0
        for i in range(1, nu + 1):
            init_state |= int(left_bits[nu - i]) << (i - 1)
        prefix_symbols = 1.0 - 2.0 * left_bits.astype(np.float64)

        stats["symbols_per_slide"].append(len(yw))
        for outer in range(schedule.outer_iters):
            apri = det_llr[v_lo:v_hi] + np.bincount(
                evn_l, weights=mcv_w, minlength=v_hi - vb_lo)[v_lo - vb_lo:]
            np.clip(apri, -schedule.cap, schedule.cap, out=apri)
            det_llr[v_lo:v_hi] = detector(
                yw, apri, sigma, init_state=init_state, final_known=final,
                prefix_symbols=prefix_symbols, cap=schedule.cap)

            det_l[:v_lo - vb_lo] = pin
            det_l[v_lo - vb_lo:] = det_llr[v_lo:v_hi]
            for _ in range(schedule.inner_iters):
                _kernels.bp_iterate(evn_l, ecn_l, mcv_w, det_l, n_cn_l, schedule.cap)

            totals = det_llr[v_lo:v_hi] + np.bincount(
                evn_l, weights=mcv_w, minlength=v_hi - vb_lo)[v_lo - vb_lo:]
            hard[v_lo:v_hi] = (totals < 0).astype(np.uint8)
            syn = _window_syndrome(evn_l, ecn_l, hard[vb_lo:v_hi], n_cn_l)
            row = {"slide": w0, "round": outer + 1,
                   "mean_abs_llr": float(np.abs(totals).mean()),
                   "syndrome_weight": int(syn)}
            if truth is not None:
                row["raw_ber"] = float(np.mean(hard[v_lo:v_hi] != truth[v_lo:v_hi]))
            stats["rounds"].append(row)
            if schedule.early_stop and syn == 0:
                break
        else:
            stats["early_stopped"] = False

        commit_hi = v_hi if final else v_lo + N
        committed[v_lo:commit_hi] = True

    stats["outer_rounds_used"] = len(stats["rounds"])
    return hard.copy(), stats


def _window_syndrome(evn_l, ecn_l, bits_local, n_cn):
    par = np.bincount(ecn_l, weights=bits_local[evn_l].astype(np.float64),
                      minlength=n_cn)
    return int(np.sum(par.astype(np.int64) & 1))
