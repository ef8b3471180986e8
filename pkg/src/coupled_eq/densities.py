"""Monte-Carlo density evolution for the detector/decoder loop.

Message densities are sample populations under the coset convention:
simulation runs with random transmitted bits and every stored LLR is
sign-adjusted as if the transmitted bit were 0, so positive mass means
reliability and the negative-sign fraction is the residual error proxy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .channel import ebn0_to_sigma, transmit
from .ensembles import design_rate, edge_to_node
from .llrops import LLR_CAP, MAG_FLOOR, boxplus_fold, clip_llr, phi

__all__ = [
    "LlrDensity",
    "DeConfig",
    "detector_transfer",
    "vn_update",
    "cn_update",
    "vn_to_detector",
    "vn_total",
    "de_run_uncoupled",
    "de_run_coupled",
    "threshold_search",
    "uncoupled_threshold",
    "coupled_threshold",
]


@dataclass
class LlrDensity:
    """Population of LLR samples representing one message density."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D array")

    @classmethod
    def zeros(cls, population):
        return cls(np.zeros(population))

    @classmethod
    def perfect(cls, population, cap=LLR_CAP):
        return cls(np.full(population, float(cap)))

    @property
    def population(self):
        return self.samples.size

    def error_fraction(self):
        """Sign-error proxy: P(L < 0) + P(L = 0)/2."""
        s = self.samples
        return float(((s < 0).sum() + 0.5 * (s == 0).sum()) / s.size)

    def draw(self, rng, size):
        """i.i.d. resample of the population."""
        return self.samples[rng.integers(0, self.samples.size, size=size)]


@dataclass
class DeConfig:
    """Knobs for a density-evolution run.

    population is the sample count per density (use >= 1e4 for reported
    thresholds). inner_iters is the number of decoder rounds per detector
    round, matching the receiver schedule. chain_len and coupling apply to
    coupled runs only. A run is declared stuck when the mean error proxy
    improves by less than stall_tol over stall_window detector rounds.
    """

    population: int = 100_000
    block_len: int = 10_000
    inner_iters: int = 30
    max_rounds: int = 2000
    eps_err: float = 1e-5
    delta_db: float = 0.02
    chain_len: int = 100
    coupling: int = 0
    cap: float = LLR_CAP
    stall_window: int = 40
    stall_tol: float = 5e-3

    def __post_init__(self):
        if self.population < 1 or self.block_len < 1:
            raise ValueError("population and block_len must be positive")
        if self.inner_iters < 1 or self.max_rounds < 1:
            raise ValueError("iteration counts must be positive")
        if not 0.0 < self.delta_db <= 0.5:
            raise ValueError("delta_db out of range")
        if self.chain_len < 1 or self.coupling < 0:
            raise ValueError("bad chain geometry")
        if self.eps_err <= 0 or self.cap <= 0:
            raise ValueError("eps_err and cap must be positive")


def _degree_table(dist):
    degs = np.array(sorted(dist), dtype=np.int64)
    probs = np.array([dist[int(i)] for i in degs], dtype=np.float64)
    return degs, probs / probs.sum()


def _draw_degrees(rng, dist, size):
    degs, probs = _degree_table(dist)
    if degs.size == 1:
        return np.full(size, degs[0], dtype=np.int64)
    return degs[rng.choice(degs.size, size=size, p=probs)]


def _add_draws(out, src, counts, rng):
    """out[k] += sum of counts[k] i.i.d. draws from src, in place."""
    n = src.size
    for k in range(1, int(counts.max()) + 1):
        mask = counts >= k
        out[mask] += src[rng.integers(0, n, size=int(mask.sum()))]


def detector_transfer(density_in, sigma, h, detector, rng, block_len=10_000,
                      cap=LLR_CAP):
    """Push a prior density through one detector activation.

    Simulates ceil(P / block_len) independent blocks: random bits through
    the channel, a-priori LLRs drawn i.i.d. from density_in and
    sign-adjusted to the transmitted bits, then the detector extrinsic
    pooled (sign-adjusted back) into a population of the same size.
    """
    P = density_in.population
    n_blocks = -(-P // block_len)
    pool = np.empty(n_blocks * block_len)
    for b in range(n_blocks):
        bits = rng.integers(0, 2, size=block_len)
        y, _ = transmit(bits, h, sigma, rng)
        sign = 1.0 - 2.0 * bits
        la = density_in.draw(rng, block_len) * sign
        le = detector(y, la, sigma, cap=cap)
        pool[b * block_len : (b + 1) * block_len] = le * sign
    return LlrDensity(clip_llr(pool[:P], cap))


def vn_update(det_density, cn_density, lam, rng, cap=LLR_CAP):
    """Edge message out of a VN: one detector sample plus degree-1 cn
    samples, with the degree drawn from the edge perspective."""
    P = det_density.population
    if cn_density.population != P:
        raise ValueError("population mismatch")
    deg = _draw_degrees(rng, lam, P)
    out = det_density.draw(rng, P)
    _add_draws(out, cn_density.samples, deg - 1, rng)
    return LlrDensity(clip_llr(out, cap))


def cn_update(vn_density, rho, rng, cap=LLR_CAP):
    """Edge message out of a CN: box-plus of degree-1 vn samples, with the
    degree drawn from the edge perspective."""
    P = vn_density.population
    deg = _draw_degrees(rng, rho, P)
    out = np.empty(P)
    for j in np.unique(deg):
        j = int(j)
        mask = deg == j
        c = int(mask.sum())
        if j <= 2:
            # single operand: identity, skip the transform round trip
            out[mask] = vn_density.draw(rng, c)
        else:
            out[mask] = boxplus_fold(vn_density.draw(rng, (c, j - 1)),
                                     axis=1, cap=cap)
    return LlrDensity(clip_llr(out, cap))


def vn_to_detector(cn_density, lam, rng, cap=LLR_CAP):
    """Prior density handed back to the detector: sum of all cn messages at
    a node, with the degree drawn from the node perspective of lam."""
    P = cn_density.population
    deg = _draw_degrees(rng, edge_to_node(lam), P)
    out = np.zeros(P)
    _add_draws(out, cn_density.samples, deg, rng)
    return LlrDensity(clip_llr(out, cap))


def vn_total(det_density, cn_density, lam, rng, cap=LLR_CAP):
    """A-posteriori density at a node: detector sample plus all cn
    messages, with the degree drawn from the node perspective of lam."""
    P = det_density.population
    if cn_density.population != P:
        raise ValueError("population mismatch")
    deg = _draw_degrees(rng, edge_to_node(lam), P)
    out = det_density.draw(rng, P)
    _add_draws(out, cn_density.samples, deg, rng)
    return LlrDensity(clip_llr(out, cap))


def _stalled(errs, cfg):
    w = cfg.stall_window
    if len(errs) < 2 * w:
        return False
    if errs[-1] < 50.0 * cfg.eps_err:
        return False  # nearly there, let the cap decide
    recent = float(np.mean(errs[-w:]))
    prior = float(np.mean(errs[-2 * w : -w]))
    return recent > prior * (1.0 - cfg.stall_tol)


def de_run_uncoupled(dd, h, detector, gamma_db, cfg, seed=0):
    """Evolve the uncoupled ensemble dd at Eb/N0 = gamma_db.

    Returns (converged, trajectory); the trajectory holds one row per
    detector round with the error proxy of the a-posteriori density.
    """
    rng = np.random.default_rng(seed)
    sigma = ebn0_to_sigma(gamma_db, design_rate(dd))
    P = cfg.population
    vn2det = LlrDensity.zeros(P)
    cn_d = LlrDensity.zeros(P)
    traj = []
    for rnd in range(1, cfg.max_rounds + 1):
        det_d = detector_transfer(vn2det, sigma, h, detector, rng,
                                  block_len=cfg.block_len, cap=cfg.cap)
        for _ in range(cfg.inner_iters):
            vmsg = vn_update(det_d, cn_d, dd.lam, rng, cap=cfg.cap)
            cn_d = cn_update(vmsg, dd.rho, rng, cap=cfg.cap)
        vn2det = vn_to_detector(cn_d, dd.lam, rng, cap=cfg.cap)
        err = vn_total(det_d, cn_d, dd.lam, rng, cap=cfg.cap).error_fraction()
        traj.append({"round": rnd, "error": err})
        if err < cfg.eps_err:
            return True, traj
        if _stalled([row["error"] for row in traj], cfg):
            return False, traj
    return False, traj


def _coupled_vn_pass(vmsg_pad, det_d, cn_d, lam, m, frozen, rng, cap):
    """Fill vmsg_pad rows m..m+L-1 with per-position VN edge messages.

    Position t draws each cn operand from a uniformly random position in
    t..t+m. Frozen rows are exactly saturated and skipped.
    """
    L, P = det_d.shape
    act = np.flatnonzero(~frozen)
    if act.size == 0:
        return
    rows = act[:, None]
    deg = _draw_degrees(rng, lam, (act.size, P))
    out = det_d[rows, rng.integers(0, P, size=(act.size, P))]
    for k in range(1, int(deg.max())):
        mask = deg - 1 >= k
        src = rows + rng.integers(0, m + 1, size=(act.size, P))
        val = cn_d[src, rng.integers(0, P, size=(act.size, P))]
        out[mask] += val[mask]
    np.clip(out, -cap, cap, out=out)
    vmsg_pad[m + act] = out


def _coupled_cn_pass(cn_d, vmsg_pad, rho, m, frozen_pad, rng, cap):
    """Per-position CN edge messages; position tau draws each vn operand
    from a uniformly random position in tau-m..tau (pad rows are the
    perfect termination). Accumulates through the phi transform."""
    n_cn, P = cn_d.shape
    sat = np.array([frozen_pad[i : i + m + 1].all() for i in range(n_cn)])
    cn_d[sat] = cap
    act = np.flatnonzero(~sat)
    if act.size == 0:
        return
    rows = act[:, None]
    deg = _draw_degrees(rng, rho, (act.size, P))
    acc = np.zeros((act.size, P))
    neg = np.zeros((act.size, P), dtype=bool)
    for k in range(int(deg.max()) - 1):
        mask = deg - 1 >= k + 1
        src = rows + m - rng.integers(0, m + 1, size=(act.size, P))
        val = vmsg_pad[src, rng.integers(0, P, size=(act.size, P))]
        mag = np.clip(np.abs(val[mask]), MAG_FLOOR, cap)
        acc[mask] += phi(mag)
        neg[mask] ^= val[mask] < 0
    out = phi(np.clip(acc, 1e-300, None))
    np.clip(out, None, cap, out=out)
    cn_d[act] = np.where(neg, -out, out)


def _coupled_node_mix(cn_d, lam_node, m, act, rng, P, cap, base=None):
    """Node-perspective mixture for the active positions: optional detector
    base sample plus all-degree cn samples drawn from offsets 0..m."""
    rows = act[:, None]
    if base is None:
        out = np.zeros((act.size, P))
    else:
        out = base[rows, rng.integers(0, P, size=(act.size, P))]
    deg = _draw_degrees(rng, lam_node, (act.size, P))
    for k in range(1, int(deg.max()) + 1):
        mask = deg >= k
        src = rows + rng.integers(0, m + 1, size=(act.size, P))
        val = cn_d[src, rng.integers(0, P, size=(act.size, P))]
        out[mask] += val[mask]
    return np.clip(out, -cap, cap)


def _freeze_saturated(frozen, vmsg_pad, cn_d, vn2det, m, cap):
    """Mark positions whose whole coupling neighborhood is saturated.

    With minimum VN degree >= 3 such a position emits exactly-cap messages
    forever (cap + anything clips back to cap), so it can be skipped.
    """
    L = frozen.size
    vn_sat = vmsg_pad.min(axis=1) >= cap
    cn_sat = cn_d.min(axis=1) >= cap
    for t in range(L):
        if not frozen[t] and vn_sat[t : t + 2 * m + 1].all() \
                and cn_sat[t : t + m + 1].all():
            frozen[t] = True
            vn2det[t] = cap


def de_run_coupled(dd, h, detector, gamma_db, cfg, seed=0):
    """Evolve a coupled chain of cfg.chain_len positions with coupling
    memory cfg.coupling.

    One density per position: a VN at position t mixes cn densities from
    positions t..t+m, a CN at position tau mixes vn messages from
    tau-m..tau, and positions outside the chain are perfect (termination).
    Returns (converged, trajectory) with one per-position error row per
    detector round; converged means every position fell below eps_err.
    """
    rng = np.random.default_rng(seed)
    sigma = ebn0_to_sigma(gamma_db, design_rate(dd))
    P, L, m, cap = cfg.population, cfg.chain_len, cfg.coupling, cfg.cap
    lam_node = edge_to_node(dd.lam)
    can_freeze = min(dd.lam) >= 3

    vn2det = np.zeros((L, P))
    cn_d = np.zeros((L + m, P))
    det_d = np.empty((L, P))
    frozen = np.zeros(L, dtype=bool)
    traj = []
    for rnd in range(1, cfg.max_rounds + 1):
        for t in range(L):
            if frozen[t]:
                det_d[t] = cap
                continue
            dens = detector_transfer(LlrDensity(vn2det[t]), sigma, h,
                                     detector, rng, block_len=cfg.block_len,
                                     cap=cap)
            det_d[t] = dens.samples
        vmsg_pad = np.full((L + 2 * m, P), float(cap))
        frozen_pad = np.concatenate([np.ones(m, dtype=bool), frozen,
                                     np.ones(m, dtype=bool)])
        for _ in range(cfg.inner_iters):
            _coupled_vn_pass(vmsg_pad, det_d, cn_d, dd.lam, m, frozen, rng,
                             cap)
            _coupled_cn_pass(cn_d, vmsg_pad, dd.rho, m, frozen_pad, rng, cap)
        act = np.flatnonzero(~frozen)
        if act.size:
            vn2det[act] = _coupled_node_mix(cn_d, lam_node, m, act, rng, P,
                                            cap)
            totals = _coupled_node_mix(cn_d, lam_node, m, act, rng, P, cap,
                                       base=det_d)
            errs_act = (totals < 0).mean(axis=1) \
                + 0.5 * (totals == 0).mean(axis=1)
        errs = np.zeros(L)
        if act.size:
            errs[act] = errs_act
        traj.append({"round": rnd, "errors": errs})
        if (errs < cfg.eps_err).all():
            return True, traj
        if can_freeze:
            _freeze_saturated(frozen, vmsg_pad, cn_d, vn2det, m, cap)
        if _stalled([float(r["errors"].mean()) for r in traj], cfg):
            return False, traj
    return False, traj


def threshold_search(run_probe, lo_db, hi_db, cfg, widen_step=1.0,
                     max_widen=4):
    """Bisect the smallest gamma_db at which run_probe converges.

    run_probe(gamma_db) -> (converged, trajectory). lo_db should fail and
    hi_db converge; a bracket that does not straddle is widened up to
    max_widen steps per side and the outcome reported either way. Returns
    the midpoint estimate, the final bracket, and the full probe history.
    """
    probes = []

    def probe(g):
        t0 = time.perf_counter()
        conv, traj = run_probe(g)
        probes.append({"gamma_db": float(g), "converged": bool(conv),
                       "rounds": len(traj),
                       "seconds": time.perf_counter() - t0})
        return conv

    widened = False
    lo, hi = float(lo_db), float(hi_db)
    lo_conv = probe(lo)
    tries = 0
    while lo_conv and tries < max_widen:
        lo -= widen_step
        lo_conv = probe(lo)
        widened = True
        tries += 1
    hi_conv = probe(hi)
    tries = 0
    while not hi_conv and tries < max_widen:
        hi += widen_step
        hi_conv = probe(hi)
        widened = True
        tries += 1
    if lo_conv or not hi_conv:
        return {"gamma_star_db": None, "lo_db": lo, "hi_db": hi,
                "bracket_ok": False, "widened": widened, "probes": probes}
    while hi - lo > cfg.delta_db:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return {"gamma_star_db": 0.5 * (lo + hi), "lo_db": lo, "hi_db": hi,
            "bracket_ok": True, "widened": widened, "probes": probes}


def uncoupled_threshold(dd, h, detector, cfg, lo_db, hi_db, seed=0, **kw):
    """Threshold of the uncoupled ensemble. The same seed is reused at
    every probe (common random numbers keep the boundary monotone)."""

    def run(g):
        return de_run_uncoupled(dd, h, detector, g, cfg, seed=seed)

    return threshold_search(run, lo_db, hi_db, cfg, **kw)


def coupled_threshold(dd, h, detector, cfg, lo_db, hi_db, seed=0, **kw):
    """Threshold of the coupled chain described by cfg (common random
    numbers across probes, as in uncoupled_threshold)."""

    def run(g):
        return de_run_coupled(dd, h, detector, g, cfg, seed=seed)

    return threshold_search(run, lo_db, hi_db, cfg, **kw)
