"""EXIT analysis on the symmetric-Gaussian entropy scale.

A consistent Gaussian LLR density with mean mu has variance 2*mu; its
bit entropy is psi(mu) = E[log2(1 + exp(-L))]. psi is evaluated through
a piecewise fit of the complementary mutual-information function J(sigma)
with sigma = sqrt(2*mu), patched so the fit is continuous and monotone;
the inverse is a vectorized bisection, so the pair round-trips to 1e-6
over the working entropy range.

Detector transfer curves are measured by Monte Carlo and compressed to a
cubic in the a-priori entropy. Code-side curves follow from the degree
distributions in closed form. The signed area between the check curve
and the combined variable-node/detector curve crosses zero at the
matching threshold, located here by bisection over Eb/N0.
"""

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .channel import ezn0_db_from_ebn0, sigma_from_ezn0, transmit
from .detectors import make_detector
from .ensembles import design_rate, edge_to_node
from .llrops import LLR_CAP, clip_llr

# entropy is treated as exactly zero at this density mean and beyond
MU_MAX = 50.0

# cubic fit of J(sigma) below the seam, exponential fit above it
_SIGMA_SEAM = 1.6363
_J_LO = (-0.00640081, 0.209252, -0.0421061)  # sigma * (c + sigma * (b + sigma * a))
_J_HI = (0.0549608, -0.0822054, -0.142675, 0.00181491)  # 1 - exp(poly(sigma))
_SIGMA_TOP = 10.0

_LN2 = float(np.log(2.0))


def _j_fit(sigma):
    """Piecewise J(sigma), clamped to [0, 1], continuous, nondecreasing.

    The two polynomial branches disagree by ~7e-4 at the seam and the
    upper branch reaches 1 only asymptotically; taking the running max
    against the seam value and saturating at sigma >= 10 removes both
    defects at the cost of two flat patches far narrower than the fit
    error itself.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    c, b, a = _J_LO
    lo = sigma * (c + sigma * (b + sigma * a))
    seam = _SIGMA_SEAM * (c + _SIGMA_SEAM * (b + _SIGMA_SEAM * a))
    d2, c2, b2, a2 = _J_HI
    s = np.minimum(sigma, _SIGMA_TOP)  # keep exp() in range for huge inputs
    hi = 1.0 - np.exp(d2 + s * (c2 + s * (b2 + s * a2)))
    out = np.where(sigma <= _SIGMA_SEAM, lo, np.maximum(hi, seam))
    out = np.where(sigma >= _SIGMA_TOP, 1.0, out)
    return np.clip(out, 0.0, 1.0)


def psi(mu):
    """Entropy of the consistent Gaussian LLR density with mean mu >= 0."""
    arr = np.asarray(mu, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("density mean must be nonnegative")
    out = 1.0 - _j_fit(np.sqrt(2.0 * arr))
    return out if arr.ndim else float(out)


def psi_inv(h, iters=64):
    """Density mean with entropy h, for h in (0, 1]; bisection on [0, MU_MAX]."""
    arr = np.asarray(h, dtype=np.float64)
    if np.any((arr <= 0.0) | (arr > 1.0)):
        raise ValueError("entropy must lie in (0, 1]")
    lo = np.zeros(arr.shape)
    hi = np.full(arr.shape, MU_MAX)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        left = psi(mid) >= arr  # crossing sits at or right of mid
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    out = np.where(arr == 1.0, 0.0, 0.5 * (lo + hi))
    return out if arr.ndim else float(out)


def _mu_of(h):
    """Density mean for entropy h in [0, 1]; h = 0 saturates at MU_MAX."""
    arr = np.atleast_1d(np.asarray(h, dtype=np.float64))
    out = np.full(arr.shape, MU_MAX)
    pos = arr > 0.0
    if pos.any():
        out[pos] = psi_inv(arr[pos])
    return out


@dataclass(frozen=True)
class DetectorExitFit:
    """Cubic fit of a detector's extrinsic entropy vs a-priori entropy."""

    channel_taps: tuple
    detector: str
    ezn0_db: float
    coeffs: tuple  # ascending powers, c0..c3
    residual_rms: float
    grid: tuple
    measured: tuple

    def __call__(self, h_a):
        c0, c1, c2, c3 = self.coeffs
        x = np.asarray(h_a, dtype=np.float64)
        out = c0 + x * (c1 + x * (c2 + x * c3))
        return out if x.ndim else float(out)


# fit must track the measured points this closely at the reference sample
# count; sparser sampling loosens the gate by the Monte Carlo noise ratio
FIT_RMS_TOL = 5e-3
FIT_REF_SAMPLES = 200_000


def _cache_path(cache_dir, key):
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:20]
    return os.path.join(cache_dir, "exit_%s.json" % digest)


def measure_detector_exit(
    channel,
    kind,
    ezn0_db,
    grid=None,
    samples_per_point=200_000,
    block_len=10_000,
    seed=0,
    cache_dir=None,
):
    """Monte Carlo transfer curve of a detector at one operating point.

    For each a-priori entropy on the grid, random symbols cross the
    channel at the given Ez/N0 while the detector receives consistent
    Gaussian priors of matching entropy; the mean extrinsic entropy
    E[log2(1 + exp(-L * s))] is recorded and the curve is least-squares
    fit by a cubic. Results are cached as JSON when a cache directory is
    given (or the COUPLED_EQ_EXIT_CACHE environment variable is set).
    """
    if grid is None:
        grid = np.linspace(0.0, 1.0, 21)
    grid = np.asarray(grid, dtype=np.float64)
    if cache_dir is None:
        cache_dir = os.environ.get("COUPLED_EQ_EXIT_CACHE")
    key = {
        "taps": [repr(t) for t in channel.taps],
        "kind": kind,
        "ezn0_db": round(float(ezn0_db), 9),
        "grid": [round(float(g), 9) for g in grid],
        "samples": int(samples_per_point),
        "block": int(block_len),
        "seed": int(seed),
    }
    if cache_dir:
        path = _cache_path(cache_dir, key)
        if os.path.exists(path):
            with open(path) as fh:
                saved = json.load(fh)
            return DetectorExitFit(
                channel_taps=tuple(channel.taps),
                detector=kind,
                ezn0_db=float(ezn0_db),
                coeffs=tuple(saved["coeffs"]),
                residual_rms=saved["residual_rms"],
                grid=tuple(grid),
                measured=tuple(saved["measured"]),
            )

    detect = make_detector(kind, channel)
    sigma = sigma_from_ezn0(ezn0_db)
    rng = np.random.default_rng(seed)
    mu_a = _mu_of(grid)
    measured = np.empty(grid.size)
    for g, mu in enumerate(mu_a):
        total = 0.0
        count = 0
        while count < samples_per_point:
            bits = rng.integers(0, 2, size=block_len, dtype=np.uint8)
            y, x = transmit(bits, channel, sigma, rng)
            la = mu + np.sqrt(2.0 * mu) * rng.standard_normal(x.size)
            la = clip_llr(la * x, LLR_CAP)
            le = detect(y, la, sigma)
            total += float((np.logaddexp(0.0, -le * x) / _LN2).sum())
            count += x.size
        measured[g] = total / count
    coeffs = npoly.polyfit(grid, measured, 3)
    resid = float(np.sqrt(np.mean((npoly.polyval(grid, coeffs) - measured) ** 2)))
    tol = FIT_RMS_TOL * max(1.0, np.sqrt(FIT_REF_SAMPLES / samples_per_point))
    if resid > tol:
        raise RuntimeError(
            "cubic fit residual %.2e exceeds %.1e; transfer curve is not smooth"
            % (resid, tol)
        )
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        tmp = path + ".tmp.%d" % os.getpid()
        with open(tmp, "w") as fh:
            json.dump(
                {
                    "key": key,
                    "coeffs": list(coeffs),
                    "residual_rms": resid,
                    "measured": list(measured),
                },
                fh,
                indent=1,
            )
        os.replace(tmp, path)
    return DetectorExitFit(
        channel_taps=tuple(channel.taps),
        detector=kind,
        ezn0_db=float(ezn0_db),
        coeffs=tuple(float(c) for c in coeffs),
        residual_rms=resid,
        grid=tuple(grid),
        measured=tuple(measured),
    )


def hg_curve(rho, v):
    """Check-side transfer: edge entropy out of CNs at VN-side entropy v.

    Identity for rho = {2: 1} since a degree-2 CN forwards its one other
    input unchanged on the entropy scale.
    """
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    mu = _mu_of(1.0 - arr)
    acc = np.zeros(arr.shape)
    for j, frac in rho.items():
        acc += frac * psi((j - 1) * mu)
    out = 1.0 - acc
    return out if np.asarray(v).ndim else float(out[0])


def hf_curve(lam, det_fit, u):
    """Combined VN/detector transfer: edge entropy out of VNs at CN-side u.

    The detector's a-priori entropy is the node-perspective average of
    the VN-to-detector messages (i CN inputs at a degree-i node); its
    extrinsic entropy then joins i - 1 CN inputs on each outgoing edge.
    """
    arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    mu_u = _mu_of(arr)
    prior = np.zeros(arr.shape)
    for i, frac in edge_to_node(lam).items():
        prior += frac * psi(i * mu_u)
    h_det = np.clip(det_fit(prior), 1e-9, 1.0)
    mu_det = _mu_of(h_det)
    out = np.zeros(arr.shape)
    for i, frac in lam.items():
        out += frac * psi((i - 1) * mu_u + mu_det)
    return out if np.asarray(u).ndim else float(out[0])


def net_exit_area(dd, det_fit, grid_n=1001):
    """Signed area between the inverted check curve and the VN/detector curve.

    Positive means the decoding tunnel is open everywhere on average;
    the matching threshold is the SNR where this crosses zero.
    """
    vs = np.linspace(0.0, 1.0, grid_n)
    gs = hg_curve(dd.rho, vs)
    us = np.linspace(0.0, 1.0, grid_n)
    ginv = np.interp(us, gs, vs)
    hf = hf_curve(dd.lam, det_fit, us)
    return float(np.trapezoid(ginv - hf, us))


def area_threshold(
    dd,
    channel,
    kind,
    lo_db,
    hi_db,
    tol_db=0.02,
    grid_n=1001,
    samples_per_point=200_000,
    seed=0,
    cache_dir=None,
):
    """Bisect Eb/N0 for zero net area between the two transfer curves.

    The bracket must straddle the sign change (negative area at lo_db,
    positive at hi_db) or a ValueError is raised. Every probe reuses the
    same seed so the area is a deterministic, monotone function of SNR
    up to Monte Carlo noise; the probe record notes any inversion.
    """
    rate = design_rate(dd)
    probes = []

    def net_area(gamma_db):
        fit = measure_detector_exit(
            channel,
            kind,
            ezn0_db_from_ebn0(gamma_db, rate),
            samples_per_point=samples_per_point,
            seed=seed,
            cache_dir=cache_dir,
        )
        area = net_exit_area(dd, fit, grid_n)
        probes.append({"gamma_db": float(gamma_db), "area": area})
        return area

    a_lo = net_area(lo_db)
    a_hi = net_area(hi_db)
    if not (a_lo < 0.0 < a_hi):
        raise ValueError(
            "net area does not change sign on [%.3f, %.3f] dB: %.3e, %.3e"
            % (lo_db, hi_db, a_lo, a_hi)
        )
    lo, hi = float(lo_db), float(hi_db)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if net_area(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    ordered = sorted(probes, key=lambda p: p["gamma_db"])
    monotone = all(
        a["area"] <= b["area"] for a, b in zip(ordered, ordered[1:])
    )
    return {
        "gamma_star_db": 0.5 * (lo + hi),
        "lo_db": lo,
        "hi_db": hi,
        "monotone": monotone,
        "probes": probes,
    }
