"""Shared LLR arithmetic: clipping, the check-node phi transform, box-plus.

Convention throughout: L = log(P(bit=0)/P(bit=1)), bit 0 maps to symbol +1.
"""

import numpy as np

LLR_CAP = 50.0
# smallest magnitude fed to phi; phi(1e-12) ~ 28.3 keeps exp() comfortably finite
MAG_FLOOR = 1e-12


def clip_llr(x, cap=LLR_CAP):
    return np.clip(x, -cap, cap)


def phi(mag):
    """Gallager involution phi(x) = ln((e^x+1)/(e^x-1)), elementwise, x > 0.

    Self-inverse; stable for x in [1e-12, ~700] via exp(-x) and log1p.
    """
    t = np.exp(-np.asarray(mag, dtype=np.float64))
    with np.errstate(divide="ignore"):
        return np.log1p(t) - np.log1p(-t)


def boxplus(a, b, cap=LLR_CAP):
    """Exact pairwise box-plus with the min + log1p correction form."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mags = np.minimum(np.abs(a), np.abs(b))
    out = np.sign(a) * np.sign(b) * mags
    out = out + np.log1p(np.exp(-(np.abs(a) + np.abs(b))))
    out = out - np.log1p(np.exp(-np.abs(np.abs(a) - np.abs(b))))
    return np.clip(out, -cap, cap)


def boxplus_fold(arr, axis=-1, cap=LLR_CAP):
    """Box-plus reduction along an axis via the phi transform.

    Sign is the product of signs (zeros count as +); magnitude is
    phi(sum phi(|x_k|)). Exact up to rounding; result clipped to +-cap.
    """
    arr = np.asarray(arr, dtype=np.float64)
    mag = np.clip(np.abs(arr), MAG_FLOOR, cap)
    total = phi(mag).sum(axis=axis)
    neg = (arr < 0).sum(axis=axis) % 2
    out = phi(np.clip(total, 1e-300, None))
    np.clip(out, None, cap, out=out)
    return np.where(neg == 1, -out, out)
