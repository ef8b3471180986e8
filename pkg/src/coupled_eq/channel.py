"""BPSK over discrete-time ISI channels with AWGN.

Transmit pipeline: bits -> BPSK symbols -> FIR filtering by a unit-norm
impulse response -> additive white Gaussian noise. SNR bookkeeping treats the
filtered signal energy E_z as exactly 1, so sigma^2 = 1/(2 R 10^(g/10)) for
Eb/N0 = g dB at code rate R.

Blocks append nu known (+1) termination symbols so the detector trellis
starts and ends in a known state; the filter itself emits no tail.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ImpulseResponse:
    taps: tuple

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps or taps[0] == 0.0:
            raise ValueError("first tap must be nonzero")
        norm = math.sqrt(sum(t * t for t in taps))
        # 1e-3 slack accepts taps quoted to three decimals
        if abs(norm - 1.0) > 1e-3:
            raise ValueError(f"taps must have unit norm, got ||h|| = {norm:.6f}")

    @property
    def memory(self):
        return len(self.taps) - 1


STANDARD_CHANNELS = {
    "ch1": ImpulseResponse((0.7071, -0.7071)),
    "ch2": ImpulseResponse((0.408, 0.816, 0.408)),
    "ch3": ImpulseResponse((0.227, 0.46, 0.688, 0.46, 0.227)),
}


def standard_channel(name):
    try:
        return STANDARD_CHANNELS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown channel {name!r}; have ch1, ch2, ch3") from None


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_ebn0(cls, eb_n0_db, rate):
        return cls(ebn0_to_sigma(eb_n0_db, rate))


def bpsk_map(bits):
    """0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def isi_filter(x, h, initial_state=None):
    """z_t = sum_i h_i x_{t-i}; left context from initial_state (default all +1).

    initial_state holds the nu symbols before x in transmission order
    (initial_state[-1] immediately precedes x[0]). Output length equals the
    input length: no convolution tail is emitted.
    """
    x = np.asarray(x, dtype=np.float64)
    taps = np.asarray(h.taps)
    nu = h.memory
    if initial_state is None:
        initial_state = np.ones(nu)
    initial_state = np.asarray(initial_state, dtype=np.float64)
    if initial_state.shape != (nu,):
        raise ValueError(f"initial_state must have length {nu}")
    ext = np.concatenate([initial_state, x])
    return np.convolve(ext, taps)[nu : nu + len(x)]


def ebn0_to_sigma(eb_n0_db, rate):
    """Noise std per real sample for Eb/N0 given in dB at code rate R (E_z = 1)."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    sigma2 = 1.0 / (2.0 * rate * 10.0 ** (eb_n0_db / 10.0))
    return math.sqrt(sigma2)


def ezn0_db_from_ebn0(eb_n0_db, rate):
    """E_z/N0 in dB: shifts Eb/N0 by 10log10(R)."""
    return eb_n0_db + 10.0 * math.log10(rate)


def sigma_from_ezn0(ez_n0_db):
    """Noise std from E_z/N0 in dB (N0 = 2 sigma^2, E_z = 1)."""
    return math.sqrt(1.0 / (2.0 * 10.0 ** (ez_n0_db / 10.0)))


def awgn(z, sigma, rng):
    z = np.asarray(z, dtype=np.float64)
    return z + rng.normal(0.0, sigma, size=z.shape)


def transmit(bits, h, sigma, rng, initial_state=None):
    """Full pipeline for one block: append nu zero termination bits, map,
    filter, add noise. Returns (y, x) with len(y) = len(bits) + nu."""
    nu = h.memory
    bits = np.asarray(bits)
    full = np.concatenate([bits, np.zeros(nu, dtype=bits.dtype)])
    x = bpsk_map(full)
    z = isi_filter(x, h, initial_state=initial_state)
    return awgn(z, sigma, rng), x
