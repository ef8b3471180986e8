"""ISI channel trellis for BCJR detection.

State encodes the previous nu inputs as bits (most recent input in the low
bit), so state s = sum_i bit(v_{t-i}) 2^(i-1) and the transition on input bit
b is s' = ((s << 1) | b) & (2^nu - 1). Each transition emits the noiseless
channel level for that input/history pair.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IsiTrellis:
    num_states: int
    next_state: np.ndarray   # (S, 2) int32, indexed by input bit
    levels: np.ndarray       # (S, 2) float64 noiseless output per transition
    prev_state: np.ndarray   # (S, 2) int32 source states of the two incoming transitions
    prev_bit: np.ndarray     # (S, 2) int32 input bits of those transitions


def build_trellis(h):
    nu = h.memory
    if nu > 16:
        raise ValueError(f"channel memory {nu} too large for a table trellis")
    S = 1 << nu
    mask = S - 1
    taps = np.asarray(h.taps)

    states = np.arange(S, dtype=np.int64)
    # symbol value of history position i (1-based lag): +1 for bit 0
    hist = np.empty((S, nu))
    for i in range(1, nu + 1):
        hist[:, i - 1] = 1.0 - 2.0 * ((states >> (i - 1)) & 1)

    next_state = np.empty((S, 2), dtype=np.int32)
    levels = np.empty((S, 2))
    for b in (0, 1):
        next_state[:, b] = ((states << 1) | b) & mask
        levels[:, b] = taps[0] * (1.0 - 2.0 * b)
        if nu:
            levels[:, b] += hist @ taps[1:]

    prev_state = np.empty((S, 2), dtype=np.int32)
    prev_bit = np.empty((S, 2), dtype=np.int32)
    if nu:
        # incoming transitions carry the state's low bit as input and differ
        # in the history bit shifted out at the top
        prev_state[:, 0] = states >> 1
        prev_state[:, 1] = (states >> 1) | (1 << (nu - 1))
        prev_bit[:, 0] = states & 1
        prev_bit[:, 1] = states & 1
    else:
        prev_state[:] = 0
        prev_bit[0] = (0, 1)

    for arr in (next_state, levels, prev_state, prev_bit):
        arr.flags.writeable = False
    return IsiTrellis(S, next_state, levels, prev_state, prev_bit)
