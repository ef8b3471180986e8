"""Information-rate estimates and rate-matching thresholds."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from coupled_eq.channel import ImpulseResponse, standard_channel
from coupled_eq.sir import sir, sir_threshold

MEMORYLESS = ImpulseResponse((1.0,))


def bpsk_awgn_rate(sigma):
    """1 - E[log2(1 + exp(-L))] with L ~ N(2/s^2, 4/s^2), by quadrature."""
    mu = 2.0 / sigma**2
    s = math.sqrt(2.0 * mu)

    def integrand(z):
        dens = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return dens * np.logaddexp(0.0, -(mu + s * z)) / math.log(2.0)

    val, _ = quad(integrand, -12.0, 12.0, limit=200)
    return 1.0 - val


class TestSir:
    def test_memoryless_matches_quadrature(self):
        ez_db = -10.0 * math.log10(2.0)  # sigma = 1
        got = sir(MEMORYLESS, ez_db, n_sym=200_000, seed=3)
        assert got == pytest.approx(bpsk_awgn_rate(1.0), abs=0.01)

    @pytest.mark.parametrize("name", ["ch1", "ch2", "ch3"])
    def test_saturates_at_one_bit(self, name):
        assert sir(standard_channel(name), 14.0, n_sym=50_000, seed=1) >= 0.995

    @pytest.mark.parametrize("name", ["ch1", "ch2", "ch3"])
    def test_monotone_in_snr(self, name):
        ch = standard_channel(name)
        vals = [sir(ch, ez, n_sym=50_000, seed=4) for ez in (-6.0, -2.0, 2.0, 6.0)]
        assert vals == sorted(vals)

    def test_interference_costs_rate(self):
        # at equal received energy the one-tap channel carries more
        got_isi = sir(standard_channel("ch3"), 0.0, n_sym=100_000, seed=6)
        got_flat = sir(MEMORYLESS, 0.0, n_sym=100_000, seed=6)
        assert got_isi < got_flat - 0.01

    def test_seed_determinism(self):
        a = sir(standard_channel("ch2"), 1.0, n_sym=20_000, seed=11)
        b = sir(standard_channel("ch2"), 1.0, n_sym=20_000, seed=11)
        c = sir(standard_channel("ch2"), 1.0, n_sym=20_000, seed=12)
        assert a == b
        assert a != c


class TestSirThreshold:
    @pytest.mark.parametrize(
        "name,want",
        [("ch1", 0.82), ("ch2", 1.44), ("ch3", 2.96)],
    )
    def test_half_rate_anchors(self, name, want):
        res = sir_threshold(standard_channel(name), 0.5, n_sym=200_000, seed=7)
        assert res["ebn0_db"] == pytest.approx(want, abs=0.08)

    def test_energy_bookkeeping(self):
        res = sir_threshold(standard_channel("ch1"), 0.5, n_sym=50_000, seed=7)
        assert res["ebn0_db"] == pytest.approx(
            res["ezn0_db"] - 10.0 * math.log10(0.5), abs=1e-12
        )
        final = res["probes"][-1]["sir"]
        assert abs(final - 0.5) <= 0.005

    def test_rate_orders_thresholds(self):
        ch = standard_channel("ch2")
        lo = sir_threshold(ch, 0.25, n_sym=50_000, seed=7)["ezn0_db"]
        hi = sir_threshold(ch, 0.75, n_sym=50_000, seed=7)["ezn0_db"]
        assert lo < hi

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            sir_threshold(MEMORYLESS, 1.5)

    def test_rejects_degenerate_bracket(self):
        with pytest.raises(ValueError):
            sir_threshold(
                MEMORYLESS, 0.5, n_sym=10_000, lo_ezn0_db=6.0, hi_ezn0_db=8.0
            )
