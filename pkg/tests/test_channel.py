import numpy as np
import pytest

from coupled_eq.channel import (ImpulseResponse, NoiseConfig, awgn, bpsk_map,
                                ebn0_to_sigma, ezn0_db_from_ebn0, isi_filter,
                                sigma_from_ezn0, standard_channel, transmit)


def test_standard_channel_taps():
    assert standard_channel("ch1").taps == (0.7071, -0.7071)
    assert standard_channel("ch2").taps == (0.408, 0.816, 0.408)
    assert standard_channel("ch3").taps == (0.227, 0.46, 0.688, 0.46, 0.227)
    assert [standard_channel(f"ch{i}").memory for i in (1, 2, 3)] == [1, 2, 4]


def test_standard_channel_unknown():
    with pytest.raises(KeyError):
        standard_channel("ch9")


def test_impulse_response_rejects_bad_norm():
    with pytest.raises(ValueError):
        ImpulseResponse((1.0, 1.0))
    with pytest.raises(ValueError):
        ImpulseResponse((0.0, 1.0))


def test_bpsk_map():
    np.testing.assert_array_equal(bpsk_map([0, 1, 0]), [1.0, -1.0, 1.0])
    np.testing.assert_array_equal(bpsk_map(np.zeros(5, dtype=int)), np.ones(5))
    bits = np.array([0, 1, 1, 0])
    np.testing.assert_array_equal((1 - bpsk_map(bits)) / 2, bits)


def test_isi_filter_ch1_constant_input():
    h = standard_channel("ch1")
    z = isi_filter(np.ones(3), h, initial_state=[1.0])
    np.testing.assert_allclose(z, 0.0, atol=1e-12)


def test_isi_filter_ch1_alternating():
    h = standard_channel("ch1")
    z = isi_filter([1.0, -1.0], h, initial_state=[1.0])
    np.testing.assert_allclose(z, [0.0, -1.4142], atol=1e-12)


def test_isi_filter_identity_channel():
    h = ImpulseResponse((1.0,))
    x = np.array([1.0, -1.0, -1.0, 1.0])
    np.testing.assert_array_equal(isi_filter(x, h), x)


def test_isi_filter_rejects_bad_state():
    with pytest.raises(ValueError):
        isi_filter([1.0], standard_channel("ch2"), initial_state=[1.0])


def test_isi_filter_linear():
    h = standard_channel("ch3")
    rng = np.random.default_rng(3)
    x1, x2 = rng.normal(size=(2, 40))
    zero = np.zeros(h.memory)
    lhs = isi_filter(2.0 * x1 - 3.0 * x2, h, initial_state=zero)
    rhs = 2.0 * isi_filter(x1, h, zero) - 3.0 * isi_filter(x2, h, zero)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_ebn0_to_sigma_points():
    assert ebn0_to_sigma(0.0, 0.5) ** 2 == pytest.approx(1.0)
    assert ebn0_to_sigma(3.0103, 0.5) ** 2 == pytest.approx(0.5, rel=1e-4)
    assert ebn0_to_sigma(4.0, 1.0) ** 2 == pytest.approx(10 ** -0.4 / 2)
    with pytest.raises(ValueError):
        ebn0_to_sigma(1.0, 0.0)


def test_ezn0_conversions():
    # Eb/N0 and Ez/N0 differ by 10log10(R); both give the same sigma
    g = 1.85
    ez = ezn0_db_from_ebn0(g, 0.5)
    assert ez == pytest.approx(g - 3.0103, abs=1e-4)
    assert sigma_from_ezn0(ez) == pytest.approx(ebn0_to_sigma(g, 0.5), rel=1e-12)


def test_noise_config():
    nc = NoiseConfig.from_ebn0(0.0, 0.5)
    assert nc.sigma == pytest.approx(1.0)
    with pytest.raises(ValueError):
        NoiseConfig(0.0)


def test_awgn_determinism_and_variance():
    z = np.zeros(10 ** 6)
    y1 = awgn(z, 0.8, np.random.default_rng(7))
    y2 = awgn(z, 0.8, np.random.default_rng(7))
    np.testing.assert_array_equal(y1, y2)
    assert np.var(y1) == pytest.approx(0.64, rel=0.01)


def test_energy_preservation():
    rng = np.random.default_rng(11)
    x = bpsk_map(rng.integers(2, size=10 ** 5))
    for name in ("ch1", "ch2", "ch3"):
        z = isi_filter(x, standard_channel(name))
        assert np.mean(z ** 2) == pytest.approx(1.0, rel=0.01)


def test_transmit_shapes_and_termination():
    h = standard_channel("ch2")
    rng = np.random.default_rng(0)
    bits = rng.integers(2, size=50)
    y, x = transmit(bits, h, 0.5, rng)
    assert len(y) == 52 and len(x) == 52
    np.testing.assert_array_equal(x[-2:], 1.0)
