import math

import numpy as np
import pytest

from modwave.channel import (
    ChannelConfig,
    FadingConfig,
    Tap,
    add_awgn,
    apply_channel,
    apply_fading,
    apply_multipath,
    measure_snr,
)
from modwave.errors import SignalError, ZeroPowerError
from modwave.metrics import welch_psd
from modwave.synth import SampledSignal


def unit_noise(n=100_000, seed=0, fs=48000.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, n)
    x /= np.sqrt(np.mean(x**2))
    return SampledSignal(x, fs)


class TestAwgn:
    def test_zero_db_means_equal_powers(self):
        clean = unit_noise(100_000, seed=1)
        received = add_awgn(clean, 0.0, seed=7)
        assert abs(measure_snr(clean, received)) <= 0.1

    def test_noise_power_for_19p80_db(self):
        clean = unit_noise(200_000, seed=2)
        received = add_awgn(clean, 19.80, seed=8)
        noise_power = np.mean((received.samples - clean.samples) ** 2)
        assert noise_power == pytest.approx(10 ** (-1.98), rel=0.02)  # ~0.010471

    def test_ten_db_round_trip(self):
        clean = unit_noise(100_000, seed=3)
        received = add_awgn(clean, 10.0, seed=9)
        assert measure_snr(clean, received) == pytest.approx(10.0, abs=0.2)

    def test_seed_determinism_and_variation(self):
        clean = unit_noise(10_000, seed=4)
        a = add_awgn(clean, 10.0, seed=5)
        b = add_awgn(clean, 10.0, seed=5)
        c = add_awgn(clean, 10.0, seed=6)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)
        assert measure_snr(clean, c) == pytest.approx(10.0, abs=0.2)

    def test_complex_noise_split(self):
        rng = np.random.default_rng(11)
        z = rng.normal(size=50_000) + 1j * rng.normal(size=50_000)
        sig = SampledSignal(z / np.sqrt(np.mean(np.abs(z) ** 2)), 48000.0)
        received = add_awgn(sig, 0.0, seed=12)
        noise = received.samples - sig.samples
        assert np.mean(noise.real**2) == pytest.approx(0.5, rel=0.05)
        assert np.mean(noise.imag**2) == pytest.approx(0.5, rel=0.05)

    def test_zero_power_rejected(self):
        with pytest.raises(ZeroPowerError):
            add_awgn(SampledSignal(np.zeros(10), 48000.0), 10.0, seed=1)

    def test_noise_whiteness(self):
        clean = SampledSignal(np.zeros(1_000_000), 48000.0)
        noisy = add_awgn(clean, 0.0, seed=13, reference_power=1.0)
        psd = welch_psd(noisy)
        interior = psd.density[1:-1]
        deviation_db = 10 * np.log10(interior / interior.mean())
        assert np.max(np.abs(deviation_db)) <= 1.5


class TestMultipath:
    def test_identity_tap(self):
        sig = unit_noise(1000, seed=1)
        out = apply_multipath(sig, (Tap(0, 1.0, 0.0),))
        assert np.array_equal(out.samples, sig.samples)

    def test_impulse_response_readout(self):
        impulse = np.zeros(64)
        impulse[0] = 1.0
        sig = SampledSignal(impulse, 48000.0)
        out = apply_multipath(sig, (Tap(0, 1.0, 0.0), Tap(7, 0.5, 0.0)))
        assert out.samples[0] == pytest.approx(1.0)
        assert out.samples[7] == pytest.approx(0.5)
        assert np.count_nonzero(out.samples) == 2

    def test_two_tap_frequency_response_oracle(self):
        fs, f0, delay, gain = 48000.0, 3000.0, 11, 0.5
        t = np.arange(200_000) / fs
        sig = SampledSignal(np.cos(2 * np.pi * f0 * t), fs)
        out = apply_multipath(sig, (Tap(0, 1.0, 0.0), Tap(delay, gain, 0.0)))
        steady = out.samples[delay:]
        amplitude = np.sqrt(2 * np.mean(steady**2))
        expected = abs(1 + gain * np.exp(-2j * np.pi * f0 * delay / fs))
        assert amplitude == pytest.approx(expected, rel=0.01)

    def test_real_tap_phase_is_cosine_weighted(self):
        sig = unit_noise(256, seed=2)
        out = apply_multipath(sig, (Tap(0, 2.0, np.pi / 3),))
        assert np.allclose(out.samples, 2.0 * math.cos(np.pi / 3) * sig.samples)

    def test_complex_tap_phase_rotates(self):
        z = np.ones(16, dtype=complex)
        out = apply_multipath(SampledSignal(z, 48000.0), (Tap(0, 1.0, np.pi / 2),))
        assert np.allclose(out.samples, 1j * z)

    def test_linearity(self):
        taps = (Tap(0, 1.0, 0.0), Tap(5, 0.4, 1.1))
        x, y = unit_noise(512, seed=3), unit_noise(512, seed=4)
        combined = SampledSignal(2.0 * x.samples + 3.0 * y.samples, 48000.0)
        lhs = apply_multipath(combined, taps).samples
        rhs = (
            2.0 * apply_multipath(x, taps).samples
            + 3.0 * apply_multipath(y, taps).samples
        )
        # no stochastic term; only float reassociation separates the sides
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_delay_beyond_length(self):
        with pytest.raises(SignalError):
            apply_multipath(unit_noise(32, seed=5), (Tap(40, 1.0, 0.0),))


class TestFading:
    def test_degenerate_scale_kills_power(self):
        sig = unit_noise(10_000, seed=6)
        out = apply_fading(sig, FadingConfig(100, 1e-9), seed=1)
        assert out.power <= 1e-12

    def test_single_block_is_a_scalar(self):
        sig = unit_noise(5_000, seed=7)
        out = apply_fading(sig, FadingConfig(5_000, 0.7), seed=2)
        ratio = out.samples / sig.samples
        assert np.allclose(ratio, ratio[0])

    def test_rayleigh_second_moment(self):
        # E[a^2] = 2 sigma^2 = 1 for sigma = 1/sqrt(2)
        sig = SampledSignal(np.ones(100_000), 48000.0)
        out = apply_fading(sig, FadingConfig(100, 1 / math.sqrt(2)), seed=3)
        assert out.power == pytest.approx(1.0, rel=0.10)

    def test_blockwise_constancy(self):
        sig = SampledSignal(np.ones(1_000), 48000.0)
        out = apply_fading(sig, FadingConfig(100, 1.0), seed=4)
        blocks = out.samples.reshape(10, 100)
        assert np.allclose(blocks, blocks[:, :1])
        assert len(np.unique(np.round(blocks[:, 0], 12))) == 10

    def test_invalid_sigma(self):
        with pytest.raises(SignalError):
            FadingConfig(100, 0.0)


class TestMeasureSnr:
    def test_zero_noise_is_infinite(self):
        sig = unit_noise(100, seed=8)
        assert measure_snr(sig, sig) == math.inf

    def test_noise_equal_to_signal_is_zero_db(self):
        sig = unit_noise(100, seed=9)
        doubled = SampledSignal(2.0 * sig.samples, 48000.0)
        assert measure_snr(sig, doubled) == pytest.approx(0.0, abs=1e-9)

    def test_calibration_across_targets(self):
        clean = unit_noise(100_000, seed=10)
        for target in (0.0, 10.0, 15.44, 19.80, 20.0):
            received = add_awgn(clean, target, seed=int(target * 10) + 1)
            assert measure_snr(clean, received) == pytest.approx(target, abs=0.2)

    def test_length_mismatch(self):
        with pytest.raises(SignalError):
            measure_snr(unit_noise(10, seed=1), unit_noise(11, seed=1))


class TestChannelConfig:
    def test_roundtrip_dict(self):
        cfg = ChannelConfig(
            target_snr_db=12.5,
            taps=(Tap(0, 1.0, 0.0), Tap(4, 0.3, 0.7)),
            fading=FadingConfig(256, 0.8),
            seed=9,
        )
        assert ChannelConfig.from_dict(cfg.to_dict()) == cfg

    def test_noiseless_channel(self):
        sig = unit_noise(1_000, seed=11)
        received, pre_noise, details = apply_channel(
            sig, ChannelConfig(target_snr_db=None)
        )
        assert np.array_equal(received.samples, sig.samples)
        assert details["noise_power"] == 0.0

    def test_infinite_target_rejected(self):
        with pytest.raises(SignalError):
            ChannelConfig(target_snr_db=math.inf)

    def test_chain_preserves_ground_truth(self):
        bits = np.array([0, 1, 1, 0], dtype=np.uint8)
        sig = SampledSignal(np.ones(400), 48000.0, origin_bits=bits)
        received, _, _ = apply_channel(sig, ChannelConfig(target_snr_db=10.0))
        assert np.array_equal(received.origin_bits, bits)
