import numpy as np
import pytest

from modwave.dsl import EvalContext, evaluate, parse_formula
from modwave.errors import NyquistError, SignalError, ZeroPowerError
from modwave.synth import (
    REFERENCE_SCHEMES,
    SampledSignal,
    SchemeConfig,
    candidate_bank,
    constellation,
    demap_symbols,
    formula_context,
    gen_bits,
    map_symbols,
    modulate,
    modulate_reference,
    normalize_power,
    normalize_scheme_id,
    read_waveform_f32,
    write_waveform,
)


DIGITAL = [s for s in REFERENCE_SCHEMES if s not in ("am", "fm", "pm")]


class TestBits:
    def test_deterministic_per_seed(self):
        assert np.array_equal(gen_bits(8, seed=1), gen_bits(8, seed=1))
        assert not np.array_equal(gen_bits(64, seed=1), gen_bits(64, seed=2))

    def test_ones_fraction(self):
        bits = gen_bits(100_000, seed=5)
        frac = bits.mean()
        assert 0.49 <= frac <= 0.51  # 3 sigma band is about 0.0047

    def test_single_bit(self):
        assert gen_bits(1, seed=9)[0] in (0, 1)

    def test_count_must_be_positive(self):
        with pytest.raises(SignalError):
            gen_bits(0, seed=1)


class TestSymbolMaps:
    def test_qpsk_gray_table(self):
        # enumerate the documented 4-entry map
        expected = {
            (0, 0): (1 + 1j) / np.sqrt(2),
            (0, 1): (-1 + 1j) / np.sqrt(2),
            (1, 1): (-1 - 1j) / np.sqrt(2),
            (1, 0): (1 - 1j) / np.sqrt(2),
        }
        for bits, point in expected.items():
            got = map_symbols(np.array(bits), "qpsk")[0]
            assert got == pytest.approx(point, abs=1e-12), bits

    def test_qam256_all_zero_bits_hit_the_corner(self):
        # label 0 decodes to the lowest level on both axes: (-15 - 15j)
        # scaled by the square-grid average energy 2(M-1)/3 = 170
        point = map_symbols(np.zeros(8, dtype=np.uint8), "qam256")[0]
        assert point == pytest.approx((-15 - 15j) / np.sqrt(170), abs=1e-12)

    def test_alphabet_average_energy(self):
        for scheme in ("bpsk", "qpsk", "qam16", "qam64", "qam128", "qam256"):
            points = constellation(scheme)
            energy = np.mean(np.abs(points) ** 2)
            assert energy == pytest.approx(1.0, abs=1e-12), scheme

    def test_constellations_have_distinct_points(self):
        for scheme, size in (
            ("qpsk", 4), ("qam16", 16), ("qam64", 64),
            ("qam128", 128), ("qam256", 256),
        ):
            points = constellation(scheme)
            assert len(np.unique(np.round(points, 12))) == size

    def test_qam128_is_a_cross(self):
        # 12x12 grid of odd coordinates minus the four 2x2 corners
        points = constellation("qam128") * np.sqrt(82.0)
        x, y = np.round(points.real), np.round(points.imag)
        assert np.abs(x).max() == 11 and np.abs(y).max() == 11
        assert not np.any((np.abs(x) > 7) & (np.abs(y) > 7))

    def test_gray_neighbors_one_bit_apart_square(self):
        points = constellation("qam16") * np.sqrt(10)
        for a in range(16):
            for b in range(16):
                gap = abs(points[a] - points[b])
                if abs(gap - 2.0) < 1e-9:  # geometric nearest neighbors
                    assert bin(a ^ b).count("1") == 1

    def test_demap_inverts_map(self):
        for scheme in ("bpsk", "qpsk", "qam16", "qam64", "qam128", "qam256"):
            bits = gen_bits(7 * 64 * 6, seed=3)  # divisible by every bps here
            symbols = map_symbols(bits, scheme)
            assert np.array_equal(demap_symbols(symbols, scheme), bits), scheme

    def test_indivisible_bit_count_rejected(self):
        with pytest.raises(SignalError):
            map_symbols(np.zeros(5, dtype=np.uint8), "qam16")


class TestSchemeConfig:
    def test_sample_rate_relation_is_exact(self):
        cfg = SchemeConfig("bpsk")
        assert cfg.sample_rate == cfg.symbol_rate * cfg.samples_per_symbol

    def test_nyquist_guard(self):
        with pytest.raises(NyquistError):
            SchemeConfig("bpsk", carrier_freq=23_500.0)

    def test_scheme_id_normalization(self):
        assert normalize_scheme_id("16-QAM") == "qam16"
        assert normalize_scheme_id("QAM-256") == "qam256"
        assert SchemeConfig("GMSK").scheme == "gmsk"

    def test_unknown_scheme(self):
        with pytest.raises(SignalError):
            SchemeConfig("ofdm")


class TestReferenceWaveforms:
    def test_bpsk_phase_flip_at_symbol_centers(self):
        cfg = SchemeConfig("bpsk", n_symbols=64, seed=2)
        sig = modulate_reference(cfg)
        sps = cfg.samples_per_symbol
        t = np.arange(len(sig)) / sig.sample_rate
        carrier = np.cos(2 * np.pi * cfg.carrier_freq * t)
        centers = np.arange(64) * sps + sps // 2
        # sign agrees with the carrier for bit 0, flips for bit 1
        for k, bit in enumerate(sig.origin_bits):
            lhs = np.sign(sig.samples[centers[k]])
            rhs = np.sign(carrier[centers[k]])
            assert lhs == (rhs if bit == 0 else -rhs)

    def test_am_zero_index_matches_formula_engine(self):
        cfg = SchemeConfig("am", mod_index=0.0, n_symbols=100)
        sig = modulate_reference(cfg)
        t = np.arange(len(sig)) / sig.sample_rate
        ctx = EvalContext(constants={"A_c": cfg.amplitude, "f_c": cfg.carrier_freq, "phi_c": 0.0})
        carrier = evaluate(parse_formula("A_c * cos(2*pi*f_c*t + phi_c)"), ctx, t)
        assert np.allclose(sig.samples, carrier.samples, atol=1e-12)

    def test_ook_zero_bits_are_exactly_silent(self):
        cfg = SchemeConfig("ook", n_symbols=128, seed=7)
        sig = modulate_reference(cfg)
        frames = sig.samples.reshape(128, cfg.samples_per_symbol)
        zeros = sig.origin_bits == 0
        assert zeros.any()
        assert np.all(frames[zeros] == 0.0)

    def test_waveforms_are_deterministic(self):
        for scheme in ("qam64", "gmsk", "chirp", "fm"):
            cfg = SchemeConfig(scheme, n_symbols=50, seed=13)
            one, two = modulate(cfg), modulate(cfg)
            assert np.array_equal(one.samples, two.samples), scheme

    def test_all_waveforms_finite_and_sized(self):
        for scheme in REFERENCE_SCHEMES:
            cfg = SchemeConfig(scheme, n_symbols=40, seed=1)
            sig = modulate(cfg)
            assert len(sig) == cfg.n_samples, scheme
            assert np.isfinite(sig.samples).all(), scheme

    def test_origin_bits_length(self):
        for scheme in DIGITAL:
            cfg = SchemeConfig(scheme, n_symbols=30, seed=1)
            sig = modulate(cfg)
            assert sig.origin_bits.size == 30 * cfg.bits_per_symbol, scheme

    def test_rrc_pulse_narrows_the_spectrum(self):
        from modwave.metrics import occupied_bandwidth, welch_psd

        rect = modulate(SchemeConfig("qam16", n_symbols=4000, seed=1))
        rrc = modulate(SchemeConfig("qam16", n_symbols=4000, seed=1, pulse="rrc"))
        obw_rect = occupied_bandwidth(welch_psd(rect, segment_length=2048))
        obw_rrc = occupied_bandwidth(welch_psd(rrc, segment_length=2048))
        assert obw_rrc < 0.5 * obw_rect


class TestFormulaSynthesis:
    M2 = (
        "I(t)*cos(2*pi*f_c*t) - Q(t)*sin(2*pi*f_c*t) + (A*cos(2*pi*f_c*t))"
        " + (A*pi*d(t)*sin(2*pi*f_c*t))"
    )

    def test_m2_with_silent_quadrature_reduces(self):
        # independent oracle: compose the reduced expression by hand
        cfg = SchemeConfig("formula:m2", formula_text=self.M2, n_symbols=200, seed=4)
        ctx, bits, labels = formula_context(cfg)
        silent = EvalContext(
            constants=dict(ctx.constants),
            signals={**dict(ctx.signals), "Q(t)": np.zeros(cfg.n_samples)},
        )
        expr = parse_formula(self.M2)
        t = np.arange(cfg.n_samples) / cfg.sample_rate
        full = evaluate(expr, silent, t)
        reduced = evaluate(
            parse_formula(
                "I(t)*cos(2*pi*f_c*t) + (A*cos(2*pi*f_c*t))"
                " + (A*pi*d(t)*sin(2*pi*f_c*t))"
            ),
            silent,
            t,
        )
        assert np.allclose(full.samples, reduced.samples, atol=1e-12)

    def test_m1_zeroed_extras_leave_pure_quadrature(self):
        m1 = (
            "I(t)*cos(2*pi*f_c*t) - Q(t)*sin(2*pi*f_c*t)"
            " + (A*cos(2*pi*f_c*t + phi)) + (A*cos(2*pi*f_c*t + phi))"
            " + (A*sum(m, i, 1, n))"
        )
        cfg = SchemeConfig("formula:m1", formula_text=m1, n_symbols=100, seed=4, amplitude=1.0)
        ctx, _, _ = formula_context(cfg)
        zeroed = EvalContext(
            constants={**dict(ctx.constants), "A": 0.0, "m": 0.0},
            signals=dict(ctx.signals),
        )
        t = np.arange(cfg.n_samples) / cfg.sample_rate
        full = evaluate(parse_formula(m1), zeroed, t)
        qam = evaluate(
            parse_formula("I(t)*cos(2*pi*f_c*t) - Q(t)*sin(2*pi*f_c*t)"),
            zeroed,
            t,
        )
        assert np.allclose(full.samples, qam.samples, atol=1e-12)

    def test_m3_runs_with_guards(self):
        m3 = (
            "I(t)*cos(2*pi*f_c*t) - Q(t)*sin(2*pi*f_c*t) + phi"
            " + ((A*sin(2*pi*f_c*t)) / (Q(t)*pi*0)) / Q"
        )
        cfg = SchemeConfig("formula:m3", formula_text=m3, n_symbols=100, seed=4)
        sig = modulate(cfg)
        assert sig.guard_count > 0
        assert np.isfinite(sig.samples).all()

    def test_candidate_bank_row_matches_constant_stream(self):
        cfg = SchemeConfig("qpsk", n_symbols=20, seed=6)
        bank = candidate_bank(cfg)
        assert bank.shape == (4, cfg.n_samples)
        # a run whose labels are constant must equal the matching bank row
        from modwave.synth import _waveform_from_labels

        labels = np.full(20, 2, dtype=np.int64)
        assert np.array_equal(bank[2], _waveform_from_labels(cfg, labels))


class TestNormalizePower:
    def test_uniform_scale(self):
        sig = SampledSignal(np.array([2.0, 2.0, 2.0, 2.0]), 48000.0)
        out, scale = normalize_power(sig, 1.0)
        assert np.allclose(out.samples, [1.0, 1.0, 1.0, 1.0])
        assert scale == pytest.approx(0.5)

    def test_unit_power_unchanged(self):
        sig = SampledSignal(np.array([1.0, -1.0, 1.0, -1.0]), 48000.0)
        out, scale = normalize_power(sig, 1.0)
        assert np.allclose(out.samples, sig.samples, atol=1e-12)
        assert scale == pytest.approx(1.0, abs=1e-12)

    def test_random_signal_recheck(self, rng):
        sig = SampledSignal(rng.normal(0, 3.7, 50_000), 48000.0)
        out, _ = normalize_power(sig, 1.0)
        assert out.power == pytest.approx(1.0, rel=1e-6)

    def test_every_scheme_normalizes_to_unit_power(self):
        for scheme in REFERENCE_SCHEMES:
            cfg = SchemeConfig(scheme, n_symbols=200, seed=3, amplitude=2.5)
            out, _ = normalize_power(modulate(cfg), 1.0)
            assert out.power == pytest.approx(1.0, rel=1e-6), scheme

    def test_zero_power_rejected(self):
        with pytest.raises(ZeroPowerError):
            normalize_power(SampledSignal(np.zeros(16), 48000.0), 1.0)


class TestWaveformDump:
    def test_csv_layout_and_sidecar(self, tmp_path):
        import csv
        import json

        cfg = SchemeConfig("qpsk", n_symbols=8, seed=2)
        sig = modulate(cfg)
        path = tmp_path / "wave.csv"
        write_waveform(sig, path, fmt="csv", scheme="qpsk", seed=2)
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["index", "i", "q"]
        assert len(rows) == 1 + len(sig)
        assert float(rows[1][1]) == pytest.approx(sig.samples[0], abs=1e-6)
        sidecar = json.loads((tmp_path / "wave.csv.json").read_text())
        assert sidecar["sample_rate"] == sig.sample_rate
        assert sidecar["scheme"] == "qpsk" and sidecar["seed"] == 2

    def test_f32_round_trip(self, tmp_path):
        cfg = SchemeConfig("qam16", n_symbols=16, seed=3)
        sig = modulate(cfg)
        path = tmp_path / "wave.f32"
        write_waveform(sig, path, fmt="f32")
        back = read_waveform_f32(path)
        assert np.allclose(back.real, sig.samples, atol=1e-6)
        assert np.allclose(back.imag, 0.0)

    def test_unknown_format(self, tmp_path):
        sig = SampledSignal(np.ones(4), 48000.0)
        with pytest.raises(SignalError):
            write_waveform(sig, tmp_path / "x.bin", fmt="wav")
