import numpy as np
import pytest

from modwave.costmodel import CostInputs, latency, ops_for_waveform, power
from modwave.dsl import parse_formula
from modwave.errors import ConfigError


def make_inputs(**overrides):
    base = dict(
        n_ops=1e6,
        f_cpu=1e9,
        data_bits=1e3,
        bandwidth_bps=1e6,
        queue_delay_s=0.0,
        alpha=1e-21,
        voltage=1.0,
        transmit_power_w=0.1,
        amplifier_efficiency=0.5,
        idle_power_w=0.01,
    )
    base.update(overrides)
    return CostInputs(**base)


class TestLatency:
    def test_processing_term(self):
        out = latency(make_inputs())
        assert out.processing_s == pytest.approx(1e-3, rel=1e-12)

    def test_transmission_term(self):
        out = latency(make_inputs())
        assert out.transmission_s == pytest.approx(1e-3, rel=1e-12)

    def test_total_sum(self):
        out = latency(make_inputs(queue_delay_s=0.0))
        assert out.total_s == pytest.approx(2e-3, rel=1e-12)
        queued = latency(make_inputs(queue_delay_s=0.5))
        assert queued.total_s == pytest.approx(0.502, rel=1e-12)

    def test_monotone_in_speed_and_rate(self):
        slow = latency(make_inputs(f_cpu=1e8)).total_s
        fast = latency(make_inputs(f_cpu=1e10)).total_s
        assert fast < slow
        narrow = latency(make_inputs(bandwidth_bps=1e5)).total_s
        wide = latency(make_inputs(bandwidth_bps=1e7)).total_s
        assert wide < narrow


class TestPower:
    def test_processing_term(self):
        out = power(make_inputs())
        assert out.processing_w == pytest.approx(1e-6, rel=1e-12)

    def test_transmit_term(self):
        out = power(make_inputs())
        assert out.transmit_w == pytest.approx(0.2, rel=1e-12)

    def test_total_sum(self):
        out = power(make_inputs())
        assert out.total_w == pytest.approx(0.210001, rel=1e-9)

    def test_monotonicity(self):
        base = power(make_inputs()).total_w
        for field, larger in (
            ("alpha", 1e-20),
            ("n_ops", 1e8),
            ("voltage", 2.0),
            ("transmit_power_w", 0.5),
        ):
            assert power(make_inputs(**{field: larger})).total_w > base, field


class TestClosedFormExactness:
    def test_randomized_inputs(self):
        rng = np.random.default_rng(99)
        for _ in range(300):
            vals = dict(
                n_ops=float(rng.uniform(1, 1e9)),
                f_cpu=float(rng.uniform(1e6, 1e10)),
                data_bits=float(rng.uniform(1, 1e9)),
                bandwidth_bps=float(rng.uniform(1, 1e9)),
                queue_delay_s=float(rng.uniform(0, 10)),
                alpha=float(rng.uniform(1e-22, 1e-18)),
                voltage=float(rng.uniform(0.5, 5)),
                transmit_power_w=float(rng.uniform(1e-3, 10)),
                amplifier_efficiency=float(rng.uniform(0.05, 1.0)),
                idle_power_w=float(rng.uniform(1e-4, 1)),
            )
            inputs = CostInputs(**vals)
            lat = latency(inputs)
            assert lat.processing_s == pytest.approx(
                vals["n_ops"] / vals["f_cpu"], rel=1e-12
            )
            assert lat.total_s == pytest.approx(
                vals["n_ops"] / vals["f_cpu"]
                + vals["data_bits"] / vals["bandwidth_bps"]
                + vals["queue_delay_s"],
                rel=1e-12,
            )
            pwr = power(inputs)
            assert pwr.processing_w == pytest.approx(
                vals["alpha"] * vals["n_ops"] * vals["voltage"] ** 2 * vals["f_cpu"],
                rel=1e-12,
            )
            assert pwr.total_w == pytest.approx(
                pwr.processing_w
                + vals["transmit_power_w"] / vals["amplifier_efficiency"]
                + vals["idle_power_w"],
                rel=1e-12,
            )


class TestValidation:
    def test_rejects_nonpositive(self):
        for field in ("n_ops", "f_cpu", "bandwidth_bps", "voltage"):
            with pytest.raises(ConfigError):
                make_inputs(**{field: 0.0})

    def test_rejects_bad_efficiency(self):
        with pytest.raises(ConfigError):
            make_inputs(amplifier_efficiency=0.0)
        with pytest.raises(ConfigError):
            make_inputs(amplifier_efficiency=1.5)

    def test_negative_queue_rejected(self):
        with pytest.raises(ConfigError):
            make_inputs(queue_delay_s=-1.0)


def test_ops_for_waveform_bridges_ast_to_run():
    expr = parse_formula("A_c * cos(2*pi*f_c*t + pi*d(t))")
    assert ops_for_waveform(expr, 1000) == 7 * 1000
    with pytest.raises(ConfigError):
        ops_for_waveform(expr, 0)
