"""Waveform synthesis: bit sources, symbol mapping, reference modulators
for the standard scheme set, formula-driven waveforms and power
normalization.

All waveforms are real passband signals sampled at
symbol_rate * samples_per_symbol. Rectangular pulse shaping is the
default; root-raised-cosine shaping is available for the quadrature
schemes behind a config flag for bandwidth studies (the round-trip
demodulators assume rectangular pulses).
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .dsl.ast import Expr
from .dsl.evaluation import EvalContext, evaluate
from .dsl.parser import parse_formula
from .errors import DemodulationError, NyquistError, SignalError, ZeroPowerError

REFERENCE_SCHEMES = (
    "am",
    "fm",
    "pm",
    "ook",
    "bpsk",
    "qpsk",
    "bfsk",
    "fsk",
    "msk",
    "gmsk",
    "chirp",
    "qam16",
    "qam64",
    "qam128",
    "qam256",
)

ANALOG_SCHEMES = ("am", "fm", "pm")

_BITS_PER_SYMBOL = {
    "ook": 1,
    "bpsk": 1,
    "bfsk": 1,
    "fsk": 1,
    "msk": 1,
    "gmsk": 1,
    "chirp": 1,
    "qpsk": 2,
    "qam16": 4,
    "qam64": 6,
    "qam128": 7,
    "qam256": 8,
}


def normalize_scheme_id(scheme: str) -> str:
    """Canonical scheme id: lowercase, separators dropped, '16-QAM' ok."""
    if scheme.startswith("formula:"):
        return scheme
    key = scheme.lower().replace("-", "").replace("_", "").replace(" ", "")
    for m in ("16", "64", "128", "256"):
        if key == f"{m}qam":
            key = f"qam{m}"
    return key


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled waveform plus the ground truth that produced it."""

    samples: np.ndarray
    sample_rate: float
    origin_bits: np.ndarray | None = None
    origin_symbols: np.ndarray | None = None
    symbol_rate: float | None = None
    guard_count: int = 0

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class SchemeConfig:
    """Everything needed to synthesize one modulation run.

    The sample rate is samples_per_symbol * symbol_rate by construction.
    The defaults put the carrier comfortably inside the Nyquist band at
    desk-scale runtimes.
    """

    scheme: str
    carrier_freq: float = 6000.0
    symbol_rate: float = 1000.0
    samples_per_symbol: int = 48
    amplitude: float = 1.0
    n_symbols: int = 10_000
    seed: int = 0
    mod_index: float = 0.5         # AM message depth
    freq_dev: float = 500.0        # FM Hz per message unit
    phase_dev: float = 1.0         # PM rad per message unit
    message_freq: float = 200.0    # analog message tone, Hz
    gmsk_bt: float = 0.3
    pulse: str = "rect"            # "rect" or "rrc" (quadrature schemes only)
    rrc_rolloff: float = 0.35
    formula_text: str | None = None
    base_scheme: str = "qam16"     # symbol source for formula waveforms

    def __post_init__(self):
        object.__setattr__(self, "scheme", normalize_scheme_id(self.scheme))
        object.__setattr__(
            self, "base_scheme", normalize_scheme_id(self.base_scheme)
        )
        if self.samples_per_symbol < 4:
            raise SignalError("samples_per_symbol must be at least 4")
        if self.symbol_rate <= 0 or self.carrier_freq <= 0:
            raise SignalError("symbol_rate and carrier_freq must be positive")
        if self.n_symbols < 1:
            raise SignalError("n_symbols must be at least 1")
        if self.pulse not in ("rect", "rrc"):
            raise SignalError(f"unknown pulse shape {self.pulse!r}")
        if not self.is_formula and self.scheme not in REFERENCE_SCHEMES:
            raise SignalError(f"unknown scheme {self.scheme!r}")
        if self.is_formula and self.base_scheme not in _BITS_PER_SYMBOL:
            raise SignalError(f"base scheme {self.base_scheme!r} carries no bits")
        # main lobe of the widest scheme must clear the Nyquist frequency
        if self.carrier_freq + 2.0 * self.symbol_rate >= self.sample_rate / 2:
            raise NyquistError(
                f"carrier {self.carrier_freq} Hz plus occupied band exceeds "
                f"half the sample rate {self.sample_rate} Hz"
            )

    @property
    def is_formula(self) -> bool:
        return self.scheme.startswith("formula:")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    @property
    def bits_per_symbol(self) -> int:
        key = self.base_scheme if self.is_formula else self.scheme
        return _BITS_PER_SYMBOL.get(key, 0)

    @property
    def n_samples(self) -> int:
        return self.n_symbols * self.samples_per_symbol


# ---------------------------------------------------------------------------
# bit and symbol sources


def gen_bits(count: int, seed) -> np.ndarray:
    """Uniform i.i.d. bits, deterministic per seed."""
    if count < 1:
        raise SignalError("bit count must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def _gray_inverse(codes: np.ndarray) -> np.ndarray:
    """Invert the reflected Gray code (prefix-xor doubling)."""
    out = codes.astype(np.int64).copy()
    shift = 1
    while True:
        shifted = out >> shift
        if not shifted.any():
            break
        out ^= shifted
        shift *= 2
    return out


@lru_cache(maxsize=None)
def _square_qam_points(order: int) -> tuple:
    side_bits = int(np.log2(order)) // 2
    side = 1 << side_bits
    labels = np.arange(order)
    i_code = labels >> side_bits
    q_code = labels & (side - 1)
    i_level = 2 * _gray_inverse(i_code) - (side - 1)
    q_level = 2 * _gray_inverse(q_code) - (side - 1)
    points = i_level + 1j * q_level
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    return tuple(points)


@lru_cache(maxsize=None)
def _cross_qam128_points() -> tuple:
    """128-point cross constellation with a fold-based quasi-Gray labeling.

    Labels lay out a Gray-coded 16x8 rectangle (4 in-phase bits, 3
    quadrature bits); the two protruding column pairs fold onto the top
    and bottom wings, which preserves single-bit steps inside each wing.
    """
    labels = np.arange(128)
    i_code = labels >> 3
    q_code = labels & 7
    x = 2 * _gray_inverse(i_code) - 15
    y = 2 * _gray_inverse(q_code) - 7
    fold = np.abs(x) > 11
    sx, sy = np.sign(x), np.sign(y)
    new_x = sx * (8 - np.abs(y))
    new_y = sy * np.where(np.abs(x) == 13, 9, 11)
    x = np.where(fold, new_x, x)
    y = np.where(fold, new_y, y)
    points = x + 1j * y
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    return tuple(points)


@lru_cache(maxsize=None)
def constellation(scheme: str) -> np.ndarray:
    """Unit-average-energy constellation indexed by integer symbol label."""
    scheme = normalize_scheme_id(scheme)
    if scheme == "bpsk":
        return np.array([1.0 + 0j, -1.0 + 0j])
    if scheme == "ook":
        # average energy 1 with equiprobable on/off symbols
        return np.array([0.0 + 0j, np.sqrt(2.0) + 0j])
    if scheme == "qpsk":
        points = np.empty(4, dtype=complex)
        positions = np.arange(4)
        gray = positions ^ (positions >> 1)
        points[gray] = np.exp(1j * (np.pi / 4 + positions * np.pi / 2))
        return points
    if scheme in ("qam16", "qam64", "qam256"):
        return np.array(_square_qam_points(int(scheme[3:])))
    if scheme == "qam128":
        return np.array(_cross_qam128_points())
    raise SignalError(f"scheme {scheme!r} has no symbol constellation")


def bits_to_labels(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % bits_per_symbol:
        raise SignalError(
            f"bit count {bits.size} is not divisible by {bits_per_symbol}"
        )
    grouped = bits.reshape(-1, bits_per_symbol)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return grouped @ weights


def labels_to_bits(labels: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def map_symbols(bits: np.ndarray, scheme: str) -> np.ndarray:
    """Map a bit stream onto the scheme's complex symbol alphabet."""
    scheme = normalize_scheme_id(scheme)
    bps = _BITS_PER_SYMBOL.get(scheme)
    if bps is None:
        raise SignalError(f"scheme {scheme!r} has no symbol mapping")
    points = constellation(scheme)
    return points[bits_to_labels(bits, bps)]


def demap_symbols(points_rx: np.ndarray, scheme: str) -> np.ndarray:
    """Minimum-distance decisions back to bits."""
    scheme = normalize_scheme_id(scheme)
    bps = _BITS_PER_SYMBOL[scheme]
    points = constellation(scheme)
    labels = np.argmin(
        np.abs(points_rx[:, None] - points[None, :]), axis=1
    )
    return labels_to_bits(labels, bps)


# ---------------------------------------------------------------------------
# waveform builders


def _time_grid(cfg: SchemeConfig) -> np.ndarray:
    return np.arange(cfg.n_samples) / cfg.sample_rate


def _hold(values: np.ndarray, sps: int) -> np.ndarray:
    return np.repeat(values, sps)


def _rrc_taps(beta: float, sps: int, span: int = 8) -> np.ndarray:
    n = span * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps
    taps = np.empty(n)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-9:
            taps[i] = 1 + beta * (4 / np.pi - 1)
        elif abs(abs(ti) - 1 / (4 * beta)) < 1e-9:
            taps[i] = (beta / np.sqrt(2)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
            )
        else:
            num = np.sin(np.pi * ti * (1 - beta)) + 4 * beta * ti * np.cos(
                np.pi * ti * (1 + beta)
            )
            taps[i] = num / (np.pi * ti * (1 - (4 * beta * ti) ** 2))
    return taps / np.sqrt(np.sum(taps**2))


def _baseband_iq(cfg: SchemeConfig, symbols: np.ndarray) -> np.ndarray:
    if cfg.pulse == "rect":
        return _hold(symbols, cfg.samples_per_symbol)
    taps = _rrc_taps(cfg.rrc_rolloff, cfg.samples_per_symbol)
    up = np.zeros(symbols.size * cfg.samples_per_symbol, dtype=complex)
    up[:: cfg.samples_per_symbol] = symbols * np.sqrt(cfg.samples_per_symbol)
    shaped = np.convolve(up, taps)
    delay = (taps.size - 1) // 2
    return shaped[delay : delay + up.size]


def _quadrature_passband(cfg: SchemeConfig, symbols: np.ndarray) -> np.ndarray:
    t = _time_grid(cfg)
    baseband = _baseband_iq(cfg, symbols)
    theta = 2 * np.pi * cfg.carrier_freq * t
    return cfg.amplitude * (
        baseband.real * np.cos(theta) - baseband.imag * np.sin(theta)
    )


def _phase_from_freq(cfg: SchemeConfig, inst_freq: np.ndarray) -> np.ndarray:
    # continuous phase: integrate instantaneous frequency sample by sample
    return 2 * np.pi * np.cumsum(inst_freq) / cfg.sample_rate


def _gaussian_freq_pulse(cfg: SchemeConfig) -> np.ndarray:
    sps = cfg.samples_per_symbol
    bandwidth = cfg.gmsk_bt * cfg.symbol_rate
    span = 4 * sps
    t = (np.arange(2 * span + 1) - span) / cfg.sample_rate
    sigma = np.sqrt(np.log(2)) / (2 * np.pi * bandwidth)
    taps = np.exp(-(t**2) / (2 * sigma**2))
    return taps / taps.sum()


def _message(cfg: SchemeConfig, t: np.ndarray) -> np.ndarray:
    return np.cos(2 * np.pi * cfg.message_freq * t)


def _waveform_from_labels(cfg: SchemeConfig, labels: np.ndarray) -> np.ndarray:
    """Passband waveform for a digital scheme given per-symbol labels."""
    sps = cfg.samples_per_symbol
    t = _time_grid(cfg)
    theta = 2 * np.pi * cfg.carrier_freq * t
    scheme = cfg.scheme

    if scheme == "bpsk":
        return cfg.amplitude * np.cos(theta + np.pi * _hold(labels, sps))
    if scheme == "qpsk":
        # two Gray-coded bits select the phase quadrant directly
        positions = _gray_inverse(labels.astype(np.int64))
        return cfg.amplitude * np.cos(theta + (np.pi / 2) * _hold(positions, sps))
    if scheme == "ook":
        return cfg.amplitude * _hold(labels.astype(float), sps) * np.cos(theta)
    if scheme in ("qam16", "qam64", "qam128", "qam256"):
        return _quadrature_passband(cfg, constellation(scheme)[labels])
    if scheme == "fsk":
        # literal instantaneous-frequency form with absolute time
        tone = cfg.carrier_freq + cfg.symbol_rate * (2.0 * labels - 1.0)
        return cfg.amplitude * np.cos(2 * np.pi * _hold(tone, sps) * t)
    if scheme in ("bfsk", "msk"):
        h = 1.0 if scheme == "bfsk" else 0.5
        dev = h * cfg.symbol_rate / 2
        inst = cfg.carrier_freq + dev * _hold(2.0 * labels - 1.0, sps)
        return cfg.amplitude * np.cos(_phase_from_freq(cfg, inst))
    if scheme == "gmsk":
        pulse = _gaussian_freq_pulse(cfg)
        nrz = _hold(2.0 * labels - 1.0, sps)
        smooth = np.convolve(nrz, pulse, mode="same")
        inst = cfg.carrier_freq + (cfg.symbol_rate / 4) * smooth
        return cfg.amplitude * np.cos(_phase_from_freq(cfg, inst))
    if scheme == "chirp":
        # binary up/down linear sweeps over +-symbol_rate, phase reset per symbol
        tau = np.arange(sps) / cfg.sample_rate
        direction = (2.0 * labels - 1.0)[:, None]
        sweep = cfg.symbol_rate * (2 * tau * cfg.symbol_rate - 1)
        inst = cfg.carrier_freq + direction * sweep[None, :]
        phase = 2 * np.pi * np.cumsum(inst, axis=1) / cfg.sample_rate
        return cfg.amplitude * np.cos(phase).reshape(-1)
    raise SignalError(f"scheme {scheme!r} is not label-driven")


def _baseband_symbols(scheme: str, labels: np.ndarray) -> np.ndarray | None:
    """Per-symbol transmitted baseband phasors where they are well defined."""
    if scheme in ("bpsk", "qam16", "qam64", "qam128", "qam256"):
        return constellation(scheme)[labels]
    if scheme == "qpsk":
        return np.exp(1j * (np.pi / 2) * _gray_inverse(labels.astype(np.int64)))
    if scheme == "ook":
        return labels.astype(complex)
    return None


def _analog_waveform(cfg: SchemeConfig) -> np.ndarray:
    t = _time_grid(cfg)
    theta = 2 * np.pi * cfg.carrier_freq * t
    msg = _message(cfg, t)
    if cfg.scheme == "am":
        return cfg.amplitude * (1 + cfg.mod_index * msg) * np.cos(theta)
    if cfg.scheme == "fm":
        dt = 1.0 / cfg.sample_rate
        running = np.concatenate(
            ([0.0], np.cumsum((msg[1:] + msg[:-1]) / 2) * dt)
        )
        return cfg.amplitude * np.cos(theta + cfg.freq_dev * running)
    return cfg.amplitude * np.cos(theta + cfg.phase_dev * msg)


def modulate_reference(cfg: SchemeConfig) -> SampledSignal:
    """Reference waveform for one of the standard schemes."""
    if cfg.is_formula:
        raise SignalError("use modulate_formula for formula schemes")
    if cfg.scheme in ANALOG_SCHEMES:
        return SampledSignal(
            samples=_analog_waveform(cfg),
            sample_rate=cfg.sample_rate,
            symbol_rate=cfg.symbol_rate,
        )
    bps = cfg.bits_per_symbol
    bits = gen_bits(cfg.n_symbols * bps, cfg.seed)
    labels = bits_to_labels(bits, bps)
    samples = _waveform_from_labels(cfg, labels)
    symbols = _baseband_symbols(cfg.scheme, labels)
    return SampledSignal(
        samples=samples,
        sample_rate=cfg.sample_rate,
        origin_bits=bits,
        origin_symbols=symbols,
        symbol_rate=cfg.symbol_rate,
    )


# ---------------------------------------------------------------------------
# formula-driven synthesis


def _base_streams(cfg: SchemeConfig, labels: np.ndarray) -> dict[str, np.ndarray]:
    sps = cfg.samples_per_symbol
    points = constellation(cfg.base_scheme)[labels]
    return {
        "I(t)": _hold(points.real, sps),
        "Q(t)": _hold(points.imag, sps),
        "d(t)": _hold(labels.astype(float), sps),
        "f(t)": _hold(
            cfg.carrier_freq + cfg.symbol_rate * (2.0 * (labels % 2) - 1.0), sps
        ),
    }


def formula_context(
    cfg: SchemeConfig, labels: np.ndarray | None = None
) -> tuple[EvalContext, np.ndarray, np.ndarray]:
    """Evaluation context for a formula scheme.

    The quadrature, data and frequency streams come from the base scheme's
    Gray-labeled symbols; scalars come from the config. Returns the
    context plus the bits and labels used, so error rates stay computable
    downstream.
    """
    bps = _BITS_PER_SYMBOL[cfg.base_scheme]
    if labels is None:
        bits = gen_bits(cfg.n_symbols * bps, cfg.seed)
        labels = bits_to_labels(bits, bps)
    else:
        labels = np.asarray(labels, dtype=np.int64)
        bits = labels_to_bits(labels, bps)
    t = _time_grid(cfg)
    signals = _base_streams(cfg, labels)
    signals["m(t)"] = _message(cfg, t)
    constants = {
        "f_c": cfg.carrier_freq,
        "f_m": cfg.message_freq,
        "A": cfg.amplitude,
        "A_c": cfg.amplitude,
        "m": cfg.mod_index,
        "k_f": cfg.freq_dev,
        "k_p": cfg.phase_dev,
        "phi": 0.0,
        "phi_c": 0.0,
        "phi_m": 0.0,
        "n": 4.0,
    }
    ctx = EvalContext(constants=constants, signals=signals)
    return ctx, bits, labels


def modulate_formula(
    expr: Expr, ctx: EvalContext, cfg: SchemeConfig,
    origin_bits: np.ndarray | None = None,
    origin_symbols: np.ndarray | None = None,
) -> SampledSignal:
    """Evaluate a formula over the config's grid as a waveform."""
    result = evaluate(expr, ctx, _time_grid(cfg))
    return SampledSignal(
        samples=result.samples,
        sample_rate=cfg.sample_rate,
        origin_bits=origin_bits,
        origin_symbols=origin_symbols,
        symbol_rate=cfg.symbol_rate,
        guard_count=result.guard_count,
    )


def modulate(cfg: SchemeConfig) -> SampledSignal:
    """Synthesize any configured scheme, reference or formula-driven."""
    if not cfg.is_formula:
        return modulate_reference(cfg)
    if not cfg.formula_text:
        raise SignalError("formula scheme configured without formula_text")
    expr = parse_formula(cfg.formula_text)
    ctx, bits, labels = formula_context(cfg)
    symbols = constellation(cfg.base_scheme)[labels]
    return modulate_formula(expr, ctx, cfg, origin_bits=bits, origin_symbols=symbols)


def candidate_bank(cfg: SchemeConfig) -> np.ndarray:
    """Noiseless per-label waveforms for correlation demodulation.

    Row m holds the full-length waveform synthesized with every symbol
    fixed to label m. Valid for schemes without cross-symbol memory.
    """
    if cfg.is_formula:
        expr = parse_formula(cfg.formula_text)
        order = 1 << _BITS_PER_SYMBOL[cfg.base_scheme]
        _check_bank_size(order, cfg.n_samples)
        rows = []
        for label in range(order):
            labels = np.full(cfg.n_symbols, label, dtype=np.int64)
            ctx, _, _ = formula_context(cfg, labels=labels)
            rows.append(evaluate(expr, ctx, _time_grid(cfg)).samples)
        return np.stack(rows)
    if cfg.scheme in ("bfsk", "msk", "gmsk"):
        raise DemodulationError(
            f"{cfg.scheme} carries phase memory; no per-symbol candidate bank"
        )
    if cfg.scheme in ANALOG_SCHEMES:
        raise DemodulationError("analog schemes have no symbol candidates")
    order = 1 << cfg.bits_per_symbol
    _check_bank_size(order, cfg.n_samples)
    rows = []
    for label in range(order):
        labels = np.full(cfg.n_symbols, label, dtype=np.int64)
        rows.append(_waveform_from_labels(cfg, labels))
    return np.stack(rows)


def _check_bank_size(order: int, n_samples: int, limit: int = 200_000_000) -> None:
    if order * n_samples > limit:
        raise DemodulationError(
            f"candidate bank of {order} x {n_samples} samples is too large; "
            "use a dedicated demodulator or shorter runs"
        )


def normalize_power(
    signal: SampledSignal, target_power: float = 1.0
) -> tuple[SampledSignal, float]:
    """Scale a signal to the target mean-square power; returns the factor."""
    if target_power <= 0:
        raise SignalError("target power must be positive")
    current = signal.power
    if current <= 0:
        raise ZeroPowerError("cannot normalize a zero-power signal")
    scale = float(np.sqrt(target_power / current))
    return replace(signal, samples=signal.samples * scale), scale


def write_waveform(
    signal: SampledSignal,
    path,
    fmt: str = "csv",
    scheme: str | None = None,
    seed: int | None = None,
) -> None:
    """Dump samples as CSV (index,i,q) or interleaved float32 binary.

    Both formats get a JSON sidecar (<path>.json) recording the sample
    rate, format and provenance so the dump is self-describing.
    """
    import csv as _csv
    import json as _json
    from pathlib import Path as _Path

    path = _Path(path)
    z = np.asarray(signal.samples)
    i, q = np.real(z).astype(np.float32), np.imag(z).astype(np.float32)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = _csv.writer(handle)
            writer.writerow(["index", "i", "q"])
            for k in range(z.size):
                writer.writerow([k, f"{i[k]:.8g}", f"{q[k]:.8g}"])
    elif fmt == "f32":
        interleaved = np.empty(2 * z.size, dtype="<f4")
        interleaved[0::2], interleaved[1::2] = i, q
        interleaved.tofile(path)
    else:
        raise SignalError(f"unknown waveform format {fmt!r}")
    sidecar = {
        "sample_rate": signal.sample_rate,
        "symbol_rate": signal.symbol_rate,
        "n_samples": int(z.size),
        "format": fmt,
        "scheme": scheme,
        "seed": seed,
    }
    with open(path.with_suffix(path.suffix + ".json"), "w", encoding="utf-8") as handle:
        _json.dump(sidecar, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_waveform_f32(path) -> np.ndarray:
    """Read an interleaved float32 dump back into a complex array."""
    flat = np.fromfile(path, dtype="<f4")
    return flat[0::2].astype(np.float64) + 1j * flat[1::2].astype(np.float64)
