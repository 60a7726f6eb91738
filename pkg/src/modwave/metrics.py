"""Evaluation metrics: Welch power spectral density, occupied bandwidth,
spectrogram, constellation extraction, demodulation, bit error rate,
spectral efficiency, and side-by-side comparison tables.

The Welch estimator averages modified periodograms over overlapping
windowed segments with window-power compensation, so the integral of the
density over frequency recovers the time-domain power. Occupied bandwidth
is the 99 percent power bandwidth by default: the band left after
trimming half the excluded power from each spectral tail.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import hilbert

from .channel import ChannelConfig, apply_channel
from .errors import DemodulationError, SignalError
from .synth import (
    ANALOG_SCHEMES,
    SampledSignal,
    SchemeConfig,
    _gray_inverse,
    candidate_bank,
    constellation,
    labels_to_bits,
    modulate,
    normalize_power,
)

_WINDOWS = {
    "hann": np.hanning,
    "hamming": np.hamming,
    "blackman": np.blackman,
    "boxcar": np.ones,
}


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray
    density: np.ndarray  # power per Hz
    segment_length: int
    overlap_fraction: float
    window: str
    sample_rate: float

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def total_power(self) -> float:
        return float(np.sum(self.density) * self.resolution)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["freq_hz", "power_density"])
            for f, p in zip(self.frequencies, self.density):
                writer.writerow([f"{f:.10g}", f"{p:.10g}"])


def welch_psd(
    signal: SampledSignal,
    segment_length: int = 256,
    overlap_fraction: float = 0.5,
    window: str = "hann",
) -> PsdEstimate:
    """Averaged-periodogram PSD with density scaling.

    Real signals produce a one-sided spectrum over [0, fs/2] with interior
    bins doubled; complex signals produce a centered two-sided spectrum.
    """
    x = np.asarray(signal.samples)
    n = x.size
    if segment_length > n:
        raise SignalError(
            f"segment length {segment_length} exceeds signal length {n}"
        )
    if not 0.0 <= overlap_fraction <= 0.9:
        raise SignalError("overlap fraction must lie in [0, 0.9]")
    if window not in _WINDOWS:
        raise SignalError(f"unknown window {window!r}")

    fs = signal.sample_rate
    taps = _WINDOWS[window](segment_length)
    compensation = float(np.sum(taps**2))  # window power correction
    hop = max(1, int(round(segment_length * (1.0 - overlap_fraction))))
    n_segments = 1 + (n - segment_length) // hop

    is_complex = np.iscomplexobj(x)
    if is_complex:
        accum = np.zeros(segment_length)
        for k in range(n_segments):
            seg = x[k * hop : k * hop + segment_length] * taps
            accum += np.abs(np.fft.fft(seg)) ** 2
        density = np.fft.fftshift(accum) / (n_segments * fs * compensation)
        freqs = np.fft.fftshift(np.fft.fftfreq(segment_length, d=1.0 / fs))
    else:
        n_bins = segment_length // 2 + 1
        accum = np.zeros(n_bins)
        for k in range(n_segments):
            seg = x[k * hop : k * hop + segment_length] * taps
            accum += np.abs(np.fft.rfft(seg)) ** 2
        density = accum / (n_segments * fs * compensation)
        # fold negative frequencies into the interior bins
        if segment_length % 2 == 0:
            density[1:-1] *= 2.0
        else:
            density[1:] *= 2.0
        freqs = np.fft.rfftfreq(segment_length, d=1.0 / fs)

    return PsdEstimate(
        frequencies=freqs,
        density=density,
        segment_length=segment_length,
        overlap_fraction=overlap_fraction,
        window=window,
        sample_rate=fs,
    )


def occupied_bandwidth(psd: PsdEstimate, fraction: float = 0.99) -> float:
    """Width of the band holding `fraction` of the total power.

    Half the excluded power is trimmed from each tail of the spectrum;
    a single-bin spectrum reports one bin width (the resolution limit).
    """
    if not 0.0 < fraction < 1.0:
        raise SignalError("fraction must lie strictly between 0 and 1")
    total = float(np.sum(psd.density))
    if total <= 0.0:
        raise SignalError("degenerate PSD: no power")
    cumulative = np.cumsum(psd.density)
    tail = (1.0 - fraction) / 2.0
    low = int(np.searchsorted(cumulative, tail * total, side="right"))
    high = int(np.searchsorted(cumulative, (1.0 - tail) * total, side="left"))
    low = min(low, psd.density.size - 1)
    high = min(max(high, low), psd.density.size - 1)
    return float((high - low + 1) * psd.resolution)


@dataclass(frozen=True)
class Spectrogram:
    frequencies: np.ndarray
    frame_times: np.ndarray
    power: np.ndarray  # rows: frequency bins, columns: frames

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["freq_hz"] + [f"{t:.10g}" for t in self.frame_times]
            )
            for f, row in zip(self.frequencies, self.power):
                writer.writerow([f"{f:.10g}"] + [f"{v:.10g}" for v in row])


def spectrogram(
    signal: SampledSignal, fft_length: int = 256, hop: int = 128
) -> Spectrogram:
    """Magnitude-squared short-time Fourier transform with a Hann window."""
    x = np.asarray(signal.samples, dtype=float)
    if fft_length > x.size:
        raise SignalError("fft length exceeds signal length")
    if hop < 1:
        raise SignalError("hop must be at least 1")
    fs = signal.sample_rate
    taps = np.hanning(fft_length)
    n_frames = 1 + (x.size - fft_length) // hop
    power = np.empty((fft_length // 2 + 1, n_frames))
    for k in range(n_frames):
        seg = x[k * hop : k * hop + fft_length] * taps
        power[:, k] = np.abs(np.fft.rfft(seg)) ** 2
    freqs = np.fft.rfftfreq(fft_length, d=1.0 / fs)
    times = (np.arange(n_frames) * hop + fft_length / 2) / fs
    return Spectrogram(frequencies=freqs, frame_times=times, power=power)


# ---------------------------------------------------------------------------
# symbol recovery


def extract_constellation(
    signal: SampledSignal, config: SchemeConfig
) -> np.ndarray:
    """Coherent downconversion and per-symbol integrate-and-dump.

    Returns one complex point per symbol interval. For a passband signal
    I cos - Q sin the recovered point is I + jQ (double-frequency terms
    average out exactly when the carrier completes whole cycles per
    symbol, which the default geometry guarantees).
    """
    sps = config.samples_per_symbol
    n_sym = len(signal) // sps
    t = np.arange(len(signal)) / signal.sample_rate
    mixed = 2.0 * signal.samples * np.exp(-2j * np.pi * config.carrier_freq * t)
    return mixed[: n_sym * sps].reshape(n_sym, sps).mean(axis=1)


def _segment(samples: np.ndarray, sps: int) -> np.ndarray:
    n_sym = samples.size // sps
    return samples[: n_sym * sps].reshape(n_sym, sps)


def correlation_demodulate(
    received: SampledSignal, config: SchemeConfig, bank_scale: float = 1.0
) -> np.ndarray:
    """Generic minimum-distance receiver against noiseless candidates.

    Each symbol interval is compared with the same interval of every
    candidate waveform (the formula or scheme synthesized with that symbol
    value held constant); the closest candidate wins.
    """
    bank = candidate_bank(config) * bank_scale
    sps = config.samples_per_symbol
    rx = _segment(np.asarray(received.samples, dtype=float), sps)
    # distances per symbol interval against each candidate row
    best = np.empty(rx.shape[0], dtype=np.int64)
    dist = np.empty((bank.shape[0], rx.shape[0]))
    for m in range(bank.shape[0]):
        diff = rx - _segment(bank[m], sps)
        dist[m] = np.einsum("ij,ij->i", diff, diff)
    np.argmin(dist, axis=0, out=best)
    return labels_to_bits(best, config.bits_per_symbol)


def _bank_scale(reference: SampledSignal | None, config: SchemeConfig) -> float:
    """Gain mismatch between the normalized reference and raw candidates.

    Re-synthesizing from the config reproduces the unnormalized waveform,
    so the power ratio against the reference recovers the scale applied
    before the channel.
    """
    if reference is None:
        return 1.0
    raw_power = modulate(config).power
    if raw_power <= 0:
        return 1.0
    return float(np.sqrt(reference.power / raw_power))


def _discriminator_bits(
    received: SampledSignal, config: SchemeConfig
) -> np.ndarray:
    """Limiter-discriminator for the continuous-phase schemes.

    The complex baseband is selected by a brick-wall filter wide enough
    for the scheme's deviation plus one symbol-rate of modulation
    sidebands; without that front-end selection the discriminator sits
    below its click threshold at low per-sample SNR.
    """
    fs = received.sample_rate
    n = len(received)
    t = np.arange(n) / fs
    z = hilbert(np.asarray(received.samples, dtype=float)) * np.exp(
        -2j * np.pi * config.carrier_freq * t
    )
    deviation = {"bfsk": 0.5, "msk": 0.25, "gmsk": 0.25}[config.scheme]
    cutoff = (deviation + 1.0) * config.symbol_rate
    spectrum = np.fft.fft(z)
    freqs = np.fft.fftfreq(n, d=1.0 / fs)
    spectrum[np.abs(freqs) > cutoff] = 0.0
    z = np.fft.ifft(spectrum)

    phase = np.unwrap(np.angle(z))
    steps = np.diff(phase) * fs / (2 * np.pi)
    inst_freq = np.concatenate((steps[:1], steps))  # keep one value per sample
    sps = config.samples_per_symbol
    frames = _segment(inst_freq, sps)
    lo, hi = sps // 4, sps - sps // 4  # central window avoids transitions
    centers = frames[:, lo:hi].mean(axis=1)
    return (centers > 0.0).astype(np.uint8)


def _envelope_bits(
    received: SampledSignal, config: SchemeConfig, reference: SampledSignal | None
) -> np.ndarray:
    """Classic on-off keying receiver: envelope sampled at symbol centers
    against a fixed threshold at half the on-level envelope."""
    sps = config.samples_per_symbol
    centers = np.arange(len(received) // sps) * sps + sps // 2
    envelope = np.abs(hilbert(np.asarray(received.samples, dtype=float)))
    threshold = config.amplitude / 2.0
    if reference is not None and reference.origin_bits is not None:
        ref_env = np.abs(hilbert(np.asarray(reference.samples, dtype=float)))
        ref_centers = ref_env[centers[: reference.origin_bits.size]]
        on = reference.origin_bits[: ref_centers.size] == 1
        if on.any():
            threshold = float(ref_centers[on].mean() / 2.0)
    return (envelope[centers] > threshold).astype(np.uint8)


def _nearest_bits(points: np.ndarray, scheme: str) -> np.ndarray:
    alphabet = constellation(scheme)
    labels = np.argmin(np.abs(points[:, None] - alphabet[None, :]), axis=1)
    bits_per = int(np.log2(alphabet.size))
    return labels_to_bits(labels, bits_per)


def demodulate(
    received: SampledSignal,
    config: SchemeConfig,
    reference: SampledSignal | None = None,
) -> np.ndarray:
    """Recover the bit stream with the scheme's standard decision rule.

    Quadrature schemes use coherent projection and minimum-distance
    decisions, the continuous-phase family uses a frequency discriminator,
    on-off keying uses the classic envelope detector, and formula-driven
    schemes fall back to the per-symbol correlation receiver. The
    reference (the noiseless transmitted waveform) calibrates scale where
    a receiver needs it.
    """
    scheme = config.scheme
    if scheme in ANALOG_SCHEMES:
        raise DemodulationError(f"{scheme} carries no bit ground truth")
    if config.is_formula or scheme in ("fsk", "chirp"):
        return correlation_demodulate(
            received, config, bank_scale=_bank_scale(reference, config)
        )
    if scheme in ("bfsk", "msk", "gmsk"):
        return _discriminator_bits(received, config)
    if scheme == "ook":
        return _envelope_bits(received, config, reference)

    points = extract_constellation(received, config)
    if scheme == "bpsk":
        return (points.real < 0).astype(np.uint8)
    if scheme == "qpsk":
        position = np.round(np.angle(points) / (np.pi / 2)).astype(np.int64) % 4
        labels = position ^ (position >> 1)  # back to Gray labels
        return labels_to_bits(labels, 2)
    if scheme.startswith("qam"):
        # blind gain normalization against the unit-energy alphabet
        gain = float(np.sqrt(np.mean(np.abs(points) ** 2)))
        if gain <= 0:
            raise DemodulationError("received constellation has no energy")
        return _nearest_bits(points / gain, scheme)
    raise DemodulationError(f"no demodulator for scheme {scheme!r}")


def ber(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    """Bit errors divided by bits transferred."""
    tx = np.asarray(tx_bits)
    rx = np.asarray(rx_bits)
    if tx.size == 0:
        raise SignalError("cannot compute an error rate over zero bits")
    if tx.size != rx.size:
        raise SignalError(
            f"bit streams differ in length: {tx.size} vs {rx.size}"
        )
    return float(np.count_nonzero(tx != rx) / tx.size)


def spectral_efficiency_theoretical(order: int) -> float:
    """log2(M) bits per second per hertz for an M-point constellation."""
    if order < 2 or order & (order - 1):
        raise SignalError(f"constellation size must be a power of two, got {order}")
    return float(int(order).bit_length() - 1)


def spectral_efficiency_measured(bit_rate: float, bandwidth_hz: float) -> float:
    """Gross bit rate over occupied bandwidth, bits per second per hertz."""
    if bandwidth_hz <= 0:
        raise SignalError("bandwidth must be positive")
    return bit_rate / bandwidth_hz


# ---------------------------------------------------------------------------
# comparison reports


@dataclass(frozen=True)
class MetricsParams:
    welch_segment: int = 256
    welch_overlap: float = 0.5
    welch_window: str = "hann"
    obw_fraction: float = 0.99
    spectrogram_fft: int = 256
    spectrogram_hop: int = 128


@dataclass
class MetricsReport:
    """One comparison row: a scheme's measured quality figures."""

    scheme: str
    target_snr_db: float | None = None
    snr_db: float | None = None
    ber: float | None = None
    spectral_efficiency: float | None = None
    occupied_bandwidth_hz: float | None = None
    guard_count: int = 0
    seeds: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "modulation": self.scheme,
            "target_snr_db": self.target_snr_db,
            "snr_db": self.snr_db,
            "ber": self.ber,
            "spectral_eff": self.spectral_efficiency,
            "bandwidth_hz": self.occupied_bandwidth_hz,
            "guard_count": self.guard_count,
            "seeds": self.seeds,
            "error": self.error,
        }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


def write_comparison_csv(rows: list[MetricsReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["modulation", "snr_db", "ber", "spectral_eff", "bandwidth_hz"])
        for row in rows:
            writer.writerow(
                [
                    row.scheme,
                    _fmt(row.snr_db),
                    _fmt(row.ber),
                    _fmt(row.spectral_efficiency),
                    _fmt(row.occupied_bandwidth_hz),
                ]
            )


def write_comparison_json(rows: list[MetricsReport], path: str | Path) -> None:
    def scrub(value):
        if isinstance(value, float) and math.isinf(value):
            return "inf"
        if isinstance(value, dict):
            return {k: scrub(v) for k, v in value.items()}
        return value

    payload = {"rows": [scrub(r.to_dict()) for r in rows]}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


@dataclass
class SchemeRunArtifacts:
    report: MetricsReport
    psd: PsdEstimate | None = None
    spectro: Spectrogram | None = None
    points: np.ndarray | None = None


def run_scheme(
    config: SchemeConfig,
    channel: ChannelConfig,
    params: MetricsParams = MetricsParams(),
    bits_seed: int | None = None,
    collect: bool = False,
) -> SchemeRunArtifacts:
    """Synthesize, normalize, impair and measure one scheme."""
    if bits_seed is not None:
        config = replace(config, seed=bits_seed)
    report = MetricsReport(
        scheme=config.scheme,
        target_snr_db=channel.target_snr_db,
        seeds={"bits": config.seed, "channel": channel.seed},
    )
    artifacts = SchemeRunArtifacts(report=report)

    clean_raw = modulate(config)
    clean, _scale = normalize_power(clean_raw, 1.0)
    report.guard_count = clean.guard_count

    received, pre_noise, _details = apply_channel(clean, channel)
    snr = (
        math.inf
        if channel.target_snr_db is None
        else 10.0
        * math.log10(
            pre_noise.power
            / max(np.mean(np.abs(received.samples - pre_noise.samples) ** 2), 1e-300)
        )
    )
    report.snr_db = snr

    psd = welch_psd(
        clean,
        segment_length=params.welch_segment,
        overlap_fraction=params.welch_overlap,
        window=params.welch_window,
    )
    report.occupied_bandwidth_hz = occupied_bandwidth(psd, params.obw_fraction)

    if clean.origin_bits is not None:
        decided = demodulate(received, config, reference=clean)
        report.ber = ber(clean.origin_bits, decided)
        bit_rate = config.bits_per_symbol * config.symbol_rate
        report.spectral_efficiency = spectral_efficiency_measured(
            bit_rate, report.occupied_bandwidth_hz
        )

    if collect:
        artifacts.psd = psd
        artifacts.spectro = spectrogram(
            clean, fft_length=params.spectrogram_fft, hop=params.spectrogram_hop
        )
        if config.is_formula or config.scheme not in ANALOG_SCHEMES:
            artifacts.points = extract_constellation(received, config)
    return artifacts


def compare(
    configs: list[SchemeConfig],
    channel: ChannelConfig,
    params: MetricsParams = MetricsParams(),
    master_seed: int = 0,
) -> list[MetricsReport]:
    """One report row per scheme under identical channel conditions.

    Every row shares the bit seed, the channel seed and unit-power
    normalization; a failing row records its error and the run continues.
    """
    bits_seed = _seed_from(master_seed, 0)
    channel = replace(channel, seed=_seed_from(master_seed, 1))
    rows = []
    for config in configs:
        try:
            rows.append(
                run_scheme(config, channel, params, bits_seed=bits_seed).report
            )
        except Exception as exc:  # keep the table going; record the failure
            rows.append(
                MetricsReport(
                    scheme=config.scheme,
                    target_snr_db=channel.target_snr_db,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return rows


def _seed_from(master: int, stream: int) -> int:
    seq = np.random.SeedSequence([int(master), int(stream)])
    return int(seq.generate_state(1, np.uint64)[0] % (2**63))
