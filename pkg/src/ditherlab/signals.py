"""AM test signal, ReLU waveshaping, Welch PSD and distortion analysis.

The demonstration: an amplitude-modulated sine passed through a ReLU is
demodulated (energy appears at the modulator frequency), but the abrupt
nonlinearity also sprays distortion products across the spectrum.  Averaging
many independently dithered copies keeps the demodulated peak and suppresses
the distortion.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sp_signal

from .rngstreams import stream


class NyquistViolationError(ValueError):
    pass


class SegmentTooLongError(ValueError):
    pass


class SignalBinMissingError(ValueError):
    pass


@dataclass(frozen=True)
class Waveform:
    sample_rate: float  # cycles/s
    samples: np.ndarray


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectral density estimate."""

    freqs: np.ndarray  # cycles/s, ascending, 0 .. sample_rate/2
    power: np.ndarray  # PSD, >= 0
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DistortionReport:
    signal_power_db: float
    distortion_power_db: float  # aggregate over non-signal peaks; -inf if none
    noise_floor_db: float
    peaks: list  # (freq_hz, power_db), sorted by frequency, signal peak excluded


def synth_am(carrier_hz: float, mod_hz: float, sample_rate: float,
             duration_s: float) -> Waveform:
    """sin(2*pi*mod*t) * sin(2*pi*carrier*t), sampled for duration_s seconds."""
    if not 0 < mod_hz < carrier_hz < sample_rate / 2:
        raise NyquistViolationError(
            f"need 0 < mod ({mod_hz}) < carrier ({carrier_hz}) < fs/2 ({sample_rate / 2})")
    n = np.arange(int(sample_rate * duration_s))
    t = n / sample_rate
    samples = np.sin(2 * np.pi * mod_hz * t) * np.sin(2 * np.pi * carrier_hz * t)
    return Waveform(sample_rate=sample_rate, samples=samples)


def relu_waveshape(w: Waveform) -> Waveform:
    return Waveform(w.sample_rate, np.maximum(0.0, w.samples))


def parallel_dither_waveshape(w: Waveform, replicas: int, half_width: float,
                              seed: int) -> Waveform:
    """Average of `replicas` independently dithered, ReLU-shaped copies.

    Replica r adds uniform noise on [-half_width, +half_width] drawn from its
    own named stream, applies the ReLU, and the copies are summed in
    ascending replica order before dividing -- bit-reproducible for a given
    seed regardless of scheduling.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if half_width == 0:
        # every replica rectifies identically; skip the non-exact divide
        return relu_waveshape(w)
    n = w.samples.shape[0]
    acc = np.zeros(n)
    for r in range(replicas):
        noise = stream(seed, "signal-dither", r).uniform(-half_width, half_width, n)
        acc += np.maximum(0.0, w.samples + noise)
    return Waveform(w.sample_rate, acc / replicas)


def welch_psd(w: Waveform, segment: int = 8192, overlap: float = 0.5) -> Spectrum:
    """Welch-averaged one-sided PSD: Hann window, window power compensated.

    `segment` must be a power of two no longer than the waveform (radix-2
    transforms, no resampling).
    """
    n = w.samples.shape[0]
    if segment > n:
        raise SegmentTooLongError(f"segment {segment} longer than waveform ({n} samples)")
    if segment < 2 or segment & (segment - 1):
        raise ValueError(f"segment {segment} is not a power of two")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must be in [0, 1)")
    freqs, power = sp_signal.welch(
        w.samples, fs=w.sample_rate, window="hann", nperseg=segment,
        noverlap=int(segment * overlap), detrend=False, scaling="density")
    meta = {"window": "hann", "segment": segment, "overlap": overlap}
    return Spectrum(freqs=freqs, power=power, metadata=meta)


def integrated_power(s: Spectrum) -> float:
    """Total power implied by the PSD (trapezoid-free bin sum, df spacing)."""
    df = s.freqs[1] - s.freqs[0]
    return float(s.power.sum() * df)


def power_db(power: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, floor))


def envelope_fundamental_hz(mod_hz: float) -> float:
    """Spectral fundamental of the rectified envelope of a zero-mean
    sinusoidal modulator: |sin| repeats at twice the modulator frequency."""
    return 2.0 * mod_hz


def analyze_distortion(s: Spectrum, signal_hz: float, bin_tolerance_hz: float = 10.0,
                       peak_margin_db: float = 10.0,
                       exclude_hz=()) -> DistortionReport:
    """Split spectral peaks into the demodulated signal and distortion.

    The noise floor is the median PSD in dB.  Peaks are local maxima at least
    `peak_margin_db` above the floor, DC excluded.  The signal peak is the
    maximum within `bin_tolerance_hz` of `signal_hz`; every other peak is
    distortion and their linear powers are aggregated.  `exclude_hz` lists
    additional frequencies left out of the distortion aggregate -- e.g. the
    AM input bands at carrier +/- modulator, which a rectifier passes through
    linearly and which would otherwise mask the nonlinear products.
    """
    db = power_db(s.power)
    floor_db = float(np.median(db))

    in_signal_band = np.abs(s.freqs - signal_hz) <= bin_tolerance_hz
    if not in_signal_band.any():
        raise SignalBinMissingError(
            f"no frequency bin within {bin_tolerance_hz} Hz of {signal_hz} Hz")
    signal_idx = np.flatnonzero(in_signal_band)[np.argmax(db[in_signal_band])]
    signal_power_db = float(db[signal_idx])

    peak_idx, _ = sp_signal.find_peaks(db, height=floor_db + peak_margin_db)
    peak_idx = peak_idx[s.freqs[peak_idx] > bin_tolerance_hz]  # drop DC region
    keep = ~in_signal_band[peak_idx]
    for ex in exclude_hz:
        keep &= np.abs(s.freqs[peak_idx] - ex) > bin_tolerance_hz
    distortion_idx = peak_idx[keep]

    peaks = [(float(s.freqs[i]), float(db[i])) for i in distortion_idx]
    if distortion_idx.size:
        distortion_power_db = float(power_db(np.array([s.power[distortion_idx].sum()]))[0])
    else:
        distortion_power_db = float("-inf")
    return DistortionReport(signal_power_db=signal_power_db,
                            distortion_power_db=distortion_power_db,
                            noise_floor_db=floor_db, peaks=peaks)
