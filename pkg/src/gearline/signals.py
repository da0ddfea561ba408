"""Deterministic signal transforms used by every feature family.

FIR band-pass design, forward-backward (zero-phase) filtering, the analytic
signal, magnitude spectra, short-time log spectrograms and an unnormalized
DCT-II. All functions are pure; inputs are never modified in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy import signal as sp_signal

LOG_FLOOR = 1e-12


class SignalError(ValueError):
    """Raised when a signal or band violates a transform's preconditions."""


@dataclass(frozen=True)
class TimeSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise SignalError("samples must be one-dimensional")
        if x.size < 2:
            raise SignalError("a signal needs at least 2 samples")
        if not self.sample_rate_hz > 0:
            raise SignalError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(x)):
            raise SignalError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "TimeSignal":
        return TimeSignal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class BandSpec:
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not (0 < self.low_hz < self.high_hz):
            raise SignalError(f"invalid band ({self.low_hz}, {self.high_hz})")

    def check_rate(self, sample_rate_hz: float) -> None:
        if not self.high_hz < sample_rate_hz / 2:
            raise SignalError(
                f"band upper edge {self.high_hz} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)"
            )


@dataclass(frozen=True)
class FirKernel:
    taps: np.ndarray
    design_band: BandSpec
    design_rate_hz: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.size % 2 == 0:
            raise SignalError("FIR kernel must have an odd number of taps")
        scale = np.max(np.abs(taps))
        if not np.allclose(taps, taps[::-1], rtol=0, atol=1e-12 * scale):
            raise SignalError("FIR kernel is not symmetric")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return self.taps.size

    def frequency_response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Single-pass complex response at the requested frequencies."""
        _, h = sp_signal.freqz(self.taps, worN=np.asarray(freqs_hz, float), fs=self.design_rate_hz)
        return h


@dataclass(frozen=True)
class Spectrum:
    bin_hz: float
    amplitudes: np.ndarray = field(repr=False)

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.amplitudes.size) * self.bin_hz


def fir_tap_count(low_hz: float, sample_rate_hz: float, periods: float = 7.5) -> int:
    """Window length covering `periods` cycles of the lower cutoff, forced odd."""
    n = math.ceil(periods * sample_rate_hz / low_hz)
    return n + 1 if n % 2 == 0 else n


def design_bandpass_fir(band: BandSpec, sample_rate_hz: float, numtaps: int | None = None) -> FirKernel:
    """Hamming-window band-pass design; cutoffs are the -6 dB points.

    By default the kernel spans 7.5 periods of the lower cutoff. An explicit
    ``numtaps`` (rounded up to odd) overrides the rule, which the critical-band
    split in the psychoacoustic model relies on.
    """
    band.check_rate(sample_rate_hz)
    if numtaps is None:
        numtaps = fir_tap_count(band.low_hz, sample_rate_hz)
    elif numtaps % 2 == 0:
        numtaps += 1
    taps = sp_signal.firwin(
        numtaps, [band.low_hz, band.high_hz], pass_zero=False, window="hamming", fs=sample_rate_hz
    )
    taps = 0.5 * (taps + taps[::-1])
    return FirKernel(taps, band, float(sample_rate_hz))


def _causal_fir(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    return sp_signal.oaconvolve(x, taps, mode="full")[: x.size]


def filter_forward_backward(signal: TimeSignal, kernel: FirKernel) -> TimeSignal:
    """Zero-phase filtering: causal pass, time-reversed pass, reflective edge padding."""
    if kernel.design_rate_hz != signal.sample_rate_hz:
        raise SignalError("kernel was designed for a different sample rate")
    n_taps = len(kernel)
    if len(signal) <= 3 * n_taps:
        raise SignalError(
            f"signal of {len(signal)} samples is too short for a {n_taps}-tap kernel"
        )
    padded = np.pad(signal.samples, n_taps, mode="reflect")
    y = _causal_fir(padded, kernel.taps)
    y = _causal_fir(y[::-1], kernel.taps)[::-1]
    return signal.with_samples(y[n_taps:-n_taps])


def bandpass(signal: TimeSignal, band: BandSpec) -> TimeSignal:
    return filter_forward_backward(signal, design_bandpass_fir(band, signal.sample_rate_hz))


def analytic_signal(signal: TimeSignal | np.ndarray) -> np.ndarray:
    """Discrete analytic signal: keep DC and Nyquist, double positive bins, zero the rest."""
    x = signal.samples if isinstance(signal, TimeSignal) else np.asarray(signal, dtype=float)
    n = x.size
    spec = scipy.fft.fft(x)
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return scipy.fft.ifft(spec * h)


def magnitude_spectrum(signal: TimeSignal) -> Spectrum:
    amps = np.abs(scipy.fft.rfft(signal.samples))
    return Spectrum(signal.sample_rate_hz / len(signal), amps)


def frame_count(n_samples: int, window: int, hop: int) -> int:
    return (n_samples - window) // hop + 1


def hop_length(window: int, overlap_frac: float) -> int:
    return int(round(window * (1.0 - overlap_frac)))


def frame_signal(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Strided (frames x window) view; trailing partial frames are dropped."""
    n_frames = frame_count(x.size, window, hop)
    if n_frames < 1:
        raise SignalError(f"window of {window} samples does not fit into {x.size} samples")
    return np.lib.stride_tricks.sliding_window_view(x, window)[::hop][:n_frames]


def stft_magnitude(signal: TimeSignal, window: int, overlap_frac: float) -> np.ndarray:
    """Hamming-windowed magnitude spectra, shape (frames, window // 2 + 1)."""
    if not 0 <= overlap_frac < 1:
        raise SignalError("overlap fraction must lie in [0, 1)")
    if window < 2 or 2 * window > len(signal):
        raise SignalError(f"window of {window} samples must fit at least twice into the signal")
    hop = max(hop_length(window, overlap_frac), 1)
    frames = frame_signal(signal.samples, window, hop)
    return np.abs(scipy.fft.rfft(frames * np.hamming(window), axis=1))


def log_spectrogram(signal: TimeSignal, window_len_s: float, overlap_frac: float):
    """Log magnitude spectrogram (time x frequency) as a FeatureMatrix."""
    from gearline.features.base import FeatureMatrix

    window = int(round(window_len_s * signal.sample_rate_hz))
    mags = stft_magnitude(signal, window, overlap_frac)
    freqs = scipy.fft.rfftfreq(window, 1.0 / signal.sample_rate_hz)
    return FeatureMatrix(
        row_names=tuple(f"t{k}" for k in range(mags.shape[0])),
        col_names=tuple(f"{f:.6g}" for f in freqs),
        values=np.log(mags + LOG_FLOOR),
    )


def dct2(x, axis: int = -1) -> np.ndarray:
    """Unnormalized DCT-II: X[k] = sum_n x[n] cos(pi k (2n + 1) / 2N)."""
    x = np.asarray(x, dtype=float)
    if x.shape[axis] < 1:
        raise SignalError("dct2 needs at least one sample")
    # scipy's unnormalized type-II carries an extra factor of two
    return 0.5 * scipy.fft.dct(x, type=2, axis=axis)
