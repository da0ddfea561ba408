"""Log-mel spectrogram and log-envelope spectrogram features."""

from __future__ import annotations

import math

import numpy as np
import scipy.fft

from gearline.features.base import FeatureError, FeatureVector
from gearline.kinematics import GearTrain, fault_frequency_set
from gearline.signals import LOG_FLOOR, BandSpec, TimeSignal, dct2, stft_magnitude

ENVELOPE_WINDOW_S = 0.0088
ENVELOPE_MIN_HZ = 10.0
ENVELOPE_POOL = 11
LMS_SHAFT_CYCLES = 4


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_filterbank(
    n_fft_bins: int,
    sample_rate_hz: float,
    n_filters: int = 24,
    f_lo: float = 1150.0,
    f_hi: float = 5100.0,
    frame_len: int | None = None,
) -> np.ndarray:
    """Triangular filters (peak 1) with mel-equidistant peaks, shape (n_filters, n_fft_bins).

    The edge points m(f_lo) and m(f_hi) are the outer feet of the first and
    last triangle, so all peaks fall strictly inside (f_lo, f_hi). Bin k sits
    at k * fs / frame_len, with frame_len defaulting to 2 * (n_fft_bins - 1).
    """
    if not 0 < f_lo < f_hi < sample_rate_hz / 2:
        raise FeatureError(f"invalid mel range ({f_lo}, {f_hi}) for fs={sample_rate_hz}")
    if frame_len is None:
        frame_len = 2 * (n_fft_bins - 1)
    bin_hz = sample_rate_hz / frame_len
    points = mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_filters + 2))
    if np.min(np.diff(points)) <= bin_hz:
        raise FeatureError(
            f"{n_fft_bins} bins ({bin_hz:.1f} Hz apart) cannot resolve adjacent mel centers"
        )
    freqs = np.arange(n_fft_bins) * bin_hz
    bank = np.zeros((n_filters, n_fft_bins))
    for j in range(n_filters):
        left, center, right = points[j : j + 3]
        rising = (freqs - left) / (center - left)
        falling = (right - freqs) / (right - center)
        bank[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def log_mel_features(
    signal: TimeSignal,
    train: GearTrain,
    n_filters: int = 24,
    f_lo: float = 1150.0,
    f_hi: float = 5100.0,
) -> FeatureVector:
    """Log-mel energies of slots spanning four slowest-shaft cycles, 50 % overlap, time-major."""
    window_s = LMS_SHAFT_CYCLES / train.slowest_shaft_hz
    window = int(round(window_s * signal.sample_rate_hz))
    if window > len(signal):
        raise FeatureError(f"signal shorter than one {window_s:.3f} s slot")
    # a single slot is legal here, unlike the generic spectrogram which wants two
    if 2 * window > len(signal):
        seg = signal.samples[:window] * np.hamming(window)
        mags = np.abs(scipy.fft.rfft(seg))[None, :]
    else:
        mags = stft_magnitude(signal, window, 0.5)
    bank = mel_filterbank(mags.shape[1], signal.sample_rate_hz, n_filters, f_lo, f_hi, frame_len=window)
    lms = np.log(mags @ bank.T + LOG_FLOOR)
    names = tuple(f"lms_t{k}_b{j}" for k in range(lms.shape[0]) for j in range(n_filters))
    return FeatureVector(names, lms.reshape(-1))


def max_pool(x: np.ndarray, factor: int, axis: int = -1) -> np.ndarray:
    """Non-overlapping max pooling; a trailing short window is kept."""
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    n = x.shape[-1]
    starts = np.arange(0, n, factor)
    pooled = np.maximum.reduceat(x, starts, axis=-1)
    return np.moveaxis(pooled, -1, axis)


def envelope_spectrogram_layout(n_samples: int, sample_rate_hz: float, band: BandSpec):
    """Frame geometry shared by extraction and configuration checks."""
    window = int(round(ENVELOPE_WINDOW_S * sample_rate_hz))
    hop = int(round(window * 0.5))
    n_frames = (n_samples - window) // hop + 1
    env_rate = sample_rate_hz / hop
    dct_bin_hz = env_rate / (2 * n_frames)
    freqs = np.arange(window // 2 + 1) * sample_rate_hz / window
    rows = np.flatnonzero((freqs >= band.low_hz) & (freqs <= band.high_hz))
    first_bin = int(math.ceil(ENVELOPE_MIN_HZ / dct_bin_hz - 1e-9))
    return {
        "window": window,
        "hop": hop,
        "n_frames": n_frames,
        "dct_bin_hz": dct_bin_hz,
        "row_freqs_hz": freqs[rows],
        "rows": rows,
        "first_bin": first_bin,
        "pooled_hz": ENVELOPE_POOL * dct_bin_hz,
        "nyquist_hz": env_rate / 2,
    }


def check_envelope_spectrogram_config(train: GearTrain, n_samples: int, sample_rate_hz: float, band: BandSpec) -> list[str]:
    """Return violated design conditions for the envelope spectrogram (empty when fine)."""
    lay = envelope_spectrogram_layout(n_samples, sample_rate_hz, band)
    problems = []
    f1, _, f3 = train.shaft_hz
    if ENVELOPE_WINDOW_S >= 0.25 / f1:
        problems.append("window is not shorter than a quarter of a motor revolution")
    gmf2_max = train.mesh_hz[1] * (1 + train.speed_tolerance_frac)
    if lay["nyquist_hz"] < gmf2_max:
        problems.append(f"envelope Nyquist {lay['nyquist_hz']:.1f} Hz below second mesh {gmf2_max:.1f} Hz")
    ffs = [ff.hz for ff in fault_frequency_set(train, (ENVELOPE_MIN_HZ, lay["nyquist_hz"]))]
    if len(ffs) > 1 and np.min(np.diff(ffs)) <= lay["pooled_hz"]:
        problems.append("pooled envelope resolution does not separate adjacent fault frequencies")
    return problems


def log_envelope_spectrogram_features(signal: TimeSignal, train: GearTrain, band: BandSpec) -> FeatureVector:
    """Envelope spectra of the in-band rows of a short-window log spectrogram.

    Expects a band-passed signal. Each in-band frequency row of the log
    spectrogram is DCT-II transformed along time, envelope bins below 10 Hz are
    dropped and the rest max-pooled by 11; rows are flattened in order.
    """
    lay = envelope_spectrogram_layout(len(signal), signal.sample_rate_hz, band)
    if lay["n_frames"] < 2 * ENVELOPE_POOL:
        raise FeatureError(f"only {lay['n_frames']} frames, need at least {2 * ENVELOPE_POOL}")
    mags = stft_magnitude(signal, lay["window"], 0.5)
    log_rows = np.log(mags[:, lay["rows"]] + LOG_FLOOR).T
    env = np.abs(dct2(log_rows, axis=1))[:, lay["first_bin"] :]
    pooled = max_pool(env, ENVELOPE_POOL, axis=1)
    names = tuple(
        f"lesspec_{fr:.0f}hz_p{p}" for fr in lay["row_freqs_hz"] for p in range(pooled.shape[1])
    )
    return FeatureVector(names, pooled.reshape(-1))
