"""Simplified roughness and fluctuation-strength model.

Both metrics share one mechanism: the band-passed signal is split into
eight overlapping critical-band channels between 1150 and 5100 Hz (equal
Bark width), each channel's Hilbert envelope is framed, and the weighted
modulation power of every frame is normalized by the squared envelope mean.
A frame's metric is a calibration gain times the sum over bands. Roughness
weights modulation rates around 70 Hz, fluctuation strength around 4 Hz.

The weighting is a Gaussian in log-modulation-frequency:
``W(f) = 2 ** -(log(f / peak) / log(edge / peak)) ** 2`` where ``edge`` is the
lower half-power point below the peak and the upper one above it. It is
strictly positive, unimodal and equals 1/2 at both half-power points.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.fft
from scipy.optimize import brentq

from gearline.features.base import FeatureError, FeatureVector, concat
from gearline.signals import (
    BandSpec,
    TimeSignal,
    bandpass,
    frame_signal,
)

# bands whose envelope mean is this far below the loudest band in a frame are ignored
INACTIVE_BAND_RATIO = 1e-3
# channel half-width in units of the channel's own band width
CHANNEL_SPREAD = 2.0

# Frozen output of calibrate_gains() for the default configuration at 50 kHz;
# tests re-derive them.
DEFAULT_ROUGHNESS_GAIN = 0.5726760047424763
DEFAULT_FLUCTUATION_GAIN = 0.5003921263151806


def bark(f_hz):
    f = np.asarray(f_hz, dtype=float)
    return 13.0 * np.arctan(0.00076 * f) + 3.5 * np.arctan((f / 7500.0) ** 2)


def bark_band_edges(f_lo: float = 1150.0, f_hi: float = 5100.0, n_bands: int = 8) -> tuple[float, ...]:
    """Edges of ``n_bands`` bands of equal Bark width between f_lo and f_hi."""
    targets = np.linspace(bark(f_lo), bark(f_hi), n_bands + 1)
    edges = [f_lo]
    for z in targets[1:-1]:
        edges.append(brentq(lambda f: bark(f) - z, f_lo, f_hi, xtol=1e-9))
    edges.append(f_hi)
    return tuple(float(e) for e in edges)


@dataclass(frozen=True)
class ModulationWeighting:
    peak_hz: float
    half_power_lo: float
    half_power_hi: float

    def __post_init__(self):
        if not 0 < self.half_power_lo < self.peak_hz < self.half_power_hi:
            raise ValueError(f"weighting points not ordered: {self}")

    def __call__(self, f_hz) -> np.ndarray:
        f = np.asarray(f_hz, dtype=float)
        out = np.zeros_like(f)
        pos = f > 0
        edge = np.where(f[pos] >= self.peak_hz, self.half_power_hi, self.half_power_lo)
        u = np.log(f[pos] / self.peak_hz) / np.log(edge / self.peak_hz)
        out[pos] = 2.0 ** (-(u**2))
        return out


@dataclass(frozen=True)
class ModulationModelConfig:
    band_edges_hz: tuple[float, ...] = field(default_factory=bark_band_edges)
    roughness_weight: ModulationWeighting = ModulationWeighting(70.0, 30.0, 150.0)
    fluctuation_weight: ModulationWeighting = ModulationWeighting(4.0, 0.5, 20.0)
    frame_s: float = 0.2
    hop_s: float = 0.1
    fs_frame_s: float = 2.0
    fs_hop_s: float = 1.0
    roughness_min_mod_hz: float = 10.0
    fluctuation_min_mod_hz: float = 1.0
    calibration_gain_R: float = DEFAULT_ROUGHNESS_GAIN
    calibration_gain_F: float = DEFAULT_FLUCTUATION_GAIN

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges_hz)
        object.__setattr__(self, "band_edges_hz", edges)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("band edges must be strictly increasing")
        if not (self.calibration_gain_R > 0 and self.calibration_gain_F > 0):
            raise ValueError("calibration gains must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_edges_hz"] = list(self.band_edges_hz)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationModelConfig":
        d = dict(d)
        for key in ("roughness_weight", "fluctuation_weight"):
            if key in d and isinstance(d[key], dict):
                d[key] = ModulationWeighting(**d[key])
        if "band_edges_hz" in d:
            d["band_edges_hz"] = tuple(d["band_edges_hz"])
        return cls(**d)


def critical_band_gains(freqs_hz: np.ndarray, edges_hz) -> np.ndarray:
    """Amplitude responses of the critical-band channels, shape (bands, freqs).

    Channel k is centred on the Bark midpoint of [edges[k], edges[k+1]] and
    falls off as a half-cosine over CHANNEL_SPREAD band widths on either side,
    so neighbouring channels overlap. The flat-ish top keeps the sidebands of
    a modulated tone inside the channel that holds its carrier.
    """
    z_edges = bark(np.asarray(edges_hz, dtype=float))
    centers = 0.5 * (z_edges[:-1] + z_edges[1:])
    widths = np.diff(z_edges)
    z = bark(freqs_hz)
    u = (z[None, :] - centers[:, None]) / (CHANNEL_SPREAD * widths[:, None])
    return np.where(np.abs(u) < 1.0, np.cos(0.5 * np.pi * u), 0.0)


def band_envelopes(signal: TimeSignal, cfg: ModulationModelConfig) -> np.ndarray:
    """Hilbert envelopes of each critical-band channel, shape (bands, samples).

    Channels are applied as zero-phase filters on the record's spectrum and
    the analytic signal is formed in the same step. Samples within four
    narrowest-band periods of either end are trimmed (wrap-around transients).
    """
    x = signal.samples
    n = x.size
    fs = signal.sample_rate_hz
    spec = scipy.fft.rfft(x)
    gains = critical_band_gains(scipy.fft.rfftfreq(n, 1.0 / fs), cfg.band_edges_hz)
    one_sided = np.full(spec.size, 2.0)
    one_sided[0] = 1.0
    if n % 2 == 0:
        one_sided[-1] = 1.0
    full = np.zeros((gains.shape[0], n), dtype=complex)
    full[:, : spec.size] = gains * (spec * one_sided)
    envs = np.abs(scipy.fft.ifft(full, axis=1))
    trim = int(np.ceil(4.0 * fs / np.min(np.diff(cfg.band_edges_hz))))
    if n <= 2 * trim:
        raise FeatureError("signal too short for the critical-band split")
    return envs[:, trim:-trim]


def _modulation_course(envs, fs, frame_s, hop_s, weighting, min_mod_hz, gain) -> np.ndarray:
    if frame_s < 2.0 / min_mod_hz:
        raise FeatureError(
            f"frame of {frame_s} s is shorter than two periods of {min_mod_hz} Hz modulation"
        )
    window = int(round(frame_s * fs))
    hop = int(round(hop_s * fs))
    if window > envs.shape[1]:
        raise FeatureError(f"signal shorter than one {frame_s} s frame")
    weights = weighting(scipy.fft.rfftfreq(window, 1.0 / fs))
    # one-sided power normalization: interior bins count twice
    scale = np.full(weights.size, 2.0 / window**2)
    scale[0] = 0.0
    if window % 2 == 0:
        scale[-1] = 1.0 / window**2
    weights = weights * scale

    means, powers = [], []
    for env in envs:
        frames = frame_signal(env, window, hop)
        mean = frames.mean(axis=1)
        spec = scipy.fft.rfft(frames - mean[:, None], axis=1)
        powers.append((np.abs(spec) ** 2) @ weights)
        means.append(mean)
    means, powers = np.array(means), np.array(powers)
    active = means > INACTIVE_BAND_RATIO * means.max(axis=0, keepdims=True)
    depth_sq = np.where(active, powers / np.where(active, means, 1.0) ** 2, 0.0)
    return gain * depth_sq.sum(axis=0)


def roughness_time_course(signal: TimeSignal, cfg: ModulationModelConfig, envs=None) -> np.ndarray:
    envs = band_envelopes(signal, cfg) if envs is None else envs
    return _modulation_course(
        envs, signal.sample_rate_hz, cfg.frame_s, cfg.hop_s,
        cfg.roughness_weight, cfg.roughness_min_mod_hz, cfg.calibration_gain_R,
    )


def fluctuation_strength_time_course(signal: TimeSignal, cfg: ModulationModelConfig, envs=None) -> np.ndarray:
    envs = band_envelopes(signal, cfg) if envs is None else envs
    return _modulation_course(
        envs, signal.sample_rate_hz, cfg.fs_frame_s, cfg.fs_hop_s,
        cfg.fluctuation_weight, cfg.fluctuation_min_mod_hz, cfg.calibration_gain_F,
    )


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x**2)))


def pa_features(signal: TimeSignal, cfg: ModulationModelConfig) -> FeatureVector:
    """RMS of the roughness and fluctuation-strength time courses."""
    envs = band_envelopes(signal, cfg)
    r = roughness_time_course(signal, cfg, envs)
    f = fluctuation_strength_time_course(signal, cfg, envs)
    return FeatureVector(("pa_roughness", "pa_fluctuation"), np.array([rms(r), rms(f)]))


def palff(pa_scaled: FeatureVector, les_ff_scaled: FeatureVector) -> FeatureVector:
    if len(pa_scaled) == 0 or len(les_ff_scaled) == 0:
        raise FeatureError("PALFF needs both psychoacoustic and fault-frequency features")
    return concat(pa_scaled, les_ff_scaled)


def am_tone(carrier_hz, mod_hz, depth, duration_s, fs, phase=0.0) -> TimeSignal:
    t = np.arange(int(round(duration_s * fs))) / fs
    x = (1.0 + depth * np.cos(2 * np.pi * mod_hz * t)) * np.sin(2 * np.pi * carrier_hz * t + phase)
    return TimeSignal(x, fs)


def calibrate_gains(
    cfg: ModulationModelConfig,
    sample_rate_hz: float = 50000.0,
    duration_s: float = 2**18 / 50000.0,
    carrier_hz: float = 2000.0,
    band: BandSpec = BandSpec(1150.0, 5100.0),
) -> ModulationModelConfig:
    """Gains that map 100 %-AM references (70 Hz for R, 4 Hz for F) to 1.0."""
    unit = replace(cfg, calibration_gain_R=1.0, calibration_gain_F=1.0)
    ref_r = bandpass(am_tone(carrier_hz, unit.roughness_weight.peak_hz, 1.0, duration_s, sample_rate_hz), band)
    ref_f = bandpass(am_tone(carrier_hz, unit.fluctuation_weight.peak_hz, 1.0, duration_s, sample_rate_hz), band)
    gain_r = 1.0 / rms(roughness_time_course(ref_r, unit))
    gain_f = 1.0 / rms(fluctuation_strength_time_course(ref_f, unit))
    return replace(cfg, calibration_gain_R=gain_r, calibration_gain_F=gain_f)
