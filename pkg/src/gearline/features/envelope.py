"""Log-envelope spectrum and the features read off it."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.fft

from gearline.features.base import FeatureError, FeatureVector
from gearline.kinematics import LES_DOMAIN, FaultFrequency
from gearline.signals import (
    LOG_FLOOR,
    BandSpec,
    Spectrum,
    TimeSignal,
    analytic_signal,
    bandpass,
)


def log_envelope_spectrum(signal: TimeSignal, band: BandSpec, prefiltered: bool = False) -> Spectrum:
    """Power spectrum of the log squared envelope of the band-passed signal.

    The band-pass filter is applied here unless ``prefiltered`` says the caller
    already did it with the same band.
    """
    if not prefiltered:
        signal = bandpass(signal, band)
    envelope_sq = np.abs(analytic_signal(signal)) ** 2
    log_env = np.log(envelope_sq + LOG_FLOOR)
    les = np.abs(scipy.fft.rfft(log_env)) ** 2
    return Spectrum(signal.sample_rate_hz / len(signal), les)


def _fmt_hz(hz: float) -> str:
    return f"{hz:.4f}"


def les_limited(les: Spectrum, domain=LES_DOMAIN) -> FeatureVector:
    lo, hi = float(domain[0]), float(domain[1])
    top = les.bin_hz * (les.amplitudes.size - 1)
    if top < hi:
        raise FeatureError(f"spectrum reaches only {top:.2f} Hz, domain needs {hi} Hz")
    k_lo = int(np.ceil(lo / les.bin_hz - 1e-9))
    k_hi = int(np.floor(hi / les.bin_hz + 1e-9))
    ks = np.arange(k_lo, k_hi + 1)
    names = tuple(f"les_{_fmt_hz(k * les.bin_hz)}" for k in ks)
    return FeatureVector(names, les.amplitudes[ks])


def ff_window_value(les: Spectrum, hz: float, tol_frac: float) -> float:
    """Max amplitude within hz*(1 -/+ tol); nearest bin when the window holds none."""
    amps = les.amplitudes
    if amps.size == 0:
        raise FeatureError("empty spectrum")
    k_lo = int(np.ceil(hz * (1 - tol_frac) / les.bin_hz - 1e-9))
    k_hi = int(np.floor(hz * (1 + tol_frac) / les.bin_hz + 1e-9))
    k_lo, k_hi = max(k_lo, 0), min(k_hi, amps.size - 1)
    if k_lo <= k_hi:
        # argmax returns the first maximum, so ties resolve to the lower frequency
        return float(amps[k_lo + int(np.argmax(amps[k_lo : k_hi + 1]))])
    k_near = int(np.floor(hz / les.bin_hz))
    if k_near + 1 < amps.size and (k_near + 1) * les.bin_hz - hz < hz - k_near * les.bin_hz:
        k_near += 1
    return float(amps[min(k_near, amps.size - 1)])


def les_ff(les: Spectrum, ffs: Sequence[FaultFrequency], tol_frac: float = 0.01) -> FeatureVector:
    if not ffs:
        raise FeatureError("no fault frequencies given")
    values = [ff_window_value(les, ff.hz, tol_frac) for ff in ffs]
    return FeatureVector(tuple(f"lesff_{ff.label}" for ff in ffs), np.array(values))
