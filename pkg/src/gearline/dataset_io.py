"""WAV measurements and the labelled manifest that lists them."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from gearline.signals import TimeSignal

LABELS = ("good", "warning", "error")
SPLITS = ("train", "validation", "disturbance")
NOISE_TAGS = ("none", "low", "loud", "hammer", "air_pressure", "music", "speech", "ventilation", "wrench")

NOMINAL_RATE = 50000.0
NOMINAL_SAMPLES = 2**18
MIN_LENIENT_RATE = 16000.0
MIN_LENIENT_SECONDS = 2.0


class DatasetError(ValueError):
    pass


def read_wav(path) -> TimeSignal:
    """Mono WAV to a float signal; int16 is scaled by 1/32768, float32 kept as is."""
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, wavfile.WavFileWarning, EOFError) as exc:
        raise DatasetError(f"{path}: unreadable WAV ({exc})") from exc
    if data.ndim != 1:
        raise DatasetError(f"{path}: expected mono, found {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    else:
        raise DatasetError(f"{path}: unsupported sample format {data.dtype}")
    if data.size == 0:
        raise DatasetError(f"{path}: no samples")
    return TimeSignal(samples, float(rate))


def write_wav(path, signal: TimeSignal) -> None:
    """Float32 mono WAV. The rate must be an integer number of hertz."""
    rate = signal.sample_rate_hz
    if rate != int(rate):
        raise DatasetError("WAV needs an integral sample rate")
    wavfile.write(Path(path), int(rate), signal.samples.astype(np.float32))


def validate_measurement(signal: TimeSignal, expected_rate=NOMINAL_RATE, expected_len=NOMINAL_SAMPLES, strict=True):
    """Raise DatasetError when a measurement does not fit the acquisition contract.

    Strict mode demands the nominal rate and length exactly. Lenient mode
    accepts any rate of at least 16 kHz and any record of at least 2 s.
    """
    if strict:
        if signal.sample_rate_hz != expected_rate:
            raise DatasetError(f"sample rate {signal.sample_rate_hz:g} Hz, expected {expected_rate:g} Hz")
        if len(signal) != expected_len:
            raise DatasetError(f"{len(signal)} samples, expected {expected_len}")
        return
    if signal.sample_rate_hz < MIN_LENIENT_RATE:
        raise DatasetError(f"sample rate {signal.sample_rate_hz:g} Hz below {MIN_LENIENT_RATE:g} Hz")
    if signal.duration_s < MIN_LENIENT_SECONDS:
        raise DatasetError(f"record of {signal.duration_s:.3f} s shorter than {MIN_LENIENT_SECONDS:g} s")


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    noise: str
    split: str


@dataclass(frozen=True)
class Manifest:
    root: Path
    records: tuple[ManifestRecord, ...]

    def select(self, split=None, label=None):
        return [r for r in self.records if (split is None or r.split == split) and (label is None or r.label == label)]

    def resolve(self, record: ManifestRecord) -> Path:
        return self.root / record.path

    def load(self, record: ManifestRecord, strict=True) -> TimeSignal:
        sig = read_wav(self.resolve(record))
        try:
            validate_measurement(sig, strict=strict)
        except DatasetError as exc:
            raise DatasetError(f"{record.path}: {exc}") from None
        return sig


def _check_vocab(value, allowed, what, where):
    if value not in allowed:
        raise DatasetError(f"{where}: {what} {value!r} not in {allowed}")


def parse_manifest(entries: list, root) -> Manifest:
    records, seen = [], set()
    for i, e in enumerate(entries):
        where = f"manifest entry {i}"
        try:
            rec = ManifestRecord(str(e["path"]), e["label"], e.get("noise", "none"), e["split"])
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{where}: missing field {exc}") from None
        _check_vocab(rec.label, LABELS, "label", where)
        _check_vocab(rec.noise, NOISE_TAGS, "noise tag", where)
        _check_vocab(rec.split, SPLITS, "split", where)
        if rec.path in seen:
            raise DatasetError(f"{where}: duplicate path {rec.path}")
        seen.add(rec.path)
        records.append(rec)
    return Manifest(Path(root), tuple(records))


def load_manifest(path) -> Manifest:
    path = Path(path)
    with open(path) as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise DatasetError(f"{path}: manifest must be a JSON list")
    return parse_manifest(entries, path.parent)
