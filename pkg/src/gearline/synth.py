"""Synthetic geared-motor recordings with known faults and disturbances.

These are parametric caricatures used as a ground-truth oracle, not physical
simulations. A healthy motor is a set of gear-mesh tones plus a housing
resonance excited by broadband noise, both amplitude-modulated at the shaft
rates, on top of a white noise floor. Faults add either a periodic train of
resonance bursts (impulsive) or extra modulation (circumferential) at a
kinematic fault frequency.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal as sp_signal

from gearline.dataset_io import write_wav
from gearline.kinematics import FaultFrequency, GearTrain, fault_frequency_set, reference_train
from gearline.signals import TimeSignal

log = logging.getLogger(__name__)

RESONANCE_Q = 10.0
FAULT_DECAY_S = 0.004
IMPULSE_GAIN = 8.0
CIRCUMFERENTIAL_DEPTH = 0.5
OUTPUT_GAIN = 0.2
DEFAULT_RATE = 50000.0
DEFAULT_DURATION = 2**18 / DEFAULT_RATE

LEVEL_RATIOS = {"low": 0.5, "loud": 2.0}
DISTURBANCE_KINDS = ("hammer", "air_pressure", "music", "speech", "ventilation", "wrench")
SEVERITY_BANDS = {"good": (0.0, 0.05), "warning": (0.2, 0.4), "error": (0.8, 1.2)}


@dataclass(frozen=True)
class MotorRecipe:
    train: GearTrain = field(default_factory=reference_train)
    speed_deviation_frac: float = 0.0
    mesh_amplitudes: tuple[float, float] = (1.0, 0.6)
    sideband_depth: float = 0.05
    noise_floor_rms: float = 0.01
    housing_rms: float = 0.25
    resonance_hz: float = 3000.0
    duration_s: float = DEFAULT_DURATION
    sample_rate_hz: float = DEFAULT_RATE
    seed: int = 0

    def __post_init__(self):
        if not -0.01 <= self.speed_deviation_frac <= 0.01:
            raise ValueError("speed deviation must stay within +-1 %")
        if not 0 <= self.sideband_depth < 1:
            raise ValueError("sideband depth must lie in [0, 1)")
        if min(self.mesh_amplitudes) <= 0 or self.noise_floor_rms <= 0:
            raise ValueError("amplitudes must be positive")
        if self.duration_s * self.sample_rate_hz > 2**20:
            raise ValueError("record longer than 2^20 samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        d["mesh_amplitudes"] = list(self.mesh_amplitudes)
        return d


@dataclass(frozen=True)
class FaultRecipe:
    kind: str = "none"  # none | impulsive | circumferential
    target_ff: FaultFrequency | None = None
    severity: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "impulsive", "circumferential"):
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.severity < 0:
            raise ValueError("severity must be non-negative")
        if self.kind != "none" and self.target_ff is None:
            raise ValueError("a fault needs a target frequency")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target_ff": None if self.target_ff is None else asdict(self.target_ff),
            "severity": self.severity,
        }


@dataclass(frozen=True)
class DisturbanceRecipe:
    kind: str
    level: str | float = "loud"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance {self.kind!r}")
        if isinstance(self.level, str) and self.level not in LEVEL_RATIOS:
            raise ValueError(f"unknown level {self.level!r}")

    @property
    def ratio(self) -> float:
        return LEVEL_RATIOS[self.level] if isinstance(self.level, str) else float(self.level)

    def to_dict(self) -> dict:
        return asdict(self)


def resonance_burst(resonance_hz: float, fs: float, t: np.ndarray) -> np.ndarray:
    """Decaying resonance with quality factor Q; zero before t = 0."""
    decay = np.pi * resonance_hz / RESONANCE_Q
    return np.where(t >= 0, np.exp(-decay * t) * np.sin(2 * np.pi * resonance_hz * t), 0.0)


def _burst_length(resonance_hz: float, fs: float) -> int:
    return int(np.ceil(12.0 * RESONANCE_Q / (np.pi * resonance_hz) * fs))


def _add_bursts(out: np.ndarray, times: np.ndarray, amps: np.ndarray, resonance_hz: float, fs: float, decay_s=None) -> None:
    """Add one decaying resonance per impact time, each scaled by its amplitude."""
    if decay_s is None:
        length = _burst_length(resonance_hz, fs)
        kernel = resonance_burst(resonance_hz, fs, np.arange(length) / fs)
    else:
        tt = np.arange(int(np.ceil(10 * decay_s * fs))) / fs
        kernel = np.exp(-tt / decay_s) * np.sin(2 * np.pi * resonance_hz * tt)
    train = np.zeros(out.size)
    idx = np.round(times * fs).astype(np.int64)
    keep = (idx >= 0) & (idx < out.size)
    np.add.at(train, idx[keep], amps[keep])
    out += sp_signal.fftconvolve(train, kernel)[: out.size]


def _unit_rms(x: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.mean(x**2))
    return x / r if r > 0 else x


def _stage_modulation(t, depth, fa, fb, phases) -> np.ndarray:
    return 1.0 + depth * 0.5 * (np.cos(2 * np.pi * fa * t + phases[0]) + np.cos(2 * np.pi * fb * t + phases[1]))


def synth_motor(recipe: MotorRecipe, fault: FaultRecipe = FaultRecipe()) -> TimeSignal:
    fs = recipe.sample_rate_hz
    n = recipe.n_samples
    t = np.arange(n) / fs
    speed = 1.0 + recipe.speed_deviation_frac
    f1, f2, f3 = (f * speed for f in recipe.train.shaft_hz)
    gmf = [g * speed for g in recipe.train.mesh_hz]

    base = np.random.default_rng([recipe.seed, 0])
    phases = base.uniform(0, 2 * np.pi, size=16)
    mod1 = _stage_modulation(t, recipe.sideband_depth, f1, f2, phases[0:2])
    mod2 = _stage_modulation(t, recipe.sideband_depth, f2, f3, phases[2:4])

    x = np.zeros(n)
    for stage, (g, amp, mod) in enumerate(zip(gmf, recipe.mesh_amplitudes, (mod1, mod2))):
        for h in (1, 2, 3):
            x += mod * (amp / h**3) * np.sin(2 * np.pi * h * g * t + phases[4 + 3 * stage + h])

    kernel = resonance_burst(recipe.resonance_hz, fs, np.arange(_burst_length(recipe.resonance_hz, fs)) / fs)
    housing = _unit_rms(sp_signal.fftconvolve(base.standard_normal(n), kernel)[:n])
    x += recipe.housing_rms * housing * mod1
    x += recipe.noise_floor_rms * base.standard_normal(n)

    if fault.kind != "none" and fault.severity > 0:
        valid = {round(ff.hz, 9) for ff in fault_frequency_set(recipe.train, (0.0, np.inf))}
        if round(fault.target_ff.hz, 9) not in valid:
            raise ValueError(f"{fault.target_ff.hz} Hz is not a fault frequency of the train")
        rng = np.random.default_rng([recipe.seed, 1])
        f_fault = fault.target_ff.hz * speed
        if fault.kind == "impulsive":
            period = 1.0 / f_fault
            times = rng.uniform(0, period) + np.arange(0, recipe.duration_s * f_fault + 1) * period
            amps = fault.severity * IMPULSE_GAIN * recipe.housing_rms * rng.uniform(0.8, 1.2, times.size)
            _add_bursts(x, times, amps, recipe.resonance_hz, fs, FAULT_DECAY_S)
        else:
            depth = min(CIRCUMFERENTIAL_DEPTH * fault.severity, 0.95)
            x *= 1.0 + depth * np.cos(2 * np.pi * f_fault * t + rng.uniform(0, 2 * np.pi))

    return TimeSignal(OUTPUT_GAIN * x, fs)


# -- disturbances -------------------------------------------------------------


def _fir_noise(rng, n, fs, band, numtaps=801):
    lo, hi = band
    nyq = fs / 2
    if lo <= 0:
        taps = sp_signal.firwin(numtaps, min(hi, 0.99 * nyq), fs=fs)
    else:
        taps = sp_signal.firwin(numtaps, [lo, min(hi, 0.99 * nyq)], pass_zero=False, fs=fs)
    return sp_signal.fftconvolve(rng.standard_normal(n + numtaps), taps, mode="valid")[:n]


def _ramp_gate(n, fs, start, length, ramp_s=0.02):
    gate = np.zeros(n)
    a, b = int(start), min(int(start + length), n)
    gate[a:b] = 1.0
    r = max(int(ramp_s * fs), 1)
    win = np.hanning(2 * r + 1)
    win /= win.sum()
    return np.convolve(gate, win, mode="same")


def _hammer(rng, n, fs):
    out = np.zeros(n)
    t = np.arange(int(0.25 * fs)) / fs
    for start in rng.integers(0, n - t.size, size=rng.integers(3, 9)):
        click = rng.standard_normal(t.size) * (np.exp(-t / 0.002) + 0.3 * np.exp(-t / 0.03))
        plate = sum(
            np.exp(-t / rng.uniform(0.03, 0.08)) * np.sin(2 * np.pi * f * t + rng.uniform(0, 6.3))
            for f in rng.uniform([250, 700, 1800, 3200], [500, 1100, 2600, 4600])
        )
        out[start : start + t.size] += rng.uniform(0.6, 1.4) * (click + plate)
    return out


def _air_pressure(rng, n, fs):
    out = np.zeros(n)
    noise = _fir_noise(rng, n, fs, (500.0, 8000.0))
    for _ in range(rng.integers(2, 6)):
        length = rng.uniform(0.2, 0.8) * fs
        start = rng.uniform(0, max(n - length, 1))
        out += _ramp_gate(n, fs, start, length) * rng.uniform(0.7, 1.3)
    return noise * out


def _music(rng, n, fs):
    """Consonant four-tone chords, one per bar, with a gentle 2 Hz beat."""
    t = np.arange(n) / fs
    out = np.zeros(n)
    bar = int(rng.uniform(1.6, 2.4) * fs)
    for start in range(0, n, bar):
        seg = slice(start, min(start + bar, n))
        gate = _ramp_gate(n, fs, start, bar, ramp_s=0.01)[seg]
        root = rng.uniform(150.0, 450.0)
        # just-intonation major chord: harmonics coincide instead of beating
        for f0 in root * np.array([1.0, 5 / 4, 3 / 2, 2.0]):
            tone = sum(np.sin(2 * np.pi * h * f0 * t[seg] + rng.uniform(0, 6.3)) / h**3 for h in range(1, 5))
            out[seg] += gate * tone
    return out * (1.0 + 0.2 * np.cos(2 * np.pi * 2.0 * t))


def _speech(rng, n, fs):
    t = np.arange(n) / fs
    # syllabic envelope from a few slow sinusoids
    env = sum(np.cos(2 * np.pi * rng.uniform(0.3, 8.0) * t + rng.uniform(0, 6.3)) for _ in range(4))
    env = np.clip(env, 0.0, None)
    out = np.zeros(n)
    centers = np.geomspace(300.0, 3000.0, 12)
    formant_ranges = ((300.0, 900.0), (900.0, 2200.0), (2200.0, 3000.0))
    gains = np.zeros((centers.size, n))
    for lo, hi in formant_ranges:
        track = np.exp(np.interp(t, np.linspace(0, t[-1], 12), rng.uniform(np.log(lo), np.log(hi), 12)))
        gains += np.exp(-0.5 * (np.log(centers[:, None] / track[None, :]) / 0.15) ** 2)
    for k, c in enumerate(centers):
        out += gains[k] * _fir_noise(rng, n, fs, (c / 1.12, c * 1.12))
    return out * env


def _ventilation(rng, n, fs):
    t = np.arange(n) / fs
    rumble = _unit_rms(_fir_noise(rng, n, fs, (0.0, 500.0), numtaps=2001))
    hum = sum(a * np.sin(2 * np.pi * f * t + rng.uniform(0, 6.3)) for f, a in ((50, 1.0), (100, 0.6), (150, 0.4)))
    hiss = rng.standard_normal(n)
    return rumble + 0.5 * _unit_rms(hum) + 0.01 * hiss


def _wrench(rng, n, fs):
    t = np.arange(n) / fs
    f_whine = rng.uniform(2000.0, 6000.0 if fs > 13000 else 0.45 * fs)
    whine = np.sin(2 * np.pi * f_whine * t + 0.002 * f_whine * np.sin(2 * np.pi * 3.0 * t))
    clicks = np.zeros(n)
    rate = rng.uniform(15.0, 40.0)
    times = np.arange(rng.uniform(0, 1 / rate), t[-1], 1 / rate)
    _add_bursts(clicks, times, np.full(times.size, 3.0), 4000.0 if fs > 9000 else 0.4 * fs, fs)
    start = rng.uniform(0, n / 2)
    return _ramp_gate(n, fs, start, n / 2) * (whine + clicks)


_GENERATORS = {
    "hammer": _hammer,
    "air_pressure": _air_pressure,
    "music": _music,
    "speech": _speech,
    "ventilation": _ventilation,
    "wrench": _wrench,
}


def disturbance_waveform(rec: DisturbanceRecipe, n: int, fs: float) -> np.ndarray:
    """Unit-RMS disturbance of the requested kind."""
    rng = np.random.default_rng([rec.seed, DISTURBANCE_KINDS.index(rec.kind)])
    return _unit_rms(_GENERATORS[rec.kind](rng, n, fs))


def inject_disturbance(signal: TimeSignal, rec: DisturbanceRecipe) -> TimeSignal:
    """Add a disturbance whose RMS is ``rec.ratio`` times the signal RMS."""
    if rec.ratio == 0:
        return signal
    d = disturbance_waveform(rec, len(signal), signal.sample_rate_hz)
    level = rec.ratio * np.sqrt(np.mean(signal.samples**2))
    return signal.with_samples(signal.samples + level * d)


# -- datasets ------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    train_good: int = 25
    train_warning: int = 17
    val_good: int = 6
    val_warning: int = 8
    val_error: int = 22
    disturbance_good: int = 2
    disturbance_error: int = 2
    disturbance_level: str = "loud"
    duration_s: float = DEFAULT_DURATION
    sample_rate_hz: float = DEFAULT_RATE

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        return cls(**d)


def _fault_targets(train: GearTrain):
    ffs = {ff.label: ff for ff in fault_frequency_set(train, (0.0, np.inf))}
    impulsive = [ffs["shaft1_h1"], ffs["shaft2_h1"], ffs["mesh2_center"]]
    circumferential = [ffs["shaft1_h1"], ffs["shaft2_h1"], ffs["mesh1_center"], ffs["mesh2_center"]]
    return impulsive, circumferential


def random_motor(label: str, rng: np.random.Generator, train: GearTrain, seed: int, spec: DatasetSpec):
    """Motor and fault recipes with the label's severity band."""
    motor = MotorRecipe(
        train=train,
        speed_deviation_frac=float(rng.uniform(-0.008, 0.008)),
        mesh_amplitudes=tuple(float(a) for a in np.array([1.0, 0.6]) * rng.uniform(0.8, 1.2, 2)),
        sideband_depth=float(rng.uniform(0.02, 0.08)),
        noise_floor_rms=float(0.01 * rng.uniform(0.8, 1.2)),
        housing_rms=float(0.25 * rng.uniform(0.85, 1.15)),
        resonance_hz=float(3000.0 * rng.uniform(0.95, 1.05)),
        duration_s=spec.duration_s,
        sample_rate_hz=spec.sample_rate_hz,
        seed=seed,
    )
    impulsive, circumferential = _fault_targets(train)
    lo, hi = SEVERITY_BANDS[label]
    severity = float(rng.uniform(lo, hi))
    if rng.uniform() < 0.6:
        fault = FaultRecipe("impulsive", impulsive[rng.integers(len(impulsive))], severity)
    else:
        fault = FaultRecipe("circumferential", circumferential[rng.integers(len(circumferential))], severity)
    return motor, fault


def plan_dataset(spec: DatasetSpec, seed: int, train: GearTrain | None = None) -> list[dict]:
    """Deterministic list of records (recipes only, no audio)."""
    train = train or reference_train()
    plan = []
    counter = 0

    def add(split, label, motor, fault, noise="none", disturbance=None):
        plan.append(
            {
                "path": f"{split}/{len(plan):03d}_{label}_{noise}.wav",
                "label": label,
                "noise": noise,
                "split": split,
                "motor": motor,
                "fault": fault,
                "disturbance": disturbance,
            }
        )

    def new_motor(label):
        nonlocal counter
        rng = np.random.default_rng([seed, 7, counter])
        counter += 1
        return random_motor(label, rng, train, seed * 100_003 + counter, spec)

    seen_good, seen_error = [], []
    for label, count in (("good", spec.train_good), ("warning", spec.train_warning)):
        for _ in range(count):
            motor, fault = new_motor(label)
            add("train", label, motor, fault)
            if label == "good":
                seen_good.append((motor, fault))
    for label, count in (("good", spec.val_good), ("warning", spec.val_warning), ("error", spec.val_error)):
        for _ in range(count):
            motor, fault = new_motor(label)
            add("validation", label, motor, fault)
            if label == "error":
                seen_error.append((motor, fault))

    chosen = [("good", m) for m in seen_good[: spec.disturbance_good]]
    chosen += [("error", m) for m in seen_error[: spec.disturbance_error]]
    for k, (label, (motor, fault)) in enumerate(chosen):
        for j, kind in enumerate(("none",) + DISTURBANCE_KINDS):
            # a fresh measurement of the same motor: new noise, same parameters
            remeasured = replace(motor, seed=motor.seed + 1_000_000 * (j + 1))
            dist = None if kind == "none" else DisturbanceRecipe(kind, spec.disturbance_level, seed * 1009 + 31 * k + j)
            add("disturbance", label, remeasured, fault, "none" if kind == "none" else kind, dist)
    return plan


def render_record(entry: dict) -> TimeSignal:
    sig = synth_motor(entry["motor"], entry["fault"])
    if entry["disturbance"] is not None:
        sig = inject_disturbance(sig, entry["disturbance"])
    return sig


def generate_dataset(spec: DatasetSpec, seed: int, out_dir, train: GearTrain | None = None) -> list[dict]:
    """Write WAV files plus ``manifest.json`` under out_dir and return the manifest records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for entry in plan_dataset(spec, seed, train):
        path = out_dir / entry["path"]
        path.parent.mkdir(parents=True, exist_ok=True)
        write_wav(path, render_record(entry))
        manifest.append(
            {
                "path": entry["path"],
                "label": entry["label"],
                "noise": entry["noise"],
                "split": entry["split"],
                "recipes": {
                    "motor": entry["motor"].to_dict(),
                    "fault": entry["fault"].to_dict(),
                    "disturbance": None if entry["disturbance"] is None else entry["disturbance"].to_dict(),
                },
            }
        )
        log.debug("wrote %s", path)
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest
