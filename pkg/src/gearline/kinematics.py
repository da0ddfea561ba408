"""Shaft and gear-mesh fault frequencies of a two-stage gear train."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

DEDUP_TOL_HZ = 1e-9
LES_DOMAIN = (10.0, 555.5)


@dataclass(frozen=True)
class GearTrain:
    """Rated kinematics of a two-stage gearbox.

    ``tooth_counts`` is (z1, z2, z3, z4): driving/driven wheel of stage one,
    then driving/driven wheel of stage two. ``rated_output_hz`` is the
    nameplate output speed; when given it defines the slowest-shaft period
    used for long spectrogram windows instead of the tooth-count ratio.
    """

    motor_speed_hz: float
    tooth_counts: tuple[int, int, int, int]
    speed_tolerance_frac: float = 0.01
    rated_output_hz: float | None = None

    def __post_init__(self):
        counts = tuple(int(z) for z in self.tooth_counts)
        object.__setattr__(self, "tooth_counts", counts)
        if len(counts) != 4:
            raise ValueError("a two-stage train needs exactly four tooth counts")
        if min(counts) < 4:
            raise ValueError(f"tooth counts must be >= 4, got {counts}")
        if not self.motor_speed_hz > 0:
            raise ValueError("motor speed must be positive")
        if not 0 < self.speed_tolerance_frac <= 0.05:
            raise ValueError("speed tolerance must lie in (0, 0.05]")
        if self.rated_output_hz is not None and not self.rated_output_hz > 0:
            raise ValueError("rated output speed must be positive")

    @property
    def shaft_hz(self) -> tuple[float, float, float]:
        z1, z2, z3, z4 = self.tooth_counts
        f1 = self.motor_speed_hz
        f2 = f1 * z1 / z2
        f3 = f2 * z3 / z4
        return f1, f2, f3

    @property
    def mesh_hz(self) -> tuple[float, float]:
        f1, f2, _ = self.shaft_hz
        return f1 * self.tooth_counts[0], f2 * self.tooth_counts[2]

    @property
    def slowest_shaft_hz(self) -> float:
        return self.rated_output_hz if self.rated_output_hz is not None else self.shaft_hz[2]

    def scaled(self, factor: float) -> "GearTrain":
        out = None if self.rated_output_hz is None else self.rated_output_hz * factor
        return GearTrain(self.motor_speed_hz * factor, self.tooth_counts, self.speed_tolerance_frac, out)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tooth_counts"] = list(self.tooth_counts)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GearTrain":
        return cls(
            motor_speed_hz=float(d["motor_speed_hz"]),
            tooth_counts=tuple(d["tooth_counts"]),
            speed_tolerance_frac=float(d.get("speed_tolerance_frac", 0.01)),
            rated_output_hz=d.get("rated_output_hz"),
        )


def reference_train() -> GearTrain:
    """1375 rpm motor, 137 rpm rated output, teeth reconstructed as (21, 48, 11, 48)."""
    return GearTrain(1375.0 / 60.0, (21, 48, 11, 48), 0.01, 137.0 / 60.0)


@dataclass(frozen=True)
class FaultFrequency:
    hz: float
    label: str
    kind: str  # shaft_harmonic | mesh_center | mesh_sideband


def _check_domain(domain) -> tuple[float, float]:
    lo, hi = float(domain[0]), float(domain[1])
    if not lo <= hi:
        raise ValueError(f"invalid domain {domain}")
    return lo, hi


def _in_domain(hz: float, lo: float, hi: float) -> bool:
    return lo - DEDUP_TOL_HZ <= hz <= hi + DEDUP_TOL_HZ


def _sorted(ffs: Iterable[FaultFrequency]) -> list[FaultFrequency]:
    return sorted(ffs, key=lambda ff: (ff.hz, ff.label))


def shaft_fault_frequencies(train: GearTrain, domain=LES_DOMAIN) -> list[FaultFrequency]:
    lo, hi = _check_domain(domain)
    shafts = train.shaft_hz
    out = []
    for n in (1, 2):
        for i in (1, 2, 3):
            hz = i * shafts[n - 1]
            if _in_domain(hz, lo, hi):
                out.append(FaultFrequency(hz, f"shaft{n}_h{i}", "shaft_harmonic"))
    return _sorted(out)


def mesh_fault_frequencies(train: GearTrain, domain=LES_DOMAIN) -> list[FaultFrequency]:
    lo, hi = _check_domain(domain)
    shafts = train.shaft_hz
    out = []
    for n in (1, 2):
        center = train.mesh_hz[n - 1]
        if _in_domain(center, lo, hi):
            out.append(FaultFrequency(center, f"mesh{n}_center", "mesh_center"))
        for m in (1, 2):
            shaft_idx = n + m - 1
            f_mod = shafts[shaft_idx - 1]
            for i in (1, 2, 3):
                for sign, ch in ((1, "+"), (-1, "-")):
                    hz = center + sign * i * f_mod
                    if _in_domain(hz, lo, hi):
                        out.append(
                            FaultFrequency(hz, f"mesh{n}_sb{ch}{i}f{shaft_idx}", "mesh_sideband")
                        )
    return _sorted(out)


def fault_frequency_set(train: GearTrain, domain=LES_DOMAIN) -> list[FaultFrequency]:
    merged: list[FaultFrequency] = []
    for ff in _sorted(shaft_fault_frequencies(train, domain) + mesh_fault_frequencies(train, domain)):
        if merged and abs(ff.hz - merged[-1].hz) <= DEDUP_TOL_HZ:
            continue
        merged.append(ff)
    return merged
