"""Run configuration: JSON in, validated dataclass out, plus a stable hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from gearline.features.psycho import ModulationModelConfig
from gearline.kinematics import GearTrain, reference_train
from gearline.occ import OCC_KINDS, OccConfig
from gearline.signals import BandSpec
from gearline.synth import DatasetSpec

FEATURE_SETS = ("les_limited", "les_ff", "lms_pca", "les_spectral", "pa", "palff")
PREPROCESSORS = ("scaler", "pca", "none")

# the combinations studied for each feature family
DEFAULT_PREPROCESSOR = {
    "les_limited": "none",
    "les_ff": "scaler",
    "lms_pca": "pca",
    "les_spectral": "none",
    "pa": "scaler",
    "palff": "scaler",
}

# fields that change fitted models; the rest only steer I/O and reporting
_HASHED = (
    "train",
    "band",
    "feature_set",
    "preprocessor",
    "occ_kind",
    "occ",
    "seed",
    "n_runs",
    "nus",
    "pca_variance",
    "les_ff_tol",
    "modulation",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    train: GearTrain = field(default_factory=reference_train)
    band: BandSpec = BandSpec(1150.0, 5100.0)
    feature_set: str = "palff"
    preprocessor: str = "auto"
    allow_any_preprocessor: bool = False
    occ_kind: str = "iforest"
    occ: OccConfig = OccConfig()
    seed: int = 0
    n_runs: int = 5
    nus: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    pca_variance: float = 0.90
    les_ff_tol: float = 0.01
    modulation: ModulationModelConfig = field(default_factory=ModulationModelConfig)
    strict_io: bool = True
    test_split: str = "disturbance"
    predict_mode: str = "selected"
    dataset: DatasetSpec = DatasetSpec()

    def __post_init__(self):
        if self.feature_set not in FEATURE_SETS:
            raise ConfigError(f"feature_set must be one of {FEATURE_SETS}, got {self.feature_set!r}")
        if self.occ_kind not in OCC_KINDS:
            raise ConfigError(f"occ_kind must be one of {OCC_KINDS}, got {self.occ_kind!r}")
        if self.preprocessor != "auto":
            if self.preprocessor not in PREPROCESSORS:
                raise ConfigError(f"preprocessor must be 'auto' or one of {PREPROCESSORS}")
            if not self.allow_any_preprocessor and self.preprocessor != DEFAULT_PREPROCESSOR[self.feature_set]:
                raise ConfigError(
                    f"{self.feature_set} is paired with {DEFAULT_PREPROCESSOR[self.feature_set]!r}; "
                    "set allow_any_preprocessor to override"
                )
        if self.n_runs < 1:
            raise ConfigError("n_runs must be positive")
        if self.occ_kind == "ocsvm" and len(self.nus) != self.n_runs:
            raise ConfigError("OC-SVM runs sweep nus, so len(nus) must equal n_runs")
        if not 0 < self.pca_variance <= 1:
            raise ConfigError("pca_variance must lie in (0, 1]")
        if self.predict_mode not in ("selected", "majority"):
            raise ConfigError("predict_mode is 'selected' or 'majority'")
        if self.test_split not in ("validation", "disturbance"):
            raise ConfigError("test_split is 'validation' or 'disturbance'")

    @property
    def preprocessor_kind(self) -> str:
        return DEFAULT_PREPROCESSOR[self.feature_set] if self.preprocessor == "auto" else self.preprocessor

    def run_configs(self) -> list[tuple[str, OccConfig]]:
        """(run label, classifier config) for each of the repeated runs.

        OC-SVM training is deterministic, so its runs sweep nu instead of seeds.
        """
        if self.occ_kind == "ocsvm":
            return [(f"nu={nu:g}", replace(self.occ, contamination_nu=nu, seed=self.seed)) for nu in self.nus]
        return [(str(self.seed + k), replace(self.occ, seed=self.seed + k)) for k in range(self.n_runs)]

    def to_dict(self) -> dict:
        return {
            "train": self.train.to_dict(),
            "band": {"low_hz": self.band.low_hz, "high_hz": self.band.high_hz},
            "feature_set": self.feature_set,
            "preprocessor": self.preprocessor,
            "allow_any_preprocessor": self.allow_any_preprocessor,
            "occ_kind": self.occ_kind,
            "occ": self.occ.to_dict(),
            "seed": self.seed,
            "n_runs": self.n_runs,
            "nus": list(self.nus),
            "pca_variance": self.pca_variance,
            "les_ff_tol": self.les_ff_tol,
            "modulation": self.modulation.to_dict(),
            "strict_io": self.strict_io,
            "test_split": self.test_split,
            "predict_mode": self.predict_mode,
            "dataset": self.dataset.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "train" in d:
                d["train"] = GearTrain.from_dict(d["train"])
            if "band" in d:
                d["band"] = BandSpec(float(d["band"]["low_hz"]), float(d["band"]["high_hz"]))
            if "occ" in d:
                d["occ"] = OccConfig.from_dict(d["occ"])
            if "modulation" in d:
                d["modulation"] = ModulationModelConfig.from_dict(d["modulation"])
            if "dataset" in d:
                d["dataset"] = DatasetSpec.from_dict(d["dataset"])
            if "nus" in d:
                d["nus"] = tuple(float(v) for v in d["nus"])
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def model_hash(self) -> str:
        d = self.to_dict()
        canon = json.dumps({k: d[k] for k in _HASHED}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> RunConfig:
    with open(Path(path)) as f:
        return RunConfig.from_dict(json.load(f))


def dump_config(cfg: RunConfig, path) -> None:
    with open(Path(path), "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
