from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import ClassVar, Union

import numpy as np

from gearline.features.base import FeatureVector


class OccError(ValueError):
    pass


@dataclass(frozen=True)
class OccConfig:
    ensemble_size: int = 100
    contamination_nu: float = 0.1
    rbf_gamma: Union[float, str] = "median"
    iforest_subsample: int = 256
    brm_sample_frac: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise OccError("ensemble size must be positive")
        if not 0 < self.contamination_nu < 1:
            raise OccError("nu must lie in (0, 1)")
        if isinstance(self.rbf_gamma, str):
            if self.rbf_gamma != "median":
                raise OccError(f"unknown gamma rule {self.rbf_gamma!r}")
        elif not self.rbf_gamma > 0:
            raise OccError("gamma must be positive")
        if self.iforest_subsample < 2:
            raise OccError("isolation forest subsample must be at least 2")
        if not self.brm_sample_frac > 0:
            raise OccError("BRM sample fraction must be positive")
        if self.seed < 0:
            raise OccError("seed must be unsigned")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OccConfig":
        return cls(**d)


def check_training(X, min_rows: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise OccError("training data must be a 2-D matrix")
    if X.shape[0] < min_rows:
        raise OccError(f"need at least {min_rows} training rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise OccError("training data contains non-finite values")
    return X


def canonical_order(X: np.ndarray) -> np.ndarray:
    """Rows sorted lexicographically, so fits do not depend on input row order."""
    return X[np.lexsort(X.T[::-1])]


def member_rng(seed: int, member: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(member)])


class OccModel:
    """Fitted one-class scorer; higher similarity means closer to the training data."""

    kind: ClassVar[str] = ""
    n_features: int

    def score_samples(self, X) -> np.ndarray:
        raise NotImplementedError

    def score(self, x) -> float:
        values = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=float)
        return float(self.score_samples(values[None, :])[0])

    def _check_query(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise OccError(f"dimension mismatch: got {X.shape[1]}, model has {self.n_features}")
        return X

    # bundle serialization: JSON-able metadata plus named float/int arrays
    def to_state(self) -> tuple[dict, dict[str, np.ndarray]]:
        raise NotImplementedError

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "OccModel":
        raise NotImplementedError
