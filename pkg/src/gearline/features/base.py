"""Named feature containers shared by all extractors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(names) != values.size:
            raise FeatureError(f"{len(names)} names for {values.size} values")
        if len(set(names)) != len(names):
            raise FeatureError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise FeatureError("feature values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.names)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def concat(*vectors: FeatureVector) -> FeatureVector:
    names: list[str] = []
    for v in vectors:
        names.extend(v.names)
    if len(set(names)) != len(names):
        raise FeatureError("feature name collision while concatenating")
    return FeatureVector(tuple(names), np.concatenate([v.values for v in vectors]))


@dataclass(frozen=True)
class FeatureMatrix:
    row_names: tuple[str, ...]
    col_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (len(self.row_names), len(self.col_names)):
            raise FeatureError(
                f"matrix shape {values.shape} does not match "
                f"{len(self.row_names)} x {len(self.col_names)} names"
            )
        if not np.all(np.isfinite(values)):
            raise FeatureError("feature values must be finite")
        object.__setattr__(self, "row_names", tuple(self.row_names))
        object.__setattr__(self, "col_names", tuple(self.col_names))
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def from_vectors(cls, row_names: Sequence[str], vectors: Sequence[FeatureVector]) -> "FeatureMatrix":
        if not vectors:
            raise FeatureError("no feature vectors given")
        cols = vectors[0].names
        for v in vectors[1:]:
            if v.names != cols:
                raise FeatureError("feature vectors have inconsistent names or lengths")
        return cls(tuple(row_names), cols, np.vstack([v.values for v in vectors]))

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.col_names, self.values[i])

    def take(self, indices) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix(tuple(self.row_names[i] for i in idx), self.col_names, self.values[idx])
