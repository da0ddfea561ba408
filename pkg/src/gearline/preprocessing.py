"""Robust scaling and PCA, fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gearline.features.base import FeatureMatrix, FeatureVector


class PreprocessingError(ValueError):
    pass


def _as_matrix(X) -> np.ndarray:
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise PreprocessingError("expected a 2-D feature matrix")
    if not np.all(np.isfinite(values)):
        raise PreprocessingError("feature matrix contains non-finite values")
    return values


def _as_vector(x, dim: int) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if isinstance(x, FeatureVector):
        values, names = x.values, x.names
    else:
        values, names = np.asarray(x, dtype=float), None
    if values.shape[-1] != dim:
        raise PreprocessingError(f"dimension mismatch: got {values.shape[-1]}, model has {dim}")
    return values, names


@dataclass(frozen=True)
class RobustScalerModel:
    medians: np.ndarray
    half_iqrs: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Row-wise scaling of a raw array; zero-IQR columns map to 0."""
        X, _ = _as_vector(X, self.medians.size)
        safe = np.where(self.half_iqrs > 0, self.half_iqrs, 1.0)
        return np.where(self.half_iqrs > 0, (X - self.medians) / safe, 0.0)


def fit_robust_scaler(X) -> RobustScalerModel:
    """Per-column median and half inter-quartile range (linear-interpolated quantiles)."""
    values = _as_matrix(X)
    if values.shape[0] < 4:
        raise PreprocessingError(f"robust scaler needs at least 4 rows, got {values.shape[0]}")
    q1, med, q3 = np.percentile(values, [25, 50, 75], axis=0, method="linear")
    return RobustScalerModel(med, (q3 - q1) / 2.0)


def apply_robust_scaler(model: RobustScalerModel, x) -> FeatureVector:
    values, names = _as_vector(x, model.medians.size)
    out = model.transform(values)
    if names is None:
        names = tuple(f"x{i}" for i in range(out.size))
    return FeatureVector(names, out)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance_fracs: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X, _ = _as_vector(X, self.mean.size)
        return (X - self.mean) @ self.components.T


def fit_pca(X, variance_target: float = 0.90) -> PcaModel:
    """Keep the fewest leading components whose variance fraction reaches the target."""
    values = _as_matrix(X)
    if values.shape[0] < 2:
        raise PreprocessingError("PCA needs at least 2 rows")
    mean = values.mean(axis=0)
    centered = values - mean
    _, sing, vt = np.linalg.svd(centered, full_matrices=False)
    var = sing**2
    total = var.sum()
    if not total > 0:
        raise PreprocessingError("zero variance: all training rows are identical")
    fracs = var / total
    cumulative = np.cumsum(fracs)
    # tiny slack so a target met exactly in exact arithmetic is not missed by rounding
    k = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    k = min(max(k, 1), vt.shape[0])
    comps = vt[:k].copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, comps, fracs[:k])


def apply_pca(model: PcaModel, x) -> FeatureVector:
    values, _ = _as_vector(x, model.mean.size)
    out = model.transform(values)
    return FeatureVector(tuple(f"pc{i}" for i in range(out.size)), out)
