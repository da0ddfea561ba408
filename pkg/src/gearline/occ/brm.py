"""Bagging random miner: bootstrap centre sets scored through a Gaussian kernel.

Each weak classifier keeps a bootstrap sample of the training rows as centres
and a length scale equal to the mean distance from each centre to its nearest
other centre. A query's similarity to one classifier is
``exp(-0.5 * (d / sigma)**2)`` with ``d`` the distance to the nearest centre;
the model averages over classifiers.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from gearline.occ.base import OccConfig, OccModel, canonical_order, check_training, member_rng


def center_scale(centers: np.ndarray) -> float:
    d = cdist(centers, centers)
    np.fill_diagonal(d, np.inf)
    sigma = float(d.min(axis=1).mean())
    if sigma > 0:
        return sigma
    positive = d[np.isfinite(d) & (d > 0)]
    return float(positive.min()) if positive.size else 1.0


class BaggingRandomMinerModel(OccModel):
    kind = "brm"

    def __init__(self, centers: list[np.ndarray], sigmas: np.ndarray):
        self.centers = centers
        self.sigmas = np.asarray(sigmas, dtype=float)
        self.n_features = centers[0].shape[1]

    def member_similarity(self, X) -> np.ndarray:
        X = self._check_query(X)
        out = np.empty((len(self.centers), X.shape[0]))
        for t, (c, s) in enumerate(zip(self.centers, self.sigmas)):
            d = cdist(X, c).min(axis=1)
            out[t] = np.exp(-0.5 * (d / s) ** 2)
        return out

    def score_samples(self, X) -> np.ndarray:
        return self.member_similarity(X).mean(axis=0)

    def to_state(self):
        meta = {"n_members": len(self.centers), "n_features": self.n_features}
        arrays = {
            "centers": np.vstack(self.centers),
            "offsets": np.cumsum([0] + [c.shape[0] for c in self.centers]).astype(np.int64),
            "sigmas": self.sigmas,
        }
        return meta, arrays

    @classmethod
    def from_state(cls, meta, arrays):
        off = arrays["offsets"]
        centers = [arrays["centers"][a:b] for a, b in zip(off[:-1], off[1:])]
        return cls(centers, arrays["sigmas"])


def brm_fit(X, cfg: OccConfig) -> BaggingRandomMinerModel:
    X = canonical_order(check_training(X, 4))
    n = X.shape[0]
    m = max(int(round(cfg.brm_sample_frac * n)), 1)
    centers, sigmas = [], []
    for t in range(cfg.ensemble_size):
        rng = member_rng(cfg.seed, t)
        c = X[rng.integers(0, n, size=m)]
        centers.append(c)
        sigmas.append(center_scale(c))
    return BaggingRandomMinerModel(centers, np.array(sigmas))
