"""Isolation forest whose similarity is the mean path length over the trees."""

from __future__ import annotations

import math

import numpy as np

from gearline.occ.base import OccConfig, OccModel, canonical_order, check_training, member_rng


def harmonic(m: int) -> float:
    return math.fsum(1.0 / k for k in range(1, m + 1))


def average_path_length(m: int) -> float:
    """c(m) = 2 H(m-1) - 2 (m-1) / m, the expected unsuccessful-search depth; 0 for m <= 1."""
    if m <= 1:
        return 0.0
    return 2.0 * harmonic(m - 1) - 2.0 * (m - 1) / m


def _grow_tree(X: np.ndarray, rng: np.random.Generator, max_depth: int):
    feature, threshold, left, right, size = [], [], [], [], []

    def new_node():
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (size, 0)):
            arr.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        size[node] = rows.size
        if rows.size <= 1 or depth >= max_depth:
            continue
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if splittable.size == 0:
            continue
        q = int(splittable[rng.integers(splittable.size)])
        p = float(rng.uniform(lo[q], hi[q]))
        goes_left = sub[:, q] < p
        feature[node], threshold[node] = q, p
        l_node, r_node = new_node(), new_node()
        left[node], right[node] = l_node, r_node
        stack.append((r_node, rows[~goes_left], depth + 1))
        stack.append((l_node, rows[goes_left], depth + 1))
    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(size, dtype=np.int64),
    )


class IsolationForestModel(OccModel):
    kind = "iforest"

    def __init__(self, trees, n_features: int, subsample: int, max_depth: int):
        self.trees = trees  # list of (feature, threshold, left, right, size)
        self.n_features = int(n_features)
        self.subsample = int(subsample)
        self.max_depth = int(max_depth)

    def path_lengths(self, X) -> np.ndarray:
        """Per-tree path length h(x), shape (trees, samples)."""
        X = self._check_query(X)
        rows = np.arange(X.shape[0])
        out = np.empty((len(self.trees), X.shape[0]))
        for t, (feat, thr, left, right, size) in enumerate(self.trees):
            leaf_credit = np.array([average_path_length(int(m)) for m in size])
            node = np.zeros(X.shape[0], dtype=np.int64)
            depth = np.zeros(X.shape[0])
            active = feat[node] >= 0
            while np.any(active):
                idx = rows[active]
                n = node[idx]
                go_left = X[idx, feat[n]] < thr[n]
                node[idx] = np.where(go_left, left[n], right[n])
                depth[idx] += 1.0
                active = feat[node] >= 0
            out[t] = depth + leaf_credit[node]
        return out

    def score_samples(self, X) -> np.ndarray:
        return self.path_lengths(X).mean(axis=0)

    def anomaly_score(self, X) -> np.ndarray:
        """Classical 2^(-E[h] / c(psi)); diagnostic only, not used for thresholds."""
        return 2.0 ** (-self.score_samples(X) / average_path_length(self.subsample))

    @property
    def similarity_ceiling(self) -> float:
        return self.max_depth + average_path_length(self.subsample)

    def to_state(self):
        meta = {
            "n_features": self.n_features,
            "subsample": self.subsample,
            "max_depth": self.max_depth,
            "n_trees": len(self.trees),
        }
        arrays = {}
        for name, pos in (("feature", 0), ("threshold", 1), ("left", 2), ("right", 3), ("size", 4)):
            arrays[name] = np.concatenate([t[pos] for t in self.trees])
        arrays["offsets"] = np.cumsum([0] + [t[0].size for t in self.trees]).astype(np.int64)
        return meta, arrays

    @classmethod
    def from_state(cls, meta, arrays):
        off = arrays["offsets"]
        trees = []
        for a, b in zip(off[:-1], off[1:]):
            trees.append(tuple(arrays[k][a:b] for k in ("feature", "threshold", "left", "right", "size")))
        return cls(trees, meta["n_features"], meta["subsample"], meta["max_depth"])


def iforest_fit(X, cfg: OccConfig) -> IsolationForestModel:
    X = canonical_order(check_training(X, 8))
    n = X.shape[0]
    psi = min(cfg.iforest_subsample, n)
    max_depth = int(math.ceil(math.log2(psi)))
    trees = []
    for t in range(cfg.ensemble_size):
        rng = member_rng(cfg.seed, t)
        rows = np.sort(rng.choice(n, size=psi, replace=False))
        trees.append(_grow_tree(X[rows], rng, max_depth))
    return IsolationForestModel(trees, X.shape[1], psi, max_depth)
