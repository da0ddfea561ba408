"""ROC/AUC, the two-threshold extraction and three-class verdict metrics.

Acceptance is always ``score >= threshold``. In ROC terms the accepted class
(e.g. 'good') plays the positive role: TPR is the share of accepted-class
samples passed, FPR the share of the complement passed. Read in the
end-of-line setting, 1 - TPR is the pseudo-fault rate and FPR the
missed-fault rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

LABELS = ("good", "warning", "error")
ACCEPT_GOOD = frozenset({"good"})
ACCEPT_GOOD_WARNING = frozenset({"good", "warning"})


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: str
    noise_tag: str | None = None

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise EvaluationError("scores must be finite")
        if self.label not in LABELS:
            raise EvaluationError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


@dataclass(frozen=True)
class ThresholdPair:
    t_e: float
    t_w: float

    def __post_init__(self):
        if not self.t_e <= self.t_w:
            raise EvaluationError(f"t_e={self.t_e} exceeds t_w={self.t_w}")


def _split(scores: Iterable[LabeledScore]) -> tuple[np.ndarray, np.ndarray]:
    scores = list(scores)
    return np.array([s.score for s in scores], dtype=float), np.array([s.label for s in scores])


def roc(scores: Sequence[LabeledScore], accept_set=ACCEPT_GOOD) -> RocCurve:
    values, labels = _split(scores)
    positive = np.isin(labels, list(accept_set))
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs samples both inside and outside the accept set")
    thresholds = np.unique(values)[::-1]
    # counts of accepted samples (score >= t) for descending thresholds
    order = np.argsort(-values, kind="stable")
    sorted_vals = values[order]
    cum_pos = np.cumsum(positive[order])
    cum_neg = np.cumsum(~positive[order])
    last = np.searchsorted(-sorted_vals, -thresholds, side="right") - 1
    tpr = np.concatenate([[0.0], cum_pos[last] / n_pos, [1.0]])
    fpr = np.concatenate([[0.0], cum_neg[last] / n_neg, [1.0]])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def extract_thresholds(scores_val: Sequence[LabeledScore]) -> ThresholdPair:
    """Error threshold from the good samples, warning threshold from the non-error ones.

    t_e is the largest threshold that still accepts every 'good' sample (its
    lowest score). After dropping 'error' samples, t_w is the n-th largest
    remaining score, n being the number of 'good' samples, so exactly n
    samples land in 'good' when scores are distinct.
    """
    values, labels = _split(scores_val)
    good = labels == "good"
    if not good.any() or not (labels == "error").any():
        raise EvaluationError("validation scores need at least one 'good' and one 'error' sample")
    t_e = float(values[good].min())
    remaining = np.sort(values[labels != "error"])[::-1]
    n_good = int(good.sum())
    t_w = float(remaining[n_good - 1])
    return ThresholdPair(t_e, max(t_w, t_e))


def classify(score: float, th: ThresholdPair) -> str:
    if score < th.t_e:
        return "error"
    if score < th.t_w:
        return "warning"
    return "good"


def classify_many(scores, th: ThresholdPair) -> list[str]:
    return [classify(float(s), th) for s in scores]


@dataclass(frozen=True)
class VerdictMetrics:
    MF: int
    PF: int
    Acc: float


def metrics(predictions: Sequence[str], labels: Sequence[str]) -> VerdictMetrics:
    """Missed faults, pseudo-faults and three-class accuracy."""
    pred, lab = np.asarray(list(predictions)), np.asarray(list(labels))
    if pred.size != lab.size:
        raise EvaluationError("predictions and labels differ in length")
    if pred.size == 0:
        raise EvaluationError("no predictions to evaluate")
    mf = int(np.sum((lab == "error") & (pred != "error")))
    pf = int(np.sum((lab == "good") & (pred == "error")))
    return VerdictMetrics(mf, pf, float(np.mean(pred == lab)))


# Higher is better for these; lower is better for MF and PF.
HIGHER_IS_BETTER = {"AUC_g": True, "AUC_w": True, "Acc": True, "MF_v": False, "MF_t": False, "PF_t": False}


def best_and_delta(values: Sequence[float], higher_is_better: bool) -> tuple[float, float]:
    """Best over runs and the signed distance from best to worst."""
    arr = np.asarray(values, dtype=float)
    best = arr.max() if higher_is_better else arr.min()
    worst = arr.min() if higher_is_better else arr.max()
    return float(best), float(worst - best)
