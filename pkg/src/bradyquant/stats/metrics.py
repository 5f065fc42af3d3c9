"""Confusion matrix, exact / within-one accuracy and mild-vs-severe ROC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import LengthMismatch, SingleClass

N_LEVELS = 4


def _labels(x, name):
    a = np.asarray(x)
    if a.ndim != 1:
        raise LengthMismatch(f"{name} must be one-dimensional")
    return a


def confusion_and_accuracy(truth, pred):
    """(4x4 counts with rows = truth, exact accuracy, within-one accuracy)."""
    t, p = _labels(truth, "truth").astype(int), _labels(pred, "pred").astype(int)
    if len(t) != len(p) or len(t) == 0:
        raise LengthMismatch(f"truth has {len(t)} entries, pred has {len(p)}")
    cm = np.zeros((N_LEVELS, N_LEVELS), dtype=int)
    np.add.at(cm, (t, p), 1)
    return cm, float(np.trace(cm) / len(t)), float(np.mean(np.abs(t - p) <= 1))


def binary_truth(truth) -> np.ndarray:
    """Mild {0,1} -> 0, severe {2,3} -> 1."""
    return (np.asarray(truth, dtype=int) >= 2).astype(int)


def _split(truth, score):
    b = binary_truth(_labels(truth, "truth"))
    s = _labels(score, "score").astype(float)
    if len(b) != len(s):
        raise LengthMismatch(f"truth has {len(b)} entries, score has {len(s)}")
    pos, neg = s[b == 1], s[b == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("both mild and severe cases are required")
    return pos, neg


def binary_auc(truth, score) -> float:
    """Mann-Whitney AUC: P(severe score > mild score) + 0.5 P(tie)."""
    pos, neg = _split(truth, score)
    neg = np.sort(neg)
    lo = np.searchsorted(neg, pos, "left")
    hi = np.searchsorted(neg, pos, "right")
    twice = 2 * int(lo.sum()) + int((hi - lo).sum())
    return twice / (2 * len(pos) * len(neg))


def roc_points(truth, score):
    """(fpr, tpr) arrays from (0,0) to (1,1), one point per distinct threshold."""
    pos, neg = _split(truth, score)
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos, neg = np.sort(pos), np.sort(neg)
    tpr = 1.0 - np.searchsorted(pos, thresholds, "left") / len(pos)
    fpr = 1.0 - np.searchsorted(neg, thresholds, "left") / len(neg)
    return np.concatenate([[0.0], fpr]), np.concatenate([[0.0], tpr])


def severe_probability(probs) -> np.ndarray:
    P = np.asarray(probs, dtype=float)
    return P[:, 2] + P[:, 3]


@dataclass
class EvalReport:
    confusion: np.ndarray
    accuracy: float
    within_one: float
    auc: float
    roc_fpr: np.ndarray
    roc_tpr: np.ndarray
    n: int

    @classmethod
    def from_predictions(cls, truth, pred, probs) -> "EvalReport":
        cm, acc, w1 = confusion_and_accuracy(truth, pred)
        sev = severe_probability(probs)
        try:
            auc = binary_auc(truth, sev)
            fpr, tpr = roc_points(truth, sev)
        except SingleClass:
            auc, fpr, tpr = float("nan"), np.zeros(0), np.zeros(0)
        return cls(cm, acc, w1, auc, fpr, tpr, int(cm.sum()))

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "confusion_matrix": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "within_one_accuracy": self.within_one,
            "auc_mild_vs_severe": None if np.isnan(self.auc) else self.auc,
            "roc": {"fpr": [float(v) for v in self.roc_fpr], "tpr": [float(v) for v in self.roc_tpr]},
        }
