"""Two-stage scoring: arrest network, then a boosted classifier.

The arrest category predicted by the network fills the ``arrest`` slot of
each FeatureVector; a booster (joint, or one per movement) maps the
resulting six features to the final 0-3 score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import arrest_net, boost
from .config import PipelineConfig
from .exceptions import DegenerateDataset
from .features import FeatureRow, FeatureVector, compute_features
from .landmarks import MovementKind, Recording
from .signal import ExtremaConfig, SignalTrace, extract_cycles
from .stats.metrics import EvalReport

log = logging.getLogger(__name__)

FEATURE_SETS = ("full", "no_fatigue_arrest")


@dataclass
class Extracted:
    """Everything derived from one recording before classification."""

    recording: Recording
    trace: SignalTrace
    features: FeatureVector
    flags: list = field(default_factory=list)

    @property
    def movement(self) -> MovementKind:
        return self.recording.movement

    def row(self, arrest: Optional[int] = None, score: Optional[int] = None) -> FeatureRow:
        fv = self.features if arrest is None else self.features.with_arrest(arrest)
        r = self.recording
        return FeatureRow(r.subject_id, r.movement, r.side, fv,
                          r.score if score is None else score, list(self.flags))


def extract(r: Recording, cfg: PipelineConfig = PipelineConfig()) -> Extracted:
    trace = extract_cycles(r, cfg.filter_map(), cfg.extrema)
    fv, flags = compute_features(trace.cycles, 0, cfg.fatigue.window, cfg.fatigue.alpha)
    return Extracted(r, trace, fv, flags)


def arrest_sample(x: Extracted, net: arrest_net.NetConfig, label=None) -> arrest_net.SeriesSample:
    if net.input_mode == "resampled_signal":
        return arrest_net.make_signal_sample(x.trace.smoothed.values, net.length, label)
    return arrest_net.make_sample(x.trace.cycles, net.length, label)


def train_arrest(items: Sequence[Extracted], cfg: PipelineConfig = PipelineConfig()):
    """Fit the arrest network on recordings that carry an ``arrest`` label."""
    labelled = [x for x in items if x.recording.arrest is not None]
    if len(labelled) < len(items):
        log.warning("%d recording(s) without arrest label skipped", len(items) - len(labelled))
    samples = [arrest_sample(x, cfg.net, x.recording.arrest) for x in labelled]
    return arrest_net.train(samples, cfg.train, cfg.net)


def predict_arrests(params: arrest_net.NetParams, items: Sequence[Extracted]) -> np.ndarray:
    if not items:
        return np.zeros(0, dtype=int)
    X, M = arrest_net.stack_samples([arrest_sample(x, params.config) for x in items])
    probs = arrest_net.forward_batch(params, X, M, "eval")
    return np.argmax(probs, axis=1)


def design(F, feature_set: str = "full") -> np.ndarray:
    """Booster inputs: full = 5 continuous + one-hot arrest; ablation keeps the 4 summary stats."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if feature_set == "full":
        return boost.expand_features(F)
    if feature_set == "no_fatigue_arrest":
        return F[:, :4]
    raise ValueError(f"unknown feature set {feature_set!r}")


class HierarchicalScorer(ClassifierMixin, BaseEstimator):
    """Boosted classifier over ``(n, 6)`` features, optionally one per movement.

    ``fit(X, y, movements)``: ``X`` columns follow FEATURE_NAMES with the
    arrest category last.  With ``per_movement`` a movement absent from
    training falls back to the model fitted on all rows.
    """

    def __init__(self, n_rounds=100, learning_rate=0.1, max_depth=3, min_leaf=2,
                 lambda_l2=1.0, feature_set="full", per_movement=False, seed=0):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.lambda_l2 = lambda_l2
        self.feature_set = feature_set
        self.per_movement = per_movement
        self.seed = seed

    @classmethod
    def from_config(cls, cfg: PipelineConfig, feature_set="full") -> "HierarchicalScorer":
        b = cfg.boost
        return cls(b.n_rounds, b.learning_rate, b.max_depth, b.min_leaf, b.lambda_l2,
                   feature_set, cfg.scorer.per_movement, b.seed)

    def _config(self):
        return boost.BoostConfig(self.n_rounds, self.learning_rate, self.max_depth,
                                 self.min_leaf, self.lambda_l2, self.seed)

    def fit(self, X, y, movements=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if len(X) != len(y):
            raise DegenerateDataset("features and scores differ in length")
        mv = self._movements(movements, len(X))
        cfg = self._config()
        D = design(X, self.feature_set)
        self.models_ = {"*": boost.fit_ensemble(D, y, cfg)}
        if self.per_movement:
            for m in sorted(set(mv)):
                sel = mv == m
                if len(np.unique(y[sel])) >= 2:
                    self.models_[m] = boost.fit_ensemble(D[sel], y[sel], cfg)
        self.classes_ = np.arange(boost.N_CLASSES)
        return self

    @staticmethod
    def _movements(movements, n):
        if movements is None:
            return np.array(["*"] * n)
        return np.array([MovementKind.parse(m).value for m in movements])

    def predict_proba(self, X, movements=None):
        check_is_fitted(self, "models_")
        D = design(X, self.feature_set)
        mv = self._movements(movements, len(D))
        P = np.zeros((len(D), boost.N_CLASSES))
        for m in sorted(set(mv)):
            sel = mv == m
            P[sel] = self.models_.get(m, self.models_["*"]).predict_proba(D[sel])
        return P

    def predict(self, X, movements=None):
        return np.argmax(self.predict_proba(X, movements), axis=1)

    # -- model file ---------------------------------------------------------

    def dumps(self) -> str:
        import json

        check_is_fitted(self, "models_")
        doc = {
            "format": "bradyquant-scorer",
            "version": 1,
            "params": self.get_params(),
            "models": {k: json.loads(boost.dumps_ensemble(m)) for k, m in sorted(self.models_.items())},
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "HierarchicalScorer":
        import json

        from .exceptions import ModelFileError

        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"scorer file is not JSON: {exc.msg}") from None
        if doc.get("format") != "bradyquant-scorer" or doc.get("version") != 1:
            raise ModelFileError("not a version-1 scorer file")
        obj = cls(**doc["params"])
        obj.models_ = {k: boost.loads_ensemble(json.dumps(v)) for k, v in doc["models"].items()}
        obj.classes_ = np.arange(boost.N_CLASSES)
        return obj


# -- cross-validation ----------------------------------------------------------


@dataclass
class CVResult:
    pred: np.ndarray
    probs: np.ndarray
    folds: list
    overall: EvalReport
    per_movement: dict

    def as_dict(self) -> dict:
        return {
            "overall": self.overall.as_dict(),
            "per_movement": {k: v.as_dict() for k, v in self.per_movement.items()},
            "fold_sizes": [len(te) for _, te in self.folds],
        }


def cross_validate(F, y, movements, cfg: PipelineConfig = PipelineConfig(),
                   feature_set: str = "full", keys=None) -> CVResult:
    """Stratified k-fold evaluation of the score classifier.

    Folds are stratified on score and keyed (if ``keys`` are given) so that
    membership does not depend on row order.
    """
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=int)
    mv = np.array([MovementKind.parse(m).value for m in movements])
    plan = boost.stratified_kfold(y, cfg.cv.folds, cfg.seed, keys)
    pred = np.zeros(len(y), dtype=int)
    probs = np.zeros((len(y), boost.N_CLASSES))
    folds = list(plan.splits())
    for train, test in folds:
        model = HierarchicalScorer.from_config(cfg, feature_set)
        model.fit(F[train], y[train], mv[train])
        probs[test] = model.predict_proba(F[test], mv[test])
        pred[test] = np.argmax(probs[test], axis=1)
    overall = EvalReport.from_predictions(y, pred, probs)
    per = {}
    for m in sorted(set(mv)):
        sel = mv == m
        per[m] = EvalReport.from_predictions(y[sel], pred[sel], probs[sel])
    return CVResult(pred, probs, folds, overall, per)


# -- synthetic benchmark ---------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkSpec:
    per_movement: int = 200  # evaluation recordings per movement, score mix like the clinical set
    pool_per_score: int = 340  # arrest-network training recordings per score and movement
    seed: int = 0


def _extract_all(recs, cfg):
    return [extract(s.recording, cfg) for s in recs]


def run_synthetic_benchmark(cfg: PipelineConfig = PipelineConfig(),
                            spec: BenchmarkSpec = BenchmarkSpec()) -> dict:
    """Generate, train and cross-validate the full pipeline on synthetic data.

    The arrest network is trained on a separately seeded pool that never
    overlaps the evaluation set; the boosters are cross-validated on the
    evaluation set using the network's predicted arrest categories.  The
    same folds are scored with fatigue and arrest removed (ablation).
    """
    from . import synth
    from .stats.metrics import confusion_and_accuracy

    eval_set = synth.generate_dataset(synth.clinical_mix_counts(spec.per_movement), spec.seed)
    pool = synth.generate_dataset({k: spec.pool_per_score for k in range(4)}, spec.seed + 1)
    log.info("benchmark: %d evaluation, %d pool recordings", len(eval_set), len(pool))

    net = train_arrest(_extract_all(pool, cfg), cfg)
    items = _extract_all(eval_set, cfg)
    arrests = predict_arrests(net.params, items)
    truth_arrest = np.array([s.arrest for s in eval_set])
    y = np.array([s.label for s in eval_set])
    mv = [x.movement for x in items]
    keys = [x.recording.subject_id for x in items]
    F = np.array([x.features.with_arrest(a).as_array() for x, a in zip(items, arrests)])

    full = cross_validate(F, y, mv, cfg, "full", keys)
    ablated = cross_validate(F, y, mv, cfg, "no_fatigue_arrest", keys)
    cm, acc, _ = confusion_and_accuracy(truth_arrest, arrests)
    return {
        "n_eval": len(eval_set),
        "n_pool": len(pool),
        "score_counts": np.bincount(y, minlength=4).tolist(),
        "arrest_net": {
            "accuracy": acc,
            "confusion_matrix": cm.tolist(),
            "final_train_loss": net.loss_history[-1] if net.loss_history else None,
        },
        "full": full.as_dict(),
        "ablation_no_fatigue_arrest": ablated.as_dict(),
        "ablation_delta": {
            "accuracy": full.overall.accuracy - ablated.overall.accuracy,
            "auc": full.overall.auc - ablated.overall.auc,
        },
    }
