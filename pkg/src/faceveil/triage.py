"""AI-assisted triage harness: difference features, temporal-averaging
classification, shared five-fold CV across four train/test schemes, and
agreement metrics against the real-real baseline.

The reference classifier is a regularized softmax-linear model on
per-frame difference vectors; heavy video backbones live behind the
same ``ClassifierBackend`` interface.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .clips import VideoClip
from .errors import (CaseMismatch, DatasetMismatch, DimensionMismatch,
                     SingleClassTestSet, SingleClassTrainingSet, TooFewCases,
                     TooFewFrames)

LABELS = ("non_stroke", "stroke")
STROKE = 1  # logit index of the positive class
SCHEMES = ("real_real", "syn_real", "real_syn", "syn_syn")
DEFAULT_DOWNSAMPLE = (64, 64)
DEFAULT_TARGET_SENSITIVITY = 0.7019  # matches typical human-triage operating point


@dataclass(frozen=True)
class TriageSample:
    case_id: str
    label: str
    features: np.ndarray  # (n_frames-1, D) signed reals

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ValueError("features must be (n_diffs, D) with n_diffs >= 1")


def frame_difference_features(clip: VideoClip,
                              downsample: tuple[int, int] = DEFAULT_DOWNSAMPLE
                              ) -> np.ndarray:
    """Flattened grayscale adjacent-frame differences at low resolution."""
    if clip.frame_count < 2:
        raise TooFewFrames("need at least 2 frames for differences")
    h, w = downsample
    gray = np.empty((clip.frame_count, h, w), dtype=np.float64)
    for i in range(clip.frame_count):
        g = cv2.cvtColor(clip.frame(i), cv2.COLOR_RGB2GRAY)
        gray[i] = cv2.resize(g, (w, h), interpolation=cv2.INTER_AREA)
    return (gray[1:] - gray[:-1]).reshape(clip.frame_count - 1, h * w)


@dataclass(frozen=True)
class CasePrediction:
    case_id: str
    logits: np.ndarray  # pre-softmax 2-vector
    frame_logit_count: int

    def __post_init__(self):
        lg = np.asarray(self.logits, dtype=np.float64)
        object.__setattr__(self, "logits", lg)
        if lg.shape != (2,) or not np.all(np.isfinite(lg)):
            raise ValueError("logits must be a finite 2-vector")

    def stroke_score(self) -> float:
        z = self.logits - self.logits.max()
        e = np.exp(z)
        return float(e[STROKE] / e.sum())


class ClassifierBackend:
    name = "abstract"
    thread_safe = True

    def train(self, samples: list[TriageSample], seed: int):
        raise NotImplementedError


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (D, 2)
    bias: np.ndarray     # (2,)
    mean: np.ndarray
    scale: np.ndarray

    def frame_logits(self, features: np.ndarray) -> np.ndarray:
        if features.shape[1] != self.weights.shape[0]:
            raise DimensionMismatch(
                f"feature dim {features.shape[1]} != model dim "
                f"{self.weights.shape[0]}")
        x = (features - self.mean) / self.scale
        return x @ self.weights + self.bias


class LinearDifferenceClassifier(ClassifierBackend):
    """Softmax-linear model on standardized difference vectors, trained
    frame-wise with cross-entropy by deterministic full-batch descent."""

    name = "linear_diff"

    def __init__(self, lr: float = 0.5, iterations: int = 300,
                 l2: float = 1e-3):
        self.lr = lr
        self.iterations = iterations
        self.l2 = l2

    def train(self, samples: list[TriageSample], seed: int) -> LinearModel:
        xs = np.vstack([s.features for s in samples])
        ys = np.concatenate([
            np.full(s.features.shape[0], LABELS.index(s.label), dtype=int)
            for s in samples
        ])
        mean = xs.mean(axis=0)
        scale = xs.std(axis=0)
        scale[scale == 0] = 1.0
        x = (xs - mean) / scale
        n, d = x.shape
        onehot = np.eye(2)[ys]

        w = np.zeros((d, 2))
        b = np.zeros(2)
        for _ in range(self.iterations):
            z = x @ w + b
            z -= z.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            g = (p - onehot) / n
            w -= self.lr * (x.T @ g + self.l2 * w)
            b -= self.lr * g.sum(axis=0)
        return LinearModel(w, b, mean, scale)


def train_classifier(train: list[TriageSample], backend: ClassifierBackend,
                     seed: int):
    if not train:
        raise ValueError("empty training set")
    if len({s.label for s in train}) < 2:
        raise SingleClassTrainingSet("training set holds a single class")
    return backend.train(train, seed)


def predict_case(model, sample: TriageSample) -> CasePrediction:
    frame_logits = model.frame_logits(sample.features)
    return CasePrediction(sample.case_id, frame_logits.mean(axis=0),
                          frame_logits.shape[0])


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    folds: tuple  # tuple of frozensets of case ids
    stratified: bool = True

    def fold_of(self, case_id: str) -> int:
        for i, f in enumerate(self.folds):
            if case_id in f:
                return i
        raise CaseMismatch(f"case {case_id} not in fold plan")


def make_fold_plan(cases: list[tuple[str, str]], seed: int,
                   n_folds: int = 5) -> FoldPlan:
    """Stratified split, deterministic in seed; cases are (id, label)."""
    if len(cases) < n_folds:
        raise TooFewCases(f"{len(cases)} cases < {n_folds} folds")
    labels = {lbl for _, lbl in cases}
    if len(labels) < 2:
        raise TooFewCases("need both classes present")
    rng = random.Random(seed)
    folds = [set() for _ in range(n_folds)]
    for lbl in sorted(labels):
        ids = sorted(cid for cid, l in cases if l == lbl)
        rng.shuffle(ids)
        for i, cid in enumerate(ids):
            folds[i % n_folds].add(cid)
    return FoldPlan(seed, tuple(frozenset(f) for f in folds))


def run_scheme(
    real: dict[str, TriageSample],
    syn: dict[str, TriageSample],
    scheme: str,
    plan: FoldPlan,
    backend: ClassifierBackend,
    seed: int,
) -> list[CasePrediction]:
    """Train outside each fold on the scheme's train source, predict the
    fold's cases from the test source; every case predicted once."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if set(real) != set(syn):
        raise DatasetMismatch("real and synthetic case-id sets differ")
    for cid in real:
        if real[cid].label != syn[cid].label:
            raise DatasetMismatch(f"label mismatch for case {cid}")
    covered = set().union(*plan.folds)
    if covered != set(real):
        raise DatasetMismatch("fold plan does not cover the dataset")

    train_src = real if scheme.startswith("real") else syn
    test_src = real if scheme.endswith("real") else syn

    preds = []
    for fold in plan.folds:
        train = [train_src[cid] for cid in sorted(set(real) - set(fold))]
        model = train_classifier(train, backend, seed)
        for cid in sorted(fold):
            preds.append(predict_case(model, test_src[cid]))
    return sorted(preds, key=lambda p: p.case_id)


@dataclass(frozen=True)
class TriageMetrics:
    scheme: str
    accuracy: float
    specificity: float | None
    sensitivity: float | None
    f1: float | None
    auc: float | None
    mse_vs_baseline: float | None
    operating_threshold: float
    confusion: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "accuracy": self.accuracy,
            "specificity": self.specificity,
            "sensitivity": self.sensitivity,
            "f1": self.f1,
            "auc": self.auc,
            "mse_vs_baseline": self.mse_vs_baseline,
            "operating_threshold": self.operating_threshold,
            "confusion": self.confusion,
        }


def _auc_pair_counting(scores: np.ndarray, y: np.ndarray) -> float:
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = 0.0
    for p in pos:
        wins += float(np.sum(p > neg)) + 0.5 * float(np.sum(p == neg))
    return wins / (len(pos) * len(neg))


def compute_metrics(preds: list[CasePrediction], labels: dict[str, str],
                    operating_threshold: float = 0.5,
                    scheme: str = "real_real",
                    baseline: list[CasePrediction] | None = None
                    ) -> TriageMetrics:
    if not preds:
        raise ValueError("no predictions")
    scores = np.array([p.stroke_score() for p in preds])
    y = np.array([LABELS.index(labels[p.case_id]) for p in preds])
    pred_pos = scores >= operating_threshold

    tp = int(np.sum(pred_pos & (y == 1)))
    tn = int(np.sum(~pred_pos & (y == 0)))
    fp = int(np.sum(pred_pos & (y == 0)))
    fn = int(np.sum(~pred_pos & (y == 1)))

    accuracy = (tp + tn) / len(y)
    sensitivity = tp / (tp + fn) if (tp + fn) else None
    specificity = tn / (tn + fp) if (tn + fp) else None
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else None
    if len(np.unique(y)) < 2:
        raise SingleClassTestSet("AUC undefined with one class present")
    auc = _auc_pair_counting(scores, y)
    mse = logit_mse(baseline, preds) if baseline is not None else None
    return TriageMetrics(scheme, accuracy, specificity, sensitivity, f1, auc,
                         mse, operating_threshold,
                         confusion={"tp": tp, "tn": tn, "fp": fp, "fn": fn})


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    reached: bool


def sensitivity_matched_threshold(preds: list[CasePrediction],
                                  labels: dict[str, str],
                                  target_sensitivity: float
                                  ) -> ThresholdResult:
    """Largest threshold whose sensitivity still meets the target."""
    scores = np.array([p.stroke_score() for p in preds])
    y = np.array([LABELS.index(labels[p.case_id]) for p in preds])
    pos = scores[y == 1]
    if len(pos) == 0:
        raise ValueError("no positive cases")
    candidates = sorted(set(scores.tolist()) | {1.0}, reverse=True)
    for t in candidates:
        sens = float(np.sum(pos >= t)) / len(pos)
        if sens >= target_sensitivity:
            return ThresholdResult(float(t), True)
    return ThresholdResult(0.0, False)


def logit_mse(baseline: list[CasePrediction],
              other: list[CasePrediction]) -> float:
    """Per-element MSE of pre-softmax case logits over aligned cases."""
    base = {p.case_id: p.logits for p in baseline}
    oth = {p.case_id: p.logits for p in other}
    if set(base) != set(oth):
        raise CaseMismatch("prediction case-id sets differ")
    total = 0.0
    for cid in base:
        diff = base[cid] - oth[cid]
        total += float(diff @ diff) / diff.size
    return total / len(base)


def run_all_schemes(
    real: dict[str, TriageSample],
    syn: dict[str, TriageSample],
    plan: FoldPlan,
    backend: ClassifierBackend,
    seed: int,
    target_sensitivity: float = DEFAULT_TARGET_SENSITIVITY,
) -> dict[str, TriageMetrics]:
    """All four schemes on one shared fold plan, thresholded at the
    baseline's sensitivity-matched operating point."""
    labels = {cid: s.label for cid, s in real.items()}
    preds = {s: run_scheme(real, syn, s, plan, backend, seed) for s in SCHEMES}
    threshold = sensitivity_matched_threshold(
        preds["real_real"], labels, target_sensitivity).threshold
    baseline = preds["real_real"]
    return {
        s: compute_metrics(preds[s], labels, threshold, scheme=s,
                           baseline=baseline)
        for s in SCHEMES
    }


def write_metrics_csv(metrics: dict[str, TriageMetrics], path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "Acc", "Spec", "Sens", "F1", "AUC", "MSE"])
        for scheme in SCHEMES:
            m = metrics[scheme]
            writer.writerow([scheme, m.accuracy, m.specificity, m.sensitivity,
                             m.f1, m.auc, m.mse_vs_baseline])


def write_metrics_json(metrics: dict[str, TriageMetrics], plan: FoldPlan,
                       preds: dict | None, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "fold_plan": {"seed": plan.seed,
                      "folds": [sorted(f) for f in plan.folds],
                      "stratified": plan.stratified},
        "schemes": {s: m.to_json() for s, m in metrics.items()},
    }
    if preds is not None:
        payload["per_case_logits"] = {
            s: {p.case_id: p.logits.tolist() for p in ps}
            for s, ps in preds.items()
        }
    path.write_text(json.dumps(payload, indent=2))
