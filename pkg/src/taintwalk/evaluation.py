"""Classification metrics with illicit (label 1) as the positive class."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_streams
from .forest import ForestModel, predict

FPR_CAPS = (0.01, 0.05, 0.10)
REPORT_KEYS = ("precision_illicit", "recall_illicit", "f1_illicit", "micro_f1", "auc",
               "recall_at_fpr_1", "recall_at_fpr_5", "recall_at_fpr_10", "tp", "fp", "tn", "fn")


def _binary(*arrays):
    out = [np.asarray(a).astype(np.int64).ravel() for a in arrays]
    if len({len(a) for a in out}) > 1:
        raise ValueError("length mismatch: " + ", ".join(str(len(a)) for a in out))
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels, predictions) -> ConfusionMatrix:
    y, p = _binary(labels, predictions)
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def f1_from(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Illicit-class scores; each is 0 when its denominator is 0."""
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    return precision, recall, f1_from(precision, recall)


def illicit_f1(labels, predictions) -> float:
    return precision_recall_f1(confusion(labels, predictions))[2]


def micro_f1(labels, predictions) -> float:
    """Micro-averaged F1 over both classes (pooled counts)."""
    y, p = _binary(labels, predictions)
    if len(y) == 0:
        return 0.0
    tp = fp = fn = 0
    for cls in (0, 1):
        tp += int(np.sum((p == cls) & (y == cls)))
        fp += int(np.sum((p == cls) & (y != cls)))
        fn += int(np.sum((p != cls) & (y == cls)))
    return 2 * tp / (2 * tp + fp + fn)


def roc_curve(labels, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Step ROC ``(fpr, tpr, thresholds)`` from (0, 0) to (1, 1).

    Point ``i`` counts samples with score >= ``thresholds[i]`` as positive;
    tied scores move together. The first threshold is ``inf``.
    """
    y = np.asarray(labels).astype(np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if len(y) != len(s):
        raise ValueError("length mismatch")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    return fpr, tpr, np.r_[np.inf, s[last]]


def roc_and_auc(labels, scores) -> tuple[np.ndarray, float]:
    """ROC points as an ``(m, 2)`` array of ``(fpr, tpr)`` and trapezoidal AUC."""
    fpr, tpr, _ = roc_curve(labels, scores)
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return np.column_stack([fpr, tpr]), auc


def recall_at_fpr(labels, scores, fpr_cap: float) -> float:
    """Largest TPR over ROC points whose FPR does not exceed ``fpr_cap``."""
    if not 0 < fpr_cap < 1:
        raise ValueError("fpr_cap must lie in (0, 1)")
    fpr, tpr, _ = roc_curve(labels, scores)
    return float(tpr[fpr <= fpr_cap].max())


def per_timestep_f1(labels, predictions, time_steps, *, with_flags=False):
    """Illicit F1 within each time step.

    Steps without illicit labels score 0; with ``with_flags`` the set of such
    steps is returned alongside the map.
    """
    y, p, t = _binary(labels, predictions, time_steps)
    scores, flagged = {}, set()
    for step in np.unique(t).tolist():
        sel = t == step
        if not y[sel].any():
            flagged.add(step)
        scores[step] = illicit_f1(y[sel], p[sel])
    return (scores, flagged) if with_flags else scores


def tp_diff(labels, preds_a, preds_b) -> dict[str, set[int]]:
    """True positives of ``preds_b`` missed by ``preds_a`` and vice versa."""
    y, a, b = _binary(labels, preds_a, preds_b)
    pos = y == 1
    return {
        "gained": set(np.flatnonzero(pos & (b == 1) & (a == 0)).tolist()),
        "lost": set(np.flatnonzero(pos & (a == 1) & (b == 0)).tolist()),
    }


@dataclass
class EvaluationReport:
    precision_illicit: float
    recall_illicit: float
    f1_illicit: float
    micro_f1: float
    auc: float
    recall_at_fpr: dict[float, float]
    roc_points: np.ndarray = field(repr=False)
    roc_thresholds: np.ndarray = field(repr=False)
    per_timestep_f1: dict[int, float]
    confusion: ConfusionMatrix
    degenerate_steps: set[int] = field(default_factory=set)

    def to_dict(self) -> dict:
        cm = self.confusion
        return {
            "precision_illicit": self.precision_illicit,
            "recall_illicit": self.recall_illicit,
            "f1_illicit": self.f1_illicit,
            "micro_f1": self.micro_f1,
            "auc": self.auc,
            "recall_at_fpr_1": self.recall_at_fpr[0.01],
            "recall_at_fpr_5": self.recall_at_fpr[0.05],
            "recall_at_fpr_10": self.recall_at_fpr[0.10],
            "tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn,
        }

    def write(self, report_path=None, per_timestep_path=None, roc_path=None):
        if report_path:
            with open(report_path, "w") as fh:
                json.dump(self.to_dict(), fh, indent=2)
                fh.write("\n")
        if per_timestep_path:
            with open(per_timestep_path, "w") as fh:
                fh.write("time_step,f1_illicit\n")
                for step, f1 in sorted(self.per_timestep_f1.items()):
                    fh.write(f"{step},{f1!r}\n")
        if roc_path:
            with open(roc_path, "w") as fh:
                fh.write("fpr,tpr,threshold\n")
                for (fpr, tpr), thr in zip(self.roc_points.tolist(), self.roc_thresholds.tolist()):
                    fh.write(f"{fpr!r},{tpr!r},{thr!r}\n")


def evaluate(labels, scores, time_steps, threshold: float = 0.5) -> EvaluationReport:
    y = np.asarray(labels).astype(np.int64)
    preds = (np.asarray(scores) >= threshold).astype(np.int64)
    cm = confusion(y, preds)
    precision, recall, f1 = precision_recall_f1(cm)
    points, auc = roc_and_auc(y, scores)
    steps, flagged = per_timestep_f1(y, preds, time_steps, with_flags=True)
    return EvaluationReport(
        precision_illicit=precision,
        recall_illicit=recall,
        f1_illicit=f1,
        micro_f1=micro_f1(y, preds),
        auc=auc,
        recall_at_fpr={cap: recall_at_fpr(y, scores, cap) for cap in FPR_CAPS},
        roc_points=points,
        roc_thresholds=roc_curve(y, scores)[2],
        per_timestep_f1=steps,
        confusion=cm,
        degenerate_steps=flagged,
    )


@dataclass
class FeatureImportance:
    name: str
    mean_f1_drop: float
    std_over_repeats: float


@dataclass
class ImportanceReport:
    baseline_f1: float
    repeats: int
    features: list[FeatureImportance]

    @property
    def selected(self) -> list[str]:
        """Features whose shuffling hurts F1 on average, largest drop first."""
        ranked = sorted(enumerate(self.features), key=lambda p: (-p[1].mean_f1_drop, p[0]))
        return [f.name for _, f in ranked if f.mean_f1_drop > 0]

    def ranked(self) -> list[FeatureImportance]:
        return [f for _, f in sorted(enumerate(self.features),
                                     key=lambda p: (-p[1].mean_f1_drop, p[0]))]

    def write(self, path):
        chosen = set(self.selected)
        with open(path, "w") as fh:
            fh.write("rank,feature,mean_f1_drop,std_over_repeats,selected\n")
            for rank, f in enumerate(self.ranked(), 1):
                fh.write(f"{rank},{f.name},{f.mean_f1_drop!r},{f.std_over_repeats!r},"
                         f"{int(f.name in chosen)}\n")


def permutation_importance(model: ForestModel, X_test, y_test, repeats: int = 5,
                           rng_seed: int = 0, feature_names=None, columns=None,
                           threshold: float = 0.5, workers: int | None = 1) -> ImportanceReport:
    """Illicit-F1 drop after shuffling one test column at a time.

    ``columns`` restricts the scan to those column indices (default: all).
    Each (column, repeat) pair has its own random stream.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = np.ascontiguousarray(X_test, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise ValueError(f"X_test width {X.shape[-1]} does not match model "
                         f"({model.feature_count})")
    y = np.asarray(y_test).astype(np.int64)
    names = list(feature_names) if feature_names is not None else [
        f"x{j}" for j in range(X.shape[1])]
    columns = list(range(X.shape[1])) if columns is None else [int(c) for c in columns]
    base = illicit_f1(y, predict(model, X, threshold))

    def score(j):
        drops = []
        for r in range(repeats):
            gen = rng_streams.generator(rng_seed, rng_streams.IMPORTANCE, j, r)
            Xp = X.copy()
            Xp[:, j] = gen.permutation(X[:, j])
            drops.append(base - illicit_f1(y, predict(model, Xp, threshold)))
        drops = np.asarray(drops)
        return FeatureImportance(names[j], float(drops.mean()), float(drops.std()))

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        results = [score(j) for j in columns]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(score, columns))
    return ImportanceReport(base, repeats, results)
