"""Classification metrics and cross-validation aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigurationError, UndefinedAUCError, ValidationError


def accuracy(predictions, truth) -> float:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValidationError("predictions and truth must have equal length")
    if predictions.size == 0:
        raise ValidationError("accuracy of an empty prediction set is undefined")
    return float((predictions == truth).mean())


def roc_auc(scores, truth) -> float:
    """Rank-based (Mann-Whitney) AUC with tie-averaged ranks.

    Equivalent to the probability that a random positive sample outscores a
    random negative one, counting ties as half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ValidationError("scores and truth must have equal length")
    pos = truth == 1
    n_pos = int(pos.sum())
    n_neg = int(len(truth) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError(
            f"AUC undefined: {n_pos} positive / {n_neg} negative samples"
        )
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def normal_auc(delta: float, sigma: float) -> float:
    """Closed-form AUC of two equal-variance normals with mean gap delta.

    The score-difference variable is N(delta, 2 sigma^2), so the AUC is the
    standard normal CDF at delta / (sqrt(2) sigma); strictly increasing in
    delta at fixed sigma.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    z = delta / (math.sqrt(2.0) * sigma)
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class MetricReport:
    fold_accuracies: tuple[float, ...]
    fold_aucs: tuple[float, ...] | None
    mean_accuracy: float
    std_accuracy: float
    mean_auc: float | None
    std_auc: float | None
    confusion: tuple[tuple[int, ...], ...]
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fold_accuracies": list(self.fold_accuracies),
            "fold_aucs": list(self.fold_aucs) if self.fold_aucs is not None else None,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "confusion": [list(r) for r in self.confusion],
            "extras": self.extras,
        }


def confusion_counts(predictions, truth, num_classes: int) -> np.ndarray:
    mat = np.zeros((num_classes, num_classes), dtype=np.int64)
    for p, t in zip(np.asarray(predictions), np.asarray(truth)):
        mat[int(t), int(p)] += 1
    return mat


def cross_validate(fold_accuracies, fold_aucs=None, confusion=None, extras=None) -> MetricReport:
    """Aggregate per-fold metrics into mean and population std."""
    if len(fold_accuracies) < 2:
        raise ConfigurationError("cross-validation needs at least 2 folds")
    acc = np.asarray(fold_accuracies, dtype=np.float64)
    aucs = None if fold_aucs is None else np.asarray(fold_aucs, dtype=np.float64)
    conf = confusion if confusion is not None else np.zeros((0, 0), dtype=np.int64)
    return MetricReport(
        fold_accuracies=tuple(float(a) for a in acc),
        fold_aucs=None if aucs is None else tuple(float(a) for a in aucs),
        mean_accuracy=float(acc.mean()),
        std_accuracy=float(acc.std()),
        mean_auc=None if aucs is None else float(aucs.mean()),
        std_auc=None if aucs is None else float(aucs.std()),
        confusion=tuple(tuple(int(x) for x in row) for row in np.asarray(conf)),
        extras=dict(extras or {}),
    )
