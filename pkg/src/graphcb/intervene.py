"""Manual model repair: pick systematically misclassified graphs whose
concept predictions are trustworthy, compute a closed-form weight adjustment,
and apply it to exactly two classifier entries. Models are never mutated;
every application yields a fresh model so serving can swap atomically and
revert is trivial.

Instance-level "what if" edits of a single graph's concept vector live here
too; they re-run only the classifier head, exploiting that predictions are a
pure function of the concept vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    EmptyTargetError,
    NearZeroActivationError,
    ValidationError,
)
from .graphs import Graph
from .net import (
    GcbmModel,
    SparseLinearClassifier,
    _softmax,
    predict_batch,
    replace_classifier,
)

F_BAR_FLOOR = 1e-9


@dataclass(frozen=True)
class InterventionParams:
    tau_c: float = 0.6
    margin: float = 0.2
    cls_true: int = 1
    cls_pred: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau_c <= 1.0:
            raise ConfigurationError(f"tau_c must be in (0, 1], got {self.tau_c}")
        if self.margin < 0.0:
            raise ConfigurationError(f"margin must be >= 0, got {self.margin}")
        if self.cls_true == self.cls_pred:
            raise ConfigurationError("cls_true and cls_pred must differ")
        if min(self.cls_true, self.cls_pred) < 0:
            raise ConfigurationError("class indices must be non-negative")


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine; rows with a zero factor score 0 (never qualify)."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    out = np.zeros(len(a))
    ok = denom > 0
    out[ok] = np.einsum("ij,ij->i", a[ok], b[ok]) / denom[ok]
    return out


def select_targets(
    model: GcbmModel,
    graphs,
    class_labels,
    concept_labels,
    params: InterventionParams,
):
    """Positions of graphs predicted cls_pred, labeled cls_true, with
    cosine(c_hat, c) >= tau_c. May be empty; downstream statistics refuse
    empty sets."""
    class_labels = np.asarray(class_labels, dtype=np.int64)
    concept_labels = np.asarray(concept_labels, dtype=np.float64)
    c_hat, pred, _ = predict_batch(model, graphs)
    cos = _cosine_rows(c_hat, concept_labels)
    mask = (
        (pred == params.cls_pred)
        & (class_labels == params.cls_true)
        & (cos >= params.tau_c)
    )
    return np.flatnonzero(mask)


def avg_logit_diff(model: GcbmModel, c_hat_rows: np.ndarray, params: InterventionParams) -> float:
    """Mean of logit(cls_pred) - logit(cls_true) over the target set."""
    c_hat_rows = np.atleast_2d(np.asarray(c_hat_rows, dtype=np.float64))
    if c_hat_rows.shape[0] == 0:
        raise EmptyTargetError("no target graphs; nothing to average")
    logits = model.classifier.logits(c_hat_rows)
    return float(np.mean(logits[:, params.cls_pred] - logits[:, params.cls_true]))


def avg_activation(c_hat_rows: np.ndarray, concept_index: int) -> float:
    """Mean activation of one concept over the target set."""
    c_hat_rows = np.atleast_2d(np.asarray(c_hat_rows, dtype=np.float64))
    if c_hat_rows.shape[0] == 0:
        raise EmptyTargetError("no target graphs; nothing to average")
    if not 0 <= concept_index < c_hat_rows.shape[1]:
        raise ValidationError(f"concept index {concept_index} out of range")
    return float(np.mean(c_hat_rows[:, concept_index]))


def weight_adjustment(delta_a_bar: float, f_bar: float, margin: float) -> float:
    """delta_w = (mean logit gap + margin) / (2 * mean activation).

    The margin pushes the corrected logit past parity instead of exactly to
    it. A near-zero mean activation would explode the ratio, so it is
    refused instead.
    """
    if f_bar <= F_BAR_FLOOR:
        raise NearZeroActivationError(
            f"mean target-concept activation {f_bar!r} is at or below the "
            f"{F_BAR_FLOOR} floor; intervention on this concept is ill-posed"
        )
    return (delta_a_bar + margin) / (2.0 * f_bar)


def apply_intervention(
    model: GcbmModel, concept_index: int, delta_w: float, params: InterventionParams
) -> GcbmModel:
    """New model with W_F[cls_true, j] += delta_w and W_F[cls_pred, j] -= delta_w.

    Exactly two entries change; the input model is untouched.
    """
    W = model.classifier.W_F
    if not 0 <= concept_index < W.shape[1]:
        raise ValidationError(f"concept index {concept_index} out of range")
    for cls in (params.cls_true, params.cls_pred):
        if not 0 <= cls < W.shape[0]:
            raise ValidationError(f"class index {cls} out of range")
    W_new = W.copy()
    W_new[params.cls_true, concept_index] += delta_w
    W_new[params.cls_pred, concept_index] -= delta_w
    return replace_classifier(
        model, SparseLinearClassifier(W_F=W_new, b_F=model.classifier.b_F.copy())
    )


@dataclass(frozen=True)
class ConceptEditResult:
    """Re-prediction after editing a single graph's concept vector."""

    original: np.ndarray
    edited: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray
    predicted_class: int


def edit_concept_vector(model: GcbmModel, graph: Graph, edits) -> ConceptEditResult:
    """What-if re-prediction: overwrite chosen concept scores, rerun the head.

    ``edits`` is a list of (global concept index, new score). The model and
    graph are untouched; this is instance-level and non-persistent.
    """
    from .net import forward

    c_hat, _ = forward(model, graph)
    edited = c_hat.copy()
    for index, score in edits:
        index = int(index)
        if not 0 <= index < len(edited):
            raise ValidationError(f"concept index {index} out of range")
        score = float(score)
        if not np.isfinite(score):
            raise ValidationError(f"edited score for concept {index} is non-finite")
        edited[index] = score
    logits = model.classifier.logits(edited)
    return ConceptEditResult(
        original=c_hat,
        edited=edited,
        logits=logits,
        probabilities=_softmax(logits),
        predicted_class=int(np.argmax(logits)),
    )


@dataclass(frozen=True)
class InterventionOutcome:
    corrections: int
    new_errors: int
    accuracy_before: float
    accuracy_after: float


def evaluate_intervention(
    model_before: GcbmModel, model_after: GcbmModel, graphs, class_labels
) -> InterventionOutcome:
    """Count wrong->right and right->wrong flips on one split.

    accuracy_after - accuracy_before always equals
    (corrections - new_errors) / len(split).
    """
    y = np.asarray(class_labels, dtype=np.int64)
    _, before, _ = predict_batch(model_before, graphs)
    _, after, _ = predict_batch(model_after, graphs)
    ok_before = before == y
    ok_after = after == y
    corrections = int(np.sum(~ok_before & ok_after))
    new_errors = int(np.sum(ok_before & ~ok_after))
    return InterventionOutcome(
        corrections=corrections,
        new_errors=new_errors,
        accuracy_before=float(np.mean(ok_before)),
        accuracy_after=float(np.mean(ok_after)),
    )


@dataclass(frozen=True)
class InterventionRecord:
    """Audit entry for one concept's weight adjustment."""

    concept_index: int
    target_ids: tuple[int, ...]
    delta_a_bar: float
    f_bar: float
    delta_w: float
    edits: tuple[tuple[int, int, float, float], ...]  # (class, concept, old, new)
    outcome: InterventionOutcome

    def to_dict(self) -> dict:
        return {
            "concept_index": self.concept_index,
            "target_ids": list(self.target_ids),
            "delta_a_bar": self.delta_a_bar,
            "f_bar": self.f_bar,
            "delta_w": self.delta_w,
            "edits": [list(e) for e in self.edits],
            "outcome": {
                "corrections": self.outcome.corrections,
                "new_errors": self.outcome.new_errors,
                "accuracy_before": self.outcome.accuracy_before,
                "accuracy_after": self.outcome.accuracy_after,
            },
        }


def run_intervention(
    model: GcbmModel,
    graphs,
    class_labels,
    concept_labels,
    concept_indices,
    params: InterventionParams,
):
    """One intervention round over one or more concepts.

    Target statistics (the logit gap and per-concept activations) are all
    computed on the incoming model; edits are then applied sequentially and
    the model is re-evaluated on the full split after each concept. Returns
    (records, final model).
    """
    if len(concept_indices) == 0:
        raise EmptyTargetError("no concepts to intervene on")
    targets = select_targets(model, graphs, class_labels, concept_labels, params)
    if len(targets) == 0:
        raise EmptyTargetError(
            "no graphs satisfy the target filter "
            f"(pred={params.cls_pred}, true={params.cls_true}, tau_c={params.tau_c})"
        )
    target_graphs = [graphs[i] for i in targets]
    c_hat_rows, _, _ = predict_batch(model, target_graphs)
    delta_a_bar = avg_logit_diff(model, c_hat_rows, params)
    target_ids = tuple(int(graphs[i].id) for i in targets)

    records: list[InterventionRecord] = []
    current = model
    for j in concept_indices:
        j = int(j)
        f_bar = avg_activation(c_hat_rows, j)
        delta_w = weight_adjustment(delta_a_bar, f_bar, params.margin)
        old_true = float(current.classifier.W_F[params.cls_true, j])
        old_pred = float(current.classifier.W_F[params.cls_pred, j])
        updated = apply_intervention(current, j, delta_w, params)
        outcome = evaluate_intervention(model, updated, graphs, class_labels)
        records.append(
            InterventionRecord(
                concept_index=j,
                target_ids=target_ids,
                delta_a_bar=delta_a_bar,
                f_bar=f_bar,
                delta_w=delta_w,
                edits=(
                    (params.cls_true, j, old_true, old_true + delta_w),
                    (params.cls_pred, j, old_pred, old_pred - delta_w),
                ),
                outcome=outcome,
            )
        )
        current = updated
    return records, current
