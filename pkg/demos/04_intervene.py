"""Repairing a damaged classifier head by editing weights directly.

Trains a sound model, then simulates a regression in the final layer: the
class-1 weight row is zeroed and class 0 gets a bias head start, so every
motif graph is missed. The intervention measures the average logit shortfall
over the missed graphs and the chosen concept's average activation there,
then moves weight mass between the two classes in one closed-form step. No
retraining, and exactly two weight entries change per edited concept.
"""

import numpy as np

from graphcb.errors import EmptyTargetError
from graphcb.intervene import InterventionParams, run_intervention, select_targets
from graphcb.metrics import accuracy
from graphcb.net import (
    SparseLinearClassifier,
    TrainConfig,
    predict_batch,
    replace_classifier,
    train_model,
)
from graphcb.synth import planted_motif_dataset
from graphcb.wl import build_universe, universe_onehot_labels


def main():
    dataset = planted_motif_dataset(num_graphs=100, seed=0)
    universe = build_universe(dataset, num_levels=2, m_per_level=4)
    labels = universe_onehot_labels(dataset.graphs, universe)
    model, _ = train_model(
        dataset.graphs,
        dataset.class_labels,
        labels,
        dataset.num_classes,
        TrainConfig(epochs=20, learning_rate=0.02, seed=0),
        universe=universe,
        hidden_dim=4,
    )

    # the simulated regression: class 1 loses its weights, class 0 gets a
    # constant advantage
    W = model.classifier.W_F.copy()
    W[1, :] = 0.0
    b = np.array([1.0, 0.0])
    broken = replace_classifier(model, SparseLinearClassifier(W_F=W, b_F=b))

    truth = np.asarray(dataset.class_labels)
    _, pred, _ = predict_batch(broken, list(dataset.graphs))
    print(f"accuracy after damage: {accuracy(pred, truth):.3f}")

    params = InterventionParams(tau_c=0.6, margin=0.2, cls_true=1, cls_pred=0)
    targets = select_targets(broken, list(dataset.graphs), truth, labels, params)
    print(f"qualifying graphs (true 1, predicted 0, concepts on track): {len(targets)}")

    # boost the two highest-gain concept slots, one edit after another
    ranked = sorted(
        universe.concept_entries(), key=lambda e: -e["information_gain"]
    )[:2]
    indices = [e["global_index"] for e in ranked]
    for e in ranked:
        print(f"editing concept {e['global_index']}: level {e['level']} {e['code']!r}")

    try:
        records, repaired = run_intervention(
            broken, list(dataset.graphs), truth, labels, indices, params
        )
    except EmptyTargetError as exc:
        print(f"nothing to repair: {exc}")
        return

    for r in records:
        print(
            f"  concept {r.concept_index}: delta_a_bar {r.delta_a_bar:+.4f}, "
            f"f_bar {r.f_bar:.4f} -> delta_w {r.delta_w:+.4f}"
        )
        print(
            f"    accuracy {r.outcome.accuracy_before:.3f} -> "
            f"{r.outcome.accuracy_after:.3f} ({r.outcome.corrections} fixed, "
            f"{r.outcome.new_errors} newly wrong)"
        )

    _, pred_after, _ = predict_batch(repaired, list(dataset.graphs))
    print(f"accuracy after repair: {accuracy(pred_after, truth):.3f}")


if __name__ == "__main__":
    main()
