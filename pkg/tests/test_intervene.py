import numpy as np
import pytest

from graphcb.errors import (
    ConfigurationError,
    EmptyTargetError,
    NearZeroActivationError,
    ValidationError,
)
from graphcb.intervene import (
    InterventionParams,
    apply_intervention,
    avg_activation,
    avg_logit_diff,
    edit_concept_vector,
    evaluate_intervention,
    run_intervention,
    select_targets,
    weight_adjustment,
)
from graphcb.net import predict, predict_batch


def test_params_validation():
    with pytest.raises(ConfigurationError):
        InterventionParams(tau_c=0.0)
    with pytest.raises(ConfigurationError):
        InterventionParams(tau_c=1.5)
    with pytest.raises(ConfigurationError):
        InterventionParams(margin=-0.1)
    with pytest.raises(ConfigurationError):
        InterventionParams(cls_true=1, cls_pred=1)


# ------------------------------------------------------------- target filter


def test_select_targets_matches_bruteforce(rigged):
    ds, model, labels = rigged
    params = InterventionParams()
    got = select_targets(model, ds.graphs, ds.class_labels, labels, params)

    want = []
    for i, g in enumerate(ds.graphs):
        c_hat, pred, _ = predict(model, g)
        row = labels[i]
        denom = np.linalg.norm(c_hat) * np.linalg.norm(row)
        cos = float(c_hat @ row / denom) if denom > 0 else 0.0
        if pred == params.cls_pred and ds.class_labels[i] == params.cls_true and cos >= params.tau_c:
            want.append(i)
    assert got.tolist() == want
    # the rig makes every class-1 graph a target
    assert got.tolist() == [i for i, y in enumerate(ds.class_labels) if y == 1]


def test_select_targets_cosine_threshold_boundary(rigged):
    ds, model, _ = rigged
    # c_hat always points along (1, 1); a (1, 0) label row gives cos = 1/sqrt(2)
    n = len(ds.graphs)
    axis_labels = np.tile([1.0, 0.0], (n, 1))
    below = InterventionParams(tau_c=0.70)
    above = InterventionParams(tau_c=0.71)
    hit = select_targets(model, ds.graphs, ds.class_labels, axis_labels, below)
    miss = select_targets(model, ds.graphs, ds.class_labels, axis_labels, above)
    assert len(hit) == 6
    assert len(miss) == 0


def test_select_targets_zero_label_rows_never_qualify(rigged):
    ds, model, _ = rigged
    zero_labels = np.zeros((len(ds.graphs), 2))
    got = select_targets(
        model, ds.graphs, ds.class_labels, zero_labels, InterventionParams(tau_c=0.01)
    )
    assert len(got) == 0


# --------------------------------------------------------- target statistics


def test_avg_logit_diff_and_activation_oracle(rigged):
    ds, model, _ = rigged
    params = InterventionParams()
    paths = [g for g, y in zip(ds.graphs, ds.class_labels) if y == 1]
    rows, _, _ = predict_batch(model, paths)
    # every path has c_hat = (0.4, 0.4); logits (0.2, 0.0)
    assert avg_logit_diff(model, rows, params) == pytest.approx(0.2, abs=1e-12)
    assert avg_activation(rows, 0) == pytest.approx(0.4, abs=1e-12)
    assert avg_activation(rows, 1) == pytest.approx(0.4, abs=1e-12)
    with pytest.raises(EmptyTargetError):
        avg_logit_diff(model, np.zeros((0, 2)), params)
    with pytest.raises(EmptyTargetError):
        avg_activation(np.zeros((0, 2)), 0)
    with pytest.raises(ValidationError):
        avg_activation(rows, 7)


def test_reference_weight_adjustments():
    """Hand-checked operating points for the closed-form update."""
    dw = weight_adjustment(0.51, 0.8426, 0.2)
    assert dw == pytest.approx(0.4213, abs=5e-4)
    # applying it moves the two touched weights to their expected values
    assert 0.3842 - dw == pytest.approx(-0.0371, abs=5e-4)
    assert -0.0112 + dw == pytest.approx(0.4101, abs=5e-4)

    dw2 = weight_adjustment(0.32, 0.7635, 0.2)
    assert dw2 == pytest.approx(0.3405, abs=5e-4)
    # A second reference row circulates with transitions 0.1876 -> -0.2466
    # and 0.0939 -> 0.5281, which imply a step of ~0.4342. That step does
    # not follow from its own stated inputs; we pin the formula, not the
    # inconsistent transitions.
    implied = 0.5281 - 0.0939
    assert implied == pytest.approx(0.4342, abs=5e-4)
    assert abs(implied - dw2) > 0.09


def test_weight_adjustment_refuses_dead_concept():
    with pytest.raises(NearZeroActivationError):
        weight_adjustment(0.5, 0.0, 0.2)
    with pytest.raises(NearZeroActivationError):
        weight_adjustment(0.5, 1e-9, 0.2)
    assert np.isfinite(weight_adjustment(0.5, 1e-8, 0.2))


# ------------------------------------------------------------- applying edits


def test_apply_intervention_touches_exactly_two_entries(rigged):
    _, model, _ = rigged
    params = InterventionParams()
    new = apply_intervention(model, 1, 0.25, params)
    diff = new.classifier.W_F - model.classifier.W_F
    changed = np.argwhere(diff != 0.0)
    assert sorted(map(tuple, changed.tolist())) == [(0, 1), (1, 1)]
    assert diff[params.cls_true, 1] == 0.25
    assert diff[params.cls_pred, 1] == -0.25
    np.testing.assert_array_equal(new.classifier.b_F, model.classifier.b_F)
    # bias and every other weight bit-identical
    assert new.classifier.W_F[0, 0] == model.classifier.W_F[0, 0]


def test_apply_intervention_zero_step_is_noop_copy(rigged):
    _, model, _ = rigged
    new = apply_intervention(model, 0, 0.0, InterventionParams())
    assert new is not model
    np.testing.assert_array_equal(new.classifier.W_F, model.classifier.W_F)


def test_apply_then_inverse_restores_weights(rigged):
    _, model, _ = rigged
    params = InterventionParams()
    there = apply_intervention(model, 0, 0.371, params)
    back = apply_intervention(there, 0, -0.371, params)
    np.testing.assert_allclose(
        back.classifier.W_F, model.classifier.W_F, atol=1e-15
    )


def test_apply_intervention_validates_indices(rigged):
    _, model, _ = rigged
    with pytest.raises(ValidationError):
        apply_intervention(model, 9, 0.1, InterventionParams())
    with pytest.raises(ValidationError):
        apply_intervention(model, 0, 0.1, InterventionParams(cls_true=5, cls_pred=0))


# ------------------------------------------------------------ what-if edits


def test_edit_concept_vector_flips_prediction(rigged):
    ds, model, _ = rigged
    path = ds.graphs[-1]  # class 1, predicted 0
    baseline = edit_concept_vector(model, path, [])
    np.testing.assert_allclose(baseline.original, [0.4, 0.4], atol=1e-12)
    np.testing.assert_array_equal(baseline.edited, baseline.original)
    assert baseline.predicted_class == 0

    flipped = edit_concept_vector(model, path, [(0, -1.0)])
    assert flipped.predicted_class == 1
    np.testing.assert_allclose(flipped.edited, [-1.0, 0.4], atol=1e-12)
    # original vector reported untouched
    np.testing.assert_allclose(flipped.original, [0.4, 0.4], atol=1e-12)
    assert flipped.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


def test_edit_concept_vector_validates(rigged):
    ds, model, _ = rigged
    g = ds.graphs[0]
    with pytest.raises(ValidationError):
        edit_concept_vector(model, g, [(5, 0.0)])
    with pytest.raises(ValidationError):
        edit_concept_vector(model, g, [(0, float("nan"))])


# -------------------------------------------------------------- bookkeeping


def test_evaluate_intervention_accounting_identity(rigged):
    ds, model, _ = rigged
    params = InterventionParams()
    after = apply_intervention(model, 0, 0.5, params)
    outcome = evaluate_intervention(model, after, ds.graphs, ds.class_labels)
    n = len(ds.graphs)
    assert outcome.accuracy_after - outcome.accuracy_before == pytest.approx(
        (outcome.corrections - outcome.new_errors) / n, abs=1e-12
    )
    # the flipped classifier now gets the paths right and the triangles wrong
    assert outcome.corrections == 6
    assert outcome.new_errors == 6
    assert outcome.accuracy_before == 0.5
    assert outcome.accuracy_after == 0.5


def test_run_intervention_known_numbers(rigged):
    ds, model, labels = rigged
    params = InterventionParams()
    records, final = run_intervention(
        model, ds.graphs, ds.class_labels, labels, [0], params
    )
    assert len(records) == 1
    rec = records[0]
    assert rec.concept_index == 0
    assert rec.target_ids == tuple(range(6, 12))
    assert rec.delta_a_bar == pytest.approx(0.2, abs=1e-12)
    assert rec.f_bar == pytest.approx(0.4, abs=1e-12)
    assert rec.delta_w == pytest.approx(0.5, abs=1e-12)
    assert rec.edits == (
        (1, 0, 0.0, pytest.approx(0.5)),
        (0, 0, 0.5, pytest.approx(0.0)),
    )
    assert rec.outcome.corrections == 6
    # the original model is untouched
    assert model.classifier.W_F[0, 0] == 0.5
    assert final.classifier.W_F[1, 0] == pytest.approx(0.5)
    d = rec.to_dict()
    assert d["concept_index"] == 0
    assert d["outcome"]["corrections"] == 6


def test_run_intervention_statistics_computed_once(rigged):
    """A second concept in the same round reuses the logit gap measured on
    the incoming model; recomputing after the first edit would flip its
    sign."""
    ds, model, labels = rigged
    records, _ = run_intervention(
        model, ds.graphs, ds.class_labels, labels, [0, 1], InterventionParams()
    )
    assert len(records) == 2
    assert records[0].delta_a_bar == records[1].delta_a_bar
    assert records[1].delta_a_bar == pytest.approx(0.2, abs=1e-12)
    assert records[0].target_ids == records[1].target_ids
    # edits apply sequentially: concept 1's old weights come from the
    # intermediate model
    assert records[1].edits[0][2] == 0.0


def test_run_intervention_refuses_empty(rigged):
    ds, model, labels = rigged
    # reversed direction: nothing is labeled 0 but predicted 1
    params = InterventionParams(cls_true=0, cls_pred=1)
    with pytest.raises(EmptyTargetError):
        run_intervention(model, ds.graphs, ds.class_labels, labels, [0], params)
    with pytest.raises(EmptyTargetError):
        run_intervention(
            model, ds.graphs, ds.class_labels, labels, [], InterventionParams()
        )
