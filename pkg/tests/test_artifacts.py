import json

import numpy as np
import pytest

from graphcb.artifacts import (
    canonical_json,
    concepts_artifact,
    dataset_fingerprint,
    jsonable,
    load_universe_artifact,
    model_from_checkpoint,
    model_to_checkpoint,
    payload_hash,
    read_json_artifact,
    universe_from_dict,
    universe_hash,
    universe_to_dict,
    write_json_artifact,
)
from graphcb.errors import DataFormatError, ValidationError
from graphcb.graphs import Graph, GraphDataset
from graphcb.net import forward
from graphcb.wl import build_universe
from conftest import make_rigged_setup


def test_jsonable_strips_numpy_types():
    out = jsonable(
        {
            "a": np.float64(1.5),
            "b": np.int32(3),
            "c": np.bool_(True),
            "d": np.array([[1, 2]]),
            "e": (np.float32(0.5),),
        }
    )
    assert out == {"a": 1.5, "b": 3, "c": True, "d": [[1, 2]], "e": [0.5]}
    assert json.dumps(out)  # round-trips through the stdlib encoder


def test_canonical_json_is_order_insensitive_and_compact():
    a = canonical_json({"b": 1, "a": [1, 2]})
    b = canonical_json({"a": [1, 2], "b": 1})
    assert a == b == '{"a":[1,2],"b":1}'


def test_canonical_json_rejects_nan():
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})
    with pytest.raises(ValueError):
        canonical_json({"x": np.inf})


def test_write_read_roundtrip_and_hash(tmp_path):
    payload = {"k": [1, 2, 3], "v": "text"}
    p = tmp_path / "deep" / "artifact.json"
    h_written = write_json_artifact(p, payload)
    loaded, h_read = read_json_artifact(p)
    assert loaded == payload
    assert h_written == h_read == payload_hash(payload)


def test_read_rejects_missing_and_malformed(tmp_path):
    with pytest.raises(DataFormatError):
        read_json_artifact(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DataFormatError):
        read_json_artifact(bad)


def test_tampering_changes_hash(tmp_path):
    p = tmp_path / "a.json"
    h1 = write_json_artifact(p, {"x": 1})
    text = p.read_text()
    p.write_text(text.replace("1", "2"))
    _, h2 = read_json_artifact(p)
    assert h1 != h2


def test_dataset_fingerprint_sensitivity(toy_dataset):
    base = dataset_fingerprint(toy_dataset)
    assert base == dataset_fingerprint(toy_dataset)

    # metadata does not matter
    import dataclasses

    relabeled = dataclasses.replace(toy_dataset, metadata={"anything": 1})
    assert dataset_fingerprint(relabeled) == base

    # flipping one class label matters
    flipped = GraphDataset(
        name=toy_dataset.name,
        graphs=toy_dataset.graphs,
        class_labels=(1,) + toy_dataset.class_labels[1:],
        num_classes=2,
        label_alphabet=toy_dataset.label_alphabet,
    )
    assert dataset_fingerprint(flipped) != base

    # a single extra edge matters
    g0 = toy_dataset.graphs[0]
    g0_mod = Graph(
        id=g0.id,
        num_nodes=g0.num_nodes + 1,
        edges=g0.edges + ((0, g0.num_nodes),),
        node_labels=g0.node_labels + (0,),
    )
    grown = GraphDataset(
        name=toy_dataset.name,
        graphs=(g0_mod,) + toy_dataset.graphs[1:],
        class_labels=toy_dataset.class_labels,
        num_classes=2,
        label_alphabet=toy_dataset.label_alphabet,
    )
    assert dataset_fingerprint(grown) != base


def test_universe_roundtrip(toy_dataset):
    uni = build_universe(toy_dataset, num_levels=2, m_per_level=2)
    d = universe_to_dict(uni)
    back = universe_from_dict(d)
    assert back == uni
    assert universe_hash(back) == universe_hash(uni)
    # hash is sensitive to the selection
    d2 = universe_to_dict(uni)
    d2["levels"][0]["gains"][0] = 0.123
    assert payload_hash(d2) != payload_hash(d)


def test_checkpoint_roundtrip_preserves_predictions(rigged):
    ds, model, _ = rigged
    ckpt = model_to_checkpoint(model, run_config={"seed": 0}, meta={"fold": 0})
    assert ckpt["kind"] == "checkpoint"
    rebuilt = model_from_checkpoint(ckpt)
    assert rebuilt.label_index == model.label_index
    for g in ds.graphs[:4]:
        a_c, a_l = forward(model, g)
        b_c, b_l = forward(rebuilt, g)
        np.testing.assert_array_equal(a_c, b_c)
        np.testing.assert_array_equal(a_l, b_l)
    # canonical text of the checkpoint is stable
    assert canonical_json(ckpt) == canonical_json(
        model_to_checkpoint(model, run_config={"seed": 0}, meta={"fold": 0})
    )


def test_checkpoint_requires_universe(rigged):
    import dataclasses

    _, model, _ = rigged
    bare = dataclasses.replace(model, universe=None)
    with pytest.raises(ValidationError):
        model_to_checkpoint(bare, run_config={})


def test_checkpoint_detects_schema_and_universe_tampering(rigged):
    _, model, _ = rigged
    ckpt = model_to_checkpoint(model, run_config={})
    wrong_schema = dict(ckpt, schema_version=99)
    with pytest.raises(ValidationError):
        model_from_checkpoint(wrong_schema)
    tampered = json.loads(json.dumps(ckpt))
    tampered["universe"]["levels"][0]["gains"][0] = 0.999
    with pytest.raises(ValidationError):
        model_from_checkpoint(tampered)


def test_concepts_artifact_roundtrip(tmp_path, toy_dataset):
    uni = build_universe(toy_dataset, num_levels=2, m_per_level=2)
    art = concepts_artifact(uni, {"m": 2}, dataset_fingerprint(toy_dataset))
    assert art["vocab_sizes"] == [len(v.codes) for v in uni.vocabularies]
    p = tmp_path / "concepts.json"
    write_json_artifact(p, art)
    back, payload = load_universe_artifact(p)
    assert back == uni
    assert payload["dataset_hash"] == dataset_fingerprint(toy_dataset)


def test_concepts_artifact_rejects_wrong_kind_and_tamper(tmp_path, toy_dataset):
    uni = build_universe(toy_dataset, num_levels=1, m_per_level=2)
    art = concepts_artifact(uni, {}, "h")
    p = tmp_path / "c.json"
    write_json_artifact(p, dict(art, kind="other"))
    with pytest.raises(ValidationError):
        load_universe_artifact(p)
    bad = json.loads(canonical_json(art))
    bad["universe"]["m_per_level"] = 7
    write_json_artifact(p, bad)
    with pytest.raises(ValidationError):
        load_universe_artifact(p)


def make_rigged_checkpoint():
    _, model, _ = make_rigged_setup()
    return model_to_checkpoint(model, run_config={"seed": 0})


def test_checkpoint_hash_tracks_classifier_changes():
    from graphcb.intervene import InterventionParams, apply_intervention

    _, model, _ = make_rigged_setup()
    before = payload_hash(model_to_checkpoint(model, run_config={}))
    edited = apply_intervention(model, 0, 0.1, InterventionParams())
    after = payload_hash(model_to_checkpoint(edited, run_config={}))
    assert before != after
