"""Deterministic JSON artifacts and their hashes.

Every output (concept universe, checkpoint, metric report, intervention
transcript) is canonical JSON: sorted keys, compact separators, no NaN/Inf,
shortest-round-trip floats, and no timestamps. Rerunning a command with the
same seed therefore reproduces files byte for byte, and a file's sha256 can
serve as its identity (the serve API tags every response with the checkpoint
hash it answered from).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError
from .graphs import GraphDataset
from .net import (
    BottleneckHead,
    GcbmModel,
    GinLayerParams,
    SparseLinearClassifier,
)
from .wl import ConceptUniverse, ConceptVocabulary, SelectedConcepts

SCHEMA_VERSION = 1


def jsonable(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def canonical_json(payload) -> str:
    return json.dumps(
        jsonable(payload),
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
        ensure_ascii=True,
    )


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def payload_hash(payload) -> str:
    return sha256_hex(canonical_json(payload))


def write_json_artifact(path, payload) -> str:
    """Write canonical JSON and return its sha256. Parent dirs are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = canonical_json(payload)
    path.write_text(text, encoding="utf-8")
    return sha256_hex(text)


def read_json_artifact(path):
    """Load an artifact and recompute the hash of its exact bytes."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"artifact not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path} is not valid JSON: {exc}") from exc
    return payload, sha256_hex(text)


def dataset_fingerprint(dataset: GraphDataset) -> str:
    """Content hash of a dataset: topology, labels, masks; not metadata."""
    payload = {
        "name": dataset.name,
        "num_classes": dataset.num_classes,
        "class_labels": list(dataset.class_labels),
        "graphs": [
            {
                "id": g.id,
                "num_nodes": g.num_nodes,
                "edges": [list(e) for e in g.edges],
                "node_labels": list(g.node_labels),
                "node_mask": None if g.node_mask is None else list(g.node_mask),
            }
            for g in dataset.graphs
        ],
    }
    return payload_hash(payload)


def universe_to_dict(universe: ConceptUniverse) -> dict:
    return {
        "num_levels": universe.num_levels,
        "m_per_level": universe.m_per_level,
        "levels": [
            {
                "level": k,
                "codes": list(universe.vocabularies[k - 1].codes),
                "selected_ids": list(universe.selections[k - 1].concept_ids),
                "gains": list(universe.selections[k - 1].gains),
            }
            for k in range(1, universe.num_levels + 1)
        ],
    }


def universe_from_dict(d: dict) -> ConceptUniverse:
    vocabularies = []
    selections = []
    for entry in d["levels"]:
        vocabularies.append(
            ConceptVocabulary(level=entry["level"], codes=tuple(entry["codes"]))
        )
        selections.append(
            SelectedConcepts(
                level=entry["level"],
                concept_ids=tuple(int(i) for i in entry["selected_ids"]),
                gains=tuple(float(g) for g in entry["gains"]),
            )
        )
    return ConceptUniverse(
        num_levels=int(d["num_levels"]),
        m_per_level=int(d["m_per_level"]),
        vocabularies=tuple(vocabularies),
        selections=tuple(selections),
    )


def universe_hash(universe: ConceptUniverse) -> str:
    return payload_hash(universe_to_dict(universe))


def model_to_checkpoint(model: GcbmModel, run_config: dict, meta: dict | None = None) -> dict:
    """Portable checkpoint: parameters row-major plus the model's own concept
    universe and its hash, so consumers can detect universe drift."""
    if model.universe is None:
        raise ValidationError("cannot checkpoint a model without a concept universe")
    uni = universe_to_dict(model.universe)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "checkpoint",
        "hidden_dim": model.hidden_dim,
        "num_classes": model.num_classes,
        "num_levels": model.num_levels,
        "label_index": sorted(
            ([jsonable(k), int(v)] for k, v in model.label_index.items()),
            key=lambda kv: kv[1],
        ),
        "input_weight": model.input_weight.tolist(),
        "layers": [
            {
                "level": l.level,
                "W1": l.W1.tolist(),
                "b1": l.b1.tolist(),
                "W2": l.W2.tolist(),
                "b2": l.b2.tolist(),
                "residual_weight": l.residual_weight,
            }
            for l in model.layers
        ],
        "level_weights": model.head.level_weights.tolist(),
        "W_F": model.classifier.W_F.tolist(),
        "b_F": model.classifier.b_F.tolist(),
        "universe": uni,
        "universe_hash": payload_hash(uni),
        "run_config": jsonable(run_config),
        "meta": jsonable(meta or {}),
    }


def model_from_checkpoint(d: dict) -> GcbmModel:
    """Rebuild a model, verifying schema and the embedded universe hash."""
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported checkpoint schema {d.get('schema_version')!r}"
        )
    stored = d.get("universe_hash")
    actual = payload_hash(d["universe"])
    if stored != actual:
        raise ValidationError(
            f"checkpoint universe hash mismatch: stored {stored}, actual {actual}"
        )
    universe = universe_from_dict(d["universe"])
    layers = tuple(
        GinLayerParams(
            level=entry["level"],
            W1=np.array(entry["W1"], dtype=np.float64),
            b1=np.array(entry["b1"], dtype=np.float64),
            W2=np.array(entry["W2"], dtype=np.float64),
            b2=np.array(entry["b2"], dtype=np.float64),
            residual_weight=float(entry["residual_weight"]),
        )
        for entry in d["layers"]
    )
    label_index = {}
    for key, slot in d["label_index"]:
        # node labels are ints after densification; JSON keeps them as ints
        label_index[key if not isinstance(key, float) else int(key)] = int(slot)
    return GcbmModel(
        hidden_dim=int(d["hidden_dim"]),
        num_classes=int(d["num_classes"]),
        label_index=label_index,
        input_weight=np.array(d["input_weight"], dtype=np.float64),
        layers=layers,
        head=BottleneckHead(level_weights=np.array(d["level_weights"], dtype=np.float64)),
        classifier=SparseLinearClassifier(
            W_F=np.array(d["W_F"], dtype=np.float64),
            b_F=np.array(d["b_F"], dtype=np.float64),
        ),
        universe=universe,
    )


def concepts_artifact(universe: ConceptUniverse, run_config: dict, dataset_hash: str) -> dict:
    uni = universe_to_dict(universe)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "concepts",
        "universe": uni,
        "universe_hash": payload_hash(uni),
        "dataset_hash": dataset_hash,
        "run_config": jsonable(run_config),
        "vocab_sizes": [len(v.codes) for v in universe.vocabularies],
    }


def load_universe_artifact(path) -> tuple[ConceptUniverse, dict]:
    payload, _ = read_json_artifact(path)
    if payload.get("kind") != "concepts":
        raise ValidationError(f"{path} is not a concepts artifact")
    stored = payload.get("universe_hash")
    actual = payload_hash(payload["universe"])
    if stored != actual:
        raise ValidationError(
            f"concepts artifact hash mismatch: stored {stored}, actual {actual}"
        )
    return universe_from_dict(payload["universe"]), payload
