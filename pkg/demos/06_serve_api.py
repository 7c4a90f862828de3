"""The JSON API, exercised end to end in one process.

Serves the same damaged-head model demo 04 repairs, then walks the sequence
a UI would: inspect metadata and metrics, preview a weight intervention
without committing, apply it, check the improvement, and revert. Every
response carries the hash of the checkpoint it was computed against, so a
client can always tell which model answered.
"""

import json
import threading
import urllib.request

import numpy as np

from graphcb.artifacts import model_to_checkpoint
from graphcb.net import SparseLinearClassifier, TrainConfig, replace_classifier, train_model
from graphcb.pipeline import RunConfig
from graphcb.server import make_server
from graphcb.synth import planted_motif_dataset
from graphcb.wl import build_universe, universe_onehot_labels


def call(base, path, payload=None):
    url = base + path
    if payload is None:
        req = urllib.request.Request(url)
    else:
        req = urllib.request.Request(
            url, data=json.dumps(payload).encode(), method="POST",
            headers={"Content-Type": "application/json"},
        )
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read().decode())


def main():
    config = RunConfig(
        dataset="synthetic-house", num_levels=2, m_per_level=4,
        folds=1, epochs=20, learning_rate=0.02, seed=0,
    )
    dataset = planted_motif_dataset(num_graphs=100, seed=0)
    universe = build_universe(dataset, config.num_levels, config.m_per_level)
    labels = universe_onehot_labels(dataset.graphs, universe)
    model, _ = train_model(
        dataset.graphs, dataset.class_labels, labels, dataset.num_classes,
        config.train_config(), universe=universe, hidden_dim=config.m_per_level,
    )
    # same simulated regression as demo 04: class 1 loses its weight row
    W = model.classifier.W_F.copy()
    W[1, :] = 0.0
    broken = replace_classifier(
        model, SparseLinearClassifier(W_F=W, b_F=np.array([1.0, 0.0]))
    )
    checkpoint = model_to_checkpoint(broken, config.to_dict())

    httpd = make_server(broken, checkpoint, dataset, config, port=0)
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    print(f"serving on {base}")

    meta = call(base, "/api/meta")
    print(f"checkpoint {meta['checkpoint_hash'][:12]}, {meta['num_graphs']} graphs")

    metrics = call(base, "/api/metrics")
    print(f"accuracy {metrics['accuracy']:.3f}, confusion {metrics['confusion']}")

    # concept 1 is the well-behaved slot from demo 04
    preview = call(
        base, "/api/intervene/weights", {"concept_indices": [1], "dry_run": True}
    )
    step = preview["records"][0]["delta_w"]
    print(f"dry run: delta_w would be {step:+.4f}; checkpoint hash unchanged")

    applied = call(base, "/api/intervene/weights", {"concept_indices": [1]})
    print(f"applied: new checkpoint {applied['new_checkpoint_hash'][:12]}")

    metrics = call(base, "/api/metrics")
    print(f"accuracy now {metrics['accuracy']:.3f}")

    restored = call(base, "/api/revert", {})
    print(f"reverted to {restored['checkpoint_hash'][:12]}")
    assert restored["checkpoint_hash"] == meta["checkpoint_hash"]

    httpd.shutdown()
    httpd.server_close()
    print("done")


if __name__ == "__main__":
    main()
