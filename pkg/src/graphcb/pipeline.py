"""End-to-end orchestration: dataset loading, per-fold concept building,
training, explanation, and intervention, with every output written as a
deterministic JSON artifact that echoes its RunConfig and input hashes.

Concept universes are always refit on the training split of each fold;
held-out graphs are scored against them leniently (unseen codes drop out).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .artifacts import (
    concepts_artifact,
    dataset_fingerprint,
    model_to_checkpoint,
    payload_hash,
    write_json_artifact,
)
from .embed import build_corpus, train_embeddings, universe_embedding_labels
from .errors import ConfigurationError, EmptyTargetError, UndefinedAUCError
from .graphs import GraphDataset, parse_tu_dataset, stratified_k_fold
from .intervene import InterventionParams, run_intervention
from .interpret import (
    interpretability_auc,
    predict_subgraph,
    sankey_payload,
    select_key_concepts,
)
from .metrics import accuracy, confusion_counts, cross_validate, roc_auc
from .net import GcbmModel, TrainConfig, predict_batch, train_model
from .synth import planted_motif_dataset
from .wl import build_universe, universe_onehot_labels, wl_refine

EMBEDDERS = ("onehot", "embedding")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; echoed verbatim into every artifact."""

    dataset: str
    output_dir: str = "runs/out"
    num_levels: int = 4
    m_per_level: int = 64
    m_key: int = 2
    embedder: str = "onehot"
    folds: int = 10
    seed: int = 0
    lambda_c: float = 0.5
    lambda_r: float = 1e-4
    epochs: int = 300
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    dropout_rate: float = 0.0
    min_improvement: float = 0.1
    min_lr: float = 1e-6
    patience: int = 10
    tau_c: float = 0.6
    margin: float = 0.2
    cls_true: int = 1
    cls_pred: int = 0
    embed_dim: int = 64
    embed_epochs: int = 80
    top_flows: int = 8

    def __post_init__(self):
        if self.embedder not in EMBEDDERS:
            raise ConfigurationError(
                f"embedder must be one of {EMBEDDERS}, got {self.embedder!r}"
            )
        if self.num_levels < 1 or self.m_per_level < 1 or self.m_key < 1:
            raise ConfigurationError("K, M and M_I must be positive")
        if self.folds < 1:
            raise ConfigurationError("folds must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            lambda_c=self.lambda_c,
            lambda_r=self.lambda_r,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            clip_norm=self.clip_norm,
            dropout_rate=self.dropout_rate,
            min_improvement=self.min_improvement,
            min_lr=self.min_lr,
            patience=self.patience,
            seed=self.seed if seed is None else seed,
        )

    def intervention_params(self) -> InterventionParams:
        return InterventionParams(
            tau_c=self.tau_c,
            margin=self.margin,
            cls_true=self.cls_true,
            cls_pred=self.cls_pred,
        )


def load_dataset(spec: str, seed: int = 0) -> GraphDataset:
    """Resolve a dataset argument.

    ``synthetic-house`` generates the planted-motif benchmark with the run
    seed; anything else is a TU-format directory (the directory itself or
    its parent, named after the dataset).
    """
    if spec == "synthetic-house":
        return planted_motif_dataset(num_graphs=200, seed=seed)
    path = Path(spec)
    return parse_tu_dataset(path, path.name)


def _subset(dataset: GraphDataset, indices) -> GraphDataset:
    return dataset.subset(indices)


def _concept_labels_for(
    graphs,
    universe,
    embedder: str,
    refined,
    config: RunConfig,
    seed: int,
    table=None,
    strict: bool = True,
):
    if embedder == "onehot":
        return universe_onehot_labels(graphs, universe, refined=refined, strict=strict), None
    if table is None:
        raise ConfigurationError("embedding path needs a trained table")
    return (
        universe_embedding_labels(graphs, universe, table, refined=refined, strict=strict),
        table,
    )


def _fit_embedding_table(train_ds, universe, refined, config: RunConfig, seed: int):
    corpus = build_corpus(
        train_ds,
        list(universe.vocabularies),
        list(universe.selections),
        universe.num_levels,
        refined=refined,
    )
    return train_embeddings(
        corpus, dim=config.embed_dim, epochs=config.embed_epochs, seed=seed
    )


def extract_run(dataset: GraphDataset, config: RunConfig) -> dict:
    """Concept universe over the full dataset, as a writable artifact."""
    universe = build_universe(dataset, config.num_levels, config.m_per_level)
    return concepts_artifact(
        universe, config.to_dict(), dataset_fingerprint(dataset)
    )


@dataclass
class FoldResult:
    fold: int
    model: GcbmModel
    accuracy: float
    auc: float | None
    checkpoint: dict


@dataclass
class TrainRunResult:
    fold_results: list[FoldResult]
    report: dict

    @property
    def models(self):
        return [fr.model for fr in self.fold_results]


def train_run(dataset: GraphDataset, config: RunConfig) -> TrainRunResult:
    """Cross-validated training per the run config.

    folds == 1 trains on the whole dataset and reports training-split
    metrics (the serving path); folds >= 2 is stratified CV with the
    concept universe refit per training split.
    """
    dataset_hash = dataset_fingerprint(dataset)
    refined_all = [wl_refine(g, config.num_levels) for g in dataset.graphs]
    n = len(dataset.graphs)
    if config.folds == 1:
        splits = [(np.arange(n), np.arange(n))]
    else:
        folds = stratified_k_fold(dataset, config.folds, config.seed)
        splits = [(f.train_ids, f.test_ids) for f in folds]

    fold_results: list[FoldResult] = []
    for fold_i, (train_idx, test_idx) in enumerate(splits):
        train_idx = np.asarray(train_idx)
        test_idx = np.asarray(test_idx)
        train_ds = _subset(dataset, train_idx)
        train_refined = [refined_all[i] for i in train_idx]
        universe = build_universe(
            train_ds, config.num_levels, config.m_per_level, refined=train_refined
        )
        fold_seed = config.seed + fold_i
        table = None
        if config.embedder == "embedding":
            table = _fit_embedding_table(train_ds, universe, train_refined, config, fold_seed)
        concept_labels, _ = _concept_labels_for(
            train_ds.graphs, universe, config.embedder, train_refined, config, fold_seed,
            table=table,
        )
        model, history = train_model(
            train_ds.graphs,
            np.asarray(train_ds.class_labels),
            concept_labels,
            dataset.num_classes,
            config.train_config(seed=fold_seed),
            universe=universe,
            hidden_dim=config.m_per_level,
        )
        test_graphs = [dataset.graphs[i] for i in test_idx]
        y_test = np.asarray([dataset.class_labels[i] for i in test_idx])
        _, pred, probs = predict_batch(model, test_graphs)
        fold_acc = accuracy(pred, y_test)
        fold_auc = None
        if dataset.num_classes == 2:
            try:
                fold_auc = roc_auc(probs[:, 1], y_test)
            except UndefinedAUCError:
                fold_auc = None
        checkpoint = model_to_checkpoint(
            model,
            config.to_dict(),
            meta={
                "fold": fold_i,
                "dataset_hash": dataset_hash,
                "train_size": int(len(train_idx)),
                "test_size": int(len(test_idx)),
                "final_loss": history[-1]["total"],
                "final_w_f_l1": history[-1]["w_f_l1"],
            },
        )
        fold_results.append(
            FoldResult(
                fold=fold_i,
                model=model,
                accuracy=fold_acc,
                auc=fold_auc,
                checkpoint=checkpoint,
            )
        )

    accs = [fr.accuracy for fr in fold_results]
    aucs = [fr.auc for fr in fold_results if fr.auc is not None]
    all_pred = []
    all_true = []
    for fr, (train_idx, test_idx) in zip(fold_results, splits):
        test_graphs = [dataset.graphs[i] for i in test_idx]
        _, pred, _ = predict_batch(fr.model, test_graphs)
        all_pred.extend(int(p) for p in pred)
        all_true.extend(int(dataset.class_labels[i]) for i in test_idx)
    confusion = confusion_counts(all_pred, all_true, dataset.num_classes)
    report_metrics = cross_validate(
        accs,
        fold_aucs=aucs if len(aucs) == len(fold_results) and len(aucs) >= 2 else None,
        confusion=confusion,
    ) if len(accs) >= 2 else None
    report = {
        "schema_version": 1,
        "kind": "report",
        "dataset": dataset.name,
        "dataset_hash": dataset_hash,
        "run_config": config.to_dict(),
        "folds": [
            {
                "fold": fr.fold,
                "accuracy": fr.accuracy,
                "auc": fr.auc,
                "checkpoint_hash": payload_hash(fr.checkpoint),
            }
            for fr in fold_results
        ],
        "mean_accuracy": float(np.mean(accs)),
        "std_accuracy": float(np.std(accs)),
        "metrics": report_metrics.to_dict() if report_metrics is not None else None,
    }
    return TrainRunResult(fold_results=fold_results, report=report)


def explain_run(
    dataset: GraphDataset, model: GcbmModel, config: RunConfig
) -> dict:
    """Sankey payload, key concepts, per-graph subgraph predictions, and the
    node-level AUC when the dataset ships masks."""
    refined = [wl_refine(g, config.num_levels) for g in dataset.graphs]
    keys = select_key_concepts(dataset, config.num_levels, config.m_key, refined=refined)
    preds = [
        predict_subgraph(g, keys, refined=refined[i])
        for i, g in enumerate(dataset.graphs)
    ]
    payload = {
        "schema_version": 1,
        "kind": "explain",
        "dataset": dataset.name,
        "dataset_hash": dataset_fingerprint(dataset),
        "run_config": config.to_dict(),
        "sankey": sankey_payload(model, config.top_flows),
        "key_concepts": [
            {"level": k.level, "code": k.code, "information_gain": k.information_gain}
            for k in keys
        ],
        "subgraphs": [
            {"graph_id": p.graph_id, "nodes": sorted(p.node_set)} for p in preds
        ],
    }
    if dataset.has_masks:
        masks = [g.node_mask for g in dataset.graphs]
        payload["node_auc"] = interpretability_auc(preds, masks)
    else:
        payload["node_auc"] = None
        payload["node_auc_notice"] = "dataset has no node masks; AUC omitted"
    return payload


def intervene_run(
    dataset: GraphDataset,
    model: GcbmModel,
    config: RunConfig,
    concept_indices,
) -> tuple[dict, GcbmModel]:
    """One weight-intervention round; returns (transcript, new model).

    Concept labels for target filtering are recomputed from the model's own
    universe via the frequency path (lenient for codes outside it), so a
    checkpoint alone is enough to intervene.
    """
    if model.universe is None:
        raise ConfigurationError("model has no concept universe")
    labels = universe_onehot_labels(dataset.graphs, model.universe, strict=False)
    params = config.intervention_params()
    records, new_model = run_intervention(
        model,
        list(dataset.graphs),
        np.asarray(dataset.class_labels),
        labels,
        list(concept_indices),
        params,
    )
    transcript = {
        "schema_version": 1,
        "kind": "intervention-transcript",
        "dataset": dataset.name,
        "dataset_hash": dataset_fingerprint(dataset),
        "run_config": config.to_dict(),
        "params": {
            "tau_c": params.tau_c,
            "margin": params.margin,
            "cls_true": params.cls_true,
            "cls_pred": params.cls_pred,
        },
        "records": [r.to_dict() for r in records],
    }
    return transcript, new_model


def write_fold_checkpoints(result: TrainRunResult, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for fr in result.fold_results:
        path = out_dir / f"checkpoint_fold{fr.fold}.json"
        write_json_artifact(path, fr.checkpoint)
        paths.append(path)
    return paths
