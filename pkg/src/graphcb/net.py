"""Concept-bottleneck graph classifier: GIN message passing whose pooled
per-layer outputs ARE the predicted concept scores, a sparse linear head on
top, and a from-scratch training loop (analytic gradients, Adam, plateau
schedule) in float64 numpy.

The prediction depends on the input graph only through the concept vector
c_hat, so replaying a stored c_hat through the classifier reproduces the
logits exactly. That property is what makes interventions meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .errors import (
    ConfigurationError,
    NumericError,
    ShapeError,
    TrainingError,
)
from .graphs import Graph
from .wl import ConceptUniverse


@dataclass(frozen=True)
class GinLayerParams:
    """One aggregation layer: two-layer perceptron + scalar residual gate."""

    level: int
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    residual_weight: float

    def __post_init__(self):
        d_in, d_hid = self.W1.shape
        if self.b1.shape != (d_hid,):
            raise ShapeError(f"layer {self.level}: b1 shape {self.b1.shape}")
        if self.W2.shape[0] != d_hid or self.b2.shape != (self.W2.shape[1],):
            raise ShapeError(f"layer {self.level}: perceptron shapes disagree")
        for name, a in (("W1", self.W1), ("b1", self.b1), ("W2", self.W2), ("b2", self.b2)):
            if not np.isfinite(a).all():
                raise NumericError(f"layer {self.level}: {name} is non-finite")
        if not np.isfinite(self.residual_weight):
            raise NumericError(f"layer {self.level}: residual weight non-finite")


@dataclass(frozen=True)
class BottleneckHead:
    """Per-level scalars scaling pooled outputs into concept scores."""

    level_weights: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.level_weights).all():
            raise NumericError("level weights non-finite")


@dataclass(frozen=True)
class SparseLinearClassifier:
    W_F: np.ndarray  # (C, K*M)
    b_F: np.ndarray  # (C,)

    def __post_init__(self):
        if self.W_F.ndim != 2 or self.b_F.shape != (self.W_F.shape[0],):
            raise ShapeError("classifier shapes disagree")
        if not (np.isfinite(self.W_F).all() and np.isfinite(self.b_F).all()):
            raise NumericError("classifier weights non-finite")

    def l1_norm(self) -> float:
        return float(np.abs(self.W_F).sum())

    def logits(self, c_hat: np.ndarray) -> np.ndarray:
        c_hat = np.asarray(c_hat, dtype=np.float64)
        if c_hat.shape[-1] != self.W_F.shape[1]:
            raise ShapeError(
                f"concept width {c_hat.shape[-1]} != classifier input {self.W_F.shape[1]}"
            )
        return c_hat @ self.W_F.T + self.b_F


@dataclass(frozen=True)
class TrainConfig:
    lambda_c: float = 0.5
    lambda_r: float = 1e-4
    epochs: int = 300
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    dropout_rate: float = 0.0
    min_improvement: float = 0.1
    min_lr: float = 1e-6
    patience: int = 10
    seed: int = 0
    batch_threshold: int = 512
    batch_size: int = 64

    def __post_init__(self):
        if self.lambda_c < 0 or self.lambda_r < 0:
            raise ConfigurationError("trade-off weights must be non-negative")
        if self.epochs < 1 or self.learning_rate <= 0 or self.clip_norm <= 0:
            raise ConfigurationError("epochs, learning rate, clip norm must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigurationError(f"dropout_rate {self.dropout_rate} outside [0, 1)")
        if self.min_lr <= 0 or self.min_improvement < 0 or self.patience < 0:
            raise ConfigurationError("scheduler settings out of range")
        if self.batch_size < 1 or self.batch_threshold < 1:
            raise ConfigurationError("batch sizes must be positive")


@dataclass(frozen=True)
class GcbmModel:
    """Immutable trained model. Interventions never mutate a model; they
    build a new one via ``replace_classifier``."""

    hidden_dim: int
    num_classes: int
    label_index: dict  # node label -> input slot; unknown labels take the last slot
    input_weight: np.ndarray  # (len(label_index)+1, hidden_dim)
    layers: tuple[GinLayerParams, ...]
    head: BottleneckHead
    classifier: SparseLinearClassifier
    universe: ConceptUniverse | None = None

    def __post_init__(self):
        k = len(self.layers)
        if self.head.level_weights.shape != (k,):
            raise ShapeError("one level weight per layer required")
        if self.input_weight.shape != (len(self.label_index) + 1, self.hidden_dim):
            raise ShapeError("input embedding shape mismatch")
        if self.classifier.W_F.shape != (self.num_classes, k * self.hidden_dim):
            raise ShapeError(
                f"classifier expects {self.classifier.W_F.shape}, "
                f"model provides {(self.num_classes, k * self.hidden_dim)}"
            )
        if self.universe is not None:
            if self.universe.num_levels != k:
                raise ConfigurationError("universe level count != layer count")
            if self.universe.m_per_level != self.hidden_dim:
                raise ConfigurationError("universe m != hidden width")

    @property
    def num_levels(self) -> int:
        return len(self.layers)

    @property
    def concept_width(self) -> int:
        return self.num_levels * self.hidden_dim

    def slot_for(self, label) -> int:
        return self.label_index.get(label, len(self.label_index))


def replace_classifier(model: GcbmModel, classifier: SparseLinearClassifier) -> GcbmModel:
    return replace(model, classifier=classifier)


# Parameter dict layout used by training and gradient code. Layer arrays are
# keyed W1_1..W1_K etc.; residual and level weights are packed as (K,) vectors
# so the optimizer state stays flat.

def model_params(model: GcbmModel) -> dict[str, np.ndarray]:
    params = {"input_weight": model.input_weight.copy()}
    for layer in model.layers:
        k = layer.level
        params[f"W1_{k}"] = layer.W1.copy()
        params[f"b1_{k}"] = layer.b1.copy()
        params[f"W2_{k}"] = layer.W2.copy()
        params[f"b2_{k}"] = layer.b2.copy()
    params["residual_weights"] = np.array(
        [l.residual_weight for l in model.layers], dtype=np.float64
    )
    params["level_weights"] = model.head.level_weights.copy()
    params["W_F"] = model.classifier.W_F.copy()
    params["b_F"] = model.classifier.b_F.copy()
    return params


def model_from_params(
    params: dict,
    label_index: dict,
    num_classes: int,
    hidden_dim: int,
    num_levels: int,
    universe: ConceptUniverse | None = None,
) -> GcbmModel:
    layers = tuple(
        GinLayerParams(
            level=k,
            W1=params[f"W1_{k}"].copy(),
            b1=params[f"b1_{k}"].copy(),
            W2=params[f"W2_{k}"].copy(),
            b2=params[f"b2_{k}"].copy(),
            residual_weight=float(params["residual_weights"][k - 1]),
        )
        for k in range(1, num_levels + 1)
    )
    return GcbmModel(
        hidden_dim=hidden_dim,
        num_classes=num_classes,
        label_index=dict(label_index),
        input_weight=params["input_weight"].copy(),
        layers=layers,
        head=BottleneckHead(level_weights=params["level_weights"].copy()),
        classifier=SparseLinearClassifier(
            W_F=params["W_F"].copy(), b_F=params["b_F"].copy()
        ),
        universe=universe,
    )


def init_params(
    num_label_slots: int,
    num_classes: int,
    hidden_dim: int,
    num_levels: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Uniform Glorot weights, zero biases, unit residual/level scalars."""

    def glorot(shape):
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-limit, limit, size=shape)

    params = {"input_weight": glorot((num_label_slots, hidden_dim))}
    for k in range(1, num_levels + 1):
        params[f"W1_{k}"] = glorot((hidden_dim, hidden_dim))
        params[f"b1_{k}"] = np.zeros(hidden_dim)
        params[f"W2_{k}"] = glorot((hidden_dim, hidden_dim))
        params[f"b2_{k}"] = np.zeros(hidden_dim)
    params["residual_weights"] = np.ones(num_levels)
    params["level_weights"] = np.ones(num_levels)
    params["W_F"] = glorot((num_classes, num_levels * hidden_dim))
    params["b_F"] = np.zeros(num_classes)
    return params


@dataclass(frozen=True)
class BatchData:
    """A disjoint union of graphs: shared adjacency, per-node input slots,
    and a pooling matrix mapping nodes back to their graph."""

    slots: np.ndarray  # (n_nodes,)
    adjacency: sparse.csr_matrix  # (n_nodes, n_nodes), symmetric
    pooling: sparse.csr_matrix  # (n_graphs, n_nodes), 0/1
    num_graphs: int
    y: np.ndarray | None = None
    concepts: np.ndarray | None = None


def assemble_batch(
    graphs,
    label_index: dict,
    y=None,
    concepts=None,
) -> BatchData:
    unknown = len(label_index)
    slots = []
    rows = []
    cols = []
    pool_r = []
    pool_c = []
    offset = 0
    for g_i, graph in enumerate(graphs):
        for lab in graph.node_labels:
            slots.append(label_index.get(lab, unknown))
        for u, v in graph.edges:
            rows.extend((offset + u, offset + v))
            cols.extend((offset + v, offset + u))
        pool_r.extend([g_i] * graph.num_nodes)
        pool_c.extend(range(offset, offset + graph.num_nodes))
        offset += graph.num_nodes
    n = offset
    adjacency = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n), dtype=np.float64
    )
    pooling = sparse.csr_matrix(
        (np.ones(len(pool_r)), (pool_r, pool_c)), shape=(len(graphs), n), dtype=np.float64
    )
    return BatchData(
        slots=np.asarray(slots, dtype=np.int64),
        adjacency=adjacency,
        pooling=pooling,
        num_graphs=len(graphs),
        y=None if y is None else np.asarray(y, dtype=np.int64),
        concepts=None if concepts is None else np.asarray(concepts, dtype=np.float64),
    )


GIN_EPS = 0.0  # (1+eps) self-weight; fixed, not learned


def forward_batch(
    params: dict,
    batch: BatchData,
    num_levels: int,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
    keep_cache: bool = False,
):
    """Run the network on a node-disjoint union of graphs.

    Returns (c_hat (G, K*M), logits (G, C)) and, with ``keep_cache``, the
    intermediate activations needed for the backward pass.
    """
    A = batch.adjacency
    P = batch.pooling
    H = params["input_weight"][batch.slots]
    res = params["residual_weights"]
    lvl = params["level_weights"]
    cache = {"H": [H], "Z": [], "U": [], "Ad": [], "mask": [], "s": []}
    blocks = []
    for k in range(1, num_levels + 1):
        Z = A @ H + (1.0 + GIN_EPS) * H
        U = Z @ params[f"W1_{k}"] + params[f"b1_{k}"]
        Act = np.maximum(U, 0.0)
        if dropout_rate > 0.0 and rng is not None:
            mask = (rng.random(Act.shape) >= dropout_rate) / (1.0 - dropout_rate)
            Ad = Act * mask
        else:
            mask = None
            Ad = Act
        O = Ad @ params[f"W2_{k}"] + params[f"b2_{k}"]
        H = O + res[k - 1] * cache["H"][-1]
        s = P @ H
        blocks.append(lvl[k - 1] * s)
        if keep_cache:
            cache["Z"].append(Z)
            cache["U"].append(U)
            cache["Ad"].append(Ad)
            cache["mask"].append(mask)
            cache["s"].append(s)
            cache["H"].append(H)
        else:
            cache["H"][-1] = H  # only the running state is needed
    c_hat = np.hstack(blocks)
    logits = c_hat @ params["W_F"].T + params["b_F"]
    if keep_cache:
        return c_hat, logits, cache
    return c_hat, logits


def forward(model: GcbmModel, graph: Graph):
    """Single-graph inference: (c_hat, logits), dropout off."""
    batch = assemble_batch([graph], model.label_index)
    params = _params_view(model)
    c_hat, logits = forward_batch(params, batch, model.num_levels)
    return c_hat[0], logits[0]


def _params_view(model: GcbmModel) -> dict[str, np.ndarray]:
    # no copies; forward does not mutate
    params = {"input_weight": model.input_weight}
    for layer in model.layers:
        k = layer.level
        params[f"W1_{k}"] = layer.W1
        params[f"b1_{k}"] = layer.b1
        params[f"W2_{k}"] = layer.W2
        params[f"b2_{k}"] = layer.b2
    params["residual_weights"] = np.array([l.residual_weight for l in model.layers])
    params["level_weights"] = model.head.level_weights
    params["W_F"] = model.classifier.W_F
    params["b_F"] = model.classifier.b_F
    return params


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _cross_entropy(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    return lse - shifted[np.arange(len(y)), y]


def loss_components(
    c_hat: np.ndarray,
    c: np.ndarray,
    logits: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    classifier_weight: np.ndarray,
) -> dict[str, float]:
    """The three loss terms and their weighted total.

    concept: mean over graphs of the squared distance ||c_hat - c||^2;
    ce: mean cross-entropy; l1: sum |W_F|. total = lambda_c*concept + ce +
    lambda_r*l1. Components always satisfy that identity exactly.
    """
    c_hat = np.atleast_2d(np.asarray(c_hat, dtype=np.float64))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if c_hat.shape != c.shape:
        raise ShapeError(f"concept shapes differ: {c_hat.shape} vs {c.shape}")
    if logits.shape[0] != c_hat.shape[0] or logits.shape[0] != y.shape[0]:
        raise ShapeError("batch sizes differ between concepts, logits and labels")
    concept = float(np.mean(np.sum((c_hat - c) ** 2, axis=1)))
    if not np.isfinite(concept):
        raise NumericError("concept loss is non-finite")
    ce = float(np.mean(_cross_entropy(logits, y)))
    if not np.isfinite(ce):
        raise NumericError("cross-entropy loss is non-finite")
    l1 = float(np.abs(classifier_weight).sum())
    if not np.isfinite(l1):
        raise NumericError("l1 penalty is non-finite")
    total = config.lambda_c * concept + ce + config.lambda_r * l1
    return {"concept": concept, "ce": ce, "l1": l1, "total": total}


def gradients(
    params: dict,
    batch: BatchData,
    config: TrainConfig,
    num_levels: int,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Loss components and exact gradients for every parameter.

    Reverse-mode differentiation of the forward pass; the L1 subgradient at
    zero is taken as zero.
    """
    if batch.y is None or batch.concepts is None:
        raise ConfigurationError("gradients need class and concept labels")
    G = batch.num_graphs
    A = batch.adjacency
    P = batch.pooling
    c_hat, logits, cache = forward_batch(
        params, batch, num_levels, dropout_rate=dropout_rate, rng=rng, keep_cache=True
    )
    comps = loss_components(c_hat, batch.concepts, logits, batch.y, config, params["W_F"])

    probs = _softmax(logits)
    d_logits = probs.copy()
    d_logits[np.arange(G), batch.y] -= 1.0
    d_logits /= G

    grads: dict[str, np.ndarray] = {}
    grads["W_F"] = d_logits.T @ c_hat + config.lambda_r * np.sign(params["W_F"])
    grads["b_F"] = d_logits.sum(axis=0)

    d_chat = d_logits @ params["W_F"]
    d_chat += (2.0 * config.lambda_c / G) * (c_hat - batch.concepts)

    M = params["input_weight"].shape[1]
    lvl = params["level_weights"]
    res = params["residual_weights"]
    d_lvl = np.zeros(num_levels)
    d_res = np.zeros(num_levels)
    # pooled-readout gradient reaching each layer's node states
    pool_grads = []
    for k in range(1, num_levels + 1):
        d_block = d_chat[:, (k - 1) * M : k * M]
        d_lvl[k - 1] = float(np.sum(d_block * cache["s"][k - 1]))
        pool_grads.append(P.T @ (lvl[k - 1] * d_block))

    d_H = pool_grads[-1]
    for k in range(num_levels, 0, -1):
        H_prev = cache["H"][k - 1]
        d_res[k - 1] = float(np.sum(d_H * H_prev))
        d_O = d_H
        Ad = cache["Ad"][k - 1]
        grads[f"W2_{k}"] = Ad.T @ d_O
        grads[f"b2_{k}"] = d_O.sum(axis=0)
        d_Ad = d_O @ params[f"W2_{k}"].T
        mask = cache["mask"][k - 1]
        d_Act = d_Ad if mask is None else d_Ad * mask
        d_U = d_Act * (cache["U"][k - 1] > 0.0)
        Z = cache["Z"][k - 1]
        grads[f"W1_{k}"] = Z.T @ d_U
        grads[f"b1_{k}"] = d_U.sum(axis=0)
        d_Z = d_U @ params[f"W1_{k}"].T
        d_H = A.T @ d_Z + (1.0 + GIN_EPS) * d_Z + res[k - 1] * d_H
        if k >= 2:
            d_H = d_H + pool_grads[k - 2]

    d_Win = np.zeros_like(params["input_weight"])
    np.add.at(d_Win, batch.slots, d_H)
    grads["input_weight"] = d_Win
    grads["residual_weights"] = d_res
    grads["level_weights"] = d_lvl
    return comps, grads


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


@dataclass
class AdamState:
    """Bias-corrected adaptive-moment optimizer over a parameter dict."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for key, g in grads.items():
            if key not in self.m:
                self.m[key] = np.zeros_like(g)
                self.v[key] = np.zeros_like(g)
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[key] / b1t
            v_hat = self.v[key] / b2t
            params[key] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class PlateauScheduler:
    """Halve the learning rate when the monitored loss stops improving by
    ``min_improvement`` (absolute) for ``patience`` epochs; floor at min_lr."""

    def __init__(self, config: TrainConfig):
        self.lr = config.learning_rate
        self.min_improvement = config.min_improvement
        self.min_lr = config.min_lr
        self.patience = config.patience
        self.best = np.inf
        self.wait = 0

    def update(self, loss: float) -> float:
        if loss < self.best - self.min_improvement:
            self.best = loss
            self.wait = 0
        else:
            self.wait += 1
            if self.wait > self.patience:
                self.lr = max(self.lr * 0.5, self.min_lr)
                self.wait = 0
        return self.lr


def train_model(
    graphs,
    class_labels,
    concept_labels,
    num_classes: int,
    config: TrainConfig,
    universe: ConceptUniverse | None = None,
    hidden_dim: int = 64,
) -> tuple[GcbmModel, list[dict]]:
    """Fit a model on one training split. Deterministic for a fixed seed.

    Full-batch when the split has at most ``batch_threshold`` graphs,
    otherwise shuffled mini-batches. Returns the trained model and the
    per-epoch history (loss components, |W_F|_1, learning rate).
    """
    if num_classes < 2:
        raise TrainingError(f"need at least 2 classes, got {num_classes}")
    n = len(graphs)
    if n == 0:
        raise TrainingError("empty training split")
    class_labels = np.asarray(class_labels, dtype=np.int64)
    concept_labels = np.asarray(concept_labels, dtype=np.float64)
    if concept_labels.shape[0] != n or class_labels.shape[0] != n:
        raise ShapeError("labels do not align with graphs")
    if concept_labels.shape[1] % hidden_dim != 0:
        raise ShapeError(
            f"concept width {concept_labels.shape[1]} not a multiple of hidden {hidden_dim}"
        )
    num_levels = concept_labels.shape[1] // hidden_dim

    label_index = {
        lab: i for i, lab in enumerate(sorted({l for g in graphs for l in g.node_labels}))
    }
    rng = np.random.default_rng(config.seed)
    params = init_params(len(label_index) + 1, num_classes, hidden_dim, num_levels, rng)
    adam = AdamState(learning_rate=config.learning_rate)
    scheduler = PlateauScheduler(config)

    full_batch = n <= config.batch_threshold
    if full_batch:
        the_batch = assemble_batch(graphs, label_index, y=class_labels, concepts=concept_labels)

    history: list[dict] = []
    for epoch in range(config.epochs):
        if full_batch:
            batches = [the_batch]
        else:
            order = rng.permutation(n)
            batches = [
                assemble_batch(
                    [graphs[i] for i in chunk],
                    label_index,
                    y=class_labels[chunk],
                    concepts=concept_labels[chunk],
                )
                for chunk in np.array_split(order, max(1, int(np.ceil(n / config.batch_size))))
                if len(chunk) > 0
            ]
        epoch_comps = {"concept": 0.0, "ce": 0.0, "l1": 0.0, "total": 0.0}
        seen = 0
        for batch in batches:
            comps, grads = gradients(
                params, batch, config, num_levels,
                dropout_rate=config.dropout_rate, rng=rng,
            )
            if not np.isfinite(comps["total"]):
                raise TrainingError(f"training diverged at epoch {epoch}")
            norm = global_grad_norm(grads)
            if norm > config.clip_norm:
                scale = config.clip_norm / norm
                grads = {k: g * scale for k, g in grads.items()}
            adam.learning_rate = scheduler.lr
            adam.step(params, grads)
            for key in epoch_comps:
                epoch_comps[key] += comps[key] * batch.num_graphs
            seen += batch.num_graphs
        for key in epoch_comps:
            epoch_comps[key] /= seen
        lr = scheduler.lr
        history.append(
            {
                "epoch": epoch,
                "total": epoch_comps["total"],
                "concept": epoch_comps["concept"],
                "ce": epoch_comps["ce"],
                "w_f_l1": float(np.abs(params["W_F"]).sum()),
                "learning_rate": lr,
            }
        )
        scheduler.update(epoch_comps["total"])

    model = model_from_params(
        params, label_index, num_classes, hidden_dim, num_levels, universe=universe
    )
    return model, history


def predict(model: GcbmModel, graph: Graph):
    """(c_hat, predicted class, class probabilities). Ties break to the
    lowest class index."""
    c_hat, logits = forward(model, graph)
    probs = _softmax(logits)
    return c_hat, int(np.argmax(logits)), probs


def predict_batch(model: GcbmModel, graphs):
    """(c_hat matrix, predicted classes, probability matrix) for many graphs."""
    if len(graphs) == 0:
        raise ShapeError("no graphs to predict")
    batch = assemble_batch(graphs, model.label_index)
    c_hat, logits = forward_batch(_params_view(model), batch, model.num_levels)
    return c_hat, np.argmax(logits, axis=1), _softmax(logits)
