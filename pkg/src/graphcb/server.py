"""HTTP/JSON API over a trained checkpoint.

Reads run concurrently; interventions are serialized behind a lock and swap
in a whole new model, so a request sees either the old or the new model,
never a mix. Every response carries the hash of the checkpoint it was
computed against, letting clients detect concurrent modification. The server
refuses to start if the checkpoint's embedded universe hash does not verify
(or disagrees with a separately supplied concepts artifact).

Also serves a static UI directory at / when one is configured.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .artifacts import canonical_json, jsonable, payload_hash
from .errors import (
    EmptyTargetError,
    GraphCBError,
    NearZeroActivationError,
    ValidationError,
)
from .graphs import Graph, GraphDataset, normalize_edges
from .intervene import edit_concept_vector, run_intervention
from .interpret import map_concept_to_nodes, sankey_payload
from .metrics import accuracy, confusion_counts
from .net import GcbmModel, forward, predict, predict_batch, _softmax
from .pipeline import RunConfig
from .artifacts import model_to_checkpoint
from .wl import universe_onehot_labels, wl_refine


class ServerState:
    """Current model plus history for revert; one writer at a time."""

    def __init__(self, model: GcbmModel, checkpoint: dict, dataset: GraphDataset, config: RunConfig):
        self.dataset = dataset
        self.config = config
        self.write_lock = threading.Lock()
        self._cache_lock = threading.Lock()
        self._pred_cache: dict[str, tuple] = {}
        h = payload_hash(checkpoint)
        # independently verify the embedded universe before serving anything
        stored = checkpoint.get("universe_hash")
        actual = payload_hash(checkpoint.get("universe"))
        if stored != actual:
            raise ValidationError(
                f"checkpoint universe hash mismatch: stored {stored}, actual {actual}"
            )
        self._stack: list[tuple[str, GcbmModel, dict]] = [(h, model, checkpoint)]
        self.concept_labels = universe_onehot_labels(
            dataset.graphs, model.universe, strict=False
        )
        # concept -> containing graphs, fixed for the server's lifetime:
        # interventions only move classifier weights, never the universe
        entries = model.universe.concept_entries() if model.universe else []
        refined = [wl_refine(g, model.num_levels) for g in dataset.graphs]
        self.concept_graph_ids = [
            [g.id for g, codes in zip(dataset.graphs, refined)
             if entry["code"] in codes[entry["level"] - 1]]
            for entry in entries
        ]

    @property
    def current(self) -> tuple[str, GcbmModel, dict]:
        return self._stack[-1]

    def predictions(self, snapshot) -> tuple:
        """(c_hat, pred, probs) over the whole dataset, cached per hash."""
        h, model, _ = snapshot
        with self._cache_lock:
            hit = self._pred_cache.get(h)
        if hit is not None:
            return hit
        out = predict_batch(model, list(self.dataset.graphs))
        with self._cache_lock:
            self._pred_cache[h] = out
            # keep only hashes still on the stack
            live = {s[0] for s in self._stack}
            for key in list(self._pred_cache):
                if key not in live:
                    del self._pred_cache[key]
        return out

    def push(self, model: GcbmModel, checkpoint: dict) -> str:
        h = payload_hash(checkpoint)
        self._stack.append((h, model, checkpoint))
        return h

    def revert(self) -> str:
        if len(self._stack) < 2:
            raise ValidationError("nothing to revert")
        self._stack.pop()
        return self._stack[-1][0]


def _graph_from_body(spec: dict) -> Graph:
    fields = {}
    for key in ("num_nodes", "edges", "node_labels"):
        if key not in spec:
            raise ValidationError(f"graph body missing field {key!r}")
    try:
        edges = normalize_edges([(int(u), int(v)) for u, v in spec["edges"]])
        fields = dict(
            id=int(spec.get("id", -1)),
            num_nodes=int(spec["num_nodes"]),
            edges=edges,
            node_labels=tuple(int(l) for l in spec["node_labels"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed graph body: {exc}") from exc
    return Graph(**fields)


class ApiHandler(BaseHTTPRequestHandler):
    server_version = "graphcb"
    protocol_version = "HTTP/1.1"

    # quiet by default; the CLI passes log_requests=True for verbose mode
    def log_message(self, fmt, *args):
        if getattr(self.server, "log_requests", False):
            super().log_message(fmt, *args)

    @property
    def state(self) -> ServerState:
        return self.server.state  # type: ignore[attr-defined]

    def _send_json(self, status: int, payload: dict) -> None:
        body = canonical_json(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, status: int, code: str, message: str, fields=None) -> None:
        self._send_json(
            status, {"code": code, "message": message, "fields": fields or {}}
        )

    def _read_body(self) -> dict:
        if not self._raw_body:
            return {}
        try:
            body = json.loads(self._raw_body)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        return body

    # ---- routing ----

    def do_GET(self):
        try:
            path = self.path.split("?", 1)[0].rstrip("/") or "/"
            if path == "/api/meta":
                return self._get_meta()
            if path == "/api/graphs":
                return self._get_graphs()
            if path.startswith("/api/graphs/"):
                return self._get_graph(path.rsplit("/", 1)[1])
            if path == "/api/concepts":
                return self._get_concepts()
            if path == "/api/weights":
                return self._get_weights()
            if path == "/api/metrics":
                return self._get_metrics()
            if path.startswith("/api/"):
                return self._send_error(404, "not_found", f"unknown endpoint {path}")
            return self._serve_static(path)
        except GraphCBError as exc:
            self._send_error(400, "invalid_request", str(exc))
        except Exception as exc:  # pragma: no cover - last resort
            self._send_error(500, "internal_error", str(exc))

    def do_POST(self):
        # drain the body before dispatch: a handler that replies without
        # reading it (revert, unknown routes) would leave the bytes in rfile
        # and the next request line on a keep-alive connection parses as junk
        length = int(self.headers.get("Content-Length") or 0)
        self._raw_body = self.rfile.read(length) if length else b""
        try:
            path = self.path.split("?", 1)[0].rstrip("/")
            if path == "/api/predict":
                return self._post_predict()
            if path == "/api/intervene/concepts":
                return self._post_intervene_concepts()
            if path == "/api/intervene/weights":
                return self._post_intervene_weights()
            if path == "/api/revert":
                return self._post_revert()
            return self._send_error(404, "not_found", f"unknown endpoint {path}")
        except (EmptyTargetError, NearZeroActivationError) as exc:
            self._send_error(409, "refused", str(exc))
        except GraphCBError as exc:
            self._send_error(400, "invalid_request", str(exc))
        except Exception as exc:  # pragma: no cover
            self._send_error(500, "internal_error", str(exc))

    # ---- GET handlers ----

    def _get_meta(self):
        h, model, checkpoint = self.state.current
        ds = self.state.dataset
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "dataset": ds.name,
                "num_graphs": len(ds),
                "num_classes": ds.num_classes,
                "num_levels": model.num_levels,
                "m_per_level": model.hidden_dim,
                "concept_width": model.concept_width,
                "universe_hash": checkpoint.get("universe_hash"),
                "run_config": self.state.config.to_dict(),
                "can_revert": len(self.state._stack) > 1,
            },
        )

    def _get_graphs(self):
        snapshot = self.state.current
        h = snapshot[0]
        ds = self.state.dataset
        _, pred, probs = self.state.predictions(snapshot)
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "graphs": [
                    {
                        "id": g.id,
                        "num_nodes": g.num_nodes,
                        "num_edges": len(g.edges),
                        "class": int(ds.class_labels[i]),
                        "predicted_class": int(pred[i]),
                        "correct": int(pred[i]) == int(ds.class_labels[i]),
                    }
                    for i, g in enumerate(ds.graphs)
                ],
            },
        )

    def _position_of(self, graph_id: int) -> int:
        for i, g in enumerate(self.state.dataset.graphs):
            if g.id == graph_id:
                return i
        raise KeyError(graph_id)

    def _get_graph(self, raw_id: str):
        try:
            gid = int(raw_id)
            pos = self._position_of(gid)
        except (ValueError, KeyError):
            return self._send_error(404, "not_found", f"unknown graph id {raw_id!r}")
        snapshot = self.state.current
        h, model, _ = snapshot
        ds = self.state.dataset
        g = ds.graphs[pos]
        c_hat, logits = forward(model, g)
        probs = _softmax(logits)
        # node coverage per concept so clients can highlight subtrees
        # without redoing WL locally; absent concepts are omitted
        concept_nodes: dict[str, list[int]] = {}
        if model.universe is not None:
            refined = wl_refine(g, model.num_levels)
            for entry in model.universe.concept_entries():
                nodes = map_concept_to_nodes(
                    g, entry["code"], entry["level"], codes=refined[entry["level"] - 1]
                )
                if nodes:
                    concept_nodes[str(entry["global_index"])] = sorted(nodes)
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "id": g.id,
                "num_nodes": g.num_nodes,
                "edges": [list(e) for e in g.edges],
                "node_labels": list(g.node_labels),
                "node_mask": None if g.node_mask is None else [int(m) for m in g.node_mask],
                "class": int(ds.class_labels[pos]),
                "predicted_class": int(np.argmax(logits)),
                "probabilities": jsonable(probs),
                "logits": jsonable(logits),
                "concept_scores": jsonable(c_hat),
                "concept_labels": jsonable(self.state.concept_labels[pos]),
                "concept_nodes": concept_nodes,
            },
        )

    def _get_concepts(self):
        h, model, _ = self.state.current
        entries = model.universe.concept_entries() if model.universe else []
        for entry, ids in zip(entries, self.state.concept_graph_ids):
            entry["graph_ids"] = ids
        self._send_json(200, {"checkpoint_hash": h, "concepts": jsonable(entries)})

    def _get_weights(self):
        h, model, _ = self.state.current
        payload = sankey_payload(model, self.state.config.top_flows)
        payload["checkpoint_hash"] = h
        self._send_json(200, payload)

    def _get_metrics(self):
        snapshot = self.state.current
        h = snapshot[0]
        ds = self.state.dataset
        _, pred, _ = self.state.predictions(snapshot)
        truth = np.asarray(ds.class_labels)
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "accuracy": accuracy(pred, truth),
                "confusion": jsonable(confusion_counts(pred, truth, ds.num_classes)),
                "num_graphs": len(ds),
            },
        )

    # ---- POST handlers ----

    def _post_predict(self):
        body = self._read_body()
        snapshot = self.state.current
        h, model, _ = snapshot
        if "graph_id" in body:
            try:
                pos = self._position_of(int(body["graph_id"]))
            except (ValueError, KeyError):
                return self._send_error(
                    404, "not_found", f"unknown graph id {body['graph_id']!r}"
                )
            graph = self.state.dataset.graphs[pos]
        elif "graph" in body:
            graph = _graph_from_body(body["graph"])
        else:
            return self._send_error(
                400, "invalid_request", "body needs 'graph_id' or 'graph'",
                fields={"graph_id": "missing", "graph": "missing"},
            )
        c_hat, cls, probs = predict(model, graph)
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "predicted_class": cls,
                "probabilities": jsonable(probs),
                "concept_scores": jsonable(c_hat),
            },
        )

    def _post_intervene_concepts(self):
        body = self._read_body()
        fields = {}
        if "graph_id" not in body:
            fields["graph_id"] = "missing"
        if "edits" not in body or not isinstance(body["edits"], list):
            fields["edits"] = "missing or not a list"
        if fields:
            return self._send_error(400, "invalid_request", "malformed body", fields)
        snapshot = self.state.current
        h, model, _ = snapshot
        try:
            pos = self._position_of(int(body["graph_id"]))
        except (ValueError, KeyError):
            return self._send_error(
                404, "not_found", f"unknown graph id {body['graph_id']!r}"
            )
        edits = []
        for item in body["edits"]:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                return self._send_error(
                    400, "invalid_request", "each edit must be [index, score]",
                    fields={"edits": "bad entry"},
                )
            edits.append((int(item[0]), float(item[1])))
        result = edit_concept_vector(model, self.state.dataset.graphs[pos], edits)
        self._send_json(
            200,
            {
                "checkpoint_hash": h,
                "graph_id": int(body["graph_id"]),
                "original_concepts": jsonable(result.original),
                "edited_concepts": jsonable(result.edited),
                "logits": jsonable(result.logits),
                "probabilities": jsonable(result.probabilities),
                "predicted_class": result.predicted_class,
                "persistent": False,
            },
        )

    def _post_intervene_weights(self):
        body = self._read_body()
        indices = body.get("concept_indices")
        if not isinstance(indices, list) or not indices:
            return self._send_error(
                400, "invalid_request", "concept_indices must be a non-empty list",
                fields={"concept_indices": "missing or empty"},
            )
        try:
            indices = [int(i) for i in indices]
        except (TypeError, ValueError):
            return self._send_error(
                400, "invalid_request", "concept_indices must be integers",
                fields={"concept_indices": "non-integer entry"},
            )
        dry_run = bool(body.get("dry_run", False))
        overrides = body.get("params") or {}
        config = self.state.config
        params = config.intervention_params()
        if overrides:
            from .intervene import InterventionParams

            params = InterventionParams(
                tau_c=float(overrides.get("tau_c", params.tau_c)),
                margin=float(overrides.get("margin", params.margin)),
                cls_true=int(overrides.get("cls_true", params.cls_true)),
                cls_pred=int(overrides.get("cls_pred", params.cls_pred)),
            )
        ds = self.state.dataset
        with self.state.write_lock:
            h, model, checkpoint = self.state.current
            records, new_model = run_intervention(
                model,
                list(ds.graphs),
                np.asarray(ds.class_labels),
                self.state.concept_labels,
                indices,
                params,
            )
            response = {
                "checkpoint_hash": h,
                "dry_run": dry_run,
                "records": [r.to_dict() for r in records],
            }
            if not dry_run:
                new_checkpoint = model_to_checkpoint(
                    new_model,
                    config.to_dict(),
                    meta=dict(checkpoint.get("meta", {}), intervened_from=h),
                )
                new_hash = self.state.push(new_model, new_checkpoint)
                response["new_checkpoint_hash"] = new_hash
        self._send_json(200, response)

    def _post_revert(self):
        with self.state.write_lock:
            restored = self.state.revert()
        self._send_json(200, {"checkpoint_hash": restored})

    # ---- static UI ----

    def _serve_static(self, path: str):
        root = getattr(self.server, "ui_dir", None)
        if root is None:
            return self._send_error(
                404, "not_found", "no UI bundle configured; API lives under /api/"
            )
        root = Path(root).resolve()
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            # SPA fallback: unknown non-file paths get the index
            target = root / "index.html"
            if not target.is_file():
                return self._send_error(404, "not_found", f"no such file {path!r}")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    model: GcbmModel,
    checkpoint: dict,
    dataset: GraphDataset,
    config: RunConfig,
    host: str = "127.0.0.1",
    port: int = 8008,
    ui_dir=None,
    log_requests: bool = False,
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; raises on port conflicts."""
    state = ServerState(model, checkpoint, dataset, config)
    httpd = ThreadingHTTPServer((host, port), ApiHandler)
    httpd.state = state  # type: ignore[attr-defined]
    httpd.ui_dir = ui_dir  # type: ignore[attr-defined]
    httpd.log_requests = log_requests  # type: ignore[attr-defined]
    return httpd
