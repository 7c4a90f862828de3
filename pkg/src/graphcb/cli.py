"""Command-line front end.

Subcommands: extract (concept universe), train (cross-validated training),
explain (weight flows + subgraph mapping), intervene (weight adjustment
round), serve (HTTP API for the UI). Exit codes: 0 success, 1 internal
error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .artifacts import (
    model_from_checkpoint,
    payload_hash,
    read_json_artifact,
    write_json_artifact,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    EmptyTargetError,
    GraphCBError,
    ParseError,
    StratificationError,
    ValidationError,
)
from .pipeline import (
    RunConfig,
    extract_run,
    explain_run,
    intervene_run,
    load_dataset,
    train_run,
    write_fold_checkpoints,
)

INPUT_ERRORS = (
    DataFormatError,
    ParseError,
    ValidationError,
    ConfigurationError,
    StratificationError,
    FileNotFoundError,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True,
                   help="TU-format directory, or 'synthetic-house'")
    p.add_argument("--out", default="runs/out", help="output directory")
    p.add_argument("--levels", "-K", type=int, default=4, dest="num_levels",
                   help="WL subtree heights to use (default 4)")
    p.add_argument("--m", type=int, default=64, dest="m_per_level",
                   help="concepts kept per level (default 64)")
    p.add_argument("--m-key", type=int, default=2,
                   help="key concepts for subgraph mapping (default 2)")
    p.add_argument("--embedder", choices=("onehot", "embedding"), default="onehot")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-c", type=float, default=0.5, dest="lambda_c")
    p.add_argument("--lambda-r", type=float, default=1e-4, dest="lambda_r")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.01, dest="learning_rate")
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--dropout", type=float, default=0.0, dest="dropout_rate")
    p.add_argument("--min-improvement", type=float, default=0.1)
    p.add_argument("--min-lr", type=float, default=1e-6)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--tau-c", type=float, default=0.6, dest="tau_c")
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--cls-true", type=int, default=1)
    p.add_argument("--cls-pred", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--embed-epochs", type=int, default=80)
    p.add_argument("--top-flows", type=int, default=8)


def _config_from(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset=args.dataset,
        output_dir=args.out,
        num_levels=args.num_levels,
        m_per_level=args.m_per_level,
        m_key=args.m_key,
        embedder=args.embedder,
        folds=args.folds,
        seed=args.seed,
        lambda_c=args.lambda_c,
        lambda_r=args.lambda_r,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        clip_norm=args.clip_norm,
        dropout_rate=args.dropout_rate,
        min_improvement=args.min_improvement,
        min_lr=args.min_lr,
        patience=args.patience,
        tau_c=args.tau_c,
        margin=args.margin,
        cls_true=args.cls_true,
        cls_pred=args.cls_pred,
        embed_dim=args.embed_dim,
        embed_epochs=args.embed_epochs,
        top_flows=args.top_flows,
    )


def cmd_extract(args) -> int:
    config = _config_from(args)
    dataset = load_dataset(config.dataset, seed=config.seed)
    artifact = extract_run(dataset, config)
    path = Path(config.output_dir) / "concepts.json"
    digest = write_json_artifact(path, artifact)
    print(f"dataset {dataset.name}: {len(dataset)} graphs, {dataset.num_classes} classes")
    for entry, size in zip(artifact["universe"]["levels"], artifact["vocab_sizes"]):
        print(f"  level {entry['level']}: vocabulary {size}, selected {len(entry['selected_ids'])}")
        top = sorted(
            zip(entry["gains"], entry["selected_ids"]), key=lambda t: -t[0]
        )[:3]
        for gain, cid in top:
            print(f"    IG {gain:.4f}  {entry['codes'][cid]}")
    print(f"wrote {path} ({digest[:12]})")
    return 0


def cmd_train(args) -> int:
    config = _config_from(args)
    dataset = load_dataset(config.dataset, seed=config.seed)
    result = train_run(dataset, config)
    out = Path(config.output_dir)
    paths = write_fold_checkpoints(result, out)
    report_path = out / "report.json"
    digest = write_json_artifact(report_path, result.report)
    for row in result.report["folds"]:
        auc = "n/a" if row["auc"] is None else f"{row['auc']:.4f}"
        print(f"fold {row['fold']}: accuracy {row['accuracy']:.4f}  auc {auc}")
    print(
        f"mean accuracy {result.report['mean_accuracy']:.4f} "
        f"+/- {result.report['std_accuracy']:.4f} over {len(paths)} fold(s)"
    )
    print(f"wrote {report_path} ({digest[:12]})")
    return 0


def _load_model(checkpoint_path):
    payload, digest = read_json_artifact(checkpoint_path)
    model = model_from_checkpoint(payload)
    return model, payload, digest


def cmd_explain(args) -> int:
    config = _config_from(args)
    dataset = load_dataset(config.dataset, seed=config.seed)
    model, _, digest = _load_model(args.checkpoint)
    payload = explain_run(dataset, model, config)
    payload["checkpoint_hash"] = digest
    path = Path(config.output_dir) / "explain.json"
    out_digest = write_json_artifact(path, payload)
    for cls in payload["sankey"]["classes"]:
        flows = cls["flows"]
        print(f"class {cls['class']}: top {len(flows)} concept flows")
        for f in flows[:3]:
            print(f"  w={f['weight']:+.4f} width={f['width']:.3f} L{f['level']} {f['concept_code']}")
    if payload["node_auc"] is not None:
        print(f"node-level interpretability AUC: {payload['node_auc']:.4f}")
    else:
        print(payload["node_auc_notice"])
    print(f"wrote {path} ({out_digest[:12]})")
    return 0


def cmd_intervene(args) -> int:
    config = _config_from(args)
    dataset = load_dataset(config.dataset, seed=config.seed)
    model, payload, digest = _load_model(args.checkpoint)
    try:
        transcript, new_model = intervene_run(
            dataset, model, config, args.concepts
        )
    except EmptyTargetError as exc:
        print(f"no-op: {exc}")
        return 0
    out = Path(config.output_dir)
    t_path = out / "intervention.json"
    t_digest = write_json_artifact(t_path, transcript)
    from .artifacts import model_to_checkpoint

    new_checkpoint = model_to_checkpoint(
        new_model, config.to_dict(),
        meta=dict(payload.get("meta", {}), intervened_from=digest),
    )
    c_path = out / "checkpoint_intervened.json"
    c_digest = write_json_artifact(c_path, new_checkpoint)
    for rec in transcript["records"]:
        print(
            f"concept {rec['concept_index']}: |S|={len(rec['target_ids'])} "
            f"da={rec['delta_a_bar']:.4f} f={rec['f_bar']:.4f} dw={rec['delta_w']:.4f}"
        )
        for cls, j, old, new in rec["edits"]:
            print(f"  W[{cls},{j}]: {old:+.4f} -> {new:+.4f}")
        oc = rec["outcome"]
        print(
            f"  corrections {oc['corrections']}, new errors {oc['new_errors']}, "
            f"accuracy {oc['accuracy_before']:.4f} -> {oc['accuracy_after']:.4f}"
        )
    print(f"wrote {t_path} ({t_digest[:12]}) and {c_path} ({c_digest[:12]})")
    return 0


def cmd_serve(args) -> int:
    from .server import make_server

    config = _config_from(args)
    dataset = load_dataset(config.dataset, seed=config.seed)
    model, payload, digest = _load_model(args.checkpoint)
    if args.concepts_artifact:
        from .artifacts import load_universe_artifact

        _, concepts_payload = load_universe_artifact(args.concepts_artifact)
        if concepts_payload["universe_hash"] != payload["universe_hash"]:
            raise ValidationError(
                "checkpoint and concepts artifact disagree on the universe: "
                f"{payload['universe_hash']} vs {concepts_payload['universe_hash']}"
            )
    ui_dir = args.ui_dir
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    httpd = make_server(
        model, payload, dataset, config,
        host=args.host, port=args.port, ui_dir=ui_dir,
        log_requests=args.verbose,
    )
    print(f"serving checkpoint {digest[:12]} on http://{args.host}:{args.port}")
    if ui_dir:
        print(f"static UI from {ui_dir}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphcb",
        description="Concept-bottleneck graph classification with WL-subtree concepts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build the concept universe artifact")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="cross-validated training")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="weight flows, key concepts, subgraphs")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("intervene", help="apply a weight intervention round")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--concepts", type=int, nargs="+", required=True,
                   help="global concept indices to adjust")
    p.set_defaults(func=cmd_intervene)

    p = sub.add_parser("serve", help="HTTP API (and static UI) over a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--concepts-artifact", default=None,
                   help="optional concepts.json to cross-check the universe")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GraphCBError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
