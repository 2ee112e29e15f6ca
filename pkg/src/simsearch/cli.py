"""Operator entry point: train, export, build, query, bench, eval, serve.

Machine output goes to stdout as JSON; diagnostics go to stderr. Exit
codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import emb1
from .evaluation import latency_bench, recall_precision_at_k, scatter_export
from .exceptions import SimSearchError
from .index import VectorIndex
from .synthetic import make_clusters, parse_synthetic_spec
from .trainer import (
    TrainerConfig,
    export_embeddings,
    load_model,
    save_model,
    train,
    write_train_log,
)


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _load_dataset(spec: str):
    """Features + labels from 'synthetic:<params>', a CSV (label first
    column), or an EMB1/JSONL embedding file."""
    if spec.startswith("synthetic:") or spec == "synthetic":
        return make_clusters(**parse_synthetic_spec(spec))
    path = Path(spec)
    if not path.exists():
        raise SimSearchError(f"data file not found: {spec}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == emb1.MAGIC or head[:1] == b"{":
        records = emb1.read_records(path)
        feats = np.vstack([r.vector for r in records])
        labels = np.array([-1 if r.label is None else r.label for r in records], dtype=np.int64)
        return feats, labels
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if line_no == 0:
                    continue  # header
                raise SimSearchError(f"unparseable CSV line {line_no + 1}") from None
    if not rows:
        raise SimSearchError("CSV contains no data rows")
    arr = np.asarray(rows)
    return arr[:, 1:], arr[:, 0].astype(np.int64)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.split(",") if x.strip())


def _trainer_config(args) -> TrainerConfig:
    return TrainerConfig(
        margin=args.margin,
        base_lr=args.base_lr,
        lr_boundaries=_int_list(args.lr_boundaries),
        lr_factor=args.lr_factor,
        momentum=args.momentum,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        split_fraction=args.split_fraction,
        hidden_dims=_int_list(args.hidden_dims),
        out_dim=args.out_dim,
    )


def cmd_train(args) -> int:
    feats, labels = _load_dataset(args.data)
    result = train(feats, labels, _trainer_config(args))
    save_model(result.model, args.out)
    write_train_log(args.log, result.log)
    _info(f"trained {len(result.log)} epochs ({result.stop_reason}), best epoch {result.best_epoch}")
    print(
        json.dumps(
            {
                "epochs": len(result.log),
                "stop_reason": result.stop_reason,
                "best_epoch": result.best_epoch,
                "final_train_loss": result.log[-1].train_loss,
                "final_val_loss": result.log[-1].val_loss,
                "model": str(args.out),
                "log": str(args.log),
            },
            indent=2,
        )
    )
    return 0


def cmd_export(args) -> int:
    model = load_model(args.model)
    feats, labels = _load_dataset(args.data)
    records = export_embeddings(model, feats, labels, path=args.out, timestamp=args.ts)
    _info(f"exported {len(records)} embeddings to {args.out}")
    print(json.dumps({"count": len(records), "out": str(args.out)}, indent=2))
    return 0


def cmd_build(args) -> int:
    records = emb1.read_records(args.emb)
    index = VectorIndex()
    inserted = index.insert_many(records, upsert=True)
    written = index.snapshot(args.out)
    _info(f"indexed {inserted} records into {args.out} ({written} bytes)")
    print(json.dumps({"count": inserted, "bytes": written, "out": str(args.out)}, indent=2))
    return 0


def cmd_query(args) -> int:
    index = VectorIndex.load(args.index)
    if (args.vec is None) == (args.id is None):
        raise SimSearchError("exactly one of --vec / --id is required")
    exclude = None
    if args.vec is not None:
        qvec = np.array([float(x) for x in args.vec.split(",")])
    else:
        entry = index.entry(args.id)
        if entry is None:
            raise SimSearchError(f"id {args.id} not indexed")
        qvec = entry.embedding.astype(np.float64)
        exclude = entry.id
    fetch = args.k + (1 if exclude is not None else 0)
    if args.mode == "hamming":
        width = index.dim
        rows = []
        for item_id, hd in index.query_hamming(qvec, fetch):
            entry = index.entry(item_id)
            rows.append(
                {
                    "id": item_id,
                    "label": entry.label if entry else None,
                    "distance": hd,
                    "similarity": 1.0 - hd / width,
                }
            )
    else:
        if args.mode == "exact":
            hits = index.query_exact(qvec, fetch, args.metric)
        else:
            hits = index.query_two_stage(qvec, fetch, metric=args.metric)
        rows = [{"id": h.id, "label": h.label, "distance": h.distance, "similarity": h.similarity} for h in hits]
    rows = [r for r in rows if r["id"] != exclude][: args.k]
    print(json.dumps({"hits": rows}, indent=2))
    return 0


def cmd_bench(args) -> int:
    index = VectorIndex.load(args.index)
    report = latency_bench(index, n_queries=args.queries, k=args.k, mode=args.mode, seed=args.seed)
    print(report.to_json())
    return 0


def cmd_eval(args) -> int:
    index = VectorIndex.load(args.index)
    records = emb1.read_records(args.emb)
    report = recall_precision_at_k(index, records, k_values=_int_list(args.k))
    print(report.to_json())
    return 0


def cmd_scatter(args) -> int:
    records = emb1.read_records(args.emb)
    count = scatter_export(records, args.out)
    _info(f"wrote {count} scatter points to {args.out}")
    print(json.dumps({"count": count, "out": str(args.out)}, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    index = VectorIndex.load(args.index) if args.index else VectorIndex()
    config = ServiceConfig.from_env()
    if args.retention_s is not None:
        config.retention_s = args.retention_s
    if args.evict_interval_s is not None:
        config.evict_interval_s = args.evict_interval_s
    app = create_app(index, config)
    port = args.port if args.port is not None else int(os.environ.get("SIMSEARCH_PORT", "8080"))
    _info(f"serving {index.count} items on {args.host}:{port}")
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the embedding head")
    p.add_argument("--data", required=True, help="CSV path, EMB1 path, or synthetic:classes=5,n=500,dim=32,sep=5,seed=0")
    p.add_argument("--out", required=True, help="checkpoint path (*.simmodel)")
    p.add_argument("--log", required=True, help="training-log CSV path")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--base-lr", type=float, default=0.05, dest="base_lr")
    p.add_argument("--lr-boundaries", default="", dest="lr_boundaries", help="comma-separated epoch indices")
    p.add_argument("--lr-factor", type=float, default=10.0, dest="lr_factor")
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--max-epochs", type=int, default=40, dest="max_epochs")
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-fraction", type=float, default=0.85, dest="split_fraction")
    p.add_argument("--hidden-dims", default="64", dest="hidden_dims")
    p.add_argument("--out-dim", type=int, default=32, dest="out_dim")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export", help="run a trained model over a dataset and write EMB1")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ts", type=int, default=None, help="fixed timestamp for reproducible output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("build", help="build a snapshot index from an embedding file")
    p.add_argument("--emb", required=True, help="EMB1 or JSON-lines embedding file")
    p.add_argument("--out", required=True, help="index snapshot path (*.simidx)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="query a snapshot index")
    p.add_argument("--index", required=True)
    p.add_argument("--vec", help="comma-separated floats")
    p.add_argument("--id", type=int, help="query by indexed item id (excluded from results)")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--mode", choices=("exact", "hamming", "two_stage"), default="two_stage")
    p.add_argument("--metric", choices=("cosine", "euclidean", "squared_euclidean"), default="cosine")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="latency benchmark")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--mode", choices=("exact", "hamming", "two_stage"), default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="recall/precision against a labeled holdout")
    p.add_argument("--index", required=True)
    p.add_argument("--emb", required=True, help="labeled EMB1/JSONL holdout")
    p.add_argument("-k", default="1,5,10", help="comma-separated k values")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scatter", help="2-D PCA scatter export of an embedding file")
    p.add_argument("--emb", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--index", help="snapshot to load at startup")
    p.add_argument("--port", type=int, default=None, help="default $SIMSEARCH_PORT or 8080")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--retention-s", type=float, default=None, dest="retention_s")
    p.add_argument("--evict-interval-s", type=float, default=None, dest="evict_interval_s")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SimSearchError, OSError, ValueError) as exc:
        _info(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
