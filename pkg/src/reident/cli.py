"""Command-line entry point: ingest → cluster → train-head → eval → serve.

Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
Every run logs its resolved configuration; identical arguments, inputs and
seed always produce identical output files.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from .clustering import (
    DEFAULT_MIN_CLUSTER_SIZE,
    DEFAULT_SIM_THRESHOLD,
    ClusterParams,
    cluster_gallery,
    relabel_gallery,
)
from .errors import ReidentError
from .evaluation import (
    DEFAULT_GRID_SIZE,
    PAIRING_CLUSTER,
    PAIRING_MODEL,
    GRANULARITY_MAKE,
    GRANULARITY_MAKE_MODEL,
    best_shots,
    emit_densities_csv,
    emit_error_rates_csv,
    error_rates,
    pick_threshold,
    rank1_accuracy,
    score_densities,
)
from .gallery import Gallery, load_gallery, save_gallery
from .head import (
    VARIANT_BIASED,
    VARIANT_PRIOR_FREE,
    TrainConfig,
    load_head,
    save_head,
    train_head,
)
from .ingest import DEFAULT_NEAR_THRESHOLD, cleanse
from .reid_index import build_index, load_index, save_index

log = logging.getLogger("reident")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    p.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    p.add_argument(
        "--log-level",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="stderr log verbosity",
    )


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=1)
        f.write("\n")


def _nan_to_none(x: float) -> float | None:
    return None if math.isnan(x) else x


def _parse_policy(raw: str) -> tuple[str, float | None]:
    """`eer`, `far:0.01`, or `frr:0.05` → (kind, limit)."""
    if raw == "eer":
        return "eer", None
    kind, sep, value = raw.partition(":")
    if sep and kind in ("far", "frr"):
        try:
            return kind, float(value)
        except ValueError:
            pass
    raise ReidentError(f"bad policy {raw!r}: expected eer, far:ALPHA, or frr:BETA")


def _filter_min_quality(gallery: Gallery, min_quality: float | None) -> Gallery:
    """Quality-stratified view: drop records below the cutoff, keep unscored ones."""
    if min_quality is None:
        return gallery
    kept = [r for r in gallery.records if r.quality is None or r.quality >= min_quality]
    return Gallery.from_records(kept)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_ingest(args: argparse.Namespace) -> int:
    gallery = load_gallery(args.in_path)
    cleaned, report = cleanse(
        gallery, near_threshold=args.dedup_near, min_quality=args.min_quality
    )
    save_gallery(cleaned, args.out)
    if args.report:
        _write_json(report.to_dict(), args.report)
    log.info(
        "ingest: %d -> %d records (%d exact, %d near, %d low-quality)",
        report.input_count,
        report.output_count,
        report.exact_duplicates_removed,
        report.near_duplicates_removed,
        report.low_quality_removed,
    )
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    gallery = load_gallery(args.in_path)
    params = ClusterParams(sim_threshold=args.threshold, min_cluster_size=args.min_size)
    result = cluster_gallery(gallery, params, threads=args.threads)
    refined = relabel_gallery(gallery, result, drop_discarded=not args.keep_discarded)
    save_gallery(refined, args.out)
    if args.report:
        _write_json(result.to_report_dict(), args.report)
    log.info(
        "cluster: %d classes -> %d (%d clusters, %d records discarded)",
        result.class_count_before,
        result.class_count_after,
        result.cluster_count,
        result.discarded_count,
    )
    return 0


def _cmd_train_head(args: argparse.Namespace) -> int:
    gallery = load_gallery(args.in_path)
    cfg = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        l2=args.l2,
        seed=args.seed,
    )
    model = train_head(gallery, args.variant, cfg)
    save_head(model, args.out)
    log.info(
        "train-head: %d classes, dim %d, variant %s -> %s",
        len(model.class_labels),
        model.dimension,
        model.variant,
        args.out,
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    gallery = _filter_min_quality(load_gallery(args.gallery), args.min_quality)
    head = load_head(args.head)
    densities = score_densities(gallery, pairing=args.pairing, threads=args.threads)
    rates = error_rates(densities, grid_size=args.grid_size)
    kind, limit = _parse_policy(args.policy)
    threshold = pick_threshold(rates, kind, limit)
    if args.curves:
        emit_error_rates_csv(rates, args.curves)
    if args.densities:
        emit_densities_csv(densities, args.densities)

    summary: dict = {
        "records": len(gallery),
        "pairing": args.pairing,
        "clientTotal": densities.client_total,
        "impostorTotal": densities.impostor_total,
        "eer": rates.eer,
        "eerThreshold": rates.eer_threshold,
        "policy": args.policy,
        "threshold": threshold,
        "rank1": {},
    }
    for granularity in (GRANULARITY_MAKE_MODEL, GRANULARITY_MAKE):
        acc, _ = rank1_accuracy(head, gallery, granularity=granularity)
        acc_t, cov_t = rank1_accuracy(
            head, gallery, threshold=threshold, granularity=granularity
        )
        summary["rank1"][granularity] = {
            "accuracy": _nan_to_none(acc),
            "accuracyAtThreshold": _nan_to_none(acc_t),
            "coverageAtThreshold": cov_t,
        }
    if args.report:
        _write_json(summary, args.report)
    json.dump(summary, sys.stdout, sort_keys=True, indent=1)
    sys.stdout.write("\n")
    return 0


def _cmd_best_shots(args: argparse.Namespace) -> int:
    gallery = load_gallery(args.gallery)
    head = load_head(args.head)
    shots = best_shots(gallery, head)
    doc = {
        "shots": [
            {
                "trackId": s.track_id,
                "recordId": s.record_id,
                "quality": s.quality,
                "predictedLabel": s.predicted_label,
                "score": s.score,
            }
            for s in shots
        ]
    }
    _write_json(doc, args.out)
    log.info("best-shots: %d tracks -> %s", len(shots), args.out)
    return 0


def _cmd_build_index(args: argparse.Namespace) -> int:
    gallery = load_gallery(args.gallery)
    head = load_head(args.head)
    index = build_index(gallery, head)
    save_index(index, args.out)
    log.info("build-index: %d tracks -> %s", index.track_count, args.out)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if args.index is None:
        raise ReidentError("no index given: pass --index or set REIDENT_INDEX")
    load_index(args.index)  # refuse to start on a missing or malformed index
    from .service import run_service

    run_service(
        args.index,
        port=args.port,
        host=args.host,
        default_min_score=args.default_min_score,
        ui_dir=args.ui_dir,
    )
    return 0


def _cmd_demo(args: argparse.Namespace) -> int:
    from .synth import demo_galleries

    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    paths = {name: os.path.join(out, f"{name}.jsonl") for name in ("raw", "held_out", "video")}
    galleries = demo_galleries(seed=args.seed)
    for name, gallery in galleries.items():
        save_gallery(gallery, paths[name])

    print(f"demo seed {args.seed}, artifacts in {out}")

    clean, report = cleanse(galleries["raw"], min_quality=0.3)
    save_gallery(clean, os.path.join(out, "clean.jsonl"))
    _write_json(report.to_dict(), os.path.join(out, "ingest-report.json"))
    print(
        f"ingest: {report.input_count} -> {report.output_count} records "
        f"({report.exact_duplicates_removed} exact dup, "
        f"{report.near_duplicates_removed} near dup, "
        f"{report.low_quality_removed} low quality)"
    )

    params = ClusterParams(min_cluster_size=20)
    result = cluster_gallery(clean, params, threads=args.threads)
    refined = relabel_gallery(clean, result, drop_discarded=False)
    save_gallery(refined, os.path.join(out, "refined.jsonl"))
    _write_json(result.to_report_dict(), os.path.join(out, "clusters.json"))
    print(
        f"cluster: {result.class_count_before} classes -> {result.class_count_after} "
        f"({result.discarded_count} records discarded)"
    )

    cfg = TrainConfig(seed=args.seed)
    head_raw = train_head(clean, VARIANT_PRIOR_FREE, cfg)
    head_refined = train_head(refined, VARIANT_PRIOR_FREE, cfg)
    save_head(head_refined, os.path.join(out, "head.ehed"))

    held = galleries["held_out"]
    acc_raw, _ = rank1_accuracy(head_raw, held)
    acc_refined, _ = rank1_accuracy(head_refined, held)
    print(
        f"rank-1 make/model on held-out: raw labels {acc_raw:.3f}, "
        f"refined labels {acc_refined:.3f}"
    )

    dens_model = score_densities(refined, pairing=PAIRING_MODEL, threads=args.threads)
    dens_cluster = score_densities(refined, pairing=PAIRING_CLUSTER, threads=args.threads)
    p99 = float(dens_model.impostor_scores[int(0.99 * (len(dens_model.impostor_scores) - 1))])
    mass_model = float((dens_model.client_scores < p99).mean())
    mass_cluster = float((dens_cluster.client_scores < p99).mean())
    print(
        f"client mass below impostor p99: model pairing {mass_model:.3f}, "
        f"cluster pairing {mass_cluster:.3f}"
    )

    rates = error_rates(score_densities(held, pairing=PAIRING_MODEL))
    emit_error_rates_csv(rates, os.path.join(out, "curves.csv"))
    print(f"held-out eer {rates.eer:.3f} at threshold {rates.eer_threshold:.3f}")

    index = build_index(galleries["video"], head_refined)
    index_path = os.path.join(out, "index.json")
    save_index(index, index_path)
    print(f"index: {index.track_count} tracks -> {index_path}")
    print(f"next: reident serve --index {index_path}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reident",
        description="Embedding-gallery vehicle re-identification pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"reident {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="deduplicate and quality-filter a gallery")
    p.add_argument("--in", dest="in_path", required=True, help="input gallery")
    p.add_argument("--out", required=True, help="cleansed gallery")
    p.add_argument("--dedup-near", type=float, default=DEFAULT_NEAR_THRESHOLD)
    p.add_argument("--min-quality", type=float, default=0.0)
    p.add_argument("--report", help="write a cleansing report JSON here")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("cluster", help="refine class labels by density clustering")
    p.add_argument("--in", dest="in_path", required=True, help="input gallery")
    p.add_argument("--out", required=True, help="relabeled gallery")
    p.add_argument("--threshold", type=float, default=DEFAULT_SIM_THRESHOLD)
    p.add_argument("--min-size", type=int, default=DEFAULT_MIN_CLUSTER_SIZE)
    p.add_argument("--report", help="write a clustering report JSON here")
    p.add_argument(
        "--keep-discarded",
        action="store_true",
        help="keep records of rejected clusters under their original label",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("train-head", help="train a classification head")
    p.add_argument("--in", dest="in_path", required=True, help="training gallery")
    p.add_argument("--out", required=True, help="head model file")
    p.add_argument(
        "--variant",
        choices=[VARIANT_PRIOR_FREE, VARIANT_BIASED],
        default=VARIANT_PRIOR_FREE,
    )
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--l2", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_train_head)

    p = sub.add_parser("eval", help="score densities, FAR/FRR curves, rank-1 accuracy")
    p.add_argument("--gallery", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--curves", help="write threshold,far,frr CSV here")
    p.add_argument("--densities", help="write score-density CSV here")
    p.add_argument("--report", help="write the summary JSON here as well as stdout")
    p.add_argument("--pairing", choices=[PAIRING_MODEL, PAIRING_CLUSTER], default=PAIRING_MODEL)
    p.add_argument("--policy", default="eer", help="eer | far:ALPHA | frr:BETA")
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument(
        "--min-quality",
        type=float,
        default=None,
        help="evaluate only records at or above this quality",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("best-shots", help="pick and classify each track's best shot")
    p.add_argument("--gallery", required=True, help="video gallery")
    p.add_argument("--head", required=True)
    p.add_argument("--out", required=True, help="best-shot JSON")
    _add_common(p)
    p.set_defaults(func=_cmd_best_shots)

    p = sub.add_parser("build-index", help="build the search index from a video gallery")
    p.add_argument("--gallery", required=True, help="video gallery")
    p.add_argument("--head", required=True)
    p.add_argument("--out", required=True, help="index JSON")
    _add_common(p)
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser("serve", help="serve the search API over a built index")
    p.add_argument("--index", default=os.environ.get("REIDENT_INDEX"))
    p.add_argument("--port", type=int, default=int(os.environ.get("REIDENT_PORT", "8000")))
    p.add_argument("--host", default=os.environ.get("REIDENT_HOST", "127.0.0.1"))
    p.add_argument(
        "--default-min-score",
        type=float,
        default=float(os.environ.get("REIDENT_DEFAULT_MIN_SCORE", "0.0")),
    )
    p.add_argument("--ui-dir", default=None, help="serve a built static frontend from here")
    _add_common(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("demo", help="generate a synthetic fixture and run the pipeline")
    p.add_argument("--out-dir", default="demo-out")
    _add_common(p)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    log.info("resolved config: %s", json.dumps(resolved, sort_keys=True, default=str))
    try:
        return args.func(args)
    except (ReidentError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
