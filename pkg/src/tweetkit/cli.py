"""Command-line entry point: the archive-to-report pipeline plus the
annotation server.

Subcommands: ingest, preprocess, lda-train, lda-report, cluster, sample,
serve, kappa, estimate, timeseries. Every command is idempotent for a given
config and inputs, and every artifact embeds the config hash that produced
it. Failures exit non-zero with a single machine-parsable JSON line on
stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from . import annotate, cluster, ingest, lda, textnorm, timeseries
from .base import ConfigurationError
from .config import PipelineConfig, load_config
from .serialize import read_json, write_csv, write_json

log = logging.getLogger("tweetkit")

CORPUS_FORMAT = "tweetkit-corpus/1"
TOKENS_FORMAT = "tweetkit-tokens/1"


def _norm_config(cfg: PipelineConfig) -> textnorm.NormalizationConfig:
    section = cfg["normalize"]
    char_map = (tuple((src, dst) for src, dst in section["char_map"])
                if section["char_map"] else textnorm.DEFAULT_CHAR_MAP)
    return textnorm.NormalizationConfig(
        strip_urls=section["strip_urls"],
        strip_mentions=section["strip_mentions"],
        strip_emoji=section["strip_emoji"],
        strip_punctuation=section["strip_punctuation"],
        strip_digits=section["strip_digits"],
        char_map=char_map,
        collapse_whitespace=section["collapse_whitespace"],
    )


def _kinds(cfg: PipelineConfig) -> set[ingest.TweetKind]:
    try:
        return {ingest.TweetKind(k) for k in cfg["ingest"]["kinds"]}
    except ValueError as exc:
        raise ConfigurationError(f"unknown tweet kind in ingest.kinds: {exc}")


def _require_path(path: str, what: str) -> Path:
    if not path:
        raise ConfigurationError(f"config paths.{what} is not set")
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"{what} path does not exist: {path}")
    return p


def _artifact(cfg: PipelineConfig, name: str) -> Path:
    path = cfg.out_path(name)
    if not path.exists():
        raise ConfigurationError(
            f"missing artifact {path}; run the producing command first"
        )
    return path


# -- corpus / tokens artifacts ---------------------------------------------

def _write_corpus(path: Path, records, cfg_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"format": CORPUS_FORMAT, "config_hash": cfg_hash},
                            sort_keys=True, ensure_ascii=False) + "\n")
        for rec in records:
            fh.write(json.dumps({
                "id": rec.id,
                "created_at": rec.created_at.isoformat(),
                "text": rec.text,
                "kind": rec.kind.value,
                "lang": rec.lang,
                "hashtags": list(rec.hashtags),
                "author_handle": rec.author_handle,
            }, sort_keys=True, ensure_ascii=False) + "\n")


def _read_corpus(path: Path) -> list[ingest.TweetRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CORPUS_FORMAT:
            raise ConfigurationError(f"{path}: not a tweetkit corpus file")
        for line in fh:
            row = json.loads(line)
            records.append(ingest.TweetRecord(
                id=row["id"],
                created_at=datetime.fromisoformat(row["created_at"]),
                text=row["text"],
                kind=ingest.TweetKind(row["kind"]),
                lang=row["lang"],
                hashtags=tuple(row["hashtags"]),
                author_handle=row.get("author_handle", ""),
            ))
    return records


def _write_tokens(path: Path, docs, empty_ids, cfg_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({
            "format": TOKENS_FORMAT, "config_hash": cfg_hash,
            "docs": len(docs), "empty_docs": len(empty_ids),
        }, sort_keys=True, ensure_ascii=False) + "\n")
        for doc in docs:
            fh.write(json.dumps({"tweet_id": doc.tweet_id, "tokens": list(doc.tokens)},
                                sort_keys=True, ensure_ascii=False) + "\n")


def _read_tokens(path: Path) -> list[textnorm.TokenizedDoc]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != TOKENS_FORMAT:
            raise ConfigurationError(f"{path}: not a tweetkit tokens file")
        for line in fh:
            row = json.loads(line)
            docs.append(textnorm.TokenizedDoc(tweet_id=row["tweet_id"], tokens=tuple(row["tokens"])))
    return docs


# -- subcommands -------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig, args) -> int:
    archive = _require_path(cfg["paths"]["archive"], "archive")
    hashtags = ingest.load_hashtag_list(_require_path(cfg["paths"]["hashtags"], "hashtags"))
    with open(archive, "rb") as fh:
        records, issues = ingest.parse_tweet_stream(fh)
    parsed_count = len(records)
    records, dropped = ingest.dedupe(records)
    kept = ingest.filter_corpus(records, hashtags, cfg["ingest"]["lang"], _kinds(cfg))
    window = cfg.window()
    if window:
        lo, hi = window
        kept = [r for r in kept if lo <= r.created_at.date() <= hi]
    manifest = ingest.build_manifest(kept, dropped, parse_errors=len(issues),
                                     input_records=parsed_count)
    _write_corpus(cfg.out_path("corpus.ndjson"), kept, cfg.hash)
    write_json(cfg.out_path("manifest.json"), manifest.to_dict(), cfg.hash)
    if issues:
        write_json(cfg.out_path("ingest_errors.json"),
                   {"errors": [{"line": i.line_no, "reason": i.reason} for i in issues]},
                   cfg.hash)
    log.info("ingest: %d parsed, %d duplicates dropped, %d retained, %d parse errors",
             parsed_count, dropped, len(kept), len(issues))
    print(json.dumps(manifest.to_dict(), sort_keys=True))
    return 0


def cmd_preprocess(cfg: PipelineConfig, args) -> int:
    records = _read_corpus(_artifact(cfg, "corpus.ndjson"))
    stop_path = cfg["paths"]["stopwords"]
    norm_cfg = _norm_config(cfg)
    stopwords = (textnorm.load_stopwords(_require_path(stop_path, "stopwords"), norm_cfg)
                 if stop_path else textnorm.StopwordList(frozenset()))
    docs, emptied = textnorm.tokenize_corpus(
        ((rec.id, rec.text) for rec in records), norm_cfg, stopwords)
    _write_tokens(cfg.out_path("tokens.ndjson"), docs, emptied, cfg.hash)
    log.info("preprocess: %d docs, %d emptied", len(docs), len(emptied))
    print(json.dumps({"docs": len(docs), "empty_docs": len(emptied)}, sort_keys=True))
    return 0


def cmd_lda_train(cfg: PipelineConfig, args) -> int:
    docs = _read_tokens(_artifact(cfg, "tokens.ndjson"))
    section = cfg["lda"]
    dictionary, corpus = lda.build_corpus(
        docs, min_doc_freq=section["min_doc_freq"], max_doc_fraction=section["max_doc_fraction"])
    model = lda.GibbsLda(
        n_topics=section["n_topics"],
        alpha0=section["alpha0"] or None,
        beta=section["beta"],
        iterations=section["iterations"],
        burn_in=section["burn_in"],
        optimize_interval=section["optimize_interval"],
        seed=section["seed"],
    ).fit(corpus, dictionary)
    model.save(cfg.out_path("lda_model.bin"), config_hash=cfg.hash)
    summary = {
        "docs": corpus.n_docs,
        "vocabulary": len(dictionary),
        "tokens": corpus.total_tokens,
        "pruned_empty_docs": len(corpus.pruned_empty_ids),
        "n_topics": model.n_topics,
        "iterations": model.iterations_run_,
    }
    log.info("lda-train: %s", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_lda_report(cfg: PipelineConfig, args) -> int:
    model = lda.GibbsLda.load(_artifact(cfg, "lda_model.bin"))
    wrote = []
    for order, count in (("descending", args.top), ("ascending", args.bottom)):
        if not count:
            continue
        summaries = lda.topic_prevalence_report(model, order=order, count=count)
        tag = "top" if order == "descending" else "bottom"
        path = cfg.out_path(f"topics_{tag}_{count}.csv")
        write_csv(
            path,
            ["topic_id", "percent", "starred", "top_words"],
            [
                (s.topic_id, s.percent, "*" if s.starred else "",
                 "|".join(tok for tok, _p in s.top_words))
                for s in summaries
            ],
            cfg.hash,
        )
        wrote.append(str(path))
    if args.overlap:
        other = lda.GibbsLda.load(_require_path(args.overlap, "overlap model"))
        rows = lda.topic_word_overlap(model, other)
        path = cfg.out_path("topic_overlap.csv")
        write_csv(path, ["topic_a", "topic_b", "jaccard"], rows, cfg.hash)
        wrote.append(str(path))
    if not wrote:
        raise ConfigurationError("lda-report needs --top N, --bottom N, and/or --overlap MODEL")
    print(json.dumps({"reports": wrote}, sort_keys=True))
    return 0


def cmd_cluster(cfg: PipelineConfig, args) -> int:
    docs = _read_tokens(_artifact(cfg, "tokens.ndjson"))
    docs = [d for d in docs if d.tokens]  # empty docs cannot be clustered
    if not docs:
        raise ConfigurationError("no non-empty documents to cluster")
    section = cfg["cluster"]
    encoder = cluster.TfidfEncoder()
    matrix = encoder.fit_transform(docs)
    curve = cluster.elbow_select(
        matrix, section["candidate_ks"], seed=section["seed"],
        batch_size=section["batch_size"], max_iters=section["max_iters"])
    final_k = section["k"] or curve.chosen_k
    model = cluster.MiniBatchKMeans(
        n_clusters=final_k, batch_size=section["batch_size"],
        max_iters=section["max_iters"], seed=section["seed"]).fit(matrix)

    write_csv(cfg.out_path("elbow.csv"), ["k", "inertia", "chosen"],
              [(k, inertia, "*" if k == curve.chosen_k else "")
               for k, inertia in zip(curve.candidate_ks, curve.inertias)],
              cfg.hash)
    write_csv(cfg.out_path("assignments.csv"), ["tweet_id", "cluster_id"],
              [(doc.tweet_id, int(label)) for doc, label in zip(docs, model.labels_)],
              cfg.hash)
    model.save(
        cfg.out_path("cluster_model.bin"),
        extra_meta={
            "doc_ids": [d.tweet_id for d in docs],
            "vocabulary": sorted(encoder.vocabulary_, key=encoder.vocabulary_.get),
            "idf": encoder.idf_.tolist(),
            "elbow_chosen_k": curve.chosen_k,
        },
        config_hash=cfg.hash,
    )
    summary = {"docs": len(docs), "chosen_k": curve.chosen_k, "final_k": final_k,
               "inertia": model.inertia_}
    log.info("cluster: %s", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_sample(cfg: PipelineConfig, args) -> int:
    model, meta = cluster.MiniBatchKMeans.load(_artifact(cfg, "cluster_model.bin"))
    labels = {tid: int(lab) for tid, lab in zip(meta["doc_ids"], model.labels_)}
    section = cfg["cluster"]
    sample = cluster.stratified_sample(labels, section["per_cluster_n"], seed=section["seed"])
    write_json(cfg.out_path("sample.json"), {
        "per_cluster_n": section["per_cluster_n"],
        "clusters": {str(c): ids for c, ids in sorted(sample.items())},
        "cluster_ratios": {str(c): float(r) for c, r in enumerate(model.cluster_ratios_)},
    }, cfg.hash)
    print(json.dumps({"clusters": len(sample),
                      "sampled": sum(len(v) for v in sample.values())}, sort_keys=True))
    return 0


def _session_store(cfg: PipelineConfig) -> annotate.SessionStore:
    store_path = Path(cfg["serve"]["session_store"])
    if not store_path.is_absolute():
        store_path = Path(cfg["paths"]["output_dir"]) / store_path
    return annotate.SessionStore(store_path)


def _label_set(cfg: PipelineConfig) -> annotate.LabelSet:
    labels = cfg["annotate"]["labels"]
    return annotate.LabelSet(tuple(labels)) if labels else annotate.LabelSet()


def _ensure_session(cfg: PipelineConfig, store: annotate.SessionStore) -> annotate.AnnotationSession:
    session_id = cfg["annotate"]["session_id"]
    if store.exists(session_id):
        return store.load(session_id)
    sample_doc = read_json(_artifact(cfg, "sample.json"))
    texts = {rec.id: rec for rec in _read_corpus(_artifact(cfg, "corpus.ndjson"))}
    sample = {}
    for cluster_id, ids in sample_doc["clusters"].items():
        sample[int(cluster_id)] = [
            annotate.SampledTweet(tweet_id=tid, cluster_id=int(cluster_id),
                                  text=texts[tid].text if tid in texts else "")
            for tid in ids
        ]
    ratios = {int(c): float(r) for c, r in sample_doc["cluster_ratios"].items()}
    return store.create(
        session_id, sample, cfg["annotate"]["annotators"], _label_set(cfg), ratios,
        config_hash=cfg.hash,
    )


def cmd_serve(cfg: PipelineConfig, args) -> int:
    from .server import make_server

    store = _session_store(cfg)
    session = _ensure_session(cfg, store)
    ui_dir = args.ui_dir or cfg["serve"]["ui_dir"] or None
    host = cfg["serve"]["host"]
    port = args.port if args.port is not None else cfg["serve"]["port"]
    server = make_server(store, host=host, port=port, ui_dir=ui_dir)
    server.service.register(session)  # type: ignore[attr-defined]
    actual_port = server.server_address[1]
    print(json.dumps({"serving": f"http://{host}:{actual_port}",
                      "session_id": session.session_id,
                      "phase": session.status}, sort_keys=True), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_kappa(cfg: PipelineConfig, args) -> int:
    store = _session_store(cfg)
    session = store.load(cfg["annotate"]["session_id"])
    result = session.cohen_kappa()
    write_json(cfg.out_path("kappa.json"), result.to_dict(), cfg.hash)
    print(json.dumps(result.to_dict(), sort_keys=True))
    return 0


def cmd_estimate(cfg: PipelineConfig, args) -> int:
    store = _session_store(cfg)
    session = store.load(cfg["annotate"]["session_id"])
    estimate = session.weighted_category_estimate()
    write_csv(cfg.out_path("estimate.csv"), ["label", "share"],
              sorted(estimate.per_label_share.items()), cfg.hash)
    write_csv(cfg.out_path("labels.csv"),
              ["tweet_id", "cluster_id", "annotator_a_label", "annotator_b_label", "final_label"],
              session.export_rows(), cfg.hash)
    print(json.dumps(estimate.to_dict(), sort_keys=True))
    return 0


def cmd_timeseries(cfg: PipelineConfig, args) -> int:
    archive = _require_path(cfg["paths"]["archive"], "archive")
    hashtags = ingest.load_hashtag_list(_require_path(cfg["paths"]["hashtags"], "hashtags"))
    with open(archive, "rb") as fh:
        records, _issues = ingest.parse_tweet_stream(fh)
    records, _dropped = ingest.dedupe(records)
    kinds = set(ingest.TweetKind)  # volume series cover all four kinds
    kept = ingest.filter_corpus(records, hashtags, cfg["ingest"]["lang"], kinds)
    window = cfg.window()
    if window:
        lo, hi = window
        kept = [r for r in kept if lo <= r.created_at.date() <= hi]
    tweet_series = timeseries.bucket_daily(kept)

    rows = tweet_series.tidy_rows()
    correlation = None
    primary = cfg["paths"]["case_counts_primary"]
    if primary:
        fallback = cfg["paths"]["case_counts_fallback"] or None
        case_rows, case_errors = ingest.load_case_counts(
            _require_path(primary, "case_counts_primary"),
            _require_path(fallback, "case_counts_fallback") if fallback else None,
        )
        if case_errors:
            log.warning("case-count rows skipped: %s", "; ".join(case_errors))
        if window:
            case_rows = [r for r in case_rows if window[0] <= r.date <= window[1]]
        cases = timeseries.case_count_series(case_rows)
        rows += cases.tidy_rows()
        pair = timeseries.align(tweet_series.series(args.series_a),
                                cases.series(args.series_b), window)
        correlation = timeseries.pearson(pair)
        write_json(cfg.out_path("correlation.json"), correlation.to_dict(), cfg.hash)
    write_csv(cfg.out_path("series.csv"), ["date", "series", "value"],
              [(d, name, "" if v is None else v) for d, name, v in sorted(rows)], cfg.hash)
    print(json.dumps({"days": len(tweet_series.dates),
                      "correlation": correlation.to_dict() if correlation else None},
                     sort_keys=True))
    return 0


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetkit",
        description="Persian tweet-corpus pipeline: ingest, preprocess, topic model, "
                    "cluster, sample, annotate, and report.",
    )
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config value")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="archive -> filtered corpus + manifest")
    sub.add_parser("preprocess", help="corpus -> normalized token docs")
    sub.add_parser("lda-train", help="token docs -> topic model")
    report = sub.add_parser("lda-report", help="topic model -> prevalence CSVs")
    report.add_argument("--top", type=int, default=0, metavar="N")
    report.add_argument("--bottom", type=int, default=0, metavar="N")
    report.add_argument("--overlap", default=None, metavar="MODEL",
                        help="also write top-word Jaccard overlap against another model")
    sub.add_parser("cluster", help="token docs -> tf-idf, elbow curve, k-means model")
    sub.add_parser("sample", help="cluster model -> stratified annotation sample")
    serve = sub.add_parser("serve", help="annotation API + static UI")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--ui-dir", default=None)
    sub.add_parser("kappa", help="session -> inter-annotator agreement")
    sub.add_parser("estimate", help="closed session -> weighted category shares")
    ts = sub.add_parser("timeseries", help="daily volume series and case-count correlation")
    ts.add_argument("--series-a", default="original")
    ts.add_argument("--series-b", default="confirmed")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "lda-train": cmd_lda_train,
    "lda-report": cmd_lda_report,
    "cluster": cmd_cluster,
    "sample": cmd_sample,
    "serve": cmd_serve,
    "kappa": cmd_kappa,
    "estimate": cmd_estimate,
    "timeseries": cmd_timeseries,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, args.overrides)
        return _COMMANDS[args.command](cfg, args)
    except Exception as exc:
        print(json.dumps({"error": {"command": args.command,
                                    "type": type(exc).__name__,
                                    "message": str(exc)}},
                         sort_keys=True, ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
