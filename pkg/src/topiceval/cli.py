"""Command-line pipeline: ingest -> index -> coherence -> gen-intrusion ->
serve -> score-human -> autoeval -> report.

Each stage reads and writes versioned record files stamped with a hash of
the run configuration; a stage whose output already carries the current
hash is skipped, so reruns are no-ops and the pipeline is resumable.
"""

import argparse
import logging
import os
import sys

from . import autoeval, coherence, corpus, intrusion, records, topicmodel

logger = logging.getLogger(__name__)

ENV_PREFIX = "TOPICEVAL_"

DEFAULTS = {
    "min_count": 10,
    "top_fraction": 0.001,
    "window_size": 20,
    "n_words": 10,
    "low_tau": intrusion.DEFAULT_LOW_TAU,
    "high_rank": intrusion.DEFAULT_HIGH_RANK,
    "qc_threshold": intrusion.DEFAULT_QC_THRESHOLD,
    "mu": autoeval.DEFAULT_MU,
    "c": autoeval.DEFAULT_C,
    "seed": 13,
    "n_train_docs": 1600,
    "n_test_docs": 100,
}


def load_config(path: str | None) -> dict:
    """Config from defaults, then a key=value file, then the environment."""
    cfg = dict(DEFAULTS)
    if path:
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"bad config line: {line!r}")
                key, val = line.split("=", 1)
                cfg[key.strip()] = val.strip()
    for key in list(cfg):
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            cfg[key] = env
    for key, default in DEFAULTS.items():
        if not isinstance(cfg[key], type(default)):
            cfg[key] = type(default)(cfg[key])
    return cfg


def _meta(cfg: dict) -> dict:
    return {"config_hash": records.config_hash(cfg)}


def _fresh(path: str, cfg: dict) -> bool:
    """True if `path` exists and was produced under the current config."""
    if not os.path.exists(path):
        return False
    try:
        header = records.read_header(path)
    except (records.RecordFormatError, ValueError):
        return False
    return header.get("config_hash") == records.config_hash(cfg)


# ---------------------------------------------------------------------------
# stages

def cmd_ingest(args, cfg):
    out = os.path.join(args.out_dir, "docs.jsonl")
    vocab_out = os.path.join(args.out_dir, "vocab.jsonl")
    if _fresh(out, cfg) and _fresh(vocab_out, cfg):
        print("ingest: up to date")
        return 0
    raw = corpus.read_raw_corpus(args.corpus)
    stop = (corpus.load_stopwords(args.stopwords) if args.stopwords
            else corpus.default_stopwords())
    pc = corpus.PreprocessConfig(stopwords=stop,
                                 min_count=cfg["min_count"],
                                 top_fraction=cfg["top_fraction"])
    docs, vocab, empty = corpus.preprocess(raw, pc)
    os.makedirs(args.out_dir, exist_ok=True)
    corpus.save_documents(docs, out, _meta(cfg))
    corpus.save_vocabulary(vocab, vocab_out, _meta(cfg))
    print(f"ingest: {len(docs)} documents, vocabulary {len(vocab)}, "
          f"{len(empty)} empty after filtering")
    return 0


def cmd_index(args, cfg):
    idx_out = os.path.join(args.out_dir, "index.jsonl")
    win_out = os.path.join(args.out_dir, "cooc_window.jsonl")
    doc_out = os.path.join(args.out_dir, "cooc_document.jsonl")
    if all(_fresh(p, cfg) for p in (idx_out, win_out, doc_out)):
        print("index: up to date")
        return 0
    docs = corpus.load_documents(os.path.join(args.out_dir, "docs.jsonl"))
    corpus.save_index(corpus.build_index(docs), idx_out, _meta(cfg))
    corpus.save_cooccurrence(
        corpus.count_cooccurrence(docs, "window", cfg["window_size"]),
        win_out, _meta(cfg))
    corpus.save_cooccurrence(
        corpus.count_cooccurrence(docs, "document"), doc_out, _meta(cfg))
    print(f"index: {len(docs)} documents indexed")
    return 0


def cmd_coherence(args, cfg):
    out = os.path.join(args.out_dir, "coherence.jsonl")
    tsv = os.path.join(args.out_dir, "coherence.tsv")
    if _fresh(out, cfg) and os.path.exists(tsv):
        print("coherence: up to date")
        return 0
    vocab = corpus.load_vocabulary(os.path.join(args.out_dir, "vocab.jsonl"))
    stats = corpus.load_cooccurrence(os.path.join(args.out_dir, "cooc_window.jsonl"))
    rows = []
    for path in args.models:
        model = topicmodel.load_model(path)
        rep = coherence.model_coherence(model, stats, vocab, cfg["n_words"],
                                        stats_ref=os.path.basename(path))
        rows.append((model.name, rep))
    records.write_records(
        out, "coherence_report",
        ({"model": name, "mean_npmi": rep.model_mean, "n_words": rep.n_words,
          "per_topic": {str(k): v for k, v in sorted(rep.per_topic.items())}}
         for name, rep in rows), _meta(cfg))
    with open(tsv, "w", encoding="utf-8") as f:
        f.write("model\tmean_npmi\n")
        for name, rep in rows:
            f.write(f"{name}\t{rep.model_mean:.4f}\n")
    for name, rep in rows:
        print(f"coherence: {name}\t{rep.model_mean:.4f}")
    return 0


def cmd_gen_intrusion(args, cfg):
    items_out = os.path.join(args.out_dir, "items.jsonl")
    hits_out = os.path.join(args.out_dir, "hits.jsonl")
    if _fresh(items_out, cfg) and _fresh(hits_out, cfg):
        print("gen-intrusion: up to date")
        return 0
    docs = {d.id: d for d in
            corpus.load_documents(os.path.join(args.out_dir, "docs.jsonl"))}
    vocab = corpus.load_vocabulary(os.path.join(args.out_dir, "vocab.jsonl"))
    all_items: list[intrusion.IntrusionItem] = []
    all_controls: list[intrusion.IntrusionItem] = []
    for path in args.models:
        model = topicmodel.load_model(path)
        doc_ids = sorted(model.allocations)
        if args.n_docs:
            import numpy as np
            rng = np.random.default_rng(cfg["seed"])
            doc_ids = [doc_ids[i] for i in
                       rng.permutation(len(doc_ids))[:args.n_docs]]
        all_items.extend(intrusion.generate_items(
            model, docs, doc_ids, vocab, cfg["seed"],
            cfg["low_tau"], cfg["high_rank"]))
        n_controls = max(1, len(doc_ids) // 10)
        all_controls.extend(intrusion.generate_control_items(
            model, docs, doc_ids[:n_controls], vocab, cfg["seed"]))
    hits = intrusion.build_hits(all_items, all_controls, cfg["seed"])
    intrusion.save_items(all_items + all_controls, items_out, _meta(cfg))
    intrusion.save_hits(hits, hits_out, _meta(cfg))
    print(f"gen-intrusion: {len(all_items)} items, {len(all_controls)} "
          f"controls, {len(hits)} hits")
    return 0


def cmd_serve(args, cfg):
    from . import annsvc
    annsvc.serve(os.path.join(args.out_dir, "hits.jsonl"),
                 log_dir=args.out_dir, host=args.host, port=args.port,
                 qc_threshold=cfg["qc_threshold"])
    return 0


def cmd_score_human(args, cfg):
    out = os.path.join(args.out_dir, "human_metrics.jsonl")
    items = intrusion.load_items(os.path.join(args.out_dir, "items.jsonl"))
    annotations = intrusion.load_annotations(args.annotations)
    ratings = intrusion.load_ratings(args.ratings) if args.ratings else []
    models = {}
    for path in args.models:
        m = topicmodel.load_model(path)
        models[m.name] = m
    report = intrusion.score_human(annotations, items, models, ratings,
                                   cfg["qc_threshold"])
    records.write_records(
        out, "human_metrics",
        [{"model_mp": report.model_mp, "model_tlo": report.model_tlo,
          "model_rating": report.model_rating,
          "doc_mp": {f"{m}:{d}": v for (m, d), v in sorted(report.doc_mp.items())},
          "doc_tlo": {f"{m}:{d}": v for (m, d), v in sorted(report.doc_tlo.items())}}],
        _meta(cfg))
    for m in sorted(report.model_mp):
        line = f"score-human: {m}\tMP={report.model_mp[m]:.3f}"
        if m in report.model_tlo:
            line += f"\tTLO={report.model_tlo[m]:.3f}"
        if m in report.model_rating:
            line += f"\trating={report.model_rating[m]:.3f}"
        print(line)
    return 0


def _load_eval_inputs(out_dir):
    vocab = corpus.load_vocabulary(os.path.join(out_dir, "vocab.jsonl"))
    index = corpus.load_index(os.path.join(out_dir, "index.jsonl"))
    doc_stats = corpus.load_cooccurrence(os.path.join(out_dir, "cooc_document.jsonl"))
    return vocab, index, doc_stats


def cmd_autoeval_train(args, cfg):
    model_out = os.path.join(args.out_dir, "rank_model.jsonl")
    if _fresh(model_out, cfg):
        print("autoeval train: up to date")
        return 0
    vocab, index, doc_stats = _load_eval_inputs(args.out_dir)
    models = [topicmodel.load_model(p) for p in args.models]
    doc_ids = sorted(models[0].allocations)
    train, test = autoeval.build_training_set(
        models, doc_ids, vocab, index, doc_stats,
        cfg["n_train_docs"], cfg["n_test_docs"], cfg["seed"],
        cfg["low_tau"], cfg["high_rank"], cfg["mu"])
    ranker = autoeval.train_ranker(train, C=cfg["c"], seed=cfg["seed"])
    autoeval.save_rank_model(ranker, model_out, _meta(cfg))
    # Persist the held-out groups so predict/report reuse them.
    _save_instances(test, os.path.join(args.out_dir, "test_groups.jsonl"), cfg)
    acc = autoeval.group_accuracy(ranker, test) if test else float("nan")
    print(f"autoeval train: {len(train) // 4} train groups, "
          f"{len(test) // 4} test groups, held-out accuracy {acc:.3f}")
    return 0


def _save_instances(instances, path, cfg):
    records.write_records(
        path, "rank_instances",
        ({"doc": i.group[0], "model": i.group[1], "topic": i.topic_id,
          "features": [float(x) for x in i.features], "label": i.label}
         for i in instances), _meta(cfg))


def _load_instances(path):
    import numpy as np
    return [autoeval.RankInstance(group=(r["doc"], r["model"]),
                                  topic_id=r["topic"],
                                  features=np.array(r["features"]),
                                  label=r["label"])
            for r in records.iter_records(path, "rank_instances")]


def cmd_autoeval_predict(args, cfg):
    out = os.path.join(args.out_dir, "predictions.jsonl")
    ranker = autoeval.load_rank_model(os.path.join(args.out_dir, "rank_model.jsonl"))
    test = _load_instances(os.path.join(args.out_dir, "test_groups.jsonl"))
    predictions = autoeval.predict_all(ranker, test)
    records.write_records(
        out, "predictions",
        ({"doc": d, "model": m, "predicted": t}
         for (d, m), t in sorted(predictions.items())), _meta(cfg))
    print(f"autoeval predict: {len(predictions)} groups")
    return 0


def cmd_autoeval_report(args, cfg):
    test = _load_instances(os.path.join(args.out_dir, "test_groups.jsonl"))
    _, preds = records.read_records(os.path.join(args.out_dir, "predictions.jsonl"),
                                    "predictions")
    predictions = {(r["doc"], r["model"]): r["predicted"] for r in preds}
    truths = autoeval.truths_of(test)
    system_mp = autoeval.system_model_precision(predictions, truths)
    lines = ["model\tsystem_mp"]
    human_mp = {}
    if args.human:
        _, (metrics,) = records.read_records(args.human, "human_metrics")
        human_mp = metrics["model_mp"]
        lines = ["model\thuman_mp\tsystem_mp"]
    rows = []
    for m in sorted(system_mp):
        if human_mp:
            rows.append(f"{m}\t{human_mp.get(m, float('nan')):.3f}\t{system_mp[m]:.3f}")
        else:
            rows.append(f"{m}\t{system_mp[m]:.3f}")
    tsv = os.path.join(args.out_dir, "autoeval_report.tsv")
    with open(tsv, "w", encoding="utf-8") as f:
        f.write("\n".join(lines + rows) + "\n")
    print("\n".join(lines + rows))
    if human_mp and len(set(human_mp) & set(system_mp)) >= 3:
        try:
            r = autoeval.correlate(human_mp, system_mp)
            print(f"pearson_r\t{r:.4f}")
        except ValueError as e:
            print(f"pearson_r\tundefined ({e})")
    records.write_records(
        os.path.join(args.out_dir, "autoeval_report.jsonl"), "autoeval_report",
        [{"system_mp": system_mp, "human_mp": human_mp}], _meta(cfg))
    return 0


def cmd_report(args, cfg):
    """Human/system disagreement listing plus the MP comparison table."""
    test = _load_instances(os.path.join(args.out_dir, "test_groups.jsonl"))
    _, preds = records.read_records(os.path.join(args.out_dir, "predictions.jsonl"),
                                    "predictions")
    predictions = {(r["doc"], r["model"]): r["predicted"] for r in preds}
    truths = autoeval.truths_of(test)
    items = intrusion.load_items(os.path.join(args.out_dir, "items.jsonl"))
    annotations = intrusion.load_annotations(args.annotations) if args.annotations else []
    by_id = {it.item_id: it for it in items}
    disagreements = []
    for (doc, model), predicted in sorted(predictions.items()):
        it = by_id.get(f"{model}:{doc}")
        if it is None or not annotations:
            continue
        votes = [a.chosen_pos for a in annotations if a.item_id == it.item_id]
        if not votes:
            continue
        human_correct = sum(v == it.intruder_pos for v in votes) / len(votes)
        system_correct = predicted == truths[(doc, model)]
        if (human_correct >= 0.5) != system_correct:
            disagreements.append({"doc": doc, "model": model,
                                  "human_mp": human_correct,
                                  "system_correct": system_correct})
    out = os.path.join(args.out_dir, "disagreements.jsonl")
    records.write_records(out, "disagreements", disagreements, _meta(cfg))
    print(f"report: {len(disagreements)} human/system disagreements -> {out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topiceval",
                                description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out-dir", default="out", help="artifact directory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="preprocess a raw corpus")
    sp.add_argument("corpus")
    sp.add_argument("--stopwords")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("index", help="build index and co-occurrence stats")
    sp.set_defaults(func=cmd_index)

    sp = sub.add_parser("coherence", help="NPMI coherence per model")
    sp.add_argument("models", nargs="+")
    sp.set_defaults(func=cmd_coherence)

    sp = sub.add_parser("gen-intrusion", help="generate intrusion items and hits")
    sp.add_argument("models", nargs="+")
    sp.add_argument("--n-docs", type=int, default=0)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--low-tau", type=float)
    sp.add_argument("--high-rank", type=int)
    sp.set_defaults(func=cmd_gen_intrusion)

    sp = sub.add_parser("serve", help="run the annotation service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8765)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("score-human", help="QC filter and human metrics")
    sp.add_argument("annotations")
    sp.add_argument("models", nargs="+")
    sp.add_argument("--ratings")
    sp.add_argument("--qc-threshold", type=float)
    sp.set_defaults(func=cmd_score_human)

    ae = sub.add_parser("autoeval", help="automatic intruder prediction")
    aesub = ae.add_subparsers(dest="subcommand", required=True)
    sp = aesub.add_parser("train")
    sp.add_argument("models", nargs="+")
    sp.add_argument("--c", type=float)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-train-docs", type=int)
    sp.add_argument("--n-test-docs", type=int)
    sp.set_defaults(func=cmd_autoeval_train)
    sp = aesub.add_parser("predict")
    sp.set_defaults(func=cmd_autoeval_predict)
    sp = aesub.add_parser("report")
    sp.add_argument("--human", help="human_metrics.jsonl for the comparison")
    sp.set_defaults(func=cmd_autoeval_report)

    sp = sub.add_parser("report", help="human vs system disagreement listing")
    sp.add_argument("--annotations")
    sp.set_defaults(func=cmd_report)

    return p


_FLAG_OVERRIDES = ("seed", "low_tau", "high_rank", "qc_threshold",
                   "c", "mu", "n_train_docs", "n_test_docs")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as e:
        print(f"error: bad config: {e}", file=sys.stderr)
        return 1
    for key in _FLAG_OVERRIDES:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    os.makedirs(args.out_dir, exist_ok=True)
    try:
        return args.func(args, cfg)
    except FileNotFoundError as e:
        print(f"error in stage {args.command}: missing input {e.filename}",
              file=sys.stderr)
        return 1
    except (ValueError, records.RecordFormatError) as e:
        print(f"error in stage {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
