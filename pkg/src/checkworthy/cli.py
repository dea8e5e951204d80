"""Command-line surface.

Every command that writes an output also writes ``<output>.manifest.json``
recording the command line, seed, input digests, and resolved
configuration, so any artifact can be traced back to its inputs. Reruns
with identical inputs and seeds produce byte-identical outputs; only the
manifest timestamp field differs.

Exit codes: 0 success, 1 usage, 2 data, 3 numerical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    Dataset,
    load_factuality_table,
    load_precomputed_vectors,
    load_tweets,
    load_vip_table,
    load_word_vectors,
    stratified_kfold,
    write_run_file,
    read_run_file,
)
from .ensemble import ScoreFile, StackedDesign, average_runs, fit_stacker, predict_stacked
from .errors import ConvergenceError, DataError
from .features import (
    BOOLEAN_METADATA_COLUMNS,
    FeatureMatrix,
    fit_tfidf,
    metadata_matrix,
    pooled_matrix,
    sentence_matrix,
    tfidf_transform,
)
from .fixtures import default_vip_table
from .models import (
    LogRegConfig,
    config_from_dict,
    config_to_dict,
    load_model,
    save_model,
)
from .normalize import PIPELINES, normalize
from .plots import save_precision_figure, save_score_distribution_figure
from .ranking import MARGIN, PROBABILITY, evaluate, report_columns, report_header
from .search import MODEL_KINDS, SearchSpace, fit_config, random_search, score_model, write_trial_log


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_path, args, inputs: dict):
    snapshot = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "argv") and not k.startswith("_")
    }
    manifest = {
        "artifact_version": __version__,
        "command": "checkworthy " + " ".join(getattr(args, "argv", [])),
        "seed": getattr(args, "seed", None),
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)}
            for name, p in inputs.items()
            if p is not None and Path(p).exists()
        },
        "config": snapshot,
        "written_at": datetime.now(timezone.utc).isoformat(),
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parse_date(raw: str) -> datetime:
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise UsageError(f"bad date {raw!r} (ISO-8601 expected)")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _vip(args):
    return load_vip_table(args.vip) if args.vip else default_vip_table()


def cmd_normalize(args) -> int:
    dataset = load_tweets(args.infile)
    vip = _vip(args)
    with Path(args.out).open("w", encoding="utf-8", newline="\n") as fh:
        for tweet in dataset.tweets:
            nt = normalize(tweet, args.pipeline, vip)
            fh.write(
                json.dumps(
                    {"tweet_id": nt.tweet_id, "pipeline": nt.pipeline, "tokens": list(nt.tokens)},
                    sort_keys=True,
                )
                + "\n"
            )
    _write_manifest(args.out, args, {"tweets": args.infile, "vip": args.vip})
    return 0


def cmd_featurize(args) -> int:
    dataset = load_tweets(args.infile)
    vip = _vip(args)
    kind = args.features
    if kind in ("tfidf", "pool-mean", "pool-max", "pool-tfidf"):
        normalized = [normalize(t, args.pipeline, vip) for t in dataset.tweets]
        model = None
        if kind in ("tfidf", "pool-tfidf"):
            if args.fit_on:
                fit_docs = [
                    normalize(t, args.pipeline, vip).tokens
                    for t in load_tweets(args.fit_on).tweets
                ]
            else:
                fit_docs = [nt.tokens for nt in normalized]
            model = fit_tfidf(fit_docs)
        if kind == "tfidf":
            matrix = tfidf_transform(
                model, [nt.tokens for nt in normalized], ids=[nt.tweet_id for nt in normalized]
            )
        else:
            if not args.vectors:
                raise UsageError(f"--features {kind} requires --vectors")
            table = load_word_vectors(args.vectors)
            matrix = pooled_matrix(normalized, table, kind.removeprefix("pool-"), model)
    elif kind == "sentvec":
        if not args.vectors:
            raise UsageError("--features sentvec requires --vectors")
        store = load_precomputed_vectors(args.vectors)
        matrix = sentence_matrix([t.tweet_id for t in dataset.tweets], store)
    elif kind == "metadata":
        if not args.collection_date:
            raise UsageError("--features metadata requires --collection-date")
        fact = None
        if args.fact:
            fact = load_factuality_table(args.fact)
        else:
            print("warning: no --fact table given, factuality columns will be zero", file=sys.stderr)
        matrix = metadata_matrix(dataset, fact, _parse_date(args.collection_date))
    else:  # pragma: no cover - argparse choices guard this
        raise UsageError(f"unknown feature kind {kind!r}")
    matrix.save(args.out)
    _write_manifest(
        args.out,
        args,
        {"tweets": args.infile, "vectors": args.vectors, "fact": args.fact, "vip": args.vip,
         "fit_on": args.fit_on},
    )
    return 0


def _labels_for(features: FeatureMatrix, dataset):
    by_id = dataset.by_id()
    missing = [tid for tid in features.row_ids if tid not in by_id]
    if missing:
        raise DataError(f"feature rows without tweet records: {missing[:5]}")
    unlabeled = [tid for tid in features.row_ids if by_id[tid].label is None]
    if unlabeled:
        raise DataError(f"feature rows without labels: {unlabeled[:5]}")
    return {tid: by_id[tid].label for tid in features.row_ids}


def cmd_search(args) -> int:
    features = FeatureMatrix.load(args.features)
    dataset = load_tweets(args.tweets)
    labels = _labels_for(features, dataset)
    by_id = dataset.by_id()
    fold_dataset = Dataset(tweets=[by_id[tid] for tid in features.row_ids])
    folds = stratified_kfold(fold_dataset, args.k, args.seed)
    space = SearchSpace(model_kind=args.model, n_iter=args.iters)
    best, trials = random_search(space, features, labels, folds, args.seed, threads=args.threads)
    if args.trial_log:
        write_trial_log(trials, args.trial_log)
        _write_manifest(args.trial_log, args, {"features": args.features, "tweets": args.tweets})
    fragment = {
        "config": config_to_dict(best.config),
        "mean_map": best.mean_map,
        "mean_macro_f1": best.mean_macro_f1,
        "trial_index": best.index,
        "trials": len(trials),
        "seed": args.seed,
        "k": args.k,
    }
    print(json.dumps(fragment, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(fragment, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
        _write_manifest(args.out, args, {"features": args.features, "tweets": args.tweets})
    return 0


def _load_config_fragment(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return config_from_dict(data)


def cmd_train(args) -> int:
    features = FeatureMatrix.load(args.features)
    dataset = load_tweets(args.tweets)
    labels = _labels_for(features, dataset)
    config = _load_config_fragment(args.config)
    y = np.array([labels[tid] for tid in features.row_ids], dtype=np.float64)
    model = fit_config(config, features.values, y)
    save_model(model, args.out)
    _write_manifest(args.out, args, {"features": args.features, "tweets": args.tweets,
                                     "config": args.config})
    return 0


def cmd_predict(args) -> int:
    features = FeatureMatrix.load(args.features)
    model = load_model(args.model)
    scores = score_model(model, features.values)
    write_run_file(args.out, args.run_id, dict(zip(features.row_ids, scores)), args.topic_id)
    _write_manifest(args.out, args, {"features": args.features, "model": args.model})
    return 0


def cmd_evaluate(args) -> int:
    topic_id, run_id, rows = read_run_file(args.run)
    scores = dict(rows)
    dataset = load_tweets(args.tweets)
    gold = {t.tweet_id: t.label for t in dataset.tweets if t.label is not None}
    report = evaluate(scores, gold, score_kind=args.score_kind)
    line = "\t".join(report_columns(report))
    print(line)
    if args.report:
        out = Path(args.report)
        out.write_text(
            "\t".join(report_header(report)) + "\n" + line + "\n", encoding="utf-8"
        )
        if not args.no_figures:
            save_precision_figure(report, out.with_name(out.stem + "_precision.png"))
            save_score_distribution_figure(scores, gold, out.with_name(out.stem + "_scores.png"))
        _write_manifest(args.report, args, {"run": args.run, "tweets": args.tweets})
    return 0


def cmd_ensemble_average(args) -> int:
    files = [ScoreFile.from_run_file(p) for p in args.runs]
    merged = average_runs(files)
    write_run_file(args.out, args.run_id, merged.scores, args.topic_id)
    _write_manifest(args.out, args, {f"run{i}": p for i, p in enumerate(args.runs)})
    return 0


def cmd_ensemble_stack(args) -> int:
    dataset = load_tweets(args.tweets)
    upstream = [ScoreFile.from_run_file(p) for p in args.upstream]
    for i, (f, p) in enumerate(zip(upstream, args.upstream)):
        if not f.name or any(f.name == other.name for other in upstream[:i]):
            f.name = f"upstream{i}"
    fact = load_factuality_table(args.fact) if args.fact else None
    upstream_names = [f.name for f in upstream]
    if args.metadata == "nine":
        design = StackedDesign(upstream_columns=upstream_names,
                               metadata_columns=BOOLEAN_METADATA_COLUMNS)
    elif args.metadata == "none":
        design = StackedDesign(upstream_columns=upstream_names, metadata_columns=())
    else:
        design = StackedDesign(upstream_columns=upstream_names)
    config = _load_config_fragment(args.config) if args.config else LogRegConfig()
    date = _parse_date(args.collection_date) if args.collection_date else None
    model = fit_stacker(design, upstream, dataset, fact, config, collection_date=date)
    scored = predict_stacked(model, design, upstream, dataset, fact, collection_date=date)
    write_run_file(args.out, args.run_id, scored.scores, args.topic_id)
    _write_manifest(
        args.out,
        args,
        {"tweets": args.tweets, "fact": args.fact,
         **{f"upstream{i}": p for i, p in enumerate(args.upstream)}},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="checkworthy",
                     description="Rank tweets by check-worthiness.")
    parser.add_argument("--version", action="version", version=f"checkworthy {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("normalize", help="run a pre-processing pipeline over tweets")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pipeline", choices=PIPELINES, default="default")
    p.add_argument("--vip", default=None, help="VIP table (default: bundled)")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("featurize", help="turn tweets into a feature matrix")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--features",
        required=True,
        choices=["tfidf", "pool-mean", "pool-max", "pool-tfidf", "sentvec", "metadata"],
    )
    p.add_argument("--pipeline", choices=PIPELINES, default="default")
    p.add_argument("--vectors", default=None, help="word vectors (pool-*) or sentence vectors (sentvec)")
    p.add_argument("--fact", default=None, help="factuality table for metadata features")
    p.add_argument("--collection-date", default=None, help="corpus collection date (ISO-8601)")
    p.add_argument("--vip", default=None)
    p.add_argument("--fit-on", default=None, help="fit the TF-IDF vocabulary on this tweet file")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("search", help="randomized hyperparameter search under CV MAP")
    p.add_argument("--features", required=True)
    p.add_argument("--tweets", required=True, help="labeled tweet records")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--iters", type=int, default=None,
                   help="trials (default: 1000 for svm, 1250 for logreg)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="write the best config fragment here")
    p.add_argument("--trial-log", default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train", help="train one model from a config fragment")
    p.add_argument("--features", required=True)
    p.add_argument("--tweets", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a feature matrix with a trained model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--run-id", default="run")
    p.add_argument("--topic-id", default="1")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="official metrics for a run file")
    p.add_argument("--run", required=True)
    p.add_argument("--tweets", required=True, help="tweet records carrying gold labels")
    p.add_argument("--score-kind", choices=[PROBABILITY, MARGIN], default=PROBABILITY)
    p.add_argument("--report", default=None, help="write the delimited report here")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering figures next to the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble", help="combine runs")
    esub = p.add_subparsers(dest="ensemble_command", required=True, parser_class=_Parser)

    pa = esub.add_parser("average", help="average run files over an identical id set")
    pa.add_argument("--runs", nargs="+", required=True)
    pa.add_argument("--out", required=True)
    pa.add_argument("--run-id", default="averaged")
    pa.add_argument("--topic-id", default="1")
    pa.set_defaults(func=cmd_ensemble_average)

    ps = esub.add_parser("stack", help="train and apply the stacked meta-classifier")
    ps.add_argument("--tweets", required=True)
    ps.add_argument("--upstream", nargs="+", required=True, help="upstream run files")
    ps.add_argument("--fact", default=None)
    ps.add_argument("--collection-date", default=None)
    ps.add_argument("--metadata", choices=["twelve", "nine", "none"], default="twelve")
    ps.add_argument("--config", default=None, help="stacker config fragment (default: logistic regression)")
    ps.add_argument("--out", required=True)
    ps.add_argument("--run-id", default="stacked")
    ps.add_argument("--topic-id", default="1")
    ps.set_defaults(func=cmd_ensemble_stack)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"checkworthy: error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"checkworthy: numerical error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"checkworthy: numerical error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"checkworthy: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
