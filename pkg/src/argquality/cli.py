"""Command-line entry point.

Subcommands: ingest, aggregate, iaa, features, train, predict, evaluate,
experiment.  Exit codes: 0 success, 1 validation or usage error, 2 runtime
failure (solver non-convergence, diverged training).  Logs go to stderr;
data goes to files under ``--out`` or to stdout.

Every option can also come from a JSON config file (``--config``); explicit
flags win.  Relative input paths resolve against ``--data-dir``, which
defaults to the ``ARGQUALITY_DATA_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aggregation import (
    AnnotationRecord,
    AnnotatorGroup,
    MaceConfig,
    MaceError,
    group_mean_scores,
    mace_scores,
    majority_scores,
    mix_scores,
    parse_annotations,
    per_annotator_alpha,
    read_scores_tsv,
    scores_by_source,
    weighted_average_scores,
    write_scores_tsv,
)
from .aggregation.records import AnnotationError, scale_by_name
from .aggregation.reliability import AlphaMetric
from .corpus import (
    ALL_DIMENSIONS,
    CorpusError,
    Dimension,
    Domain,
    Split,
    build_splits,
    filter_by_word_count,
    parse_corpus,
    read_split_file,
    serialize_corpus,
    validate_corpus,
    write_split_file,
)
from .experiments import ExperimentError, run_experiment
from .features import (
    WachsmuthFeaturizer,
    embed_average,
    fit_tfidf,
    load_embeddings,
    load_representations,
    tokenize,
    transform_tfidf,
    write_representations,
)
from .metrics import EvaluationError, evaluate, write_eval_rows
from .neural import (
    MeanEmbeddingEncoder,
    MissingRepresentationError,
    PrecomputedEncoder,
    ProjectionEncoder,
    TrainConfig,
    TrainingDivergedError,
    build_training_data,
    load_checkpoint,
    new_model,
    predict_all,
    save_checkpoint,
    train,
    write_history_csv,
)
from .svr import eps_loss, load_model, model_to_dict, predict_many, svr_fit

ENV_DATA_DIR = "ARGQUALITY_DATA_DIR"

_USAGE_ERRORS = (
    CorpusError,
    AnnotationError,
    EvaluationError,
    ExperimentError,
    MaceError,
    MissingRepresentationError,
    ValueError,
    FileNotFoundError,
    IsADirectoryError,
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _resolve(path: str | None, data_dir: str | None) -> str | None:
    if path is None:
        return None
    p = Path(path)
    if p.is_absolute() or p.exists() or not data_dir:
        return str(p)
    candidate = Path(data_dir) / p
    return str(candidate) if candidate.exists() else str(p)


def _load_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset options from the JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    for key, value in config.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"{args.config}: unknown option {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _defaults(args: argparse.Namespace, **defaults) -> None:
    for key, value in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, value)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _open_out(args: argparse.Namespace):
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8"), True
    return sys.stdout, False


def _write_table(args, rows_tsv_writer, rows_json) -> None:
    fh, own = _open_out(args)
    try:
        if args.format == "json":
            json.dump(rows_json, fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            rows_tsv_writer(fh)
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args: argparse.Namespace) -> int:
    _defaults(args, scale="five_point", min_words=70, max_words=200, seed=0, train_fraction=0.7)
    domain = Domain(args.domain) if args.domain else None
    docs = parse_corpus(_resolve(args.corpus, args.data_dir), domain)
    _log(f"parsed {len(docs)} documents")
    if not args.no_length_filter:
        docs = filter_by_word_count(docs, int(args.min_words), int(args.max_words))
        _log(f"{len(docs)} documents after the {args.min_words}-{args.max_words} word filter")
    annotations: list[AnnotationRecord] = []
    if args.annotations:
        scale = scale_by_name(args.scale)
        annotations = parse_annotations(_resolve(args.annotations, args.data_dir), scale)
        kept = {d.id for d in docs}
        annotations = [a for a in annotations if a.doc_id in kept]
    splits = build_splits(docs, annotations, int(args.seed), float(args.train_fraction))
    expected = None
    if args.expected_counts:
        parts = [int(v) for v in str(args.expected_counts).split(",")]
        if len(parts) != 3:
            raise ValueError("--expected-counts wants train,dev,test")
        expected = tuple(parts)
    report = validate_corpus(docs, splits, expected, annotations or None)

    out = _out_dir(args)
    serialize_corpus(docs, out / "corpus.jsonl")
    write_split_file(splits, out / "splits.tsv")
    with open(out / "validation.txt", "w", encoding="utf-8") as fh:
        if report.ok:
            fh.write("ok\n")
        else:
            for violation in report.violations:
                fh.write(violation + "\n")
    counts = {s: sum(1 for v in splits.values() if v is s) for s in Split}
    _log(f"splits: train={counts[Split.TRAIN]} dev={counts[Split.DEV]} test={counts[Split.TEST]}")
    if not report.ok:
        for violation in report.violations:
            _log(f"violation: {violation}")
        return 1
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    _defaults(args, scale="five_point", positive_label=1, seed=0, format="tsv")
    scale = scale_by_name(args.scale)
    annotations = parse_annotations(_resolve(args.annotations, args.data_dir), scale)
    broadcast = not args.no_broadcast
    method = args.method
    if method == "mean":
        if args.group not in ("expert", "crowd"):
            raise ValueError("--method mean needs --group expert|crowd")
        rows = group_mean_scores(annotations, AnnotatorGroup(args.group))
    elif method == "mix":
        rows = mix_scores(
            group_mean_scores(annotations, AnnotatorGroup.EXPERT),
            group_mean_scores(annotations, AnnotatorGroup.CROWD),
        )
    elif method == "majority":
        rows = majority_scores(annotations, broadcast_single_dimension=broadcast)
    elif method == "wa":
        weights = None
        if args.weights:
            with open(_resolve(args.weights, args.data_dir), encoding="utf-8") as fh:
                weights = json.load(fh)
        rows = weighted_average_scores(annotations, weights, broadcast_single_dimension=broadcast)
    elif method == "mace":
        config = MaceConfig(
            restarts=int(args.restarts) if args.restarts else 10,
            iterations=int(args.iterations) if args.iterations else 50,
            smoothing=float(args.smoothing) if args.smoothing is not None else None,
            seed=int(args.seed),
        )
        rows = mace_scores(
            annotations,
            positive_label=int(args.positive_label),
            config=config,
            broadcast_single_dimension=broadcast,
        )
    else:
        raise ValueError(f"unknown aggregation method {method!r}")
    _log(f"aggregated {len(rows)} documents with method {method}")

    def write_tsv(fh):
        write_scores_tsv(rows, fh)

    rows_json = [
        {"doc_id": r.doc_id, "source": r.source.value,
         **{dim.value: r.scores.get(dim) for dim in ALL_DIMENSIONS}}
        for r in rows
    ]
    _write_table(args, write_tsv, rows_json)
    return 0


def cmd_iaa(args: argparse.Namespace) -> int:
    _defaults(args, scale="five_point", threshold=0.1, metric="interval", format="tsv")
    scale = scale_by_name(args.scale)
    annotations = parse_annotations(_resolve(args.annotations, args.data_dir), scale)
    dims = None
    if args.dimensions:
        dims = [Dimension(d.strip()) for d in str(args.dimensions).split(",")]
    report = per_annotator_alpha(
        annotations, dims, float(args.threshold), AlphaMetric(args.metric)
    )
    _log(
        f"alpha={report.alpha if report.alpha is not None else 'NA'} over {report.n_units} units; "
        f"{len(report.blocked)} annotator(s) blocked at threshold {report.threshold}"
    )

    def write_tsv(fh):
        fh.write("annotator\talpha\tblocked\n")
        alpha = "NA" if report.alpha is None else repr(report.alpha)
        fh.write(f"__group__\t{alpha}\tNA\n")
        for annotator in sorted(report.per_annotator):
            value = repr(report.per_annotator[annotator])
            fh.write(f"{annotator}\t{value}\t{'yes' if annotator in report.blocked else 'no'}\n")
        for annotator in sorted(report.excluded):
            fh.write(f"{annotator}\tNA\texcluded\n")

    rows_json = {
        "alpha": report.alpha,
        "n_units": report.n_units,
        "metric": report.metric.value,
        "threshold": report.threshold,
        "per_annotator": {a: report.per_annotator[a] for a in sorted(report.per_annotator)},
        "blocked": sorted(report.blocked),
        "excluded": sorted(report.excluded),
    }
    _write_table(args, write_tsv, rows_json)
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    _defaults(args, kind="tfidf", ngram_lo=1, ngram_hi=1, min_df=1, top_k=500,
              reference="mix", dimension="overall")
    docs = parse_corpus(_resolve(args.corpus, args.data_dir), Domain.EXTERNAL)
    out = _out_dir(args)
    if args.kind == "embed":
        if not args.embeddings:
            raise ValueError("--kind embed needs --embeddings")
        table = load_embeddings(_resolve(args.embeddings, args.data_dir))
        vectors = {doc.id: embed_average(tokenize(doc.text), table)[0] for doc in docs}
        write_representations(vectors, out / "representations.jsonl")
        _log(f"wrote {len(vectors)} averaged-embedding vectors")
        return 0
    if args.kind == "tfidf":
        vocab = fit_tfidf(
            [tokenize(d.text) for d in docs],
            (int(args.ngram_lo), int(args.ngram_hi)),
            int(args.min_df),
        )
        vocab.save(out / "vocab.json")
        with open(out / "vectors.jsonl", "w", encoding="utf-8") as fh:
            for doc in docs:
                vec = transform_tfidf(vocab, tokenize(doc.text))
                entries = {str(i): vec.entries[i] for i in sorted(vec.entries)}
                fh.write(json.dumps({"id": doc.id, "dimension": vec.dimension, "entries": entries}) + "\n")
        _log(f"fitted vocabulary of {len(vocab)} n-grams over {len(docs)} documents")
        return 0
    if args.kind == "wachsmuth":
        if not args.scores:
            raise ValueError("--kind wachsmuth needs --scores for the selection targets")
        tables = scores_by_source(read_scores_tsv(_resolve(args.scores, args.data_dir)))
        if args.reference not in tables:
            raise ValueError(f"reference {args.reference!r} not in the scores file")
        dim = Dimension(args.dimension)
        table = tables[args.reference]
        usable = [d for d in docs if d.id in table and dim in table[d.id]]
        if len(usable) < 2:
            raise ValueError("need at least two documents with selection targets")
        y = [table[d.id][dim] for d in usable]
        featurizer = WachsmuthFeaturizer(
            (int(args.ngram_lo), int(args.ngram_hi)), int(args.min_df), int(args.top_k)
        )
        featurizer.fit(usable, y)
        _save_wachsmuth(featurizer, out / "wachsmuth.json")
        _log(f"selected {len(featurizer.selected)} features on {len(usable)} documents")
        return 0
    raise ValueError(f"unknown feature kind {args.kind!r}")


def _save_wachsmuth(featurizer: WachsmuthFeaturizer, path: Path) -> None:
    payload = {
        "format_version": 1,
        "kind": "wachsmuth_featurizer",
        "ngram_range": list(featurizer.ngram_range),
        "min_df": featurizer.min_df,
        "top_k": featurizer.top_k,
        "surface_mean": [float(v) for v in featurizer.surface_mean],
        "surface_std": [float(v) for v in featurizer.surface_std],
        "selected": featurizer.selected,
        "vocab": {
            "ngram_range": list(featurizer.vocab.ngram_range),
            "min_df": featurizer.vocab.min_df,
            "n_docs": featurizer.vocab.n_docs,
            "fitted_on": featurizer.vocab.fitted_on,
            "terms": {
                t: {"index": featurizer.vocab.index[t], "df": featurizer.vocab.doc_freq[t]}
                for t in sorted(featurizer.vocab.index)
            },
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def _load_wachsmuth(path: str) -> WachsmuthFeaturizer:
    from .features import Vocabulary

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "wachsmuth_featurizer":
        raise ValueError(f"{path}: not a wachsmuth featurizer file")
    featurizer = WachsmuthFeaturizer(
        tuple(payload["ngram_range"]), payload["min_df"], payload["top_k"]
    )
    terms = payload["vocab"]["terms"]
    featurizer.vocab = Vocabulary(
        index={t: meta["index"] for t, meta in terms.items()},
        doc_freq={t: meta["df"] for t, meta in terms.items()},
        n_docs=payload["vocab"]["n_docs"],
        ngram_range=tuple(payload["vocab"]["ngram_range"]),
        min_df=payload["vocab"]["min_df"],
        fitted_on=payload["vocab"]["fitted_on"],
    )
    featurizer.surface_mean = np.asarray(payload["surface_mean"])
    featurizer.surface_std = np.asarray(payload["surface_std"])
    featurizer.selected = list(payload["selected"])
    return featurizer


def _train_docs_and_targets(args):
    docs = parse_corpus(_resolve(args.corpus, args.data_dir), Domain.EXTERNAL)
    train_docs, dev_docs = docs, []
    if args.splits:
        splits = read_split_file(_resolve(args.splits, args.data_dir))
        train_docs = [d for d in docs if splits.get(d.id) is Split.TRAIN]
        dev_docs = [d for d in docs if splits.get(d.id) is Split.DEV]
    tables = scores_by_source(read_scores_tsv(_resolve(args.scores, args.data_dir)))
    references = [r.strip() for r in str(args.train_reference).split(",")]

    def targets_for(pool):
        out = {}
        for doc in pool:
            for ref in references:
                if doc.id in tables.get(ref, {}):
                    out[doc.id] = tables[ref][doc.id]
                    break
            else:
                raise ValueError(f"doc {doc.id!r} has no scores in any of {references}")
        return out

    return train_docs, dev_docs, targets_for


def cmd_train(args: argparse.Namespace) -> int:
    _defaults(args, train_reference="mix", dimension="overall", seed=0,
              kernel="rbf", c=1.0, epsilon=0.1, tol=1e-3, max_iter=100_000,
              ngram_lo=1, ngram_hi=1, min_df=1, top_k=500,
              learning_rate=1e-3, epochs=10, batch_size=16, optimizer="adam")
    family = args.family
    train_docs, dev_docs, targets_for = _train_docs_and_targets(args)
    if not train_docs:
        raise ValueError("no training documents after applying the split file")
    train_targets = targets_for(train_docs)
    out = _out_dir(args)
    dim = Dimension(args.dimension)

    if family in ("svr_tfidf", "svr_embd", "wachsmuth_cfs"):
        y = [train_targets[d.id][dim] for d in train_docs]
        extra: dict = {"dimension": dim.value}
        if family == "svr_tfidf":
            vocab = fit_tfidf(
                [tokenize(d.text) for d in train_docs],
                (int(args.ngram_lo), int(args.ngram_hi)), int(args.min_df),
            )
            vocab.save(out / "vocab.json")
            X = [transform_tfidf(vocab, tokenize(d.text)) for d in train_docs]
        elif family == "svr_embd":
            if not args.embeddings:
                raise ValueError("svr_embd needs --embeddings")
            table = load_embeddings(_resolve(args.embeddings, args.data_dir))
            X = np.stack([embed_average(tokenize(d.text), table)[0] for d in train_docs])
        else:
            featurizer = WachsmuthFeaturizer(
                (int(args.ngram_lo), int(args.ngram_hi)), int(args.min_df), int(args.top_k)
            )
            featurizer.fit(train_docs, y)
            _save_wachsmuth(featurizer, out / "wachsmuth.json")
            X = featurizer.transform(train_docs)
        model = svr_fit(
            X, y, c=float(args.c), epsilon=float(args.epsilon), kernel=args.kernel,
            gamma=float(args.gamma) if args.gamma is not None else None,
            tol=float(args.tol), max_iter=int(args.max_iter),
        )
        payload = model_to_dict(model)
        payload.update(extra)
        with open(out / "model.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
        _log(f"train epsilon-insensitive loss: {eps_loss(model, X, y)!r}")
        if not model.converged:
            _log(f"solver did not converge within {args.max_iter} iterations")
            return 2
        return 0

    if family in ("neural_st", "neural_mt_flat", "neural_mt_hier"):
        encoder = _cli_encoder(args)
        variant = {"neural_st": "st", "neural_mt_flat": "flat", "neural_mt_hier": "hier"}[family]
        needed = [dim] if variant == "st" else list(ALL_DIMENSIONS)
        data = build_training_data(train_docs, encoder, train_targets, needed)
        dev_data = None
        if dev_docs:
            dev_data = build_training_data(dev_docs, encoder, targets_for(dev_docs), needed)
        config = TrainConfig(
            learning_rate=float(args.learning_rate), epochs=int(args.epochs),
            batch_size=int(args.batch_size), optimizer=args.optimizer, seed=int(args.seed),
        )
        model = new_model(encoder, variant, st_dimension=dim if variant == "st" else None)
        model, history = train(model, data, dev_data, config)
        save_checkpoint(model, out / "model.json", train_config={
            "learning_rate": config.learning_rate, "epochs": config.epochs,
            "batch_size": config.batch_size, "optimizer": config.optimizer, "seed": config.seed,
        })
        write_history_csv(history, out / "history.csv")
        _log(f"trained {family} for {config.epochs} epoch(s) on {len(data)} documents")
        return 0

    raise ValueError(f"unknown family {args.family!r} (arg_length needs no training)")


def _cli_encoder(args):
    encoder_kind = args.encoder
    table = None
    reps = None
    if args.embeddings:
        table = load_embeddings(_resolve(args.embeddings, args.data_dir))
    if args.representations:
        reps = load_representations(_resolve(args.representations, args.data_dir))
    if encoder_kind is None:
        encoder_kind = "mean_embedding" if table is not None else "precomputed"
    if encoder_kind == "mean_embedding":
        if table is None:
            raise ValueError("mean_embedding encoder needs --embeddings")
        return MeanEmbeddingEncoder(table)
    if encoder_kind == "precomputed":
        if reps is None:
            raise ValueError("precomputed encoder needs --representations")
        return PrecomputedEncoder(reps)
    if encoder_kind == "projection":
        base = MeanEmbeddingEncoder(table) if table is not None else None
        if base is None:
            if reps is None:
                raise ValueError("projection encoder needs --embeddings or --representations")
            base = PrecomputedEncoder(reps)
        hidden = int(args.hidden_dim) if args.hidden_dim else base.input_dim
        return ProjectionEncoder(base, hidden, seed=int(args.seed))
    raise ValueError(f"unknown encoder {encoder_kind!r}")


def cmd_predict(args: argparse.Namespace) -> int:
    _defaults(args, seed=0, format="tsv")
    docs = parse_corpus(_resolve(args.corpus, args.data_dir), Domain.EXTERNAL)
    model_path = _resolve(args.model, args.data_dir)
    with open(model_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    clamp = None
    if args.clamp:
        lo, hi = (float(v) for v in str(args.clamp).split(","))
        clamp = (lo, hi)

    predictions: dict[str, dict[Dimension, float]] = {}
    if payload.get("kind") == "svr":
        model = load_model(model_path)
        dim = Dimension(payload.get("dimension", "overall"))
        if args.vocab:
            from .features import Vocabulary

            vocab = Vocabulary.load(_resolve(args.vocab, args.data_dir))
            X = [transform_tfidf(vocab, tokenize(d.text)) for d in docs]
        elif args.wachsmuth:
            featurizer = _load_wachsmuth(_resolve(args.wachsmuth, args.data_dir))
            X = featurizer.transform(docs)
        elif args.embeddings:
            table = load_embeddings(_resolve(args.embeddings, args.data_dir))
            X = np.stack([embed_average(tokenize(d.text), table)[0] for d in docs])
        else:
            raise ValueError("svr prediction needs --vocab, --wachsmuth, or --embeddings")
        values = predict_many(model, X)
        if clamp is not None:
            values = np.clip(values, *clamp)
        predictions = {doc.id: {dim: float(v)} for doc, v in zip(docs, values)}
    elif payload.get("kind") == "mt_model":
        base = _cli_encoder_for_checkpoint(args, payload)
        model = load_checkpoint(model_path, base)
        predictions = predict_all(model, docs, clamp=clamp)
    else:
        raise ValueError(f"{args.model}: unrecognized model file")

    def write_tsv(fh):
        fh.write("doc_id\tdimension\tprediction\n")
        for doc_id in sorted(predictions):
            for dim in ALL_DIMENSIONS:
                if dim in predictions[doc_id]:
                    fh.write(f"{doc_id}\t{dim.value}\t{predictions[doc_id][dim]!r}\n")

    rows_json = {
        doc_id: {dim.value: value for dim, value in dims.items()}
        for doc_id, dims in predictions.items()
    }
    _write_table(args, write_tsv, rows_json)
    return 0


def _cli_encoder_for_checkpoint(args, payload):
    kind = payload["encoder"]["type"]
    base_kind = payload["encoder"].get("base", {}).get("type") if kind == "projection" else kind
    if base_kind == "mean_embedding":
        if not args.embeddings:
            raise ValueError("this checkpoint needs --embeddings")
        return MeanEmbeddingEncoder(load_embeddings(_resolve(args.embeddings, args.data_dir)))
    if not args.representations:
        raise ValueError("this checkpoint needs --representations")
    return PrecomputedEncoder(load_representations(_resolve(args.representations, args.data_dir)))


def cmd_evaluate(args: argparse.Namespace) -> int:
    _defaults(args, domain="all", format="tsv")
    predictions: dict[str, dict[Dimension, float]] = {}
    with open(_resolve(args.predictions, args.data_dir), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("doc_id\t"):
                continue
            doc_id, dim_value, value = line.rstrip("\n").split("\t")[:3]
            predictions.setdefault(doc_id, {})[Dimension(dim_value)] = float(value)
    tables = scores_by_source(read_scores_tsv(_resolve(args.references, args.data_dir)))
    if args.reference_sources:
        wanted = [s.strip() for s in str(args.reference_sources).split(",")]
        missing = [s for s in wanted if s not in tables]
        if missing:
            raise ValueError(f"reference sources not in the scores file: {missing}")
        tables = {s: tables[s] for s in wanted}
    rows = evaluate(predictions, tables, args.domain)

    def write_tsv(fh):
        write_eval_rows(rows, fh)

    rows_json = [
        {"domain": r.domain, "dimension": r.dimension.value, "reference": r.reference,
         "pearson": r.pearson_r, "spearman": r.spearman_rho, "n": r.n}
        for r in rows
    ]
    _write_table(args, write_tsv, rows_json)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    spec_path = _resolve(args.spec, args.data_dir)
    if not Path(spec_path).exists():
        _log(f"experiment spec not found: {args.spec}")
        return 1
    rows = run_experiment(spec_path, args.out)
    _log(f"wrote {len(rows)} evaluation rows to {Path(args.out) / 'eval_results.tsv'}")
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argquality",
        description="Argument-quality corpora, annotation aggregation, regressors, evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_is_dir: bool) -> None:
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("--data-dir", default=os.environ.get(ENV_DATA_DIR),
                       help=f"base directory for relative input paths (default: ${ENV_DATA_DIR})")
        if out_is_dir:
            p.add_argument("--out", required=True, help="output directory")
        else:
            p.add_argument("--out", help="output file (default: stdout)")
            p.add_argument("--format", choices=("tsv", "json"), default=None)

    p = sub.add_parser("ingest", help="parse, validate, filter, and split a corpus")
    common(p, out_is_dir=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--domain", choices=[d.value for d in Domain])
    p.add_argument("--annotations")
    p.add_argument("--scale", choices=("five_point", "three_point", "binary"))
    p.add_argument("--min-words", type=int)
    p.add_argument("--max-words", type=int)
    p.add_argument("--no-length-filter", action="store_true")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--expected-counts", help="train,dev,test")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("aggregate", help="turn raw annotations into a scores table")
    common(p, out_is_dir=False)
    p.add_argument("--annotations", required=True)
    p.add_argument("--method", required=True, choices=("mean", "mix", "majority", "mace", "wa"))
    p.add_argument("--group", choices=("expert", "crowd"))
    p.add_argument("--scale", choices=("five_point", "three_point", "binary"))
    p.add_argument("--weights", help="JSON file mapping annotator id to weight (wa)")
    p.add_argument("--positive-label", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--smoothing", type=float)
    p.add_argument("--no-broadcast", action="store_true",
                   help="do not replicate single-dimension scores across all four columns")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_aggregate)

    p = sub.add_parser("iaa", help="inter-annotator agreement report with blocking")
    common(p, out_is_dir=False)
    p.add_argument("--annotations", required=True)
    p.add_argument("--scale", choices=("five_point", "three_point", "binary"))
    p.add_argument("--threshold", type=float)
    p.add_argument("--metric", choices=[m.value for m in AlphaMetric])
    p.add_argument("--dimensions", help="comma-separated subset of dimensions")
    p.set_defaults(handler=cmd_iaa)

    p = sub.add_parser("features", help="fit and export document representations")
    common(p, out_is_dir=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=("tfidf", "embed", "wachsmuth"))
    p.add_argument("--embeddings")
    p.add_argument("--scores", help="scores TSV for wachsmuth selection targets")
    p.add_argument("--reference", help="source column in --scores (default mix)")
    p.add_argument("--dimension", choices=[d.value for d in Dimension])
    p.add_argument("--ngram-lo", type=int)
    p.add_argument("--ngram-hi", type=int)
    p.add_argument("--min-df", type=int)
    p.add_argument("--top-k", type=int)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("train", help="train one model and write its checkpoint")
    common(p, out_is_dir=True)
    p.add_argument("--family", required=True,
                   choices=("svr_tfidf", "svr_embd", "wachsmuth_cfs",
                            "neural_st", "neural_mt_flat", "neural_mt_hier"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--splits")
    p.add_argument("--scores", required=True)
    p.add_argument("--train-reference", help="comma-separated source priority (default mix)")
    p.add_argument("--dimension", choices=[d.value for d in Dimension])
    p.add_argument("--kernel", choices=("linear", "rbf"))
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--ngram-lo", type=int)
    p.add_argument("--ngram-hi", type=int)
    p.add_argument("--min-df", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--embeddings")
    p.add_argument("--representations")
    p.add_argument("--encoder", choices=("mean_embedding", "precomputed", "projection"))
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="apply a trained model to a corpus")
    common(p, out_is_dir=False)
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", help="vocabulary JSON for svr_tfidf models")
    p.add_argument("--wachsmuth", help="featurizer JSON for wachsmuth_cfs models")
    p.add_argument("--embeddings")
    p.add_argument("--representations")
    p.add_argument("--clamp", help="lo,hi clamp for predictions (e.g. 1,5)")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="correlate predictions against reference scores")
    common(p, out_is_dir=False)
    p.add_argument("--predictions", required=True, help="TSV from the predict subcommand")
    p.add_argument("--references", required=True, help="aggregated scores TSV")
    p.add_argument("--reference-sources", help="comma-separated subset of sources")
    p.add_argument("--domain", help="domain label for the output rows")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a full experiment from a JSON spec")
    common(p, out_is_dir=True)
    p.add_argument("--spec", required=True)
    p.set_defaults(handler=cmd_experiment)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the CLI contract says 1.
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 1
    try:
        _load_config(args, parser)
        return args.handler(args)
    except TrainingDivergedError as exc:
        _log(f"error: {exc}")
        return 2
    except _USAGE_ERRORS as exc:
        _log(f"error: {exc}")
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
