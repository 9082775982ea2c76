"""Experiment orchestration: grid search plus the four training scopes
(in-domain, all-domains, zero-shot cross-corpus, encoder transfer).

``run_experiment`` is driven by a JSON spec naming the input files and the
model family; it writes the evaluation table, grid table, predictions, model
checkpoints, and a manifest with content hashes of every input so a run can
be audited and reproduced byte for byte.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .aggregation import read_scores_tsv, scores_by_source
from .corpus import ALL_DIMENSIONS, ArgumentDoc, Dimension, Domain, Split, parse_corpus, read_split_file
from .features import (
    EmbeddingTable,
    WachsmuthFeaturizer,
    embed_average,
    char_length,
    fit_tfidf,
    load_embeddings,
    load_representations,
    tokenize,
    transform_tfidf,
)
from .metrics import EvalRow, evaluate, pearson, write_eval_rows
from .neural import (
    MeanEmbeddingEncoder,
    PrecomputedEncoder,
    ProjectionEncoder,
    TrainConfig,
    build_training_data,
    new_model,
    predict_all,
    save_checkpoint,
    stilt_transfer,
    train,
    write_history_csv,
)
from .neural.model import VARIANT_FLAT, VARIANT_HIER, VARIANT_ST, forward_batch
from .svr import predict_many, save_model, svr_fit

SVR_DEFAULT_GRID: dict[str, list] = {
    "c": [0.001, 0.01, 0.1, 1.0, 10.0],
    "epsilon": [0.001, 0.01, 0.1, 1.0],
}
NEURAL_DEFAULT_GRID: dict[str, list] = {
    "learning_rate": [2e-5, 3e-5],
    "epochs": [3, 4],
}

SVR_FAMILIES = ("svr_tfidf", "svr_embd", "wachsmuth_cfs")
NEURAL_FAMILIES = ("neural_st", "neural_mt_flat", "neural_mt_hier")
FAMILIES = ("arg_length",) + SVR_FAMILIES + NEURAL_FAMILIES


class ExperimentError(Exception):
    pass


class GridSearchError(ExperimentError):
    """Every grid cell failed; carries the per-cell diagnostics."""

    def __init__(self, cells: list["GridCell"]):
        self.cells = cells
        details = "; ".join(f"{cell.params}: {cell.error}" for cell in cells)
        super().__init__(f"every grid cell failed: {details}")


@dataclass
class GridCell:
    params: dict
    score: float | None = None
    error: str | None = None


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float | None
    cells: list[GridCell]


def grid_search(
    grid: Mapping[str, Sequence], evaluate_cell: Callable[[dict], float | None]
) -> GridSearchResult:
    """Evaluate every cell of ``grid`` (declared order) and pick the best.

    Selection maximizes the returned dev score; ties break toward the earlier
    cell.  Cells whose evaluation raises are recorded with the error message;
    if every cell fails, :class:`GridSearchError` carries all diagnostics.
    Cells scoring None (undefined correlation) stay in the table but only win
    when no cell has a defined score, in which case the first surviving cell
    is returned.
    """
    keys = list(grid.keys())
    for key in keys:
        if not grid[key]:
            raise ExperimentError(f"grid for {key!r} is empty")
    cells: list[GridCell] = []
    combos = itertools.product(*(grid[key] for key in keys)) if keys else iter([()])
    for values in combos:
        cell = GridCell(params=dict(zip(keys, values)))
        try:
            cell.score = evaluate_cell(cell.params)
        except Exception as exc:  # cell failures are data, not crashes
            cell.error = f"{type(exc).__name__}: {exc}"
        cells.append(cell)

    survivors = [cell for cell in cells if cell.error is None]
    if not survivors:
        raise GridSearchError(cells)
    best = None
    for cell in survivors:
        if cell.score is not None and (best is None or best.score is None or cell.score > best.score):
            best = cell
    if best is None:
        best = survivors[0]
    return GridSearchResult(best_params=best.params, best_score=best.score, cells=cells)


def write_grid_table(
    results: Mapping[str, GridSearchResult], grid_keys: Sequence[str], path: str | Path
) -> None:
    """TSV of every evaluated cell, one block per model label."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["model", *grid_keys, "dev_pearson", "error"]) + "\n")
        for label in results:
            for cell in results[label].cells:
                row = [label]
                row += [repr(cell.params[k]) if k in cell.params else "NA" for k in grid_keys]
                row.append("NA" if cell.score is None else repr(cell.score))
                row.append(cell.error or "")
                fh.write("\t".join(row) + "\n")


@dataclass
class ExperimentSpec:
    family: str
    scope: dict
    corpora: dict[str, dict]
    seed: int = 0
    grids: dict | None = None
    train_reference: list[str] = field(default_factory=lambda: ["mix"])
    source_train_reference: list[str] | None = None
    eval_references: list[str] | None = None
    embeddings: str | None = None
    representations: str | None = None
    encoder: dict | None = None
    train_config: dict = field(default_factory=dict)
    svr: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    clamp: tuple[float, float] | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        data = dict(raw)
        for key in ("family", "scope", "corpora"):
            if key not in data:
                raise ExperimentError(f"experiment spec lacks required key {key!r}")
        if data["family"] not in FAMILIES:
            raise ExperimentError(f"unknown model family {data['family']!r}")
        for ref_key in ("train_reference", "source_train_reference"):
            if isinstance(data.get(ref_key), str):
                data[ref_key] = [data[ref_key]]
        if data.get("clamp") is not None:
            lo, hi = data["clamp"]
            data["clamp"] = (float(lo), float(hi))
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ExperimentError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class _Corpus:
    key: str
    docs: list[ArgumentDoc]
    splits: dict[str, Split]
    scores: dict[str, dict[str, dict[Dimension, float]]]

    def docs_in(self, split: Split) -> list[ArgumentDoc]:
        return [d for d in self.docs if self.splits.get(d.id) is split]


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _targets_for(
    docs: Sequence[ArgumentDoc],
    corpus: _Corpus,
    references: Sequence[str],
) -> dict[str, dict[Dimension, float]]:
    """Per-doc training targets: the first reference table that has the doc."""
    out: dict[str, dict[Dimension, float]] = {}
    for doc in docs:
        for ref in references:
            table = corpus.scores.get(ref, {})
            if doc.id in table:
                out[doc.id] = table[doc.id]
                break
        else:
            raise ExperimentError(
                f"doc {doc.id!r} has no scores in any of {list(references)} "
                f"(corpus {corpus.key!r})"
            )
    return out


class _Runner:
    """Loads inputs once, then executes the spec's scope."""

    def __init__(self, spec: ExperimentSpec, out_dir: str | Path):
        self.spec = spec
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.corpora: dict[str, _Corpus] = {}
        for key, entry in spec.corpora.items():
            for path_key in ("docs", "splits", "scores"):
                if path_key not in entry:
                    raise ExperimentError(f"corpus {key!r} lacks the {path_key!r} path")
            default_domain = Domain(entry["domain"]) if "domain" in entry else None
            docs = parse_corpus(entry["docs"], default_domain)
            splits = read_split_file(entry["splits"])
            scores = scores_by_source(read_scores_tsv(entry["scores"]))
            for path_key in ("docs", "splits", "scores"):
                self.inputs[str(entry[path_key])] = _sha256(entry[path_key])
            self.corpora[key] = _Corpus(key=key, docs=docs, splits=splits, scores=scores)

        self.embedding_table: EmbeddingTable | None = None
        if spec.embeddings:
            self.embedding_table = load_embeddings(spec.embeddings)
            self.inputs[str(spec.embeddings)] = _sha256(spec.embeddings)
        self.representations: dict[str, np.ndarray] | None = None
        if spec.representations:
            self.representations = load_representations(spec.representations)
            self.inputs[str(spec.representations)] = _sha256(spec.representations)

        self.grid_results: dict[str, GridSearchResult] = {}
        self.histories: dict[str, list] = {}

    # ---- scope plumbing ---------------------------------------------------

    def _corpus(self, key: str) -> _Corpus:
        try:
            return self.corpora[key]
        except KeyError:
            raise ExperimentError(f"scope references unknown corpus {key!r}") from None

    def _pools(self) -> tuple[list[tuple[_Corpus, list[ArgumentDoc]]], list[tuple[_Corpus, list[ArgumentDoc]]], list[str]]:
        """(train pools, dev pools, test corpus keys) for the scope."""
        scope = self.spec.scope
        kind = scope.get("type")
        if kind == "in_domain":
            corpus = self._corpus(scope["domain"])
            return (
                [(corpus, corpus.docs_in(Split.TRAIN))],
                [(corpus, corpus.docs_in(Split.DEV))],
                [corpus.key],
            )
        if kind == "all_domains":
            keys = scope.get("domains") or sorted(self.corpora)
            train = [(self._corpus(k), self._corpus(k).docs_in(Split.TRAIN)) for k in keys]
            dev = [(self._corpus(k), self._corpus(k).docs_in(Split.DEV)) for k in keys]
            return train, dev, list(keys)
        if kind in ("cross_corpus", "stilt"):
            source = scope["source"]
            targets = scope.get("targets") or sorted(k for k in self.corpora if k != source)
            if not targets:
                raise ExperimentError(f"scope {kind!r} has no target corpora")
            if kind == "cross_corpus":
                corpus = self._corpus(source)
                return (
                    [(corpus, corpus.docs_in(Split.TRAIN))],
                    [(corpus, corpus.docs_in(Split.DEV))],
                    list(targets),
                )
            train = [(self._corpus(k), self._corpus(k).docs_in(Split.TRAIN)) for k in targets]
            dev = [(self._corpus(k), self._corpus(k).docs_in(Split.DEV)) for k in targets]
            return train, dev, list(targets)
        raise ExperimentError(f"unknown scope type {scope.get('type')!r}")

    def _pool_targets(
        self,
        pools: Sequence[tuple[_Corpus, list[ArgumentDoc]]],
        references: Sequence[str],
        what: str = "training",
    ) -> tuple[list[ArgumentDoc], dict[str, dict[Dimension, float]]]:
        docs: list[ArgumentDoc] = []
        targets: dict[str, dict[Dimension, float]] = {}
        for corpus, pool in pools:
            docs.extend(pool)
            targets.update(_targets_for(pool, corpus, references))
        if not docs:
            raise ExperimentError(f"{what} pool is empty")
        return docs, targets

    # ---- family execution --------------------------------------------------

    def run(self) -> list[EvalRow]:
        spec = self.spec
        if spec.scope.get("type") == "stilt" and spec.family not in NEURAL_FAMILIES:
            raise ExperimentError("encoder transfer needs a neural family")
        train_pools, dev_pools, test_keys = self._pools()
        train_docs, train_targets = self._pool_targets(train_pools, spec.train_reference)
        dev_docs, dev_targets = self._pool_targets(dev_pools, spec.train_reference, what="dev")

        if spec.family == "arg_length":
            predict = self._run_arg_length()
        elif spec.family in SVR_FAMILIES:
            predict = self._run_svr(train_docs, train_targets, dev_docs, dev_targets)
        else:
            predict = self._run_neural(train_docs, train_targets, dev_docs, dev_targets)

        rows: list[EvalRow] = []
        predictions_dump: list[tuple[str, str, str, float]] = []
        for key in test_keys:
            corpus = self._corpus(key)
            test_docs = corpus.docs_in(Split.TEST)
            if not test_docs:
                raise ExperimentError(f"corpus {key!r} has no test documents")
            preds = predict(test_docs)
            references = {
                ref: corpus.scores[ref]
                for ref in (self.spec.eval_references or sorted(corpus.scores))
                if ref in corpus.scores
            }
            if not references:
                raise ExperimentError(f"corpus {key!r} has no reference tables to evaluate against")
            rows.extend(evaluate(preds, references, domain=key))
            for doc_id in sorted(preds):
                for dim in ALL_DIMENSIONS:
                    if dim in preds[doc_id]:
                        predictions_dump.append((doc_id, key, dim.value, preds[doc_id][dim]))

        self._write_artifacts(rows, predictions_dump)
        return rows

    def _run_arg_length(self):
        self.grid_results["arg_length"] = GridSearchResult(
            best_params={}, best_score=None, cells=[GridCell(params={})]
        )

        def predict(docs: Sequence[ArgumentDoc]) -> dict[str, dict[Dimension, float]]:
            return {
                doc.id: {dim: float(char_length(doc)) for dim in ALL_DIMENSIONS} for doc in docs
            }

        return predict

    # SVR-family helpers

    def _svr_vectors(self, train_docs, train_y: dict[Dimension, list[float]]):
        """Per-dimension featurizer factories returning (fit_transform, transform)."""
        spec = self.spec
        family = spec.family
        if family == "svr_embd":
            if self.embedding_table is None:
                raise ExperimentError("svr_embd needs an embeddings file")
            table = self.embedding_table

            def transform_embd(docs):
                return np.stack([embed_average(tokenize(d.text), table)[0] for d in docs])

            X_train = transform_embd(train_docs)
            return lambda dim: (X_train, transform_embd)
        if family == "svr_tfidf":
            ngram_range = tuple(spec.features.get("ngram_range", (1, 1)))
            min_df = int(spec.features.get("min_df", 1))
            vocab = fit_tfidf([tokenize(d.text) for d in train_docs], ngram_range, min_df)

            def transform_tfidf_docs(docs):
                return [transform_tfidf(vocab, tokenize(d.text)) for d in docs]

            X_train = transform_tfidf_docs(train_docs)
            return lambda dim: (X_train, transform_tfidf_docs)
        # wachsmuth_cfs: feature selection depends on the dimension's targets
        ngram_range = tuple(spec.features.get("ngram_range", (1, 3)))
        min_df = int(spec.features.get("min_df", 1))
        top_k = int(spec.features.get("top_k", 500))

        def make(dim: Dimension):
            featurizer = WachsmuthFeaturizer(ngram_range, min_df, top_k)
            featurizer.fit(train_docs, train_y[dim])
            return featurizer.transform(train_docs), featurizer.transform

        return make

    def _run_svr(self, train_docs, train_targets, dev_docs, dev_targets):
        spec = self.spec
        grid = spec.grids or SVR_DEFAULT_GRID
        kernel = spec.svr.get("kernel", "rbf")
        gamma = spec.svr.get("gamma")
        tol = float(spec.svr.get("tol", 1e-3))
        max_iter = int(spec.svr.get("max_iter", 100_000))

        def column(targets, docs, dim):
            out = []
            for doc in docs:
                if dim not in targets[doc.id]:
                    raise ExperimentError(f"doc {doc.id!r} lacks a {dim.value} training score")
                out.append(targets[doc.id][dim])
            return out

        train_y = {dim: column(train_targets, train_docs, dim) for dim in ALL_DIMENSIONS}
        dev_y = {dim: column(dev_targets, dev_docs, dim) for dim in ALL_DIMENSIONS}
        make = self._svr_vectors(train_docs, train_y)

        models: dict[Dimension, object] = {}
        transforms: dict[Dimension, Callable] = {}
        for dim in ALL_DIMENSIONS:
            X_train, transform = make(dim)
            X_dev = transform(dev_docs)

            def cell(params, _X=X_train, _y=train_y[dim], _Xd=X_dev, _yd=dev_y[dim]):
                model = svr_fit(
                    _X, _y, c=params["c"], epsilon=params["epsilon"],
                    kernel=kernel, gamma=gamma, tol=tol, max_iter=max_iter,
                )
                return pearson(predict_many(model, _Xd), _yd) if len(_yd) >= 2 else None

            result = grid_search(grid, cell)
            self.grid_results[f"{spec.family}.{dim.value}"] = result
            model = svr_fit(
                X_train, train_y[dim],
                c=result.best_params["c"], epsilon=result.best_params["epsilon"],
                kernel=kernel, gamma=gamma, tol=tol, max_iter=max_iter,
            )
            models[dim] = model
            transforms[dim] = transform
            save_model(model, self.out_dir / f"model_{dim.value}.json")

        def predict(docs: Sequence[ArgumentDoc]) -> dict[str, dict[Dimension, float]]:
            out: dict[str, dict[Dimension, float]] = {doc.id: {} for doc in docs}
            for dim in ALL_DIMENSIONS:
                values = predict_many(models[dim], transforms[dim](docs))
                if self.spec.clamp is not None:
                    values = np.clip(values, *self.spec.clamp)
                for doc, value in zip(docs, values):
                    out[doc.id][dim] = float(value)
            return out

        return predict

    # Neural-family helpers

    def _base_encoder(self):
        spec = self.spec
        encoder_spec = dict(spec.encoder or {})
        kind = encoder_spec.get("type")
        if kind is None:
            kind = "mean_embedding" if self.embedding_table is not None else "precomputed"
        if kind == "mean_embedding":
            if self.embedding_table is None:
                raise ExperimentError("mean_embedding encoder needs an embeddings file")
            base = MeanEmbeddingEncoder(self.embedding_table)
        elif kind == "precomputed":
            if self.representations is None:
                raise ExperimentError("precomputed encoder needs a representations file")
            base = PrecomputedEncoder(self.representations)
        elif kind == "projection":
            inner = dict(encoder_spec.get("base", {}))
            inner_kind = inner.get("type", "mean_embedding" if self.embedding_table else "precomputed")
            if inner_kind == "mean_embedding":
                if self.embedding_table is None:
                    raise ExperimentError("projection base needs an embeddings file")
                core = MeanEmbeddingEncoder(self.embedding_table)
            else:
                if self.representations is None:
                    raise ExperimentError("projection base needs a representations file")
                core = PrecomputedEncoder(self.representations)
            hidden_dim = int(encoder_spec.get("hidden_dim", core.input_dim))
            return ProjectionEncoder(core, hidden_dim, seed=int(encoder_spec.get("seed", spec.seed)))
        else:
            raise ExperimentError(f"unknown encoder type {kind!r}")
        return base

    def _train_config(self, params: dict) -> TrainConfig:
        overrides = dict(self.spec.train_config)
        overrides.update(
            learning_rate=float(params["learning_rate"]), epochs=int(params["epochs"])
        )
        overrides.setdefault("seed", self.spec.seed)
        return TrainConfig(**overrides)

    def _dev_pearson(self, model, dev_data, dim: Dimension) -> float | None:
        if len(dev_data) < 2:
            return None
        preds = forward_batch(model, model.encoder.encode(dev_data.X))
        return pearson(preds[dim], dev_data.targets[dim])

    def _run_neural(self, train_docs, train_targets, dev_docs, dev_targets):
        spec = self.spec
        grid = spec.grids or spec.train_config.get("grid") or NEURAL_DEFAULT_GRID
        variant = {
            "neural_st": VARIANT_ST,
            "neural_mt_flat": VARIANT_FLAT,
            "neural_mt_hier": VARIANT_HIER,
        }[spec.family]

        source_model = None
        if spec.scope.get("type") == "stilt":
            source_model = self._train_stilt_source(grid)

        encoder = source_model.encoder.copy() if source_model is not None else self._base_encoder()

        models: dict[Dimension, object] = {}
        if variant == VARIANT_ST:
            dims_to_train = list(ALL_DIMENSIONS)
        else:
            dims_to_train = [Dimension.OVERALL]

        for dim in dims_to_train:
            needed = [dim] if variant == VARIANT_ST else list(ALL_DIMENSIONS)
            train_data = build_training_data(train_docs, encoder, train_targets, needed)
            dev_data = build_training_data(dev_docs, encoder, dev_targets, needed)

            def cell(params, _dim=dim, _train=train_data, _dev=dev_data):
                config = self._train_config(params)
                if source_model is not None:
                    model, _ = stilt_transfer(
                        source_model, _train, _dev, config, variant=variant,
                        st_dimension=_dim if variant == VARIANT_ST else None,
                    )
                else:
                    fresh = new_model(
                        encoder, variant, st_dimension=_dim if variant == VARIANT_ST else None
                    )
                    model, _ = train(fresh, _train, _dev, config)
                select_dim = _dim if variant == VARIANT_ST else Dimension.OVERALL
                return self._dev_pearson(model, _dev, select_dim)

            label = spec.family if variant != VARIANT_ST else f"{spec.family}.{dim.value}"
            result = grid_search(grid, cell)
            self.grid_results[label] = result
            config = self._train_config(result.best_params)
            if source_model is not None:
                model, history = stilt_transfer(
                    source_model, train_data, dev_data, config, variant=variant,
                    st_dimension=dim if variant == VARIANT_ST else None,
                )
            else:
                fresh = new_model(
                    encoder, variant, st_dimension=dim if variant == VARIANT_ST else None
                )
                model, history = train(fresh, train_data, dev_data, config)
            self.histories[label] = history
            models[dim] = model
            suffix = f"_{dim.value}" if variant == VARIANT_ST else ""
            save_checkpoint(
                model, self.out_dir / f"model{suffix}.json",
                train_config={**result.best_params, "seed": config.seed},
            )

        def predict(docs: Sequence[ArgumentDoc]) -> dict[str, dict[Dimension, float]]:
            out: dict[str, dict[Dimension, float]] = {doc.id: {} for doc in docs}
            for dim, model in models.items():
                preds = predict_all(model, docs, clamp=self.spec.clamp)
                for doc_id, dims in preds.items():
                    out[doc_id].update(dims)
            return out

        return predict

    def _train_stilt_source(self, grid):
        """Phase one of encoder transfer: a single-task model on the source."""
        spec = self.spec
        source = self._corpus(spec.scope["source"])
        references = spec.source_train_reference or spec.train_reference
        source_train = source.docs_in(Split.TRAIN)
        source_dev = source.docs_in(Split.DEV)
        train_targets = _targets_for(source_train, source, references)
        dev_targets = _targets_for(source_dev, source, references)
        encoder = self._base_encoder()
        if not encoder.trainable:
            raise ExperimentError(
                "encoder transfer needs a trainable encoder (use a projection encoder)"
            )
        train_data = build_training_data(source_train, encoder, train_targets, [Dimension.OVERALL])
        dev_data = build_training_data(source_dev, encoder, dev_targets, [Dimension.OVERALL])

        def cell(params):
            config = self._train_config(params)
            fresh = new_model(encoder, VARIANT_ST, st_dimension=Dimension.OVERALL)
            model, _ = train(fresh, train_data, dev_data, config)
            return self._dev_pearson(model, dev_data, Dimension.OVERALL)

        result = grid_search(grid, cell)
        self.grid_results[f"{spec.family}.source"] = result
        config = self._train_config(result.best_params)
        fresh = new_model(encoder, VARIANT_ST, st_dimension=Dimension.OVERALL)
        model, history = train(fresh, train_data, dev_data, config)
        self.histories[f"{spec.family}.source"] = history
        save_checkpoint(model, self.out_dir / "model_source.json")
        return model

    # ---- artifacts ----------------------------------------------------------

    def _write_artifacts(self, rows: list[EvalRow], predictions: list[tuple]) -> None:
        write_eval_rows(rows, self.out_dir / "eval_results.tsv")
        grid_keys: list[str] = []
        for result in self.grid_results.values():
            for cell in result.cells:
                for key in cell.params:
                    if key not in grid_keys:
                        grid_keys.append(key)
        write_grid_table(self.grid_results, grid_keys, self.out_dir / "grid_table.tsv")
        with open(self.out_dir / "predictions.tsv", "w", encoding="utf-8") as fh:
            fh.write("doc_id\tdomain\tdimension\tprediction\n")
            for doc_id, domain, dim, value in predictions:
                fh.write(f"{doc_id}\t{domain}\t{dim}\t{value!r}\n")
        for label, history in self.histories.items():
            safe = label.replace(".", "_")
            write_history_csv(history, self.out_dir / f"history_{safe}.csv")
        manifest = {
            "format_version": 1,
            "spec": _spec_to_dict(self.spec),
            "seed": self.spec.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "versions": {"argquality": __version__, "numpy": np.__version__},
        }
        with open(self.out_dir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)


def _spec_to_dict(spec: ExperimentSpec) -> dict:
    out = {}
    for key in spec.__dataclass_fields__:
        value = getattr(spec, key)
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def run_experiment(spec: ExperimentSpec | dict | str | Path, out_dir: str | Path) -> list[EvalRow]:
    """Execute one experiment spec and write all artifacts under ``out_dir``."""
    if isinstance(spec, (str, Path)):
        spec = ExperimentSpec.load(spec)
    elif isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    return _Runner(spec, out_dir).run()
