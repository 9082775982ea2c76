import json

import pytest

from argquality.cli import dispatch

import synth


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


@pytest.fixture()
def corpus_files(tmp_path):
    docs = []
    for i in range(6):
        docs.append({"id": f"d{i}", "text": " ".join(["word"] * (70 + i)), "domain": "cqa"})
    corpus = tmp_path / "corpus.jsonl"
    write_jsonl(corpus, docs)

    annotations = []
    for i in range(6):
        raters = [("e1", "expert"), ("c1", "crowd"), ("c2", "crowd")]
        if i >= 2:
            raters = raters[1:]  # only d0, d1 are dual-annotated
        for rater, group in raters:
            annotations.append({
                "doc_id": f"d{i}", "annotator_id": rater, "group": group,
                "scores": {"cogency": 3, "effectiveness": 4,
                           "reasonableness": 2 + (i % 3), "overall": 3 + (i % 2)},
            })
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, annotations)
    return corpus, ann


def test_ingest_writes_expected_files(tmp_path, corpus_files):
    corpus, ann = corpus_files
    out = tmp_path / "out"
    rc = dispatch([
        "ingest", "--corpus", str(corpus), "--annotations", str(ann),
        "--seed", "0", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "corpus.jsonl").exists()
    assert (out / "validation.txt").read_text() == "ok\n"
    splits = dict(
        line.split("\t") for line in (out / "splits.tsv").read_text().splitlines()
    )
    assert splits["d0"] == "test" and splits["d1"] == "test"


def test_ingest_expected_counts_mismatch_fails(tmp_path, corpus_files):
    corpus, ann = corpus_files
    rc = dispatch([
        "ingest", "--corpus", str(corpus), "--annotations", str(ann),
        "--expected-counts", "99,0,0", "--out", str(tmp_path / "out"),
    ])
    assert rc == 1


def test_aggregate_mean_fixture(tmp_path):
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, [
        {"doc_id": "d1", "annotator_id": a, "group": "crowd", "scores": {"overall": v}}
        for a, v in (("a1", 3), ("a2", 4), ("a3", 5))
    ])
    out = tmp_path / "scores.tsv"
    rc = dispatch([
        "aggregate", "--annotations", str(ann), "--method", "mean",
        "--group", "crowd", "--out", str(out),
    ])
    assert rc == 0
    line = [l for l in out.read_text().splitlines() if l.startswith("d1")][0]
    assert line.split("\t")[5] == "4.0"


def test_aggregate_mean_requires_group(tmp_path):
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, [{"doc_id": "d", "annotator_id": "a", "scores": {"overall": 3}}])
    assert dispatch(["aggregate", "--annotations", str(ann), "--method", "mean"]) == 1


def test_aggregate_json_format(tmp_path, capsys):
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, [
        {"doc_id": "d1", "annotator_id": "a", "scores": {"overall": 1}, "group": "crowd"},
        {"doc_id": "d1", "annotator_id": "b", "scores": {"overall": 0}, "group": "crowd"},
    ])
    rc = dispatch([
        "aggregate", "--annotations", str(ann), "--method", "wa",
        "--scale", "binary", "--format", "json",
    ])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload[0]["overall"] == 0.5


def test_iaa_blocking_threshold(tmp_path):
    import numpy as np

    rng = np.random.default_rng(0)
    records = []
    for i in range(400):
        truth = int(rng.integers(1, 6))
        for annotator in ("s1", "s2"):
            noisy = int(np.clip(truth + rng.integers(-1, 2), 1, 5))
            records.append({
                "doc_id": f"d{i}", "annotator_id": annotator, "group": "crowd",
                "scores": {"overall": noisy},
            })
        records.append({
            "doc_id": f"d{i}", "annotator_id": "rand", "group": "crowd",
            "scores": {"overall": int(rng.integers(1, 6))},
        })
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, records)
    out = tmp_path / "iaa.tsv"
    rc = dispatch([
        "iaa", "--annotations", str(ann), "--threshold", "0.1", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    rand_line = [l for l in lines if l.startswith("rand")][0]
    assert rand_line.endswith("yes")
    s1_line = [l for l in lines if l.startswith("s1")][0]
    assert s1_line.endswith("no")


def test_features_embed_and_tfidf(tmp_path):
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, [
        {"id": "a", "text": "zorp w1 w2", "domain": "external"},
        {"id": "b", "text": "w1 w1 w3", "domain": "external"},
    ])
    emb = tmp_path / "emb.vec"
    synth.write_embeddings_file(emb)
    out = tmp_path / "feat"
    rc = dispatch([
        "features", "--corpus", str(corpus), "--kind", "embed",
        "--embeddings", str(emb), "--out", str(out),
    ])
    assert rc == 0
    lines = (out / "representations.jsonl").read_text().splitlines()
    assert len(lines) == 2

    rc = dispatch([
        "features", "--corpus", str(corpus), "--kind", "tfidf",
        "--ngram-lo", "1", "--ngram-hi", "2", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "vocab.json").exists()
    assert (out / "vectors.jsonl").exists()


def _scores_file(tmp_path, ids, source="mix"):
    path = tmp_path / "scores.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for i, doc_id in enumerate(ids):
            value = repr(1.0 + (i % 5))
            fh.write("\t".join([doc_id, source, value, value, value, value]) + "\n")
    return path


def test_train_predict_evaluate_svr_round_trip(tmp_path):
    docs, scores, splits = synth.make_domain("x", 40, seed=77)
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, docs)
    split_file = tmp_path / "splits.tsv"
    split_file.write_text("".join(f"{k}\t{v}\n" for k, v in splits.items()), encoding="utf-8")
    scores_file = tmp_path / "scores.tsv"
    with open(scores_file, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for doc_id in sorted(scores):
            cells = [doc_id, "mix"] + [repr(scores[doc_id][d]) for d in list(scores[doc_id])]
            fh.write("\t".join(cells) + "\n")

    out = tmp_path / "model"
    rc = dispatch([
        "train", "--family", "svr_tfidf", "--corpus", str(corpus),
        "--splits", str(split_file), "--scores", str(scores_file),
        "--dimension", "overall", "--kernel", "linear", "--c", "1.0",
        "--epsilon", "0.1", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "model.json").exists() and (out / "vocab.json").exists()

    preds = tmp_path / "preds.tsv"
    rc = dispatch([
        "predict", "--model", str(out / "model.json"), "--corpus", str(corpus),
        "--vocab", str(out / "vocab.json"), "--out", str(preds),
    ])
    assert rc == 0
    assert len(preds.read_text().splitlines()) == 41  # header + one per doc

    eval_out = tmp_path / "eval.tsv"
    rc = dispatch([
        "evaluate", "--predictions", str(preds), "--references", str(scores_file),
        "--domain", "x", "--out", str(eval_out),
    ])
    assert rc == 0
    lines = eval_out.read_text().splitlines()
    assert lines[0].startswith("domain\t")
    assert any(line.split("\t")[1] == "overall" for line in lines[1:])


def test_train_neural_and_predict(tmp_path):
    docs, scores, splits = synth.make_domain("n", 30, seed=78)
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, docs)
    split_file = tmp_path / "splits.tsv"
    split_file.write_text("".join(f"{k}\t{v}\n" for k, v in splits.items()), encoding="utf-8")
    scores_file = tmp_path / "scores.tsv"
    with open(scores_file, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for doc_id in sorted(scores):
            cells = [doc_id, "mix"] + [repr(v) for v in scores[doc_id].values()]
            fh.write("\t".join(cells) + "\n")
    emb = tmp_path / "emb.vec"
    synth.write_embeddings_file(emb)

    out = tmp_path / "model"
    rc = dispatch([
        "train", "--family", "neural_mt_flat", "--corpus", str(corpus),
        "--splits", str(split_file), "--scores", str(scores_file),
        "--embeddings", str(emb), "--learning-rate", "0.05", "--epochs", "5",
        "--seed", "1", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "model.json").exists() and (out / "history.csv").exists()

    rc = dispatch([
        "predict", "--model", str(out / "model.json"), "--corpus", str(corpus),
        "--embeddings", str(emb), "--clamp", "1,5", "--out", str(tmp_path / "p.tsv"),
    ])
    assert rc == 0
    body = (tmp_path / "p.tsv").read_text().splitlines()[1:]
    assert len(body) == 30 * 4


def test_train_predict_wachsmuth_round_trip(tmp_path):
    docs, scores, splits = synth.make_domain("w", 30, seed=80)
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, docs)
    split_file = tmp_path / "splits.tsv"
    split_file.write_text("".join(f"{k}\t{v}\n" for k, v in splits.items()), encoding="utf-8")
    scores_file = tmp_path / "scores.tsv"
    with open(scores_file, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for doc_id in sorted(scores):
            cells = [doc_id, "mix"] + [repr(v) for v in scores[doc_id].values()]
            fh.write("\t".join(cells) + "\n")
    out = tmp_path / "model"
    rc = dispatch([
        "train", "--family", "wachsmuth_cfs", "--corpus", str(corpus),
        "--splits", str(split_file), "--scores", str(scores_file),
        "--kernel", "linear", "--top-k", "20", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "wachsmuth.json").exists()
    rc = dispatch([
        "predict", "--model", str(out / "model.json"), "--corpus", str(corpus),
        "--wachsmuth", str(out / "wachsmuth.json"), "--out", str(tmp_path / "p.tsv"),
    ])
    assert rc == 0
    assert len((tmp_path / "p.tsv").read_text().splitlines()) == 31


def test_features_wachsmuth_kind(tmp_path):
    docs, scores, splits = synth.make_domain("f", 20, seed=81)
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, docs)
    scores_file = tmp_path / "scores.tsv"
    with open(scores_file, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for doc_id in sorted(scores):
            cells = [doc_id, "mix"] + [repr(v) for v in scores[doc_id].values()]
            fh.write("\t".join(cells) + "\n")
    out = tmp_path / "feat"
    rc = dispatch([
        "features", "--corpus", str(corpus), "--kind", "wachsmuth",
        "--scores", str(scores_file), "--reference", "mix",
        "--dimension", "overall", "--top-k", "15", "--out", str(out),
    ])
    assert rc == 0
    payload = json.loads((out / "wachsmuth.json").read_text())
    assert payload["kind"] == "wachsmuth_featurizer"
    assert len(payload["selected"]) <= 15


def test_train_projection_encoder_over_representations(tmp_path):
    docs, scores, splits = synth.make_domain("p", 24, seed=82)
    corpus = tmp_path / "c.jsonl"
    write_jsonl(corpus, docs)
    scores_file = tmp_path / "scores.tsv"
    with open(scores_file, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsource\tcogency\teffectiveness\treasonableness\toverall\n")
        for doc_id in sorted(scores):
            cells = [doc_id, "mix"] + [repr(v) for v in scores[doc_id].values()]
            fh.write("\t".join(cells) + "\n")
    emb = tmp_path / "emb.vec"
    synth.write_embeddings_file(emb)
    feats = tmp_path / "feats"
    assert dispatch([
        "features", "--corpus", str(corpus), "--kind", "embed",
        "--embeddings", str(emb), "--out", str(feats),
    ]) == 0
    out = tmp_path / "model"
    rc = dispatch([
        "train", "--family", "neural_st", "--corpus", str(corpus),
        "--scores", str(scores_file), "--dimension", "overall",
        "--representations", str(feats / "representations.jsonl"),
        "--encoder", "projection", "--hidden-dim", "4",
        "--learning-rate", "0.05", "--epochs", "8", "--seed", "0", "--out", str(out),
    ])
    assert rc == 0
    rc = dispatch([
        "predict", "--model", str(out / "model.json"), "--corpus", str(corpus),
        "--representations", str(feats / "representations.jsonl"),
        "--out", str(tmp_path / "p.tsv"),
    ])
    assert rc == 0
    assert len((tmp_path / "p.tsv").read_text().splitlines()) == 25


def test_experiment_subcommand(tmp_path):
    synth.write_embeddings_file(tmp_path / "emb.vec")
    docs, scores, splits = synth.make_domain("e", 60, seed=79)
    entry = synth.write_domain_files(tmp_path, "e", docs, scores, splits)
    spec = {
        "family": "arg_length",
        "scope": {"type": "in_domain", "domain": "e"},
        "corpora": {"e": entry},
        "seed": 0,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    out = tmp_path / "run"
    assert dispatch(["experiment", "--spec", str(spec_path), "--out", str(out)]) == 0
    assert (out / "eval_results.tsv").exists()


def test_experiment_missing_spec_names_path(tmp_path, capsys):
    rc = dispatch([
        "experiment", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o"),
    ])
    assert rc == 1
    assert "missing.json" in capsys.readouterr().err


def test_unknown_subcommand_exits_one():
    assert dispatch(["frobnicate"]) == 1


def test_help_exits_zero():
    assert dispatch(["--help"]) == 0
    assert dispatch(["aggregate", "--help"]) == 0


def test_config_file_fills_unset_flags(tmp_path):
    ann = tmp_path / "ann.jsonl"
    write_jsonl(ann, [
        {"doc_id": "d1", "annotator_id": a, "group": "crowd", "scores": {"overall": v}}
        for a, v in (("a1", 2), ("a2", 4))
    ])
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"method": "mean", "group": "crowd"}), encoding="utf-8")
    out = tmp_path / "scores.tsv"
    # --method comes from the flag (wins); --group comes from the config
    rc = dispatch([
        "aggregate", "--annotations", str(ann), "--method", "mean",
        "--config", str(config), "--out", str(out),
    ])
    assert rc == 0
    assert "3.0" in out.read_text()


def test_subcommands_write_only_under_out(tmp_path, monkeypatch, corpus_files):
    corpus, ann = corpus_files
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    out = tmp_path / "out"
    rc = dispatch([
        "ingest", "--corpus", str(corpus), "--annotations", str(ann),
        "--seed", "0", "--out", str(out / "ingest"),
    ])
    assert rc == 0
    rc = dispatch([
        "aggregate", "--annotations", str(ann), "--method", "mix",
        "--out", str(out / "mix.tsv"),
    ])
    assert rc == 0
    assert list(workdir.iterdir()) == []  # nothing written outside --out


def test_data_dir_resolves_relative_paths(tmp_path, monkeypatch):
    data = tmp_path / "data"
    data.mkdir()
    write_jsonl(data / "ann.jsonl", [
        {"doc_id": "d1", "annotator_id": "a", "group": "crowd", "scores": {"overall": 3}},
    ])
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("ARGQUALITY_DATA_DIR", str(data))
    out = tmp_path / "scores.tsv"
    rc = dispatch([
        "aggregate", "--annotations", "ann.jsonl", "--method", "mean",
        "--group", "crowd", "--out", str(out),
    ])
    assert rc == 0
