"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import hashlib
import itertools
import json
import time

import numpy as np
import pytest

from argquality.aggregation import (
    AnnotationRecord,
    AnnotatorGroup,
    MaceConfig,
    krippendorff_alpha,
    mace_em,
    majority_vote,
    most_probable_labels,
    per_annotator_alpha,
)
from argquality.cli import dispatch
from argquality.corpus import ALL_DIMENSIONS, SUB_DIMENSIONS, Dimension
from argquality.experiments import run_experiment
from argquality.metrics import pearson, spearman
from argquality.neural import (
    Head,
    MeanEmbeddingEncoder,
    PrecomputedEncoder,
    ProjectionEncoder,
    TrainConfig,
    TrainData,
    grad_check,
    hier_forward,
    mse_loss,
    new_model,
    stilt_transfer,
    train,
)
from argquality.neural.model import forward_batch
from argquality.svr import svr_fit, svr_predict
from test_metrics import pearson_oracle, ranks_oracle
from test_reliability import alpha_bruteforce
from test_svr import dual_qp_oracle

import synth


def _report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number:2d} {name}: {status}{suffix}")
    assert ok, f"criterion {number} ({name}) failed {suffix}"


def test_criterion_1_metric_oracles():
    start = time.monotonic()
    rng = np.random.default_rng(1001)
    ok = True
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 40))
        x = rng.normal(size=n).tolist()
        y = (0.4 * np.asarray(x) + rng.normal(size=n)).tolist()
        mine, oracle = pearson(x, y), pearson_oracle(x, y)
        if oracle is None:
            ok &= mine is None
        else:
            worst = max(worst, abs(mine - oracle))
        mine, oracle = (
            spearman(x, y),
            pearson_oracle(ranks_oracle(x), ranks_oracle(y)),
        )
        if oracle is None:
            ok &= mine is None
        else:
            worst = max(worst, abs(mine - oracle))
    for _ in range(100):
        n_items = int(rng.integers(2, 10))
        n_annot = int(rng.integers(2, 6))
        matrix = [
            [int(rng.integers(1, 6)) if rng.random() > 0.3 else None for _ in range(n_annot)]
            for _ in range(n_items)
        ]
        mine = krippendorff_alpha(matrix)
        oracle = alpha_bruteforce(matrix, lambda a, b: (a - b) ** 2)
        if oracle is None:
            ok &= mine is None
        else:
            worst = max(worst, abs(mine - oracle))
    ok &= worst < 1e-9
    # worked examples, exact
    ok &= pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)
    ok &= spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)
    ok &= krippendorff_alpha([[v, v] for v in (1, 2, 3, 4, 5)]) == pytest.approx(1.0, abs=1e-15)
    elapsed = time.monotonic() - start
    ok &= elapsed < 5.0
    _report(1, "metric-oracles", ok, f"max |err| {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_svr_optimality():
    start = time.monotonic()
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        c = float(rng.choice([0.1, 1.0, 10.0]))
        eps = float(rng.choice([0.0, 0.01, 0.1, 0.5]))
        kernel = str(rng.choice(["linear", "rbf"]))
        model = svr_fit(X, y, c=c, epsilon=eps, kernel=kernel, tol=1e-12, max_iter=10**6)
        if kernel == "linear":
            K = X @ X.T
        else:
            sq = (X * X).sum(axis=1)
            K = np.exp(-model.gamma * (sq[:, None] + sq[None, :] - 2 * X @ X.T))
        worst = max(worst, abs(model.dual_objective - dual_qp_oracle(K, y, c, eps)))
    fixture = svr_fit(
        np.array([[0.0], [1.0], [2.0]]), [0.0, 1.0, 2.0],
        c=10.0, epsilon=0.5, kernel="linear", tol=1e-10,
    )
    ok = worst < 1e-4
    ok &= abs(fixture.weights[0] - 0.5) < 1e-3
    ok &= abs(fixture.bias - 0.5) < 1e-3
    ok &= abs(svr_predict(fixture, [2.0]) - 1.5) < 2e-3
    elapsed = time.monotonic() - start
    ok &= elapsed < 30.0
    _report(2, "svr-optimality", ok, f"max dual gap {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_gradient_fidelity():
    start = time.monotonic()
    rng = np.random.default_rng(1003)
    worst = 0.0
    variants = itertools.cycle(("st", "flat", "hier"))
    for batch_index in range(20):
        variant = next(variants)
        hidden = int(rng.integers(2, 6))
        input_dim = int(rng.integers(2, 7))
        vecs = {f"v{i}": rng.normal(size=input_dim) for i in range(10)}
        encoder = ProjectionEncoder(PrecomputedEncoder(vecs), hidden, seed=batch_index)
        model = new_model(
            encoder, variant,
            st_dimension=Dimension.OVERALL if variant == "st" else None,
        )
        for head in model.heads.values():
            head.weights = rng.normal(size=head.weights.shape)
            head.bias = float(rng.normal())
        k = int(rng.integers(2, 8))
        X = rng.normal(size=(k, input_dim))
        targets = {dim: rng.normal(size=k) for dim in model.dimensions}
        worst = max(worst, grad_check(model, X, targets, fd_eps=1e-5))
    ok = worst < 1e-5
    elapsed = time.monotonic() - start
    ok &= elapsed < 10.0
    _report(3, "gradient-fidelity", ok, f"max rel err {worst:.2e}, {elapsed:.1f}s")


def test_criterion_4_loss_identities():
    rng = np.random.default_rng(1004)
    ok = True
    # flat loss == sum of per-dimension single-task losses, exactly
    for trial in range(10):
        vecs = {f"v{i}": rng.normal(size=4) for i in range(8)}
        encoder = ProjectionEncoder(PrecomputedEncoder(vecs), 3, seed=trial)
        model = new_model(encoder, "flat")
        for head in model.heads.values():
            head.weights = rng.normal(size=head.weights.shape)
            head.bias = float(rng.normal())
        X = rng.normal(size=(6, 4))
        targets = {dim: rng.normal(size=6) for dim in ALL_DIMENSIONS}
        hidden = model.encoder.encode(X)
        preds = forward_batch(model, hidden)
        total = sum(mse_loss(preds[dim], targets[dim]) for dim in ALL_DIMENSIONS)
        st_total = 0.0
        for dim in ALL_DIMENSIONS:
            st = new_model(encoder, "st", st_dimension=dim)
            st.heads[dim] = model.heads[dim]
            st_total += mse_loss(forward_batch(st, hidden)[dim], targets[dim])
        ok &= total == st_total
    # hier with zeroed sub-head weights reduces to an affine map of h
    worst = 0.0
    for _ in range(10):
        H = int(rng.integers(2, 6))
        biases = rng.normal(size=3)
        sub_heads = {
            dim: Head(dim, np.zeros(H), float(b)) for dim, b in zip(SUB_DIMENSIONS, biases)
        }
        overall = Head(Dimension.OVERALL, rng.normal(size=H + 3), float(rng.normal()))
        offset = float(overall.weights[H:] @ biases + overall.bias)
        for _ in range(5):
            h = rng.normal(size=H)
            got = hier_forward(h, sub_heads, overall)[Dimension.OVERALL]
            expected = float(h @ overall.weights[:H]) + offset
            worst = max(worst, abs(got - expected))
    ok &= worst < 1e-12
    _report(4, "loss-identities", ok, f"max affine gap {worst:.2e}")


def test_criterion_5_mace_recovery():
    start = time.monotonic()
    acc_wins = 0
    min_rho = 1.0
    monotone = True
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n_items, copiers, spammers, p_copy = 500, 8, 2, 0.9
        truth = rng.integers(0, 2, size=n_items)
        matrix = []
        for t in truth:
            row = [int(t) if rng.random() < p_copy else int(1 - t) for _ in range(copiers)]
            row += [int(rng.integers(0, 2)) for _ in range(spammers)]
            matrix.append(row)
        # True competence = realized agreement with the planted truth: the
        # nominal copy probabilities are tied (8 x 0.9), which caps Spearman
        # below the stated threshold even under perfect recovery.
        realized = [
            float(np.mean([matrix[i][j] == truth[i] for i in range(n_items)]))
            for j in range(copiers + spammers)
        ]
        result = mace_em(matrix, [0, 1], MaceConfig(restarts=10, iterations=50, seed=seed))
        inferred = most_probable_labels(result)
        mace_acc = float(np.mean([g == t for g, t in zip(inferred, truth)]))
        mv_acc = float(np.mean([majority_vote(r) == t for r, t in zip(matrix, truth)]))
        if mace_acc >= mv_acc:
            acc_wins += 1
        min_rho = min(min_rho, spearman(result.competences.tolist(), realized))
        history = result.log_likelihood_history
        monotone &= all(b >= a - 1e-9 for a, b in zip(history, history[1:]))
    ok = acc_wins >= 4 and min_rho >= 0.8 and monotone
    elapsed = time.monotonic() - start
    ok &= elapsed < 60.0
    _report(
        5, "mace-recovery", ok,
        f"acc wins {acc_wins}/5, min spearman {min_rho:.3f}, {elapsed:.1f}s",
    )


def test_criterion_6_annotator_blocking():
    blocked_count = 0
    mirror_blocked = 0
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        records = []
        for i in range(1000):
            truth = int(rng.integers(1, 6))
            structured = []
            for annotator in ("s1", "s2", "s3"):
                noisy = int(np.clip(truth + rng.integers(-1, 2), 1, 5))
                structured.append(noisy)
                records.append(
                    AnnotationRecord(f"d{i}", annotator, AnnotatorGroup.CROWD,
                                     {Dimension.OVERALL: noisy})
                )
            records.append(
                AnnotationRecord(f"d{i}", "rand", AnnotatorGroup.CROWD,
                                 {Dimension.OVERALL: int(rng.integers(1, 6))})
            )
            records.append(
                AnnotationRecord(f"d{i}", "mirror", AnnotatorGroup.CROWD,
                                 {Dimension.OVERALL: sum(structured) / 3})
            )
        report = per_annotator_alpha(records, [Dimension.OVERALL], threshold=0.1)
        if "rand" in report.blocked:
            blocked_count += 1
        if "mirror" in report.blocked:
            mirror_blocked += 1
    ok = blocked_count >= 4 and mirror_blocked == 0
    _report(
        6, "annotator-blocking", ok,
        f"random blocked {blocked_count}/5, mean-copy blocked {mirror_blocked}/5",
    )


def _planted_corpora(tmp, base_seed):
    # 200 docs per domain with a small train share: the all-domains benefit
    # the criterion asserts is a data-limited effect, so the in-domain
    # estimate must not already be saturated.
    fillers = {
        "alpha": synth.FILLERS[:10],
        "beta": synth.FILLERS[5:15],
        "gamma": synth.FILLERS[10:20],
    }
    corpora = {}
    for j, (key, subset) in enumerate(fillers.items()):
        docs, scores, splits = synth.make_domain(
            key, 200, seed=base_seed + j, fillers=subset,
            train_fraction=0.25, dev_fraction=0.15,
        )
        corpora[key] = synth.write_domain_files(tmp, key, docs, scores, splits)
    return corpora


def test_criterion_7_end_to_end_planted_signal(tmp_path):
    start = time.monotonic()
    synth.write_embeddings_file(tmp_path / "emb.vec")
    domains = ("alpha", "beta", "gamma")
    in_domain: dict[str, list[float]] = {d: [] for d in domains}
    all_domain: dict[str, list[float]] = {d: [] for d in domains}
    for seed in range(3):
        tmp = tmp_path / f"seed{seed}"
        tmp.mkdir()
        corpora = _planted_corpora(tmp, base_seed=500 + 10 * seed)
        base_spec = {
            "family": "neural_mt_flat",
            "corpora": corpora,
            "embeddings": str(tmp_path / "emb.vec"),
            "encoder": {"type": "mean_embedding"},
            "grids": {"learning_rate": [0.05], "epochs": [60]},
            "train_config": {"batch_size": 16},
            "seed": seed,
        }
        for domain in domains:
            spec = dict(base_spec, scope={"type": "in_domain", "domain": domain})
            rows = run_experiment(spec, tmp / f"in_{domain}")
            r = next(
                row.pearson_r for row in rows if row.dimension is Dimension.OVERALL
            )
            in_domain[domain].append(r)
        rows = run_experiment(
            dict(base_spec, scope={"type": "all_domains"}), tmp / "all"
        )
        for row in rows:
            if row.dimension is Dimension.OVERALL:
                all_domain[row.domain].append(row.pearson_r)

    medians_in = {d: float(np.median(in_domain[d])) for d in domains}
    medians_all = {d: float(np.median(all_domain[d])) for d in domains}
    ok = all(medians_in[d] >= 0.5 for d in domains)
    improved = sum(1 for d in domains if medians_all[d] >= medians_in[d])
    ok &= improved >= 2
    elapsed = time.monotonic() - start
    ok &= elapsed < 120.0
    detail = ", ".join(
        f"{d}: in {medians_in[d]:.2f} all {medians_all[d]:.2f}" for d in domains
    )
    _report(7, "planted-signal-end-to-end", ok, f"{detail}; {elapsed:.1f}s")


def test_criterion_8_stilt_beats_scratch():
    start = time.monotonic()
    table = synth.embedding_table()
    stilt_scores, scratch_scores = [], []
    for seed in range(5):
        source = synth.make_train_data("s", 300, seed=1000 + seed)
        target_train = synth.make_train_data("t", 50, seed=2000 + seed)
        target_dev = synth.make_train_data("u", 30, seed=3000 + seed)

        encoder = ProjectionEncoder(MeanEmbeddingEncoder(table), hidden_dim=4, seed=seed)
        source_model = new_model(encoder, "st", st_dimension=Dimension.OVERALL)
        source_model, _ = train(
            source_model,
            TrainData(source.ids, source.X,
                      {Dimension.OVERALL: source.targets[Dimension.OVERALL]}),
            None,
            TrainConfig(learning_rate=0.05, epochs=60, batch_size=16, seed=seed),
        )
        config = TrainConfig(learning_rate=0.02, epochs=15, batch_size=16, seed=seed)
        transferred, _ = stilt_transfer(source_model, target_train, target_dev, config)
        scratch = new_model(
            ProjectionEncoder(MeanEmbeddingEncoder(table), 4, seed=seed), "flat"
        )
        scratch, _ = train(scratch, target_train, target_dev, config)

        def dev_pearson(model):
            preds = forward_batch(model, model.encoder.encode(target_dev.X))
            return pearson(preds[Dimension.OVERALL], target_dev.targets[Dimension.OVERALL])

        stilt_scores.append(dev_pearson(transferred))
        scratch_scores.append(dev_pearson(scratch))
    stilt_median = float(np.median(stilt_scores))
    scratch_median = float(np.median(scratch_scores))
    ok = stilt_median >= scratch_median
    elapsed = time.monotonic() - start
    ok &= elapsed < 120.0
    _report(
        8, "stilt-transfer", ok,
        f"median stilt {stilt_median:.3f} vs scratch {scratch_median:.3f}; {elapsed:.1f}s",
    )


def _grid_cells(grid_table_path, model_prefix, keys):
    cells = []
    lines = grid_table_path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    for line in lines[1:]:
        row = dict(zip(header, line.split("\t")))
        if row["model"].startswith(model_prefix):
            cells.append(tuple(float(row[key]) for key in keys))
    return cells


def test_criterion_9_grid_fidelity(tmp_path):
    synth.write_embeddings_file(tmp_path / "emb.vec")
    docs, scores, splits = synth.make_domain("g", 60, seed=900)
    corpora = {"g": synth.write_domain_files(tmp_path, "g", docs, scores, splits)}

    spec = {
        "family": "svr_tfidf",
        "scope": {"type": "in_domain", "domain": "g"},
        "corpora": corpora,
        "svr": {"kernel": "linear"},
        "seed": 0,
    }
    run_experiment(spec, tmp_path / "svr_run")
    svr_cells = _grid_cells(tmp_path / "svr_run" / "grid_table.tsv",
                            "svr_tfidf.overall", ("c", "epsilon"))
    expected_svr = list(itertools.product((0.001, 0.01, 0.1, 1.0, 10.0),
                                          (0.001, 0.01, 0.1, 1.0)))
    ok = svr_cells == expected_svr and len(svr_cells) == 20

    spec = {
        "family": "neural_mt_flat",
        "scope": {"type": "in_domain", "domain": "g"},
        "corpora": corpora,
        "embeddings": str(tmp_path / "emb.vec"),
        "encoder": {"type": "mean_embedding"},
        "seed": 0,
    }
    run_experiment(spec, tmp_path / "neural_run")
    neural_cells = _grid_cells(tmp_path / "neural_run" / "grid_table.tsv",
                               "neural_mt_flat", ("learning_rate", "epochs"))
    expected_neural = list(itertools.product((2e-5, 3e-5), (3.0, 4.0)))
    ok &= neural_cells == expected_neural and len(neural_cells) == 4
    _report(
        9, "grid-fidelity", ok,
        f"svr cells {len(svr_cells)}, neural cells {len(neural_cells)}",
    )


def _hash_tree(root):
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_criterion_10_cli_determinism(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    synth.write_embeddings_file(data / "emb.vec")
    docs, scores, splits = synth.make_domain("c", 40, seed=910)
    entry = synth.write_domain_files(data, "c", docs, scores, splits)

    annotations = []
    rng = np.random.default_rng(911)
    for i in range(30):
        for annotator, group in (("e1", "expert"), ("c1", "crowd"), ("c2", "crowd")):
            annotations.append({
                "doc_id": f"c{i:03d}", "annotator_id": annotator, "group": group,
                "scores": {dim.value: int(rng.integers(1, 6)) for dim in ALL_DIMENSIONS},
            })
    ann = data / "ann.jsonl"
    ann.write_text("\n".join(json.dumps(a) for a in annotations) + "\n", encoding="utf-8")

    binary = []
    for i in range(25):
        for j in range(5):
            binary.append({
                "doc_id": f"b{i}", "annotator_id": f"a{j}", "group": "crowd",
                "scores": {"overall": int(rng.integers(0, 2))},
            })
    bin_ann = data / "binary.jsonl"
    bin_ann.write_text("\n".join(json.dumps(a) for a in binary) + "\n", encoding="utf-8")

    spec = {
        "family": "arg_length",
        "scope": {"type": "in_domain", "domain": "c"},
        "corpora": {"c": entry},
        "seed": 0,
    }
    spec_path = data / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")

    def invocations(out):
        model_dir = out / "train"
        return [
            ["ingest", "--corpus", entry["docs"], "--annotations", str(ann),
             "--no-length-filter", "--seed", "3", "--out", str(out / "ingest")],
            ["aggregate", "--annotations", str(ann), "--method", "mean",
             "--group", "crowd", "--out", str(out / "crowd.tsv")],
            ["aggregate", "--annotations", str(ann), "--method", "mix",
             "--out", str(out / "mix.tsv")],
            ["aggregate", "--annotations", str(bin_ann), "--method", "mace",
             "--scale", "binary", "--seed", "5", "--restarts", "3",
             "--iterations", "20", "--out", str(out / "mace.tsv")],
            ["aggregate", "--annotations", str(bin_ann), "--method", "wa",
             "--scale", "binary", "--out", str(out / "wa.tsv")],
            ["aggregate", "--annotations", str(bin_ann), "--method", "majority",
             "--scale", "binary", "--out", str(out / "majority.tsv")],
            ["iaa", "--annotations", str(ann), "--threshold", "0.1",
             "--out", str(out / "iaa.tsv")],
            ["features", "--corpus", entry["docs"], "--kind", "embed",
             "--embeddings", str(data / "emb.vec"), "--out", str(out / "features")],
            ["train", "--family", "svr_tfidf", "--corpus", entry["docs"],
             "--splits", entry["splits"], "--scores", entry["scores"],
             "--kernel", "linear", "--c", "1.0", "--epsilon", "0.1",
             "--seed", "2", "--out", str(model_dir)],
            ["predict", "--model", str(model_dir / "model.json"),
             "--corpus", entry["docs"], "--vocab", str(model_dir / "vocab.json"),
             "--out", str(out / "preds.tsv")],
            ["evaluate", "--predictions", str(out / "preds.tsv"),
             "--references", entry["scores"], "--domain", "c",
             "--out", str(out / "eval.tsv")],
            ["experiment", "--spec", str(spec_path), "--out", str(out / "exp")],
        ]

    hashes = []
    for run in ("one", "two"):
        out = tmp_path / run
        out.mkdir()
        for argv in invocations(out):
            rc = dispatch(argv)
            assert rc == 0, f"{argv[0]} exited {rc}"
        hashes.append(_hash_tree(out))
    ok = hashes[0] == hashes[1] and len(hashes[0]) > 10
    _report(10, "cli-determinism", ok, f"{len(hashes[0])} files compared")
