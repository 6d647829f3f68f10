"""Acceptance suite: one test per release criterion, printed pass by pass.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Thresholds and tolerances are fixed here, not configurable.
"""

import json
import math
import random
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from breakwatch.detector import (
    baseline_count,
    baseline_ratio,
    element_count_changes,
    run_pipeline,
)
from breakwatch.features import FEATURE_NAMES
from breakwatch.fixtures import build_triple
from breakwatch.forum import classify_filter_rule, extract_issue_url, parse_issue_export
from breakwatch.labeling import label_subtree
from breakwatch.learn import (
    Dataset,
    Hyperparams,
    ModelKind,
    cross_validate,
    loco_importance,
    resample,
    roc_auc,
    train_ensemble,
)
from breakwatch.saliency import (
    SALIENCY_FEATURE_NAMES,
    extract_block_features,
    score_block,
    train_saliency_model,
)
from breakwatch.segmentation import leaf_blocks, segment_page
from breakwatch.treediff import diff_trees

from .conftest import build_snapshot, make_node
from .oracles import (
    bruteforce_diff_kinds,
    check_conservation,
    diffresult_kinds,
    pairwise_auc,
)
from .test_saliency import block_of, synthetic_blocks
from .treegen import random_pair


def ok(message: str) -> None:
    print(f"ACCEPTANCE PASS: {message}")


def test_treediff_matches_bruteforce_oracle():
    rng = random.Random(2024)
    start = time.perf_counter()
    for _ in range(500):
        snap_a, snap_b = random_pair(rng, max_nodes=30)
        fast = diffresult_kinds(diff_trees(snap_a, snap_b), snap_a, snap_b)
        slow = bruteforce_diff_kinds(snap_a, snap_b)
        assert fast == slow
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    ok(
        "tree diff agrees with the exhaustive matcher on 500 random pairs "
        f"(100%, {elapsed:.1f}s)"
    )


def test_node_conservation_on_ten_thousand_fuzzed_pairs():
    rng = random.Random(77)
    for _ in range(10_000):
        snap_a, snap_b = random_pair(rng, max_nodes=14)
        check_conservation(diff_trees(snap_a, snap_b), snap_a, snap_b)
    ok("node conservation held on 10,000 fuzzed snapshot pairs (0 violations)")


def test_labeling_truth_table_all_cells():
    from .test_labeling import TRUTH_TABLE

    assert len(TRUTH_TABLE) == 18
    for (kind, transition, also), expected in TRUTH_TABLE.items():
        assert label_subtree(kind, transition, also) is expected
    ok("labeling decision table matches on all 18 kind/transition/cross-check cells")


def test_roc_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(31337)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(4, 60))
        if i % 2 == 0:
            scores = rng.integers(0, 4, size=n) / 3.0  # heavy ties
        else:
            scores = rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        worst = max(worst, abs(roc_auc(scores, labels) - pairwise_auc(scores, labels)))
    assert worst <= 1e-9
    ok(f"rank AUC equals the pairwise oracle on 200 instances (max gap {worst:.2e})")


def test_smote_synthetics_on_neighbor_segments():
    rng = np.random.default_rng(404)
    checked = 0
    for _ in range(100):
        n_min = int(rng.integers(6, 16))
        n_maj = n_min + int(rng.integers(4, 25))
        k = int(rng.integers(1, min(5, n_min)))
        dims = int(rng.integers(2, 5))
        X_min = rng.normal(0, 1, (n_min, dims))
        X_maj = rng.normal(5, 1, (n_maj, dims))
        d = Dataset(
            X=np.vstack([X_maj, X_min]),
            y=np.array([0] * n_maj + [1] * n_min),
            feature_names=tuple(f"f{i}" for i in range(dims)),
            class_names=("maj", "min"),
        )
        out = resample(d, "smote", k_neighbors=k, rng_seed=int(rng.integers(1 << 30)))
        for s in out.X[len(d.X):]:
            found = False
            for i in range(n_min):
                base = X_min[i]
                dist = np.linalg.norm(X_min - base, axis=1)
                dist[i] = np.inf
                for nb in X_min[np.argsort(dist, kind="stable")[:k]]:
                    seg = nb - base
                    denom = float(seg @ seg)
                    if denom == 0.0:
                        found = found or bool(np.allclose(s, base, atol=1e-9))
                        continue
                    lam = float((s - base) @ seg) / denom
                    if -1e-9 <= lam <= 1 + 1e-9 and np.allclose(base + lam * seg, s, atol=1e-9):
                        found = True
                        break
                if found:
                    break
            assert found, "synthetic sample not on any neighbor segment"
            checked += 1
    ok(f"all {checked} synthetic minority samples lie on neighbor segments (100 datasets)")


def _three_class_blobs(seed: int, n: int) -> Dataset:
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0, 0.0], [7.0, 0.0, 1.0], [0.0, 7.0, -1.0]])
    y = rng.integers(0, 3, size=n)
    X = centers[y] + rng.normal(0, 0.5, size=(n, 3))
    return Dataset(
        X=X, y=y, feature_names=("a", "b", "c"), class_names=("c0", "c1", "c2")
    )


def _gbt_trainer(seed: int = 0):
    hp = Hyperparams(n_trees=25, max_depth=3, learning_rate=0.3, max_features=None)

    def trainer(d: Dataset):
        return train_ensemble(d, ModelKind.GRADIENT_BOOSTED, hp, rng_seed=seed)

    return trainer


def test_ensemble_sanity_on_synthetic_classes():
    d = _three_class_blobs(99, 2_000)
    report = cross_validate(d, 5, _gbt_trainer(seed=3), seed=11)
    assert report.mean_auc >= 0.95

    rng = np.random.default_rng(5)
    shuffled = Dataset(
        X=d.X,
        y=rng.permutation(d.y),
        feature_names=d.feature_names,
        class_names=d.class_names,
    )
    null_report = cross_validate(shuffled, 5, _gbt_trainer(seed=3), seed=11)
    assert 0.4 <= null_report.mean_auc <= 0.6

    again = cross_validate(d, 5, _gbt_trainer(seed=3), seed=11)
    assert report.auc == again.auc
    m1 = _gbt_trainer(seed=3)(d)
    m2 = _gbt_trainer(seed=3)(d)
    assert np.array_equal(m1.predict_proba(d.X), m2.predict_proba(d.X))
    ok(
        f"ensemble: separable AUC {report.mean_auc:.3f} >= 0.95, shuffled "
        f"{null_report.mean_auc:.3f} in [0.4, 0.6], deterministic reruns"
    )


def test_loco_separates_signal_from_noise():
    rng = np.random.default_rng(2023)
    n = 500
    y = rng.integers(0, 2, size=n)
    X = np.column_stack([y.astype(float), rng.normal(size=(n, 4))])
    d = Dataset(
        X=X,
        y=y,
        feature_names=("label_copy", "noise1", "noise2", "noise3", "noise4"),
        class_names=("neg", "pos"),
    )
    ranked = loco_importance(d, _gbt_trainer(seed=1), folds=5, seed=9)
    assert ranked[0][0] == "label_copy"
    assert ranked[0][1] >= 0.2
    noise_losses = [loss for name, loss in ranked if name != "label_copy"]
    assert all(abs(loss) <= 0.05 for loss in noise_losses)
    ok(
        f"leave-one-out importance: label copy loses {ranked[0][1]:.2f} AUC, "
        f"noise features stay within +/-0.05"
    )


def test_end_to_end_fixture_discrimination(breakage_model):
    broken = build_triple(424_242, "broken_video")
    legit = build_triple(171_717, "legit_ad")

    start = time.perf_counter()
    broken_report = run_pipeline(
        broken.none, broken.breaking, broken.fixed, breakage_model
    )
    broken_time = time.perf_counter() - start
    start = time.perf_counter()
    legit_report = run_pipeline(legit.none, legit.breaking, legit.fixed, breakage_model)
    legit_time = time.perf_counter() - start

    assert broken_report.verdict.heuristic_used == "K1"
    assert broken_report.verdict.breaking
    assert broken.meta["video_root_none"] in broken_report.verdict.offending_roots
    assert not legit_report.verdict.breaking
    assert broken_time < 5.0 and legit_time < 5.0
    ok(
        "detection separates the broken-video triple (breaking, root "
        f"{broken.meta['video_root_none']} flagged, {broken_time:.2f}s) from the "
        f"legit-ad triple (not breaking, {legit_time:.2f}s) under K1"
    )


def test_baselines_flag_both_fixtures(breakage_model):
    broken = build_triple(424_242, "broken_video")
    legit = build_triple(171_717, "legit_ad")
    baseline_verdicts = []
    for triple in (broken, legit):
        changes = element_count_changes(triple.none, triple.breaking)
        count_v = baseline_count(changes, {"requests"}, k=1)
        ratio_v = baseline_ratio(changes, {"requests"}, r=1)
        assert count_v.breaking and ratio_v.breaking
        baseline_verdicts.append((count_v.breaking, ratio_v.breaking))
    # ground truth: broken=breaking, legit=clean -> baselines score 50%
    baseline_accuracy = (
        (baseline_verdicts[0][0] is True) + (baseline_verdicts[1][0] is False)
    ) / 2
    pipeline_accuracy = (
        run_pipeline(
            broken.none, broken.breaking, broken.fixed, breakage_model
        ).verdict.breaking
        + (
            not run_pipeline(
                legit.none, legit.breaking, legit.fixed, breakage_model
            ).verdict.breaking
        )
    ) / 2
    assert baseline_accuracy == 0.5
    assert pipeline_accuracy == 1.0
    ok(
        "request count/ratio baselines flag both fixtures (50% accuracy) while "
        "the classifier pipeline separates them (100%)"
    )


def test_saliency_features_and_classifier():
    assert len(SALIENCY_FEATURE_NAMES) == 31
    assert len(set(SALIENCY_FEATURE_NAMES)) == 31

    snap = build_snapshot([make_node(0, tag="html", w=1000, h=1000)])
    centered = block_of({0}, (400.0, 400.0, 200.0, 200.0))
    corner = block_of({0}, (0.0, 0.0, 0.0, 0.0))
    vec_center = extract_block_features(snap, centered, [centered])
    vec_corner = extract_block_features(snap, corner, [corner])
    assert abs(vec_center["centrality"] - 1.0) <= 1e-9
    assert abs(vec_corner["centrality"] - math.exp(-5.0)) <= 1e-9

    data = synthetic_blocks(12, 700)
    model = train_saliency_model(data[:500], seed=21)
    held = data[500:]
    scores = [score_block(model, b.features) for b in held]
    labels = [1 if b.salient else 0 for b in held]
    auc = roc_auc(scores, labels)
    assert auc >= 0.9
    ok(
        f"saliency: 31 named features, centrality anchors exact to 1e-9, "
        f"synthetic-block AUC {auc:.3f} >= 0.9"
    )


def test_segmentation_monotone_refinement():
    snapshots = []
    for seed, scenario in (
        (3, "broken_video"),
        (4, "legit_ad"),
        (5, "broken_video_edit"),
        (42, "broken_video"),
    ):
        triple = build_triple(seed, scenario, neutral_noise=seed % 2 == 0)
        snapshots.extend([triple.none, triple.breaking, triple.fixed])
    violations = 0
    for snap in snapshots:
        previous = None
        for rounds in range(1, 9):
            leaves = [
                frozenset(b.members) for b in leaf_blocks(segment_page(snap, rounds=rounds))
            ]
            if previous is not None:
                for old in previous:
                    parts = [c for c in leaves if c <= old]
                    covered = frozenset().union(*parts) if parts else frozenset()
                    if covered != old:
                        violations += 1
            previous = leaves
    assert violations == 0
    ok(
        f"segmentation refines monotonically across rounds 1-8 on "
        f"{len(snapshots)} fixture snapshots (0 violations)"
    )


def test_forum_ingest_oracle_and_url_fixtures():
    oracle = json.loads(
        resources.files("breakwatch.data").joinpath("filter_rule_oracle.json").read_text()
    )
    assert len(oracle["entries"]) >= 30
    for entry in oracle["entries"]:
        assert classify_filter_rule(entry["rule"]).value == entry["kind"]

    corpus = json.loads(
        (Path(__file__).parent / "data" / "issue_records.json").read_text()
    )
    records = parse_issue_export([r["record"] for r in corpus["records"]])
    assert len(records) == 30
    statuses = set()
    for rec, item in zip(records, corpus["records"]):
        out = extract_issue_url(rec)
        assert out.status.value == item["expected"]["status"]
        assert out.url == item["expected"]["url"]
        statuses.add(out.status.value)
    assert {"ok", "manual", "drop"} <= statuses
    ok(
        f"forum ingest: {len(oracle['entries'])}-entry rule oracle at 100%, "
        "30-record URL corpus reproduced including manual and drop flags"
    )
