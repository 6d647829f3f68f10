"""breakwatch command line: the maintainer workflow end to end.

Subcommands mirror the pipeline stages: segment pages, train and apply the
saliency scorer, diff snapshots, label visit triples, extract features,
train the subtree classifier, run detection on a visit triple, ingest forum
exports, and render reports. Exit codes: 0 success / page not breaking,
1 error or usage problem, 2 page breaking.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import features as feats
from .config import Config, load_config
from .detector import PipelineConfig, run_pipeline
from .forum import (
    ExtractionStatus,
    NoMaintainerCommit,
    classify_filter_rule,
    extract_issue_url,
    parse_issue_export,
    recover_list_refs,
    UnparsableRule,
)
from .labeling import label_visit_triple
from .learn import (
    MODEL_FORMAT_VERSION,
    Hyperparams,
    ModelKind,
    cross_validate,
    fit_model,
    load_model,
    save_model,
)
from .saliency import (
    SALIENCY_FEATURE_NAMES,
    LabeledBlock,
    SaliencyFeatureVector,
    extract_block_features,
    train_saliency_model,
)
from .segmentation import leaf_blocks, segment_page
from .snapshot import build_environment_graph, parse_snapshot, validate_snapshot
from .treediff import diff_trees


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the contract here is exit 1.
    def error(self, message):
        raise UsageError(message)


def _load_snapshot(path: str):
    return parse_snapshot(Path(path).read_bytes())


def _write_json(path: str | None, doc) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True)
    if path is None or path == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _diff_to_dict(diff) -> dict:
    return {
        "common": sorted([a, b] for a, b in diff.common),
        "deltas": [
            {
                "kind": d.kind.value,
                "root": d.root,
                "members": sorted(d.members),
                "matched_root": d.matched_root,
                "matched_members": sorted(d.matched_members),
            }
            for d in diff.deltas
        ],
    }


def cmd_segment(args, cfg: Config) -> int:
    snap = _load_snapshot(args.snapshot)
    hierarchy = segment_page(snap, rounds=args.rounds or cfg.segmentation_rounds)
    doc = {
        "page_url": snap.page_url,
        "rounds": hierarchy.rounds,
        "root": hierarchy.root,
        "blocks": [
            {
                "id": b.id,
                "members": sorted(b.members),
                "bbox": list(b.bbox),
                "children": list(b.children),
                "round_created": b.round_created,
                "leaf": not b.children,
            }
            for b in hierarchy.blocks.values()
        ],
        "leaves": [b.id for b in leaf_blocks(hierarchy)],
    }
    _write_json(args.out, doc)
    return 0


def cmd_validate(args, cfg: Config) -> int:
    violations = validate_snapshot(_load_snapshot(args.snapshot))
    for v in violations:
        print(str(v))
    return 0 if not violations else 1


def _load_annotations(path: str, rounds: int) -> list[LabeledBlock]:
    """Annotation rows are {snapshot, block_id, salient} or {features, salient}."""
    doc = json.loads(Path(path).read_text())
    hierarchies: dict[str, tuple] = {}
    data: list[LabeledBlock] = []
    for row in doc:
        if "features" in row:
            vec = SaliencyFeatureVector(tuple(float(v) for v in row["features"]))
        else:
            snap_path = row["snapshot"]
            if snap_path not in hierarchies:
                snap = _load_snapshot(snap_path)
                hierarchy = segment_page(snap, rounds=rounds)
                hierarchies[snap_path] = (snap, hierarchy, leaf_blocks(hierarchy))
            snap, hierarchy, leaves = hierarchies[snap_path]
            vec = extract_block_features(snap, hierarchy.block(row["block_id"]), leaves)
        data.append(LabeledBlock(features=vec, salient=bool(row["salient"])))
    return data


def cmd_saliency(args, cfg: Config) -> int:
    if args.action == "train":
        data = _load_annotations(args.annotations, cfg.segmentation_rounds)
        model = train_saliency_model(data, seed=args.seed if args.seed is not None else cfg.seed)
        save_model(model, args.out)
        print(f"saliency model: {len(data)} blocks -> {args.out}")
        return 0
    # score
    snap = _load_snapshot(args.snapshot)
    model_path = args.model or cfg.saliency_model_path
    if not model_path:
        raise UsageError("saliency score needs --model or a configured model path")
    model = load_model(model_path)
    hierarchy = segment_page(snap, rounds=cfg.segmentation_rounds)
    leaves = leaf_blocks(hierarchy)
    scored = [
        {
            "block": b.id,
            "members": sorted(b.members),
            "score": round(
                float(
                    model.predict_proba(
                        np.array([extract_block_features(snap, b, leaves).values])
                    )[0][model.class_names.index("salient")]
                ),
                6,
            ),
        }
        for b in leaves
    ]
    _write_json(args.out, {"page_url": snap.page_url, "blocks": scored})
    return 0


def cmd_diff(args, cfg: Config) -> int:
    diff = diff_trees(_load_snapshot(args.snapshot_a), _load_snapshot(args.snapshot_b))
    _write_json(args.out, _diff_to_dict(diff))
    return 0


def cmd_label(args, cfg: Config) -> int:
    snap_n = _load_snapshot(args.none)
    snap_b = _load_snapshot(args.breaking)
    snap_f = _load_snapshot(args.fixed)
    diff_nf = diff_trees(snap_n, snap_f)
    diff_nb = diff_trees(snap_n, snap_b)
    diff_bf = diff_trees(snap_b, snap_f)
    labeled = label_visit_triple(diff_nf, diff_nb, diff_bf, snap_n, snap_b, snap_f)
    doc = [
        {
            "transition": item.transition.value,
            "kind": item.delta.kind.value,
            "root": item.delta.root,
            "size": len(item.delta.members),
            "label": item.label.value,
        }
        for item in labeled
    ]
    _write_json(args.out, doc)
    return 0


def cmd_features(args, cfg: Config) -> int:
    snap_a = _load_snapshot(args.snapshot_a)
    snap_b = _load_snapshot(args.snapshot_b)
    diff = diff_trees(snap_a, snap_b)
    env_a = build_environment_graph(snap_a)
    env_b = build_environment_graph(snap_b)
    glob = feats.extract_global_features(diff, snap_a, snap_b, env_a, env_b)
    rows = []
    for delta in diff.deltas:
        sub = feats.extract_subtree_features(delta, diff, snap_a, snap_b, env_a, env_b)
        row = feats.assemble_row(sub, glob)
        rows.append({"root": delta.root, "kind": delta.kind.value, "features": row.as_dict()})
    manifest = [
        {"name": f.name, "scope": f.scope.value, "category": f.category}
        for f in feats.FEATURE_MANIFEST
    ]
    if args.jsonl:
        lines = [json.dumps({"manifest": manifest}, sort_keys=True)]
        lines += [json.dumps(row, sort_keys=True) for row in rows]
        text = "\n".join(lines) + "\n"
        if args.out is None or args.out == "-":
            print(text, end="")
        else:
            Path(args.out).write_text(text)
    else:
        _write_json(args.out, {"manifest": manifest, "rows": rows})
    return 0


def cmd_train(args, cfg: Config) -> int:
    doc = json.loads(Path(args.dataset).read_text())
    names = tuple(doc["feature_names"])
    class_names = tuple(doc["class_names"])
    from .learn import Dataset

    X = np.array(doc["X"], dtype=np.float64)
    y = np.array(doc["y"], dtype=np.int64)
    ds = Dataset(X=X, y=y, feature_names=names, class_names=class_names)
    kind = ModelKind.GRADIENT_BOOSTED if args.kind == "gbt" else ModelKind.RANDOM_FOREST
    hp = None
    if args.trees or args.depth:
        base = Hyperparams() if kind is ModelKind.RANDOM_FOREST else Hyperparams(
            n_trees=200, max_depth=4, max_features=None
        )
        hp = Hyperparams(
            n_trees=args.trees or base.n_trees,
            max_depth=args.depth or base.max_depth,
            learning_rate=base.learning_rate,
            max_features=base.max_features,
        )
    seed = args.seed if args.seed is not None else cfg.seed
    model = fit_model(ds, kind, hp, rng_seed=seed, resample_strategy=args.resample)
    save_model(model, args.out)
    print(f"model: kind={kind.value} rows={len(X)} -> {args.out}")
    if args.folds:
        def trainer(d):
            return fit_model(d, kind, hp, rng_seed=seed, resample_strategy=args.resample)

        report = cross_validate(ds, args.folds, trainer, seed=seed)
        print(report.summary())
    return 0


def cmd_detect(args, cfg: Config) -> int:
    snap_n = _load_snapshot(args.nf)
    snap_b = _load_snapshot(args.nb)
    snap_f = _load_snapshot(args.bf) if args.bf else None
    model_path = args.model or cfg.breakage_model_path
    if not model_path:
        raise UsageError("detect needs --model or a configured breakage model path")
    breakage_model = load_model(model_path)
    saliency_model = None
    path = args.saliency_model or cfg.saliency_model_path
    if path:
        saliency_model = load_model(path)
    pipe_cfg = PipelineConfig(
        heuristic=args.heuristic or cfg.heuristic,
        strict_comparison=cfg.strict_comparison,
        salient_threshold=cfg.salient_threshold,
        segmentation_rounds=cfg.segmentation_rounds,
    )
    report = run_pipeline(snap_n, snap_b, snap_f, breakage_model, saliency_model, pipe_cfg)
    doc = report.to_json_dict()
    doc["config"] = cfg.as_dict()
    doc["config"]["heuristic"] = pipe_cfg.heuristic
    doc["model"] = {
        "kind": breakage_model.kind.value,
        "seed": breakage_model.seed,
        "format_version": MODEL_FORMAT_VERSION,
        "n_trees": breakage_model.hyperparams.n_trees,
    }
    if args.report and args.report.endswith(".txt"):
        Path(args.report).write_text(_render_report(doc))
    else:
        _write_json(args.report, doc)
    timing = " ".join(f"{k}={v * 1000:.0f}ms" for k, v in report.stage_seconds.items())
    print(
        f"{report.page_url}: {'BREAKING' if report.verdict.breaking else 'ok'} "
        f"({report.verdict.broken_count} broken subtrees; {timing})",
        file=sys.stderr,
    )
    return 2 if report.verdict.breaking else 0


def _render_report(doc: dict) -> str:
    lines = [
        f"page: {doc['page_url']}",
        f"verdict: {'BREAKING' if doc['verdict']['breaking'] else 'not breaking'} "
        f"({doc['verdict']['heuristic']}; {doc['verdict']['broken_count']} broken, "
        f"ratio {doc['verdict']['broken_ratio']:.2f})",
    ]
    if doc["verdict"]["offending_roots"]:
        lines.append(f"offending roots: {doc['verdict']['offending_roots']}")
    for e in doc["subtrees"]:
        rule = f" rule={e['rule_label']}" if e.get("rule_label") else ""
        lines.append(
            f"  [{e['transition']}] {e['kind']} root={e['root']} size={e['size']}"
            f" -> {e['predicted']}{rule}"
        )
    return "\n".join(lines) + "\n"


def cmd_report(args, cfg: Config) -> int:
    doc = json.loads(Path(args.report).read_text())
    print(_render_report(doc), end="")
    return 0


def cmd_ingest(args, cfg: Config) -> int:
    doc = json.loads(Path(args.export).read_text())
    records = parse_issue_export(doc)
    out_lines = []
    for rec in records:
        extraction = extract_issue_url(rec)
        entry = {
            "forum": rec.forum.value,
            "title": rec.title,
            "status": extraction.status.value,
            "url": extraction.url,
        }
        try:
            recovery = recover_list_refs(rec)
            entry["breaking_ref"] = str(recovery.breaking_ref)
            entry["fixing_ref"] = str(recovery.fixing_ref)
        except NoMaintainerCommit:
            entry["breaking_ref"] = None
            entry["fixing_ref"] = None
        if args.classify_rules:
            kinds = {}
            for line in rec.body.splitlines():
                try:
                    kinds[line.strip()] = classify_filter_rule(line).value
                except UnparsableRule:
                    continue
            entry["rule_kinds"] = kinds
        out_lines.append(json.dumps(entry, sort_keys=True))
    text = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out is None or args.out == "-":
        print(text, end="")
    else:
        Path(args.out).write_text(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="breakwatch", description=__doc__)
    parser.add_argument("--config", help="TOML-style key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a snapshot into semantic blocks")
    p.add_argument("snapshot")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("validate", help="check a snapshot against its invariants")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("saliency", help="train or apply the block saliency scorer")
    actions = p.add_subparsers(dest="action", required=True)
    pt = actions.add_parser("train")
    pt.add_argument("--annotations", required=True, help="JSON array of labeled blocks")
    pt.add_argument("--seed", type=int, default=None)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_saliency, action="train")
    ps = actions.add_parser("score")
    ps.add_argument("snapshot")
    ps.add_argument("--model", default=None)
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_saliency, action="score")

    p = sub.add_parser("diff", help="differential subtrees between two snapshots")
    p.add_argument("snapshot_a")
    p.add_argument("snapshot_b")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("label", help="label a visit triple's differential subtrees")
    p.add_argument("--nf", dest="none", required=True, help="no-list snapshot")
    p.add_argument("--nb", dest="breaking", required=True, help="breaking-list snapshot")
    p.add_argument("--bf", dest="fixed", required=True, help="fixed-list snapshot")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", help="feature rows for one snapshot pair")
    p.add_argument("snapshot_a")
    p.add_argument("snapshot_b")
    p.add_argument("--jsonl", action="store_true", help="manifest line, then one row per line")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the subtree classifier")
    p.add_argument("--dataset", required=True, help="JSON with X, y, feature_names, class_names")
    p.add_argument("--kind", choices=("gbt", "rf"), default="gbt")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--folds", type=int, default=0)
    p.add_argument("--trees", type=int, default=0)
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--resample", choices=("smote", "random_over", "random_under"), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="judge one page from its visit snapshots")
    p.add_argument("--nf", required=True, help="snapshot captured with no filter list")
    p.add_argument("--nb", required=True, help="snapshot captured with the breaking list")
    p.add_argument("--bf", default=None, help="snapshot captured with the fixed list")
    p.add_argument("--model", default=None, help="trained subtree classifier")
    p.add_argument("--saliency-model", default=None)
    p.add_argument("--heuristic", default=None, help="k<count> or r<percent>, e.g. k1, r10")
    p.add_argument("--report", default=None, help="write the report here (.json or .txt)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("ingest", help="parse an exported forum-issue file")
    p.add_argument("export", help="JSON export of issue records")
    p.add_argument("--forum", default=None, help="informational; records carry their forum")
    p.add_argument("--classify-rules", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="render a machine-readable report as text")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config) if args.config else Config()
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surface module errors as exit 1, not tracebacks
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
