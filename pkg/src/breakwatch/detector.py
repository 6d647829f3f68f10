"""Page-level breakage verdicts and the end-to-end detection pipeline.

Per-subtree predictions roll up into one verdict per page: the count
heuristic flags a page at k or more broken subtrees, the ratio heuristic at
a broken share of r percent or more. The count/ratio baselines over raw
element deltas are kept for comparison; they fire on any big change and
cannot tell legitimate blocking from breakage.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import features as feats
from .labeling import SubtreeLabel, TransitionKind, label_subtree, delta_matches_any
from .learn import TreeEnsembleModel
from .segmentation import segment_page
from .saliency import SALIENT_THRESHOLD, score_blocks
from .snapshot import Condition, EnvironmentGraph, Snapshot, build_environment_graph
from .treediff import DeltaKind, DiffResult, diff_trees


class ConditionMismatch(Exception):
    """The supplied snapshots do not form a valid visit triple."""


@dataclass(frozen=True)
class PageVerdict:
    breaking: bool
    broken_count: int
    broken_ratio: float
    offending_roots: tuple[int, ...]
    heuristic_used: str


def _ratio(broken: int, total: int) -> float:
    return broken / total if total else 0.0


def page_verdict_k(
    predictions: list[SubtreeLabel],
    k: int,
    offending_roots: tuple[int, ...] = (),
    strict: bool = False,
) -> PageVerdict:
    """Breaking when at least k subtrees are broken (strictly more with `strict`)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    broken = sum(1 for p in predictions if p is SubtreeLabel.BROKEN)
    breaking = broken > k if strict else broken >= k
    return PageVerdict(
        breaking=breaking,
        broken_count=broken,
        broken_ratio=_ratio(broken, len(predictions)),
        offending_roots=offending_roots if breaking else (),
        heuristic_used=f"K{k}",
    )


def page_verdict_r(
    predictions: list[SubtreeLabel],
    r: float,
    offending_roots: tuple[int, ...] = (),
    strict: bool = False,
) -> PageVerdict:
    """Breaking when the broken share reaches r percent; empty input is clean."""
    if not 0 < r <= 100:
        raise ValueError("r must be in (0, 100]")
    broken = sum(1 for p in predictions if p is SubtreeLabel.BROKEN)
    ratio = _ratio(broken, len(predictions))
    threshold = r / 100.0
    breaking = bool(predictions) and (ratio > threshold if strict else ratio >= threshold)
    return PageVerdict(
        breaking=breaking,
        broken_count=broken,
        broken_ratio=ratio,
        offending_roots=offending_roots if breaking else (),
        heuristic_used=f"R{r:g}",
    )


# ---------------------------------------------------------------------------
# Count / ratio baselines over raw element statistics


def element_count_changes(snap_a: Snapshot, snap_b: Snapshot) -> dict[str, tuple[float, float]]:
    """Per-element-kind (signed delta, total in A) statistics of a visit pair."""

    def visible_tags(snap: Snapshot, tags: set[str]) -> int:
        return sum(1 for n in snap.nodes if n.tag in tags and n.cues.visible)

    kinds = {
        "requests": (len(snap_b.requests) - len(snap_a.requests), len(snap_a.requests)),
        "images": (
            visible_tags(snap_b, {"img"}) - visible_tags(snap_a, {"img"}),
            visible_tags(snap_a, {"img"}),
        ),
        "buttons": (
            visible_tags(snap_b, {"button"}) - visible_tags(snap_a, {"button"}),
            visible_tags(snap_a, {"button"}),
        ),
        "text": (
            visible_tags(snap_b, {"p", "h1", "h2", "h3", "span"})
            - visible_tags(snap_a, {"p", "h1", "h2", "h3", "span"}),
            visible_tags(snap_a, {"p", "h1", "h2", "h3", "span"}),
        ),
    }
    return {k: (float(d), float(t)) for k, (d, t) in kinds.items()}


def baseline_count(
    changes: dict[str, tuple[float, float]], kinds: set[str], k: float
) -> PageVerdict:
    """Breaking when the mean absolute element delta over `kinds` exceeds k."""
    if not kinds:
        raise ValueError("kinds must be nonempty")
    deltas = [abs(changes[kind][0]) for kind in sorted(kinds)]
    avg = sum(deltas) / len(deltas)
    return PageVerdict(
        breaking=avg > k,
        broken_count=0,
        broken_ratio=0.0,
        offending_roots=(),
        heuristic_used=f"COUNT-{'-'.join(sorted(kinds))}-{k:g}",
    )


def baseline_ratio(
    changes: dict[str, tuple[float, float]], kinds: set[str], r: float
) -> PageVerdict:
    """Breaking when the mean relative element delta over `kinds` exceeds r percent."""
    if not kinds:
        raise ValueError("kinds must be nonempty")
    shares = []
    for kind in sorted(kinds):
        delta, total = changes[kind]
        shares.append(abs(delta) / total if total > 0 else 0.0)
    avg = sum(shares) / len(shares)
    return PageVerdict(
        breaking=avg > r / 100.0,
        broken_count=0,
        broken_ratio=0.0,
        offending_roots=(),
        heuristic_used=f"RATIO-{'-'.join(sorted(kinds))}-{r:g}",
    )


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class DeltaReportEntry:
    transition: TransitionKind
    kind: DeltaKind
    root: int
    size: int
    predicted: SubtreeLabel
    probabilities: dict[str, float]
    rule_label: SubtreeLabel | None  # decision-table label, when resolvable


@dataclass(frozen=True)
class PipelineReport:
    page_url: str
    entries: tuple[DeltaReportEntry, ...]
    verdict: PageVerdict
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self, include_timings: bool = False) -> dict:
        doc = {
            "page_url": self.page_url,
            "verdict": {
                "breaking": self.verdict.breaking,
                "broken_count": self.verdict.broken_count,
                "broken_ratio": self.verdict.broken_ratio,
                "offending_roots": list(self.verdict.offending_roots),
                "heuristic": self.verdict.heuristic_used,
            },
            "subtrees": [
                {
                    "transition": e.transition.value,
                    "kind": e.kind.value,
                    "root": e.root,
                    "size": e.size,
                    "predicted": e.predicted.value,
                    "probabilities": {k: round(v, 9) for k, v in e.probabilities.items()},
                    "rule_label": e.rule_label.value if e.rule_label else None,
                }
                for e in self.entries
            ],
        }
        if include_timings:
            doc["stage_seconds"] = self.stage_seconds
        return doc


@dataclass(frozen=True)
class PipelineConfig:
    heuristic: str = "k1"  # k<count> or r<percent>
    strict_comparison: bool = False
    salient_threshold: float = SALIENT_THRESHOLD
    segmentation_rounds: int = 6


def _parse_heuristic(spec: str) -> tuple[str, float]:
    spec = spec.strip().lower()
    if not spec or spec[0] not in "kr":
        raise ValueError(f"heuristic must look like k1 or r10, got {spec!r}")
    return spec[0], float(spec[1:])


def salient_sets_for(
    snap: Snapshot,
    saliency_model: TreeEnsembleModel | None,
    config: PipelineConfig,
) -> list[frozenset[int]]:
    """Salient node groups: the snapshot's own, else scored via the model."""
    if snap.salient_blocks is not None:
        return list(snap.salient_blocks)
    if saliency_model is None:
        return []
    hierarchy = segment_page(snap, rounds=config.segmentation_rounds)
    blocks = [hierarchy.block(b) for b in hierarchy.blocks]
    leaves = [b for b in blocks if not b.children]
    scored = score_blocks(saliency_model, snap, leaves)
    return [frozenset(b.members) for b, p in scored if p > config.salient_threshold]


def _predict_deltas(
    diff: DiffResult,
    transition: TransitionKind,
    snap_a: Snapshot,
    snap_b: Snapshot,
    env_a: EnvironmentGraph,
    env_b: EnvironmentGraph,
    sal_a: list[frozenset[int]],
    sal_b: list[frozenset[int]],
    model: TreeEnsembleModel,
    glob: dict[str, float],
    rule_fn,
) -> list[DeltaReportEntry]:
    entries = []
    for delta in diff.deltas:
        sub = feats.extract_subtree_features(
            delta, diff, snap_a, snap_b, env_a, env_b, sal_a, sal_b
        )
        row = feats.assemble_row(sub, glob)
        proba = model.predict_proba_named(
            feats.FEATURE_NAMES, np.array([row.values], dtype=np.float64)
        )[0]
        winner = int(np.argmax(proba))
        predicted = SubtreeLabel(model.class_names[winner])
        entries.append(
            DeltaReportEntry(
                transition=transition,
                kind=delta.kind,
                root=delta.root,
                size=len(delta.members),
                predicted=predicted,
                probabilities={
                    name: float(p) for name, p in zip(model.class_names, proba)
                },
                rule_label=rule_fn(delta),
            )
        )
    return entries


def run_pipeline(
    snap_n: Snapshot,
    snap_b: Snapshot,
    snap_f: Snapshot | None,
    breakage_model: TreeEnsembleModel,
    saliency_model: TreeEnsembleModel | None = None,
    config: PipelineConfig = PipelineConfig(),
) -> PipelineReport:
    """Diff the visits, classify every differential subtree, and judge the page.

    The no-list to breaking-list transition is always evaluated; the breaking
    to fixed transition joins it when a fixed-list snapshot is supplied. With
    all three visits available the decision-table label is reported next to
    each prediction as a cross-check. The page verdict is computed from the
    classifier predictions with the configured count/ratio heuristic, and
    broken subtree roots are surfaced for maintainers.
    """
    if snap_n.condition is not Condition.NONE or snap_b.condition is not Condition.BREAKING:
        raise ConditionMismatch(
            f"expected conditions none/breaking, got "
            f"{snap_n.condition.value}/{snap_b.condition.value}"
        )
    if snap_f is not None and snap_f.condition is not Condition.FIXED:
        raise ConditionMismatch(f"expected condition fixed, got {snap_f.condition.value}")
    urls = {snap_n.page_url, snap_b.page_url} | ({snap_f.page_url} if snap_f else set())
    if len(urls) != 1:
        raise ConditionMismatch(f"snapshots are from different pages: {sorted(urls)}")

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    env_n = build_environment_graph(snap_n)
    env_b = build_environment_graph(snap_b)
    env_f = build_environment_graph(snap_f) if snap_f else None
    timings["graphs"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sal_n = salient_sets_for(snap_n, saliency_model, config)
    sal_b = salient_sets_for(snap_b, saliency_model, config)
    sal_f = salient_sets_for(snap_f, saliency_model, config) if snap_f else []
    timings["saliency"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    diff_nb = diff_trees(snap_n, snap_b)
    diff_nf = diff_trees(snap_n, snap_f) if snap_f else None
    diff_bf = diff_trees(snap_b, snap_f) if snap_f else None
    timings["diff"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    entries: list[DeltaReportEntry] = []

    def nb_rule(delta) -> SubtreeLabel | None:
        if diff_nf is None:
            return None
        also = False
        if delta.kind in (DeltaKind.REMOVED, DeltaKind.EDITED):
            candidates = [
                d for d in diff_nf.deltas
                if d.kind in (DeltaKind.REMOVED, DeltaKind.EDITED)
            ]
            also = delta_matches_any(delta, snap_n, candidates, snap_n)
        return label_subtree(delta.kind, TransitionKind.N_TO_B, also)

    glob_nb = feats.extract_global_features(diff_nb, snap_n, snap_b, env_n, env_b)
    entries.extend(
        _predict_deltas(
            diff_nb, TransitionKind.N_TO_B, snap_n, snap_b, env_n, env_b,
            sal_n, sal_b, breakage_model, glob_nb, nb_rule,
        )
    )

    if snap_f is not None and diff_bf is not None:
        def bf_rule(delta) -> SubtreeLabel | None:
            also = False
            if delta.kind is DeltaKind.ADDED:
                candidates = [d for d in diff_nf.deltas if d.kind is DeltaKind.ADDED]
                also = delta_matches_any(delta, snap_f, candidates, snap_f)
            return label_subtree(delta.kind, TransitionKind.B_TO_F, also)

        glob_bf = feats.extract_global_features(diff_bf, snap_b, snap_f, env_b, env_f)
        entries.extend(
            _predict_deltas(
                diff_bf, TransitionKind.B_TO_F, snap_b, snap_f, env_b, env_f,
                sal_b, sal_f, breakage_model, glob_bf, bf_rule,
            )
        )
    timings["classify"] = time.perf_counter() - t0

    predictions = [e.predicted for e in entries]
    offending = tuple(e.root for e in entries if e.predicted is SubtreeLabel.BROKEN)
    letter, value = _parse_heuristic(config.heuristic)
    if letter == "k":
        verdict = page_verdict_k(
            predictions, int(value), offending, strict=config.strict_comparison
        )
    else:
        verdict = page_verdict_r(
            predictions, value, offending, strict=config.strict_comparison
        )
    return PipelineReport(
        page_url=snap_n.page_url,
        entries=tuple(entries),
        verdict=verdict,
        stage_seconds=timings,
    )
