"""Feature extraction for differential subtrees.

Each subtree gets content, structural, visual, and functional features
computed from its member nodes, the two snapshots it came from, and their
environment graphs; a handful of page-global features (request/script/error
totals) are shared by every subtree of the same visit pair. Rows are bound
to a fixed, ordered feature manifest so datasets stay column-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .labeling import SubtreeLabel
from .learn import Dataset
from .snapshot import EnvironmentGraph, Snapshot
from .treediff import DeltaKind, DiffResult, DifferentialSubtree


class TagGroup(Enum):
    LAYOUT = "layout"
    TEXT = "text"
    INPUT_OUTPUT = "input_output"
    OTHER = "other"


_LAYOUT_TAGS = frozenset(
    {
        "html", "body", "div", "ul", "ol", "li", "table", "thead", "tbody", "tfoot",
        "tr", "td", "th", "section", "article", "nav", "aside", "header", "footer",
        "main", "hr", "br", "dl", "dt", "dd", "figure", "figcaption", "details",
        "summary", "menu", "col", "colgroup",
    }
)
_TEXT_TAGS = frozenset(
    {
        "p", "h1", "h2", "h3", "h4", "h5", "h6", "span", "a", "strong", "em", "b",
        "i", "u", "small", "blockquote", "pre", "code", "cite", "q", "caption",
        "sup", "sub", "mark", "abbr", "time", "label",
    }
)
_IO_TAGS = frozenset(
    {
        "input", "textarea", "select", "option", "button", "form", "img", "video",
        "audio", "canvas", "svg", "picture", "source", "iframe", "embed", "object",
        "output", "meter", "progress",
    }
)


def tag_group(tag: str) -> TagGroup:
    """Total mapping of element names onto the four content groups."""
    tag = tag.lower()
    if tag in _LAYOUT_TAGS:
        return TagGroup.LAYOUT
    if tag in _TEXT_TAGS:
        return TagGroup.TEXT
    if tag in _IO_TAGS:
        return TagGroup.INPUT_OUTPUT
    return TagGroup.OTHER


class FeatureScope(Enum):
    SUBTREE = "subtree"
    GLOBAL = "global"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    scope: FeatureScope
    category: str  # content | structural | visual | functional


_GROUPS = ("layout", "text", "io", "other")

SUBTREE_FEATURES: tuple[FeatureSpec, ...] = tuple(
    [
        FeatureSpec(f"{g}_count_before", FeatureScope.SUBTREE, "content") for g in _GROUPS
    ]
    + [FeatureSpec(f"{g}_added", FeatureScope.SUBTREE, "content") for g in _GROUPS]
    + [FeatureSpec(f"{g}_removed", FeatureScope.SUBTREE, "content") for g in _GROUPS]
    + [FeatureSpec(f"{g}_edited", FeatureScope.SUBTREE, "content") for g in _GROUPS]
    + [
        FeatureSpec("iframe_added", FeatureScope.SUBTREE, "content"),
        FeatureSpec("iframe_removed", FeatureScope.SUBTREE, "content"),
        FeatureSpec("iframe_total", FeatureScope.SUBTREE, "content"),
        FeatureSpec("subtree_depth", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("avg_child_count", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("var_child_count", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("was_added", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("was_removed", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("was_edited", FeatureScope.SUBTREE, "structural"),
        FeatureSpec("screen_size_before", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("screen_size_delta", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("position_shift", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_in_subtree_before", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_covered_before", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_in_subtree_delta", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_covered_delta", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_edited", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("salient_removed", FeatureScope.SUBTREE, "visual"),
        FeatureSpec("interaction_count", FeatureScope.SUBTREE, "functional"),
        FeatureSpec("script_query_delta", FeatureScope.SUBTREE, "functional"),
        FeatureSpec("post_interaction_query_delta", FeatureScope.SUBTREE, "functional"),
        FeatureSpec("post_interaction_error_delta", FeatureScope.SUBTREE, "functional"),
        FeatureSpec("requests_by_members", FeatureScope.SUBTREE, "functional"),
        FeatureSpec("requests_by_related_scripts", FeatureScope.SUBTREE, "functional"),
    ]
)

GLOBAL_FEATURES: tuple[FeatureSpec, ...] = (
    FeatureSpec("requests_added", FeatureScope.GLOBAL, "functional"),
    FeatureSpec("requests_removed", FeatureScope.GLOBAL, "functional"),
    FeatureSpec("requests_total", FeatureScope.GLOBAL, "functional"),
    FeatureSpec("scripts_total", FeatureScope.GLOBAL, "functional"),
    FeatureSpec("errors_from_removed_scripts", FeatureScope.GLOBAL, "functional"),
)

FEATURE_MANIFEST: tuple[FeatureSpec, ...] = SUBTREE_FEATURES + GLOBAL_FEATURES
FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURE_MANIFEST)
_SUBTREE_NAMES = frozenset(f.name for f in SUBTREE_FEATURES)
_GLOBAL_NAMES = frozenset(f.name for f in GLOBAL_FEATURES)


@dataclass(frozen=True)
class FeatureRow:
    """One subtree's features in manifest order, optionally labeled."""

    values: tuple[float, ...]
    label: SubtreeLabel | None = None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


def _bbox_union(snap: Snapshot, ids) -> tuple[float, float, float, float] | None:
    cues = [snap.node(i).cues for i in ids if snap.node(i).cues.visible]
    if not cues:
        return None
    x0 = min(c.x for c in cues)
    y0 = min(c.y for c in cues)
    x1 = max(c.x + c.width for c in cues)
    y1 = max(c.y + c.height for c in cues)
    return (x0, y0, x1, y1)


def _boxes_intersect(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def _salient_sets(snap: Snapshot, override=None):
    if override is not None:
        return [frozenset(s) for s in override]
    return list(snap.salient_blocks or ())


def _salient_in(sets, members: frozenset[int]) -> int:
    return sum(1 for s in sets if s & members)


def _salient_covered(snap: Snapshot, sets, bbox) -> int:
    if bbox is None:
        return 0
    count = 0
    for s in sets:
        sbox = _bbox_union(snap, s)
        if sbox is not None and _boxes_intersect(bbox, sbox):
            count += 1
    return count


def _group_counts(snap: Snapshot, ids) -> dict[str, int]:
    counts = {g: 0 for g in _GROUPS}
    for i in ids:
        group = tag_group(snap.node(i).tag)
        key = "io" if group is TagGroup.INPUT_OUTPUT else group.value
        counts[key] += 1
    return counts


def _tree_stats(snap: Snapshot, members: frozenset[int], root: int) -> tuple[float, float, float]:
    """(depth, mean child count, child count variance) within the member set."""
    if not members:
        return 0.0, 0.0, 0.0
    degrees = []
    depth = 0
    stack = [(root, 0)]
    while stack:
        nid, d = stack.pop()
        depth = max(depth, d)
        kids = [c for c in snap.node(nid).children if c in members]
        degrees.append(len(kids))
        stack.extend((c, d + 1) for c in kids)
    mean = sum(degrees) / len(degrees)
    var = sum((d - mean) ** 2 for d in degrees) / len(degrees)
    return float(depth), float(mean), float(var)


def _related_script_urls(snap: Snapshot, members: frozenset[int]) -> set[str]:
    return {t.script_url for t in snap.touches if t.node in members}


def _touch_count_by(snap: Snapshot, urls: set[str]) -> int:
    return sum(1 for t in snap.touches if t.script_url in urls)


def _interactions_on(snap: Snapshot, members: frozenset[int]) -> list[int]:
    return [i for i, it in enumerate(snap.interactions) if it.target in members]


def _touched_after(snap: Snapshot, interaction_idx: list[int]) -> int:
    if not interaction_idx:
        return 0
    first = min(snap.interactions[i].timestamp for i in interaction_idx)
    return len({t.node for t in snap.touches if t.timestamp > first})


def _errors_caused_by(snap: Snapshot, interaction_idx: list[int]) -> int:
    wanted = set(interaction_idx)
    return sum(1 for e in snap.errors if e.cause_interaction in wanted)


def _requests_by_members(snap: Snapshot, members: frozenset[int]) -> int:
    return sum(1 for r in snap.requests if r.initiator in members)


def _requests_by_scripts(snap: Snapshot, urls: set[str]) -> int:
    count = 0
    for r in snap.requests:
        if r.initiator is None:
            continue
        node = snap.node(r.initiator)
        if node.tag == "script" and node.attrs.src in urls:
            count += 1
    return count


def extract_subtree_features(
    delta: DifferentialSubtree,
    diff: DiffResult,
    snap_a: Snapshot,
    snap_b: Snapshot,
    env_a: EnvironmentGraph,
    env_b: EnvironmentGraph,
    salient_a=None,
    salient_b=None,
) -> dict[str, float]:
    """Subtree-scope features for one delta of `diff` (A -> B).

    Counts are over the delta's member nodes (A-side members for removals and
    edits, B-side for additions, plus the matched B-side members of edits);
    delta-valued features are the B-side value minus the A-side value with a
    missing side contributing zero. `salient_a`/`salient_b` override the
    snapshots' embedded salient node sets.
    """
    del env_a, env_b  # relationship lookups are answered from the snapshots
    kind = delta.kind
    a_members = delta.members if kind is not DeltaKind.ADDED else frozenset()
    b_members = (
        delta.members
        if kind is DeltaKind.ADDED
        else delta.matched_members if kind is DeltaKind.EDITED else frozenset()
    )

    sal_a = _salient_sets(snap_a, salient_a)
    sal_b = _salient_sets(snap_b, salient_b)

    out: dict[str, float] = {name: 0.0 for name in (f.name for f in SUBTREE_FEATURES)}

    before = _group_counts(snap_a, a_members)
    for g in _GROUPS:
        out[f"{g}_count_before"] = float(before[g])
    if kind is DeltaKind.ADDED:
        added = _group_counts(snap_b, b_members)
        for g in _GROUPS:
            out[f"{g}_added"] = float(added[g])
        out["iframe_added"] = float(
            sum(1 for i in b_members if snap_b.node(i).tag == "iframe")
        )
    elif kind is DeltaKind.REMOVED:
        removed = _group_counts(snap_a, a_members)
        for g in _GROUPS:
            out[f"{g}_removed"] = float(removed[g])
        out["iframe_removed"] = float(
            sum(1 for i in a_members if snap_a.node(i).tag == "iframe")
        )
    else:
        edited = _group_counts(snap_a, a_members)
        for g in _GROUPS:
            out[f"{g}_edited"] = float(edited[g])

    primary_snap = snap_b if kind is DeltaKind.ADDED else snap_a
    primary_members = delta.members
    out["iframe_total"] = float(
        sum(1 for i in primary_members if primary_snap.node(i).tag == "iframe")
    )

    depth, mean_deg, var_deg = _tree_stats(primary_snap, primary_members, delta.root)
    out["subtree_depth"] = depth
    out["avg_child_count"] = mean_deg
    out["var_child_count"] = var_deg
    out["was_added"] = float(kind is DeltaKind.ADDED)
    out["was_removed"] = float(kind is DeltaKind.REMOVED)
    out["was_edited"] = float(kind is DeltaKind.EDITED)

    bbox_a = _bbox_union(snap_a, a_members)
    bbox_b = _bbox_union(snap_b, b_members)
    area_a = (bbox_a[2] - bbox_a[0]) * (bbox_a[3] - bbox_a[1]) if bbox_a else 0.0
    area_b = (bbox_b[2] - bbox_b[0]) * (bbox_b[3] - bbox_b[1]) if bbox_b else 0.0
    out["screen_size_before"] = area_a
    out["screen_size_delta"] = area_b - area_a
    if bbox_a and bbox_b:
        ca = ((bbox_a[0] + bbox_a[2]) / 2, (bbox_a[1] + bbox_a[3]) / 2)
        cb = ((bbox_b[0] + bbox_b[2]) / 2, (bbox_b[1] + bbox_b[3]) / 2)
        out["position_shift"] = float(np.hypot(cb[0] - ca[0], cb[1] - ca[1]))

    in_before = _salient_in(sal_a, a_members)
    in_after = _salient_in(sal_b, b_members)
    cov_before = _salient_covered(snap_a, sal_a, bbox_a)
    cov_after = _salient_covered(snap_b, sal_b, bbox_b)
    out["salient_in_subtree_before"] = float(in_before)
    out["salient_covered_before"] = float(cov_before)
    out["salient_in_subtree_delta"] = float(in_after - in_before)
    out["salient_covered_delta"] = float(cov_after - cov_before)
    out["salient_edited"] = float(in_before if kind is DeltaKind.EDITED else 0)
    out["salient_removed"] = float(in_before if kind is DeltaKind.REMOVED else 0)

    ints_a = _interactions_on(snap_a, a_members)
    ints_b = _interactions_on(snap_b, b_members)
    out["interaction_count"] = float(len(ints_a) + len(ints_b))

    related_a = _related_script_urls(snap_a, a_members)
    related_b = _related_script_urls(snap_b, b_members)
    related = related_a | related_b
    out["script_query_delta"] = float(
        _touch_count_by(snap_b, related) - _touch_count_by(snap_a, related)
    )
    out["post_interaction_query_delta"] = float(
        _touched_after(snap_b, ints_b) - _touched_after(snap_a, ints_a)
    )
    out["post_interaction_error_delta"] = float(
        _errors_caused_by(snap_b, ints_b) - _errors_caused_by(snap_a, ints_a)
    )
    out["requests_by_members"] = float(
        _requests_by_members(snap_a, a_members) + _requests_by_members(snap_b, b_members)
    )
    out["requests_by_related_scripts"] = float(
        _requests_by_scripts(snap_a, related) + _requests_by_scripts(snap_b, related)
    )
    return out


def extract_global_features(
    diff: DiffResult,
    snap_a: Snapshot,
    snap_b: Snapshot,
    env_a: EnvironmentGraph,
    env_b: EnvironmentGraph,
) -> dict[str, float]:
    """Page-level features of one visit pair.

    Request additions/removals are URL-set differences, so they swap under
    argument swap. A script counts as removed when its URL touches nodes in A
    but not in B; its errors are the A-side errors naming that URL.
    """
    del diff, env_a, env_b
    urls_a = {r.url for r in snap_a.requests}
    urls_b = {r.url for r in snap_b.requests}
    scripts_a = {t.script_url for t in snap_a.touches}
    scripts_b = {t.script_url for t in snap_b.touches}
    removed_scripts = scripts_a - scripts_b
    errors_from_removed = sum(
        1 for e in snap_a.errors if any(url in e.message for url in removed_scripts)
    )
    return {
        "requests_added": float(len(urls_b - urls_a)),
        "requests_removed": float(len(urls_a - urls_b)),
        "requests_total": float(len(urls_a | urls_b)),
        "scripts_total": float(len(scripts_a | scripts_b)),
        "errors_from_removed_scripts": float(errors_from_removed),
    }


def assemble_row(
    sub: dict[str, float],
    glob: dict[str, float],
    label: SubtreeLabel | None = None,
) -> FeatureRow:
    """Bind subtree and global features into one manifest-ordered row."""
    unknown = (set(sub) - _SUBTREE_NAMES) | (set(glob) - _GLOBAL_NAMES)
    if unknown:
        raise KeyError(f"unknown feature names: {sorted(unknown)}")
    missing = (_SUBTREE_NAMES - set(sub)) | (_GLOBAL_NAMES - set(glob))
    if missing:
        raise KeyError(f"missing feature names: {sorted(missing)}")
    merged = {**sub, **glob}
    return FeatureRow(values=tuple(merged[n] for n in FEATURE_NAMES), label=label)


def dataset_from_rows(rows: list[FeatureRow], class_names: tuple[str, ...]) -> Dataset:
    """Stack labeled feature rows into a training dataset."""
    X = np.array([r.values for r in rows], dtype=np.float64)
    y = np.array(
        [class_names.index(r.label.value) if r.label else -1 for r in rows],
        dtype=np.int64,
    )
    if (y < 0).any():
        raise ValueError("all rows must be labeled to build a training dataset")
    return Dataset(X=X, y=y, feature_names=FEATURE_NAMES, class_names=class_names)
