"""Ground-truth labels for differential subtrees from a three-visit protocol.

A page is visited three times: with no filter list, with the breaking list,
and with the fixed list. Comparing pairs of those visits yields differential
subtrees; which transition a subtree came from, what happened to it, and
whether an equivalent change also shows up in the no-list-to-fixed-list diff
together determine whether the change was breakage, legitimate blocking, or
unrelated page dynamism.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .snapshot import Snapshot
from .treediff import (
    EDIT_THRESHOLD,
    DeltaKind,
    DiffResult,
    DifferentialSubtree,
    best_match,
)


class TransitionKind(Enum):
    N_TO_F = "n_to_f"  # no list -> fixed list
    N_TO_B = "n_to_b"  # no list -> breaking list
    B_TO_F = "b_to_f"  # breaking list -> fixed list


class SubtreeLabel(Enum):
    BROKEN = "broken"
    LEGITIMATE = "legitimate"
    NEUTRAL = "neutral"


def label_subtree(
    kind: DeltaKind, transition: TransitionKind, also_in_nf: bool = False
) -> SubtreeLabel:
    """Label one subtree change; total over every kind/transition combination.

    Removals and edits under the fixed list are intended blocking, so they are
    LEGITIMATE wherever the fixed list is the destination. Additions under
    either list relative to the no-list visit can only be page dynamism, so
    they are NEUTRAL. The two inconclusive cells fall back to the cross-check
    `also_in_nf` (did the no-list-to-fixed diff show the equivalent change?):
    a removal/edit only the breaking list causes is BROKEN, and an addition
    between breaking and fixed that the fixed list does not also introduce is
    restored content, hence BROKEN as well.
    """
    if transition in (TransitionKind.N_TO_F, TransitionKind.B_TO_F):
        if kind in (DeltaKind.REMOVED, DeltaKind.EDITED):
            return SubtreeLabel.LEGITIMATE
        if transition is TransitionKind.N_TO_F:
            return SubtreeLabel.NEUTRAL
        return SubtreeLabel.NEUTRAL if also_in_nf else SubtreeLabel.BROKEN
    # no list -> breaking list
    if kind is DeltaKind.ADDED:
        return SubtreeLabel.NEUTRAL
    return SubtreeLabel.LEGITIMATE if also_in_nf else SubtreeLabel.BROKEN


@dataclass(frozen=True)
class LabeledDelta:
    delta: DifferentialSubtree
    transition: TransitionKind
    label: SubtreeLabel


def delta_matches_any(
    delta: DifferentialSubtree,
    delta_snap: Snapshot,
    candidates: list[DifferentialSubtree],
    candidate_snap: Snapshot,
) -> bool:
    """True when `delta`'s root matches some candidate root at the edit threshold."""
    cand_nodes = [candidate_snap.node(c.root) for c in candidates]
    if not cand_nodes:
        return False
    page_diag = max(delta_snap.page_diag(), candidate_snap.page_diag())
    _, score = best_match(delta_snap.node(delta.root), cand_nodes, page_diag)
    return score.value >= EDIT_THRESHOLD or score.exact


def label_visit_triple(
    diff_nf: DiffResult,
    diff_nb: DiffResult,
    diff_bf: DiffResult,
    snap_n: Snapshot,
    snap_b: Snapshot,
    snap_f: Snapshot,
) -> list[LabeledDelta]:
    """Label every delta of the three transition diffs of one page.

    The cross-check for the inconclusive cells re-matches the delta root
    against the corresponding-kind delta roots of the no-list-to-fixed diff.
    Roots of removals/edits live in the source snapshot of their diff and
    roots of additions in the destination snapshot, so the comparison always
    happens between real nodes of the right visits.
    """
    nf_changed = [
        d for d in diff_nf.deltas if d.kind in (DeltaKind.REMOVED, DeltaKind.EDITED)
    ]
    nf_added = [d for d in diff_nf.deltas if d.kind is DeltaKind.ADDED]

    out: list[LabeledDelta] = []
    for delta in diff_nf.deltas:
        out.append(LabeledDelta(delta, TransitionKind.N_TO_F,
                                label_subtree(delta.kind, TransitionKind.N_TO_F)))
    for delta in diff_nb.deltas:
        also = False
        if delta.kind in (DeltaKind.REMOVED, DeltaKind.EDITED):
            # Both diffs start from the no-list visit, so roots share a snapshot.
            also = delta_matches_any(delta, snap_n, nf_changed, snap_n)
        out.append(LabeledDelta(delta, TransitionKind.N_TO_B,
                                label_subtree(delta.kind, TransitionKind.N_TO_B, also)))
    for delta in diff_bf.deltas:
        also = False
        if delta.kind is DeltaKind.ADDED:
            # Added roots live in the fixed-list snapshot on both diffs.
            also = delta_matches_any(delta, snap_f, nf_added, snap_f)
        out.append(LabeledDelta(delta, TransitionKind.B_TO_F,
                                label_subtree(delta.kind, TransitionKind.B_TO_F, also)))
    return out
