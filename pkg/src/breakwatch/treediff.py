"""Differential comparison of two DOM trees.

Two snapshots of the same page never share node ids, so nodes are matched by
content: a similarity score over attributes and visual cues decides, per
sibling level, which nodes correspond. Matched-but-changed regions become
EDITED subtrees, unmatched regions become REMOVED (side A) or ADDED (side B)
subtrees, and everything else forms the common tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .snapshot import DomNode, Snapshot

# A maximum score in [EDIT_THRESHOLD, 1) marks a pair as edited; only exact
# agreement on every sub-score joins the common tree.
EDIT_THRESHOLD = 0.75

# Text similarity is an LCS ratio; long text is truncated to keep it O(1).
TEXT_SIM_MAX_CHARS = 200


class DeltaKind(Enum):
    ADDED = "added"
    REMOVED = "removed"
    EDITED = "edited"


@dataclass(frozen=True)
class MatchScore:
    """Similarity verdict for one node pair.

    `value` is the mean of the text, class, and screen-distance sub-scores.
    `disqualified` is set when a hard identity conflict (tag, html id, src or
    name) zeroes the score. `exact` records that every sub-score equals one
    without rounding, which is what admits a pair into the common tree.
    """

    value: float
    disqualified: bool
    exact: bool = False


@dataclass(frozen=True)
class DifferentialSubtree:
    """One connected changed region between two trees.

    `root` and `members` live in tree A for REMOVED/EDITED subtrees and in
    tree B for ADDED ones. EDITED subtrees also carry their matched B-side
    root and members so that both trees stay fully accounted for.
    """

    kind: DeltaKind
    root: int
    members: frozenset[int]
    matched_root: int | None = None
    matched_members: frozenset[int] = frozenset()


@dataclass(frozen=True)
class DiffResult:
    common: frozenset[tuple[int, int]]
    deltas: tuple[DifferentialSubtree, ...]

    def deltas_of(self, kind: DeltaKind) -> list[DifferentialSubtree]:
        return [d for d in self.deltas if d.kind is kind]


def _lcs_len(a: str, b: str) -> int:
    """Bit-parallel LCS length: one big-int op chain per character of `a`."""
    if not a or not b:
        return 0
    masks: dict[str, int] = {}
    for j, cb in enumerate(b):
        masks[cb] = masks.get(cb, 0) | (1 << j)
    m = len(b)
    full = (1 << m) - 1
    v = full
    for ca in a:
        t = v & masks.get(ca, 0)
        v = ((v + t) | (v - t)) & full
    # Every cleared bit marks one more match on the LCS frontier.
    return m - bin(v).count("1")


def text_similarity(a: str, b: str) -> float:
    """LCS length over the longer string; two empty strings count as identical."""
    a = a[:TEXT_SIM_MAX_CHARS]
    b = b[:TEXT_SIM_MAX_CHARS]
    if not a and not b:
        return 1.0
    longer = max(len(a), len(b))
    return _lcs_len(a, b) / longer


def class_similarity(a: tuple[str, ...], b: tuple[str, ...]) -> float:
    """Jaccard index over class tokens; two empty sets count as identical."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def _attr_conflict(a: str | None, b: str | None) -> bool:
    # Only two present-but-different values disqualify; absence is compatible.
    return a is not None and b is not None and a != b


def node_similarity(a: DomNode, b: DomNode, page_diag: float) -> MatchScore:
    """Score how likely two nodes from different visits are the same element.

    Hard disqualifiers (different tag, html id, src, or name) return zero.
    Otherwise the score averages text similarity, class-set overlap, and the
    on-screen distance between node centers normalized by the page diagonal.
    """
    if page_diag <= 0:
        raise ValueError("page_diag must be positive")
    if (
        a.tag != b.tag
        or _attr_conflict(a.attrs.html_id, b.attrs.html_id)
        or _attr_conflict(a.attrs.src, b.attrs.src)
        or _attr_conflict(a.attrs.name, b.attrs.name)
    ):
        return MatchScore(0.0, disqualified=True)

    text_score = text_similarity(a.cues.text, b.cues.text)
    class_score = class_similarity(a.attrs.class_list, b.attrs.class_list)
    (ax, ay), (bx, by) = a.cues.center, b.cues.center
    dist = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
    dist_score = 1.0 - min(1.0, dist / page_diag)

    # Exactness is decided on the raw comparisons, not on rounded floats.
    exact = (
        a.cues.text[:TEXT_SIM_MAX_CHARS] == b.cues.text[:TEXT_SIM_MAX_CHARS]
        and set(a.attrs.class_list) == set(b.attrs.class_list)
        and ax == bx
        and ay == by
    )
    value = (text_score + class_score + dist_score) / 3.0
    return MatchScore(value, disqualified=False, exact=exact)


def best_match(
    a: DomNode, candidates: list[DomNode], page_diag: float
) -> tuple[DomNode | None, MatchScore]:
    """Highest-scoring candidate for `a`; ties go to the earliest candidate."""
    best: DomNode | None = None
    best_score = MatchScore(0.0, disqualified=True)
    for cand in candidates:
        score = node_similarity(a, cand, page_diag)
        if best is None or score.value > best_score.value:
            best, best_score = cand, score
    if best is None:
        return None, MatchScore(0.0, disqualified=True)
    return best, best_score


@dataclass
class _DeltaBuilder:
    kind: DeltaKind
    root: int
    members: set[int] = field(default_factory=set)
    matched_root: int | None = None
    matched_members: set[int] = field(default_factory=set)

    def freeze(self) -> DifferentialSubtree:
        return DifferentialSubtree(
            kind=self.kind,
            root=self.root,
            members=frozenset(self.members),
            matched_root=self.matched_root,
            matched_members=frozenset(self.matched_members),
        )


def _match_children(
    a_kids: list[DomNode], b_kids: list[DomNode], page_diag: float
) -> list[tuple[int, int, MatchScore]]:
    """Greedy one-to-one matching of two sibling lists.

    Candidate pairs at or above the edit threshold are taken best-score
    first; equal scores resolve by document order on both sides, which keeps
    the outcome independent of which tree is called A.
    """
    scored: list[tuple[float, int, int, MatchScore]] = []
    for i, a in enumerate(a_kids):
        for j, b in enumerate(b_kids):
            s = node_similarity(a, b, page_diag)
            if s.value >= EDIT_THRESHOLD or s.exact:
                scored.append((-s.value, i, j, s))
    scored.sort(key=lambda t: (t[0], t[1], t[2]))
    taken_a: set[int] = set()
    taken_b: set[int] = set()
    pairs: list[tuple[int, int, MatchScore]] = []
    for _, i, j, s in scored:
        if i in taken_a or j in taken_b:
            continue
        taken_a.add(i)
        taken_b.add(j)
        pairs.append((i, j, s))
    pairs.sort()
    return pairs


def diff_trees(tree_a: Snapshot, tree_b: Snapshot) -> DiffResult:
    """Compute the common tree and the ADDED/REMOVED/EDITED subtrees A -> B.

    The recursion walks matched pairs: children of a matched pair are matched
    among themselves only, unmatched subtrees become whole ADDED/REMOVED
    deltas, and runs of edited pairs coalesce into one EDITED delta rooted at
    the shallowest edited node.
    """
    page_diag = max(tree_a.page_diag(), tree_b.page_diag())
    common: set[tuple[int, int]] = set()
    deltas: list[DifferentialSubtree] = []

    def whole_subtree(snap: Snapshot, root_id: int, kind: DeltaKind) -> None:
        deltas.append(
            DifferentialSubtree(
                kind=kind, root=root_id, members=frozenset(snap.subtree_ids(root_id))
            )
        )

    def process_pair(a: DomNode, b: DomNode, score: MatchScore,
                     parent_edit: _DeltaBuilder | None) -> None:
        if score.exact:
            common.add((a.id, b.id))
            edit: _DeltaBuilder | None = None
        elif parent_edit is not None:
            parent_edit.members.add(a.id)
            parent_edit.matched_members.add(b.id)
            edit = parent_edit
        else:
            edit = _DeltaBuilder(DeltaKind.EDITED, a.id, {a.id}, b.id, {b.id})
            deltas.append(edit)  # frozen at the end

        a_kids = [tree_a.node(c) for c in a.children]
        b_kids = [tree_b.node(c) for c in b.children]
        pairs = _match_children(a_kids, b_kids, page_diag)
        matched_a = {i for i, _, _ in pairs}
        matched_b = {j for _, j, _ in pairs}
        for i, child in enumerate(a_kids):
            if i not in matched_a:
                whole_subtree(tree_a, child.id, DeltaKind.REMOVED)
        for j, child in enumerate(b_kids):
            if j not in matched_b:
                whole_subtree(tree_b, child.id, DeltaKind.ADDED)
        for i, j, s in pairs:
            process_pair(a_kids[i], b_kids[j], s, edit)

    root_a, root_b = tree_a.root, tree_b.root
    root_score = node_similarity(root_a, root_b, page_diag)
    if root_score.exact or root_score.value >= EDIT_THRESHOLD:
        process_pair(root_a, root_b, root_score, None)
    else:
        whole_subtree(tree_a, root_a.id, DeltaKind.REMOVED)
        whole_subtree(tree_b, root_b.id, DeltaKind.ADDED)

    frozen = tuple(d.freeze() if isinstance(d, _DeltaBuilder) else d for d in deltas)
    return DiffResult(common=frozenset(common), deltas=frozen)
