"""Top-down segmentation of a rendered DOM into a hierarchy of semantic blocks.

Each round every leaf block looks for its strongest separator cue and splits
there. Cues are computed from DOM structure and visual style: explicit
divider elements, background-color changes, media-element edges, and font
changes between text runs. More rounds only ever refine the hierarchy; they
never merge blocks back together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .snapshot import DomNode, Snapshot

log = logging.getLogger(__name__)

# Pages shorter than this are segmented anyway, with a warning: cue statistics
# get unreliable on tiny documents.
SMALL_PAGE_ELEMENTS = 64


class EmptyPage(Exception):
    """The snapshot has no rendered nodes to segment."""


@dataclass(frozen=True)
class SegmentationConfig:
    """Separator weights and the split threshold.

    Defaults favor explicit dividers, then media edges, then background
    changes, then font changes; anything scoring at or below `threshold`
    does not split a block.
    """

    divider_weight: float = 1.0
    media_weight: float = 0.9
    background_weight: float = 0.8
    font_weight: float = 0.5
    threshold: float = 0.4
    media_tags: frozenset[str] = frozenset({"img", "video", "object", "embed", "iframe"})
    divider_class_tokens: frozenset[str] = frozenset({"divider", "separator"})


DEFAULT_SEGMENTATION = SegmentationConfig()

DEFAULT_ROUNDS = 6


@dataclass(frozen=True)
class Block:
    id: int
    members: frozenset[int]
    bbox: tuple[float, float, float, float]  # (x, y, width, height)
    children: tuple[int, ...]
    round_created: int


@dataclass(frozen=True)
class BlockHierarchy:
    root: int
    rounds: int
    blocks: dict[int, Block]

    def block(self, block_id: int) -> Block:
        return self.blocks[block_id]


@dataclass
class _Region:
    """Mutable block under construction: a run of subtree tops plus any
    ancestor/divider nodes that were folded into it during splits."""

    units: list[DomNode]
    carried: list[int] = field(default_factory=list)
    block_id: int = -1
    round_created: int = 0
    children: list[int] = field(default_factory=list)


def _is_divider(node: DomNode, cfg: SegmentationConfig) -> bool:
    if node.tag == "hr":
        return True
    if node.tag == "div":
        tokens = {t.lower() for t in node.attrs.class_list}
        if tokens & cfg.divider_class_tokens:
            return True
        if node.attrs.extra_dict().get("role") == "separator":
            return True
    return False


def _boundary_weight(left: DomNode, right: DomNode, cfg: SegmentationConfig,
                     has_text: dict[int, bool]) -> float:
    w = 0.0
    if left.tag in cfg.media_tags or right.tag in cfg.media_tags:
        w = max(w, cfg.media_weight)
    if left.cues.background_color != right.cues.background_color:
        w = max(w, cfg.background_weight)
    if has_text[left.id] and has_text[right.id]:
        if (left.cues.font_size, left.cues.font_weight) != (
            right.cues.font_size,
            right.cues.font_weight,
        ):
            w = max(w, cfg.font_weight)
    return w


def segment_page(
    snap: Snapshot,
    rounds: int = DEFAULT_ROUNDS,
    config: SegmentationConfig = DEFAULT_SEGMENTATION,
) -> BlockHierarchy:
    """Segment a snapshot into a block hierarchy using `rounds` split passes.

    Only rendered nodes (visible, nonzero area) become block members. Each
    round each leaf splits at most once, at its maximum-weight separator, so
    the hierarchy for `rounds` + 1 refines the one for `rounds`.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")

    rendered_in_subtree: dict[int, int] = {}
    has_text: dict[int, bool] = {}

    def fill(node: DomNode) -> tuple[int, bool]:
        count = 1 if node.rendered else 0
        text = bool(node.cues.text.strip())
        for c in node.children:
            sub_count, sub_text = fill(snap.node(c))
            count += sub_count
            text = text or sub_text
        rendered_in_subtree[node.id] = count
        has_text[node.id] = text
        return count, text

    root_node = snap.root
    fill(root_node)
    if rendered_in_subtree[root_node.id] == 0:
        raise EmptyPage(f"no rendered nodes in snapshot of {snap.page_url}")
    if len(snap.nodes) < SMALL_PAGE_ELEMENTS:
        log.warning(
            "page %s has only %d elements; segmentation cues may be unreliable",
            snap.page_url,
            len(snap.nodes),
        )

    def rendered_children(node: DomNode) -> list[DomNode]:
        return [
            snap.node(c) for c in node.children if rendered_in_subtree[c] > 0
        ]

    def split_point(region: _Region) -> tuple[list[DomNode], list[int], int] | None:
        """Resolve the child run a region would split over.

        Descends through single-child chains so one round is never wasted on
        a wrapper element; returns (run, swallowed ancestor ids, best index)
        or None when the region cannot split.
        """
        units = region.units
        swallowed: list[int] = []
        while len(units) == 1:
            u = units[0]
            kids = rendered_children(u)
            if not kids:
                return None
            if u.rendered:
                swallowed.append(u.id)
            units = kids
        best_idx, best_w = -1, 0.0
        for i in range(len(units) - 1):
            w = _boundary_weight(units[i], units[i + 1], config, has_text)
            if _is_divider(units[i], config) or _is_divider(units[i + 1], config):
                w = max(w, config.divider_weight)
            if w > best_w:
                best_idx, best_w = i, w
        if best_idx < 0 or best_w <= config.threshold:
            return None
        return units, swallowed, best_idx

    regions: list[_Region] = []
    root_region = _Region(units=[root_node])
    regions.append(root_region)
    leaves = [root_region]

    for round_no in range(1, rounds + 1):
        next_leaves: list[_Region] = []
        for region in leaves:
            plan = split_point(region)
            if plan is None:
                next_leaves.append(region)
                continue
            units, swallowed, idx = plan
            left = _Region(
                units=units[: idx + 1],
                carried=region.carried + swallowed,
                round_created=round_no,
            )
            right = _Region(units=units[idx + 1 :], round_created=round_no)
            regions.extend((left, right))
            region.children = [len(regions) - 2, len(regions) - 1]
            region.units = units  # remember the resolved run
            region.carried = region.carried + swallowed
            next_leaves.extend((left, right))
        leaves = next_leaves

    # Freeze: assign ids in creation order and materialize member sets.
    blocks: dict[int, Block] = {}

    def members_of(region: _Region) -> frozenset[int]:
        ids: set[int] = {c for c in region.carried if snap.node(c).rendered}
        for unit in region.units:
            ids.update(i for i in snap.subtree_ids(unit.id) if snap.node(i).rendered)
        return frozenset(ids)

    def bbox_of(members: frozenset[int]) -> tuple[float, float, float, float]:
        cues = [snap.node(i).cues for i in members]
        x0 = min(c.x for c in cues)
        y0 = min(c.y for c in cues)
        x1 = max(c.x + c.width for c in cues)
        y1 = max(c.y + c.height for c in cues)
        return (x0, y0, x1 - x0, y1 - y0)

    for idx, region in enumerate(regions):
        region.block_id = idx
    for region in regions:
        members = members_of(region)
        blocks[region.block_id] = Block(
            id=region.block_id,
            members=members,
            bbox=bbox_of(members),
            children=tuple(regions[i].block_id for i in region.children),
            round_created=region.round_created,
        )
    return BlockHierarchy(root=root_region.block_id, rounds=rounds, blocks=blocks)


def leaf_blocks(hierarchy: BlockHierarchy) -> list[Block]:
    """Childless blocks in document order of their first member."""
    leaves = [b for b in hierarchy.blocks.values() if not b.children]
    return sorted(leaves, key=lambda b: min(b.members))
