"""Block saliency: features, classifier, and interaction planning.

A block is "salient" when its nodes are essential to what a user came to the
page for. The classifier scores 31 features per block covering content (tag
mix, text, class attributes), position (normalized centers), visual style
(size, color vibrancy, fonts), and structure (node counts). High-scoring
blocks are where automated interactions get planned, weighted by score and
never twice in a row from the same block.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .learn import (
    Dataset,
    FeatureMismatch,
    Hyperparams,
    ModelKind,
    SingleClassError,
    TreeEnsembleModel,
    resample,
    train_ensemble,
)
from .segmentation import Block
from .snapshot import InteractionKind, Snapshot

# Tag partition used by the saliency features. Interactive ("functional")
# membership wins over the text role, so the four classes partition all tags.
FUNCTIONAL_TAGS = frozenset({"a", "button", "input", "select", "textarea", "form"})
LAYOUT_TAGS = frozenset(
    {
        "html", "body", "div", "ul", "ol", "li", "table", "thead", "tbody", "tfoot",
        "tr", "td", "th", "section", "article", "nav", "aside", "header", "footer",
        "main", "hr", "br", "dl", "dt", "dd", "figure", "figcaption", "details",
        "summary", "fieldset", "menu", "col", "colgroup",
    }
)
TEXT_TAGS = frozenset(
    {
        "p", "h1", "h2", "h3", "h4", "h5", "h6", "span", "strong", "em", "b", "i",
        "u", "small", "blockquote", "pre", "code", "label", "caption", "cite", "q",
        "sup", "sub", "mark", "abbr", "time",
    }
)

TYPE_CAPABLE_INPUT_TYPES = frozenset(
    {"text", "search", "email", "url", "tel", "password", "number"}
)

SALIENT_THRESHOLD = 0.5

SALIENCY_FEATURE_NAMES: tuple[str, ...] = (
    "pct_layout_nodes_in_group",
    "total_class_attrs",
    "pct_layout_from_global",
    "mean_x_all_groups",
    "group_width",
    "has_id_attr",
    "pct_text_nodes",
    "total_functional_nodes_global",
    "pct_class_attrs",
    "total_layout_nodes_in_group",
    "group_center_x",
    "group_center_y",
    "total_layout_nodes_global",
    "text_entropy",
    "class_entropy",
    "total_text_nodes_global",
    "total_nodes_global",
    "total_text_length",
    "mean_color_vibrancy",
    "total_nodes_in_group",
    "pct_functional_from_global",
    "total_functional_nodes_in_group",
    "total_text_nodes_in_group",
    "group_height",
    "pct_functional_nodes",
    "group_size",
    "centrality",
    "mean_font_size",
    "mean_y_all_groups",
    "pct_text_from_global",
    "mean_font_weight",
)

SALIENCY_FEATURE_CATEGORIES: dict[str, str] = {
    "pct_layout_nodes_in_group": "content",
    "total_class_attrs": "content",
    "pct_layout_from_global": "content",
    "mean_x_all_groups": "positional",
    "group_width": "visual",
    "has_id_attr": "content",
    "pct_text_nodes": "content",
    "total_functional_nodes_global": "content",
    "pct_class_attrs": "content",
    "total_layout_nodes_in_group": "content",
    "group_center_x": "positional",
    "group_center_y": "positional",
    "total_layout_nodes_global": "content",
    "text_entropy": "content",
    "class_entropy": "content",
    "total_text_nodes_global": "content",
    "total_nodes_global": "structural",
    "total_text_length": "content",
    "mean_color_vibrancy": "visual",
    "total_nodes_in_group": "structural",
    "pct_functional_from_global": "content",
    "total_functional_nodes_in_group": "content",
    "total_text_nodes_in_group": "content",
    "group_height": "visual",
    "pct_functional_nodes": "content",
    "group_size": "visual",
    "centrality": "visual",
    "mean_font_size": "visual",
    "mean_y_all_groups": "positional",
    "pct_text_from_global": "content",
    "mean_font_weight": "visual",
}


def saliency_node_class(tag: str) -> str:
    """Partition tags into functional / layout / text / other."""
    if tag in FUNCTIONAL_TAGS:
        return "functional"
    if tag in LAYOUT_TAGS:
        return "layout"
    if tag in TEXT_TAGS:
        return "text"
    return "other"


def shannon_entropy(counts: Counter) -> float:
    """Natural-log Shannon entropy of a frequency table."""
    total = sum(counts.values())
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts.values():
        p = c / total
        h -= p * math.log(p)
    return h


def color_vibrancy(rgb: tuple[int, int, int]) -> float:
    """Saturation times value in HSV space, in [0, 1]."""
    mx = max(rgb) / 255.0
    mn = min(rgb) / 255.0
    if mx == 0:
        return 0.0
    sat = (mx - mn) / mx
    return sat * mx


@dataclass(frozen=True)
class SaliencyFeatureVector:
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(SALIENCY_FEATURE_NAMES):
            raise FeatureMismatch(
                f"expected {len(SALIENCY_FEATURE_NAMES)} features, got {len(self.values)}"
            )

    def as_dict(self) -> dict[str, float]:
        return dict(zip(SALIENCY_FEATURE_NAMES, self.values))

    def __getitem__(self, name: str) -> float:
        return self.values[SALIENCY_FEATURE_NAMES.index(name)]


@dataclass(frozen=True)
class LabeledBlock:
    features: SaliencyFeatureVector
    salient: bool


@dataclass(frozen=True)
class InteractionPlan:
    target: int
    kind: InteractionKind
    source_block: int
    weight: float


def _normalized_center(
    bbox: tuple[float, float, float, float], page: tuple[float, float, float, float]
) -> tuple[float, float]:
    px0, py0, px1, py1 = page
    cx = bbox[0] + bbox[2] / 2.0
    cy = bbox[1] + bbox[3] / 2.0
    # A degenerate page extent pins the coordinate to the center.
    nx = (cx - px0) / (px1 - px0) if px1 > px0 else 0.5
    ny = (cy - py0) / (py1 - py0) if py1 > py0 else 0.5
    return nx, ny


def extract_block_features(
    snap: Snapshot, block: Block, all_blocks: list[Block]
) -> SaliencyFeatureVector:
    """Compute the 31 saliency features for one block.

    Group-relative shares use the block's members; global counts and shares
    use the union of all blocks' members. Empty denominators yield 0.
    """
    page = snap.page_bbox()
    members = [snap.node(i) for i in sorted(block.members)]
    global_ids = sorted(set().union(*(b.members for b in all_blocks)) if all_blocks else set())
    global_nodes = [snap.node(i) for i in global_ids]

    def class_counts(nodes) -> Counter:
        return Counter(saliency_node_class(n.tag) for n in nodes)

    local = class_counts(members)
    glob = class_counts(global_nodes)
    n_local = len(members)
    n_global = len(global_nodes)

    def share(part: int, whole: int) -> float:
        return part / whole if whole else 0.0

    centers = [_normalized_center(b.bbox, page) for b in all_blocks]
    mean_x = sum(c[0] for c in centers) / len(centers) if centers else 0.0
    mean_y = sum(c[1] for c in centers) / len(centers) if centers else 0.0
    nx, ny = _normalized_center(block.bbox, page)

    text = "".join(n.cues.text for n in members)
    class_tokens = Counter(t for n in members for t in n.attrs.class_list)
    with_class = sum(1 for n in members if n.attrs.class_list)

    vib = [color_vibrancy(n.cues.background_color) for n in members]
    fonts = [n.cues.font_size for n in members]
    weights = [n.cues.font_weight for n in members]

    centrality = math.exp(-10.0 * ((nx - 0.5) ** 2 + (ny - 0.5) ** 2))

    values = {
        "pct_layout_nodes_in_group": share(local["layout"], n_local),
        "total_class_attrs": float(with_class),
        "pct_layout_from_global": share(local["layout"], glob["layout"]),
        "mean_x_all_groups": mean_x,
        "group_width": block.bbox[2],
        "has_id_attr": float(any(n.attrs.html_id for n in members)),
        "pct_text_nodes": share(local["text"], n_local),
        "total_functional_nodes_global": float(glob["functional"]),
        "pct_class_attrs": share(with_class, n_local),
        "total_layout_nodes_in_group": float(local["layout"]),
        "group_center_x": nx,
        "group_center_y": ny,
        "total_layout_nodes_global": float(glob["layout"]),
        "text_entropy": shannon_entropy(Counter(text)),
        "class_entropy": shannon_entropy(class_tokens),
        "total_text_nodes_global": float(glob["text"]),
        "total_nodes_global": float(n_global),
        "total_text_length": float(len(text)),
        "mean_color_vibrancy": sum(vib) / len(vib) if vib else 0.0,
        "total_nodes_in_group": float(n_local),
        "pct_functional_from_global": share(local["functional"], glob["functional"]),
        "total_functional_nodes_in_group": float(local["functional"]),
        "total_text_nodes_in_group": float(local["text"]),
        "group_height": block.bbox[3],
        "pct_functional_nodes": share(local["functional"], n_local),
        "group_size": block.bbox[2] * block.bbox[3],
        "centrality": centrality,
        "mean_font_size": sum(fonts) / len(fonts) if fonts else 0.0,
        "mean_y_all_groups": mean_y,
        "pct_text_from_global": share(local["text"], glob["text"]),
        "mean_font_weight": sum(weights) / len(weights) if weights else 0.0,
    }
    return SaliencyFeatureVector(tuple(values[n] for n in SALIENCY_FEATURE_NAMES))


def _to_dataset(data: list[LabeledBlock]) -> Dataset:
    X = np.array([lb.features.values for lb in data], dtype=np.float64)
    y = np.array([1 if lb.salient else 0 for lb in data], dtype=np.int64)
    return Dataset(
        X=X,
        y=y,
        feature_names=SALIENCY_FEATURE_NAMES,
        class_names=("not_salient", "salient"),
    )


def train_saliency_model(
    data: list[LabeledBlock], seed: int, n_trees: int = 100, k_neighbors: int = 5
) -> TreeEnsembleModel:
    """Train the 100-tree random-forest saliency classifier.

    The salient class is a small minority in annotated corpora, so training
    data is rebalanced with synthetic minority samples first. Deterministic
    for a fixed seed.
    """
    ds = _to_dataset(data)
    counts = np.bincount(ds.y, minlength=2)
    if counts.min() == 0:
        raise SingleClassError("need both salient and non-salient blocks")
    k = min(k_neighbors, int(counts.min()) - 1)
    if k >= 1 and counts.min() < counts.max():
        ds = resample(ds, "smote", k_neighbors=k, rng_seed=seed)
    hp = Hyperparams(n_trees=n_trees, max_depth=12, max_features="sqrt")
    return train_ensemble(ds, ModelKind.RANDOM_FOREST, hp, rng_seed=seed)


def score_block(model: TreeEnsembleModel, features: SaliencyFeatureVector) -> float:
    """Fraction of forest votes for the salient class."""
    if model.feature_names != SALIENCY_FEATURE_NAMES:
        raise FeatureMismatch("model was not trained on the saliency feature set")
    proba = model.predict_proba(np.array([features.values], dtype=np.float64))[0]
    return float(proba[model.class_names.index("salient")])


def score_blocks(
    model: TreeEnsembleModel, snap: Snapshot, blocks: list[Block]
) -> list[tuple[Block, float]]:
    """Score every block of one snapshot against a trained model."""
    return [
        (b, score_block(model, extract_block_features(snap, b, blocks))) for b in blocks
    ]


def _interaction_candidates(snap: Snapshot, block: Block) -> list[tuple[int, InteractionKind]]:
    out = []
    for nid in sorted(block.members):
        node = snap.node(nid)
        if node.tag == "textarea":
            out.append((nid, InteractionKind.TYPE))
        elif node.tag == "input":
            input_type = node.attrs.extra_dict().get("type", "text")
            kind = (
                InteractionKind.TYPE
                if input_type in TYPE_CAPABLE_INPUT_TYPES
                else InteractionKind.CLICK
            )
            out.append((nid, kind))
        elif node.tag in FUNCTIONAL_TAGS:
            out.append((nid, InteractionKind.CLICK))
    return out


def plan_interactions(
    snap: Snapshot,
    scored: list[tuple[Block, float]],
    rng_seed: int,
    max_plans: int,
    threshold: float = 0.0,
) -> list[InteractionPlan]:
    """Plan up to `max_plans` single-target interactions on salient blocks.

    Callers pass the blocks that already cleared their saliency cut; scores
    act as sampling weights here (`threshold` can refilter if needed). Blocks
    are sampled with probability proportional to their score, the same block
    never supplies two consecutive plans, and each plan names exactly one
    target. Deterministic for a fixed seed; no salient blocks yield an empty
    plan.
    """
    rng = random.Random(rng_seed)
    salient = [
        (b, p, _interaction_candidates(snap, b))
        for b, p in scored
        if p > threshold and _interaction_candidates(snap, b)
    ]
    plans: list[InteractionPlan] = []
    last_block: int | None = None
    while len(plans) < max_plans:
        pool = [(b, p, cands) for b, p, cands in salient if b.id != last_block]
        if not pool:
            break
        total = sum(p for _, p, _ in pool)
        pick = rng.random() * total
        acc = 0.0
        chosen = pool[-1]
        for entry in pool:
            acc += entry[1]
            if pick < acc:
                chosen = entry
                break
        block, prob, cands = chosen
        target, kind = cands[rng.randrange(len(cands))]
        plans.append(
            InteractionPlan(target=target, kind=kind, source_block=block.id, weight=prob)
        )
        last_block = block.id
    return plans
