"""Segment a page into semantic blocks, extract the 31 saliency features,
train the block classifier on synthetic annotations, and plan interactions.

Run:  python3 demos/02_segmentation_and_saliency.py
"""

import math
import random

from breakwatch import leaf_blocks, segment_page
from breakwatch.fixtures import site_a_triple
from breakwatch.saliency import (
    SALIENCY_FEATURE_NAMES,
    LabeledBlock,
    SaliencyFeatureVector,
    extract_block_features,
    plan_interactions,
    score_block,
    train_saliency_model,
)

snap = site_a_triple().none

# --- segmentation: each round splits leaves at their strongest separator cue
for rounds in (1, 2, 4, 6):
    hierarchy = segment_page(snap, rounds=rounds)
    leaves = leaf_blocks(hierarchy)
    print(f"rounds={rounds}: {len(hierarchy.blocks)} blocks, {len(leaves)} leaves")

hierarchy = segment_page(snap, rounds=6)
leaves = leaf_blocks(hierarchy)
print("\nleaf blocks:")
for block in leaves:
    x, y, w, h = block.bbox
    print(f"  block {block.id}: {len(block.members)} nodes, "
          f"bbox ({x:.0f},{y:.0f}) {w:.0f}x{h:.0f}")

# --- features: 31 numbers per block, four categories
vec = extract_block_features(snap, leaves[0], leaves)
print(f"\nfeature vector has {len(vec.values)} entries; a few of them:")
for name in ("centrality", "group_width", "pct_text_nodes", "mean_font_size"):
    print(f"  {name:<18} = {vec[name]:.4f}")

# --- classifier: synthetic annotation corpus where centrality decides
rng = random.Random(7)
annotations = []
for _ in range(500):
    cx, cy = rng.random(), rng.random()
    centrality = math.exp(-10 * ((cx - 0.5) ** 2 + (cy - 0.5) ** 2))
    values = []
    for name in SALIENCY_FEATURE_NAMES:
        if name == "centrality":
            values.append(centrality)
        elif name.startswith("pct_") or name == "has_id_attr":
            values.append(rng.random())
        else:
            values.append(rng.random() * 50)
    annotations.append(LabeledBlock(SaliencyFeatureVector(tuple(values)), centrality > 0.8))

model = train_saliency_model(annotations, seed=11)
scored = [(b, score_block(model, extract_block_features(snap, b, leaves))) for b in leaves]
print("\nblock saliency scores:")
for block, score in scored:
    print(f"  block {block.id}: {score:.2f}")

# --- interaction planning: weighted by score, never the same block twice in a row
salient = [(b, s) for b, s in scored if s > 0.5] or scored
plans = plan_interactions(snap, salient, rng_seed=3, max_plans=4)
print("\nplanned interactions:")
for plan in plans:
    node = snap.node(plan.target)
    print(f"  {plan.kind.value} on <{node.tag}> (block {plan.source_block}, "
          f"weight {plan.weight:.2f})")
