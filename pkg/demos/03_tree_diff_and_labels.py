"""Diff the three visits of a page and label every changed subtree.

The breaking list removes both the ad and the salient video player; the
fixed list removes only the ad. Diffing the visit pairs and applying the
decision table separates breakage from intended blocking and page dynamism.

Run:  python3 demos/03_tree_diff_and_labels.py
"""

from breakwatch import diff_trees, label_visit_triple, node_similarity
from breakwatch.fixtures import build_triple

triple = build_triple(seed=2024, scenario="broken_video", neutral_noise=True)
snap_n, snap_b, snap_f = triple.none, triple.breaking, triple.fixed

# --- node similarity: the building block for cross-visit identity
diag = max(snap_n.page_diag(), snap_b.page_diag())
a = snap_n.node(triple.meta["video_root_none"])
print(f"self-similarity of the player container: "
      f"{node_similarity(a, a, diag).value:.3f}")

# --- three diffs, one per transition
diff_nf = diff_trees(snap_n, snap_f)
diff_nb = diff_trees(snap_n, snap_b)
diff_bf = diff_trees(snap_b, snap_f)
for name, diff in (("none->fixed", diff_nf), ("none->breaking", diff_nb),
                   ("breaking->fixed", diff_bf)):
    kinds = ", ".join(f"{d.kind.value}({len(d.members)} nodes)" for d in diff.deltas)
    print(f"{name:>16}: {len(diff.common)} common pairs; deltas: {kinds or 'none'}")

# --- labels from the decision table
labeled = label_visit_triple(diff_nf, diff_nb, diff_bf, snap_n, snap_b, snap_f)
print("\nlabeled subtrees:")
for item in labeled:
    root = item.delta.root
    marker = ""
    # Root ids are per-snapshot; the recorded ids identify none-visit nodes,
    # so only none->breaking and none->fixed removals can be annotated by id.
    if item.delta.kind.value != "added":
        if root == triple.meta["video_root_none"]:
            marker = "  <- the wrongly blocked player"
        elif root == triple.meta["ad_root_none"]:
            marker = "  <- the ad, blocked by both lists"
    print(f"  [{item.transition.value:>6}] {item.delta.kind.value:<7} "
          f"root={root:<3} -> {item.label.value}{marker}")
