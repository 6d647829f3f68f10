import random

import pytest

from breakwatch.snapshot import Condition
from breakwatch.treediff import (
    DeltaKind,
    best_match,
    diff_trees,
    node_similarity,
    text_similarity,
)

from .conftest import build_snapshot, make_node
from .oracles import bruteforce_diff_kinds, check_conservation, diffresult_kinds
from .treegen import random_pair


def two_node_page(**kwargs):
    root = make_node(0, tag="html", children=(1,), w=1000, h=1000)
    child = make_node(1, tag="div", parent=0, **kwargs)
    return build_snapshot([root, child])


class TestNodeSimilarity:
    def test_different_html_id_disqualifies(self):
        a = make_node(0, html_id="a")
        b = make_node(0, html_id="b")
        score = node_similarity(a, b, 1000.0)
        assert score.value == 0.0
        assert score.disqualified

    def test_different_src_disqualifies(self):
        a = make_node(0, tag="img", src="https://x.example/a.png")
        b = make_node(0, tag="img", src="https://x.example/b.png")
        assert node_similarity(a, b, 1000.0).disqualified

    def test_different_name_disqualifies(self):
        a = make_node(0, tag="input", name="q")
        b = make_node(0, tag="input", name="s")
        assert node_similarity(a, b, 1000.0).disqualified

    def test_tag_mismatch_scores_zero(self):
        a = make_node(0, tag="div")
        b = make_node(0, tag="p")
        assert node_similarity(a, b, 1000.0).value == 0.0

    def test_absent_attribute_is_compatible(self):
        a = make_node(0, html_id="a")
        b = make_node(0)
        score = node_similarity(a, b, 1000.0)
        assert not score.disqualified
        assert score.exact

    def test_identical_nodes_score_one(self):
        a = make_node(0, text="hello", classes=("x",), x=40, y=60)
        b = make_node(0, text="hello", classes=("x",), x=40, y=60)
        score = node_similarity(a, b, 1000.0)
        assert score.value == 1.0
        assert score.exact

    def test_partial_class_overlap_formula(self):
        # text equal (1.0), classes {x,y} vs {x} (0.5), same position (1.0)
        a = make_node(0, html_id="k", text="t", classes=("x", "y"))
        b = make_node(0, html_id="k", text="t", classes=("x",))
        score = node_similarity(a, b, 1000.0)
        assert score.value == pytest.approx((1.0 + 0.5 + 1.0) / 3.0, abs=1e-12)
        assert not score.exact

    def test_distance_normalized_by_diagonal(self):
        a = make_node(0, x=0, y=0, w=0, h=0)
        b = make_node(0, x=300, y=400, w=0, h=0)  # distance 500
        score = node_similarity(a, b, 1000.0)
        assert score.value == pytest.approx((1.0 + 1.0 + 0.5) / 3.0)

    def test_text_similarity_is_lcs_ratio(self):
        assert text_similarity("", "") == 1.0
        assert text_similarity("abc", "") == 0.0
        assert text_similarity("abcd", "abxd") == pytest.approx(3 / 4)

    def test_page_diag_must_be_positive(self):
        with pytest.raises(ValueError):
            node_similarity(make_node(0), make_node(1), 0.0)


class TestBestMatch:
    def test_empty_candidates(self):
        node, score = best_match(make_node(0), [], 1000.0)
        assert node is None
        assert score.value == 0.0

    def test_identical_candidate_wins(self):
        a = make_node(0, text="hi")
        other = make_node(1, text="completely different words")
        same = make_node(2, text="hi")
        node, score = best_match(a, [other, same], 1000.0)
        assert node is same
        assert score.value == 1.0

    def test_tie_goes_to_earliest_candidate(self):
        a = make_node(0, text="shared text", x=0, y=0)
        low = make_node(1, text="zzz qqq", x=900, y=900)
        tie1 = make_node(2, text="shared text", x=300, y=0)
        tie2 = make_node(3, text="shared text", x=0, y=300)
        node, score = best_match(a, [low, tie1, tie2], 1000.0)
        s1 = node_similarity(a, tie1, 1000.0).value
        s2 = node_similarity(a, tie2, 1000.0).value
        assert s1 == s2  # construction gives an exact tie
        assert node is tie1
        assert score.value == s1


class TestDiffTrees:
    def test_identical_trees_all_common(self):
        snap = two_node_page(text="x")
        result = diff_trees(snap, snap)
        assert result.deltas == ()
        assert result.common == frozenset({(0, 0), (1, 1)})

    def test_single_removed_leaf(self):
        a = build_snapshot(
            [
                make_node(0, tag="html", children=(1, 2), w=1000, h=800),
                make_node(1, tag="div", parent=0, text="keep"),
                make_node(2, tag="p", parent=0, text="gone", y=200),
            ]
        )
        b = build_snapshot(
            [
                make_node(0, tag="html", children=(1,), w=1000, h=800),
                make_node(1, tag="div", parent=0, text="keep"),
            ],
            condition=Condition.BREAKING,
        )
        result = diff_trees(a, b)
        assert len(result.deltas) == 1
        delta = result.deltas[0]
        assert delta.kind is DeltaKind.REMOVED
        assert delta.root == 2
        assert delta.members == frozenset({2})

    def test_edited_region_is_contiguous(self):
        def page(text_mid, text_leaf, condition=Condition.NONE):
            return build_snapshot(
                [
                    make_node(0, tag="html", children=(1,), w=1000, h=800),
                    make_node(1, tag="div", parent=0, children=(2,), text=text_mid),
                    make_node(2, tag="p", parent=1, text=text_leaf, y=100),
                ],
                condition=condition,
            )

        a = page("menu one", "body text")
        b = page("menu two", "body text word", Condition.BREAKING)
        result = diff_trees(a, b)
        assert len(result.deltas) == 1
        delta = result.deltas[0]
        assert delta.kind is DeltaKind.EDITED
        assert delta.root == 1
        assert delta.members == frozenset({1, 2})
        assert delta.matched_members == frozenset({1, 2})

    def test_edit_below_common_parent_starts_new_delta(self):
        def page(leaf_text, condition=Condition.NONE):
            return build_snapshot(
                [
                    make_node(0, tag="html", children=(1,), w=1000, h=800),
                    make_node(1, tag="div", parent=0, children=(2,), text="same"),
                    make_node(2, tag="p", parent=1, text=leaf_text, y=100),
                ],
                condition=condition,
            )

        result = diff_trees(page("alpha"), page("alpha beta", Condition.BREAKING))
        assert [d.kind for d in result.deltas] == [DeltaKind.EDITED]
        assert result.deltas[0].root == 2
        assert (1, 1) in result.common

    def test_matches_bruteforce_on_random_pairs(self):
        rng = random.Random(99)
        for _ in range(120):
            snap_a, snap_b = random_pair(rng, max_nodes=18)
            fast = diffresult_kinds(diff_trees(snap_a, snap_b), snap_a, snap_b)
            slow = bruteforce_diff_kinds(snap_a, snap_b)
            assert fast == slow

    def test_node_conservation_fuzz(self):
        rng = random.Random(5)
        for _ in range(300):
            snap_a, snap_b = random_pair(rng, max_nodes=20)
            check_conservation(diff_trees(snap_a, snap_b), snap_a, snap_b)

    def test_symmetry_under_argument_swap(self):
        rng = random.Random(17)
        swap = {"added": "removed", "removed": "added", "edited": "edited", "common": "common"}
        for _ in range(200):
            snap_a, snap_b = random_pair(rng, max_nodes=16)
            fwd = diff_trees(snap_a, snap_b)
            rev = diff_trees(snap_b, snap_a)
            fwd_a, fwd_b, fwd_common = diffresult_kinds(fwd, snap_a, snap_b)
            rev_b, rev_a, rev_common = diffresult_kinds(rev, snap_b, snap_a)
            assert fwd_a == {k: swap[v] for k, v in rev_a.items()}
            assert fwd_b == {k: swap[v] for k, v in rev_b.items()}
            assert fwd_common == {(a, b) for b, a in rev_common}

    def test_common_pairs_score_exactly_one(self):
        rng = random.Random(23)
        for _ in range(60):
            snap_a, snap_b = random_pair(rng, max_nodes=14)
            diag = max(snap_a.page_diag(), snap_b.page_diag())
            result = diff_trees(snap_a, snap_b)
            for a_id, b_id in result.common:
                s = node_similarity(snap_a.node(a_id), snap_b.node(b_id), diag)
                assert s.exact and s.value == 1.0

    def test_deterministic(self):
        rng = random.Random(31)
        for _ in range(40):
            snap_a, snap_b = random_pair(rng, max_nodes=16)
            assert diff_trees(snap_a, snap_b) == diff_trees(snap_a, snap_b)

    def test_edited_members_form_connected_subtree(self):
        rng = random.Random(41)
        for _ in range(150):
            snap_a, snap_b = random_pair(rng, max_nodes=18)
            for delta in diff_trees(snap_a, snap_b).deltas:
                snap = snap_b if delta.kind is DeltaKind.ADDED else snap_a
                members = delta.members
                for nid in members:
                    if nid == delta.root:
                        continue
                    parent = snap.node(nid).parent
                    assert parent in members, "member detached from its delta"
