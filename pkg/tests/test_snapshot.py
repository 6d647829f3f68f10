import json
import random
from importlib import resources

import pytest

from breakwatch.fixtures import build_triple, site_a_triple
from breakwatch.snapshot import (
    Condition,
    DanglingReferenceError,
    EdgeKind,
    Interaction,
    InteractionKind,
    JsError,
    Request,
    SchemaError,
    ScriptTouch,
    build_environment_graph,
    parse_snapshot,
    serialize_snapshot,
    validate_snapshot,
)

from .conftest import build_snapshot, make_node
from .treegen import MutableTree

MINIMAL = {
    "page_url": "https://one.example/",
    "condition": "none",
    "captured_at": "2024-05-01T00:00:00Z",
    "nodes": [
        {
            "id": 0,
            "tag": "html",
            "parent": None,
            "children": [],
            "attrs": {},
            "cues": {
                "x": 0,
                "y": 0,
                "w": 800,
                "h": 600,
                "visible": True,
                "text": "",
                "bg": [255, 255, 255],
                "font_size": 16,
                "font_weight": 400,
            },
        }
    ],
    "requests": [],
    "interactions": [],
    "errors": [],
    "touches": [],
}


class TestParse:
    def test_minimal_document(self):
        snap = parse_snapshot(json.dumps(MINIMAL))
        assert len(snap.nodes) == 1
        assert snap.condition is Condition.NONE
        assert validate_snapshot(snap) == []

    def test_missing_field_is_schema_error(self):
        doc = dict(MINIMAL)
        del doc["page_url"]
        with pytest.raises(SchemaError):
            parse_snapshot(json.dumps(doc))

    def test_wrong_type_is_schema_error(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["nodes"][0]["tag"] = 7
        with pytest.raises(SchemaError):
            parse_snapshot(json.dumps(doc))

    def test_unknown_condition_is_schema_error(self):
        doc = dict(MINIMAL, condition="other")
        with pytest.raises(SchemaError):
            parse_snapshot(json.dumps(doc))

    def test_interaction_with_unknown_target_is_dangling(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["interactions"] = [{"kind": "click", "target": 99, "timestamp": 5.0}]
        with pytest.raises(DanglingReferenceError):
            parse_snapshot(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(SchemaError):
            parse_snapshot(b"{nope")

    def test_bundled_fixture_counts_match_manifest(self):
        data = resources.files("breakwatch.data").joinpath("fixtures")
        manifest = json.loads(data.joinpath("manifest.json").read_text())
        for fname, expected in manifest["files"].items():
            snap = parse_snapshot(data.joinpath(fname).read_bytes())
            assert len(snap.nodes) == expected["nodes"]
            assert len(snap.requests) == expected["requests"]
            assert len(snap.interactions) == expected["interactions"]
            assert snap.condition.value == expected["condition"]
            assert validate_snapshot(snap) == []


class TestRoundTrip:
    def test_fixture_triples_round_trip(self):
        triple = build_triple(3, "broken_video", neutral_noise=True)
        for snap in (triple.none, triple.breaking, triple.fixed):
            assert parse_snapshot(serialize_snapshot(snap)) == snap

    def test_random_snapshots_round_trip(self):
        rng = random.Random(8)
        for _ in range(50):
            snap = MutableTree.random(rng, 20).freeze()
            assert parse_snapshot(serialize_snapshot(snap)) == snap


class TestValidate:
    def test_two_roots(self):
        snap = build_snapshot([make_node(0, tag="html"), make_node(1, tag="div")])
        codes = [v.code for v in validate_snapshot(snap)]
        assert codes == ["MULTIPLE_ROOTS"]

    def test_injected_defects_are_reported_exactly(self):
        base = site_a_triple().none

        def expect(codes, **replacements):
            snap = build_snapshot(
                replacements.pop("nodes", base.nodes),
                condition=base.condition,
                url=base.page_url,
                **replacements,
            )
            assert sorted(v.code for v in validate_snapshot(snap)) == sorted(codes)

        expect(
            ["BAD_REQUEST_INITIATOR"],
            requests=(Request("https://x.example/r", initiator=10_000, timestamp=1.0),),
        )
        expect(
            ["BAD_INTERACTION_TARGET"],
            interactions=(Interaction(InteractionKind.CLICK, 10_000, 1.0),),
        )
        expect(
            ["TYPED_TEXT_MISMATCH"],
            interactions=(Interaction(InteractionKind.TYPE, 0, 1.0, typed_text=None),),
        )
        expect(
            ["TYPED_TEXT_MISMATCH"],
            interactions=(Interaction(InteractionKind.CLICK, 0, 1.0, typed_text="hi"),),
        )
        expect(
            ["BAD_TOUCH_NODE"],
            touches=(ScriptTouch("https://cdn.x.example/s.js", 10_000, 1.0),),
        )
        expect(
            ["BAD_ERROR_CAUSE"],
            errors=(JsError("ReferenceError", "x is not defined", 1.0, cause_interaction=5),),
        )
        expect(["BAD_SALIENT_REF"], salient_blocks=(frozenset({10_000}),))

    def test_reparent_mismatch_reported_twice(self):
        base = site_a_triple().none
        victim = base.nodes[5]
        moved = make_node(
            victim.id,
            tag=victim.tag,
            parent=victim.parent + 1 if victim.parent is not None else 1,
            children=victim.children,
            cues=victim.cues,
        )
        nodes = [moved if n.id == victim.id else n for n in base.nodes]
        codes = [v.code for v in validate_snapshot(build_snapshot(nodes))]
        assert codes.count("PARENT_CHILD_MISMATCH") == 2
        assert set(codes) == {"PARENT_CHILD_MISMATCH"}

    def test_negative_dimensions(self):
        snap = build_snapshot([make_node(0, tag="html", w=-5)])
        assert [v.code for v in validate_snapshot(snap)] == ["NEGATIVE_DIMENSION"]


class TestEnvironmentGraph:
    def test_image_request_edge(self):
        nodes = [
            make_node(0, tag="html", children=(1,)),
            make_node(1, tag="img", parent=0, src="https://cdn.x.example/i.png"),
        ]
        snap = build_snapshot(
            nodes, requests=(Request("https://cdn.x.example/i.png", 1, 10.0),)
        )
        graph = build_environment_graph(snap)
        request_edges = graph.edges_of_kind(EdgeKind.REQUEST)
        assert len(request_edges) == 1
        assert request_edges[0].src == ("dom", 1)
        assert request_edges[0].dst == ("request", 0)

    def test_click_error_chain(self):
        nodes = [
            make_node(0, tag="html", children=(1,)),
            make_node(1, tag="button", parent=0, text="go"),
        ]
        snap = build_snapshot(
            nodes,
            interactions=(Interaction(InteractionKind.CLICK, 1, 100.0),),
            errors=(
                JsError("ReferenceError", "player is not defined", 120.0, cause_interaction=0),
            ),
        )
        graph = build_environment_graph(snap)
        chain = [
            (("dom", 1), ("interaction", 0), EdgeKind.INTERACTION),
            (("interaction", 0), ("error", 0), EdgeKind.ERROR),
        ]
        edges = [(e.src, e.dst, e.kind) for e in graph.edges]
        for link in chain:
            assert link in edges

    def test_plain_dom_has_no_edges(self):
        snap = build_snapshot([make_node(0, tag="html")])
        graph = build_environment_graph(snap)
        assert graph.edges == ()
        assert ("dom", 0) in graph.nodes

    def test_edge_count_formula(self):
        triple = build_triple(11, "broken_video")
        for snap in (triple.none, triple.breaking, triple.fixed):
            graph = build_environment_graph(snap)
            initiated = sum(1 for r in snap.requests if r.initiator is not None)
            caused = sum(1 for e in snap.errors if e.cause_interaction is not None)
            expected = initiated + len(snap.touches) + len(snap.interactions) + caused
            assert len(graph.edges) == expected
