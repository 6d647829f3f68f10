"""Deterministic fixture pages and visit triples.

Builds self-consistent snapshot triples (no list / breaking list / fixed
list) for tests, demos, and training-data synthesis. A page is a randomized
but seeded template: header and footer chrome, an article, a salient video
player with a click target, an image gallery, and an ad iframe. Scenario
flags decide what the breaking list wrongly removes or squashes.

Run as a module to write the bundled fixture files:

    python -m breakwatch.fixtures <output-dir>
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .snapshot import (
    Condition,
    DomNode,
    Interaction,
    InteractionKind,
    NodeAttrs,
    Request,
    ScriptTouch,
    Snapshot,
    VisualCues,
    serialize_snapshot,
)

APP_SCRIPT_URL = "https://cdn.sitecdn.example/app.js"
AD_SCRIPT_URL = "https://ads.bannerhub.example/loader.js"

_WORDS = (
    "stream", "local", "weather", "report", "match", "recipe", "travel", "guide",
    "market", "update", "review", "live", "daily", "photo", "story", "league",
)


@dataclass
class ElementSpec:
    """One node of the page template, before condition-specific edits."""

    tag: str
    x: float
    y: float
    w: float
    h: float
    text: str = ""
    bg: tuple[int, int, int] = (255, 255, 255)
    font_size: float = 16.0
    font_weight: float = 400.0
    visible: bool = True
    html_id: str | None = None
    classes: tuple[str, ...] = ()
    src: str | None = None
    name: str | None = None
    extra: tuple[tuple[str, str], ...] = ()
    role: str | None = None  # ad | video | play | promo | gallery | article
    children: list["ElementSpec"] = field(default_factory=list)

    def add(self, child: "ElementSpec") -> "ElementSpec":
        self.children.append(child)
        return child


def _lorem(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def build_page_spec(rng: random.Random) -> ElementSpec:
    """Randomized page template with role-tagged regions."""
    page_w = 1024.0
    html = ElementSpec("html", 0, 0, page_w, 1800)
    body = html.add(ElementSpec("body", 0, 0, page_w, 1800))

    header = body.add(
        ElementSpec("header", 0, 0, page_w, 80, bg=(24, 24, 48), html_id="top")
    )
    nav = header.add(ElementSpec("nav", 0, 10, 600, 60, bg=(24, 24, 48)))
    for i in range(rng.randint(5, 8)):
        nav.add(
            ElementSpec(
                "a",
                20 + 90 * i,
                25,
                80,
                30,
                text=_lorem(rng, 1),
                bg=(24, 24, 48),
                font_weight=600.0,
            )
        )

    main = body.add(ElementSpec("main", 0, 90, 700, 1500))
    article = main.add(
        ElementSpec("article", 20, 100, 660, 380, role="article", classes=("content",))
    )
    article.add(
        ElementSpec("h1", 30, 110, 600, 40, text=_lorem(rng, 4), font_size=32, font_weight=700)
    )
    for i in range(rng.randint(8, 13)):
        para = article.add(
            ElementSpec(
                "p",
                30,
                170 + 26 * i,
                620,
                22,
                text=_lorem(rng, rng.randint(10, 22)),
            )
        )
        if rng.random() < 0.4:
            para.add(
                ElementSpec(
                    "span",
                    36,
                    172 + 26 * i,
                    90,
                    18,
                    text=_lorem(rng, 2),
                    font_weight=600.0,
                )
            )

    related = main.add(
        ElementSpec("section", 20, 430, 660, 80, classes=("related",))
    )
    related.add(ElementSpec("h2", 24, 432, 200, 22, text=_lorem(rng, 2), font_size=20))
    rel_list = related.add(ElementSpec("ul", 24, 456, 600, 50))
    for i in range(rng.randint(5, 9)):
        item = rel_list.add(ElementSpec("li", 28, 458 + 5 * i, 580, 5))
        item.add(ElementSpec("a", 30, 458 + 5 * i, 560, 5, text=_lorem(rng, 3)))

    player = main.add(
        ElementSpec(
            "div",
            40,
            520,
            620,
            400,
            role="video",
            html_id="player-box",
            classes=("player",),
            bg=(10, 10, 10),
        )
    )
    player.add(
        ElementSpec(
            "video",
            50,
            530,
            600,
            320,
            src="https://media.videocdn.example/clip.mp4",
            bg=(0, 0, 0),
        )
    )
    player.add(
        ElementSpec(
            "button",
            60,
            860,
            120,
            40,
            role="play",
            text="Play",
            html_id="play",
            classes=("play-btn",),
            bg=(220, 40, 40),
            font_weight=700.0,
        )
    )
    player.add(ElementSpec("p", 200, 860, 300, 30, text=_lorem(rng, 6), font_size=13))

    gallery = main.add(ElementSpec("section", 20, 960, 660, 260, role="gallery"))
    for i in range(rng.randint(4, 7)):
        figure = gallery.add(
            ElementSpec("figure", 30 + 110 * i, 980, 100, 130, classes=("thumb",))
        )
        figure.add(
            ElementSpec(
                "img",
                32 + 110 * i,
                982,
                96,
                96,
                src=f"https://cdn.sitecdn.example/shot{i}.jpg",
            )
        )
        figure.add(
            ElementSpec(
                "figcaption",
                32 + 110 * i,
                1080,
                96,
                16,
                text=_lorem(rng, 2),
                font_size=11,
            )
        )

    aside = body.add(ElementSpec("aside", 720, 90, 300, 700))
    ad = aside.add(
        ElementSpec(
            "div",
            720,
            100,
            300,
            280,
            role="ad",
            classes=("ad", "banner"),
            bg=(250, 250, 230),
        )
    )
    ad.add(ElementSpec("p", 725, 105, 60, 16, text="Ads", font_size=11, bg=(250, 250, 230)))
    ad.add(
        ElementSpec(
            "iframe",
            725,
            125,
            290,
            250,
            html_id="ad-frame",
            src="https://ads.bannerhub.example/frame.html",
        )
    )

    promo = body.add(
        ElementSpec(
            "div",
            720,
            820,
            300,
            180,
            role="promo",
            classes=("promo",),
            bg=(255, 240, 200),
            text=_lorem(rng, 5),
        )
    )
    promo.add(ElementSpec("p", 725, 840, 280, 60, text=_lorem(rng, 8), bg=(255, 240, 200)))

    footer = body.add(ElementSpec("footer", 0, 1650, page_w, 120, bg=(40, 40, 40)))
    footer.add(ElementSpec("p", 20, 1670, 500, 30, text=_lorem(rng, 6), bg=(40, 40, 40)))
    for i in range(rng.randint(4, 6)):
        footer.add(
            ElementSpec("a", 20 + 130 * i, 1710, 110, 24, text=_lorem(rng, 1), bg=(40, 40, 40))
        )
    form = footer.add(
        ElementSpec("form", 560, 1670, 380, 40, bg=(40, 40, 40), name="newsletter")
    )
    form.add(
        ElementSpec(
            "input",
            565,
            1675,
            220,
            30,
            name="email",
            extra=(("type", "email"),),
            bg=(255, 255, 255),
        )
    )
    form.add(
        ElementSpec(
            "button", 800, 1675, 100, 30, text="Subscribe", bg=(60, 120, 60), font_weight=700.0
        )
    )

    head = body.add(ElementSpec("div", 0, 0, 0, 0, visible=False))
    head.add(
        ElementSpec("script", 0, 0, 0, 0, visible=False, src=APP_SCRIPT_URL)
    )
    head.add(
        ElementSpec("script", 0, 0, 0, 0, visible=False, src=AD_SCRIPT_URL, role="ad_script")
    )
    return html


def _squash(spec: ElementSpec) -> None:
    """Collapse a subtree the way a height:0 content rule renders it."""
    spec.h = 0.0
    spec.visible = False
    for c in spec.children:
        _squash(c)


@dataclass
class MaterializedPage:
    snapshot: Snapshot
    role_roots: dict[str, int]
    role_members: dict[str, frozenset[int]]


def materialize(
    spec: ElementSpec,
    page_url: str,
    condition: Condition,
    drop_roles: frozenset[str] = frozenset(),
    squash_roles: frozenset[str] = frozenset(),
    interact: bool = True,
    captured_at: str = "2024-05-01T00:00:00Z",
) -> MaterializedPage:
    """Realize the template into a snapshot for one visit.

    Node ids are assigned in document order per visit, so the same region
    gets different ids across the three snapshots of a triple. Subtrees whose
    role is dropped vanish entirely; squashed roles stay but render at zero
    height. When the play target exists and `interact` is set, the visit logs
    a click plus the playback touches it causes.
    """
    nodes: list[DomNode] = []
    role_roots: dict[str, int] = {}
    members_acc: dict[str, set[int]] = {}

    def walk(s: ElementSpec, parent: int | None, active_roles: tuple[str, ...]) -> int | None:
        if s.role in drop_roles:
            return None
        if s.role in squash_roles:
            s = _copy_spec(s)
            _squash(s)
        nid = len(nodes)
        roles = active_roles + ((s.role,) if s.role else ())
        placeholder = DomNode(
            id=nid,
            tag=s.tag,
            parent=parent,
            children=(),
            attrs=NodeAttrs(
                html_id=s.html_id,
                class_list=s.classes,
                src=s.src,
                name=s.name,
                extra=s.extra,
            ),
            cues=VisualCues(
                x=s.x,
                y=s.y,
                width=s.w,
                height=s.h,
                visible=s.visible,
                text=s.text,
                background_color=s.bg,
                font_size=s.font_size,
                font_weight=s.font_weight,
            ),
        )
        nodes.append(placeholder)
        if s.role:
            role_roots[s.role] = nid
        for role in roles:
            members_acc.setdefault(role, set()).add(nid)
        child_ids = []
        for child in s.children:
            cid = walk(child, nid, roles)
            if cid is not None:
                child_ids.append(cid)
        nodes[nid] = DomNode(
            id=nid,
            tag=placeholder.tag,
            parent=placeholder.parent,
            children=tuple(child_ids),
            attrs=placeholder.attrs,
            cues=placeholder.cues,
        )
        return nid

    walk(spec, None, ())

    requests = [Request(url=page_url, initiator=None, timestamp=0.0)]
    for n in nodes:
        if n.attrs.src and n.tag in ("img", "iframe", "video", "script", "embed"):
            requests.append(Request(url=n.attrs.src, initiator=n.id, timestamp=200.0 + n.id))
    ad_frame = next((n for n in nodes if n.attrs.html_id == "ad-frame"), None)
    if ad_frame is not None:
        for i in range(2):
            requests.append(
                Request(
                    url=f"https://ads.bannerhub.example/creative{i}.js",
                    initiator=ad_frame.id,
                    timestamp=400.0 + i,
                )
            )

    touches: list[ScriptTouch] = []
    video_root = role_roots.get("video")
    play_root = role_roots.get("play")
    article_root = role_roots.get("article")
    if article_root is not None:
        touches.append(ScriptTouch(APP_SCRIPT_URL, article_root, 900.0))
    if video_root is not None:
        touches.append(ScriptTouch(APP_SCRIPT_URL, video_root, 1000.0))
    if play_root is not None:
        touches.append(ScriptTouch(APP_SCRIPT_URL, play_root, 1010.0))
    if "ad" in role_roots:
        touches.append(ScriptTouch(AD_SCRIPT_URL, role_roots["ad"], 1100.0))

    interactions: list[Interaction] = []
    if interact and play_root is not None and nodes[play_root].rendered:
        interactions.append(Interaction(InteractionKind.CLICK, play_root, 5000.0))
        # Playback side effects: the app script re-queries the player region.
        touches.append(ScriptTouch(APP_SCRIPT_URL, video_root, 5200.0))
        touches.append(ScriptTouch(APP_SCRIPT_URL, play_root, 5300.0))

    salient = []
    if video_root is not None:
        salient.append(frozenset(members_acc.get("video", set())))
    if article_root is not None:
        salient.append(frozenset(members_acc.get("article", set())))

    snap = Snapshot(
        page_url=page_url,
        condition=condition,
        captured_at=captured_at,
        nodes=tuple(nodes),
        requests=tuple(requests),
        interactions=tuple(interactions),
        errors=(),
        touches=tuple(touches),
        salient_blocks=tuple(salient),
    )
    return MaterializedPage(
        snapshot=snap,
        role_roots=role_roots,
        role_members={r: frozenset(v) for r, v in members_acc.items()},
    )


def _copy_spec(s: ElementSpec) -> ElementSpec:
    return ElementSpec(
        tag=s.tag, x=s.x, y=s.y, w=s.w, h=s.h, text=s.text, bg=s.bg,
        font_size=s.font_size, font_weight=s.font_weight, visible=s.visible,
        html_id=s.html_id, classes=s.classes, src=s.src, name=s.name,
        extra=s.extra, role=s.role, children=[_copy_spec(c) for c in s.children],
    )


@dataclass(frozen=True)
class VisitTriple:
    """The three snapshots of one page plus fixture bookkeeping."""

    none: Snapshot
    breaking: Snapshot
    fixed: Snapshot
    meta: dict


def build_triple(
    seed: int,
    scenario: str,
    page_url: str | None = None,
    neutral_noise: bool = False,
) -> VisitTriple:
    """Build one three-visit triple.

    Scenarios: "broken_video" (the breaking list removes the ad and the
    salient player), "broken_video_edit" (the player is squashed instead of
    removed), "legit_ad" (only the ad is removed, by both lists), and
    "static" (nothing changes). With `neutral_noise` a promo box renders only
    in the fixed-list visit, exercising page dynamism.
    """
    rng = random.Random(seed)
    spec = build_page_spec(rng)
    url = page_url or f"https://site{seed}.fixture.example/"

    drop_b: set[str] = set()
    squash_b: set[str] = set()
    drop_f: set[str] = set()
    if scenario in ("broken_video", "broken_video_edit", "legit_ad"):
        drop_b.add("ad")
        drop_b.add("ad_script")
        drop_f.add("ad")
        drop_f.add("ad_script")
    if scenario == "broken_video":
        drop_b.add("video")
    elif scenario == "broken_video_edit":
        squash_b.add("video")
    elif scenario not in ("legit_ad", "static"):
        raise ValueError(f"unknown scenario {scenario!r}")

    drop_n = {"promo"}
    drop_b_all = drop_b | {"promo"}
    drop_f_all = set(drop_f) if neutral_noise else drop_f | {"promo"}

    page_n = materialize(spec, url, Condition.NONE, frozenset(drop_n))
    page_b = materialize(spec, url, Condition.BREAKING, frozenset(drop_b_all), frozenset(squash_b))
    page_f = materialize(spec, url, Condition.FIXED, frozenset(drop_f_all))

    meta = {
        "scenario": scenario,
        "seed": seed,
        "page_url": url,
        "video_root_none": page_n.role_roots.get("video"),
        "video_members_none": sorted(page_n.role_members.get("video", frozenset())),
        "ad_root_none": page_n.role_roots.get("ad"),
        "ad_members_none": sorted(page_n.role_members.get("ad", frozenset())),
    }
    return VisitTriple(
        none=page_n.snapshot, breaking=page_b.snapshot, fixed=page_f.snapshot, meta=meta
    )


def training_triples(seed: int, count: int) -> list[VisitTriple]:
    """A seeded mixture of broken and legitimate triples for model training."""
    rng = random.Random(seed)
    out = []
    scenarios = ("broken_video", "broken_video_edit", "legit_ad", "legit_ad")
    for i in range(count):
        scenario = scenarios[i % len(scenarios)]
        out.append(
            build_triple(
                seed=rng.randrange(1, 10_000_000),
                scenario=scenario,
                neutral_noise=rng.random() < 0.5,
            )
        )
    return out


def dataset_from_triples(triples: list[VisitTriple]):
    """Label every triple's subtrees and stack their feature rows.

    This is the training-data path: diff all three transitions, label each
    delta from the decision table, extract features, and bind the rows into
    one dataset with the broken/legitimate/neutral class universe.
    """
    from . import features as feats
    from .labeling import label_visit_triple
    from .snapshot import build_environment_graph
    from .treediff import diff_trees

    class_names = ("broken", "legitimate", "neutral")
    rows = []
    for triple in triples:
        snap_n, snap_b, snap_f = triple.none, triple.breaking, triple.fixed
        env = {s: build_environment_graph(s) for s in (snap_n, snap_b, snap_f)}
        diff_nf = diff_trees(snap_n, snap_f)
        diff_nb = diff_trees(snap_n, snap_b)
        diff_bf = diff_trees(snap_b, snap_f)
        pair_of = {
            id(diff_nf): (snap_n, snap_f),
            id(diff_nb): (snap_n, snap_b),
            id(diff_bf): (snap_b, snap_f),
        }
        labeled = label_visit_triple(diff_nf, diff_nb, diff_bf, snap_n, snap_b, snap_f)
        globs = {
            id(d): feats.extract_global_features(
                d, *pair_of[id(d)], env[pair_of[id(d)][0]], env[pair_of[id(d)][1]]
            )
            for d in (diff_nf, diff_nb, diff_bf)
        }
        transition_diff = {
            "n_to_f": diff_nf,
            "n_to_b": diff_nb,
            "b_to_f": diff_bf,
        }
        for item in labeled:
            diff = transition_diff[item.transition.value]
            snap_a, snap_b2 = pair_of[id(diff)]
            sub = feats.extract_subtree_features(
                item.delta, diff, snap_a, snap_b2, env[snap_a], env[snap_b2]
            )
            rows.append(feats.assemble_row(sub, globs[id(diff)], item.label))
    return feats.dataset_from_rows(rows, class_names)


# ---------------------------------------------------------------------------
# Bundled fixture files

SITE_A_SEED = 42
SITE_A_URL = "https://site-a.fixture.example/"


def site_a_triple() -> VisitTriple:
    return build_triple(
        SITE_A_SEED, "broken_video", page_url=SITE_A_URL, neutral_noise=True
    )


def write_fixture_files(out_dir: str | Path) -> dict:
    """Write the bundled site-A triple and its generator-recorded manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    triple = site_a_triple()
    names = {
        "cn": triple.none,
        "cb": triple.breaking,
        "cf": triple.fixed,
    }
    manifest: dict = {"seed": SITE_A_SEED, "page_url": SITE_A_URL, "files": {}}
    for code, snap in names.items():
        fname = f"fixture_site_A.{code}.snapshot"
        (out / fname).write_bytes(serialize_snapshot(snap))
        manifest["files"][fname] = {
            "condition": snap.condition.value,
            "nodes": len(snap.nodes),
            "requests": len(snap.requests),
            "interactions": len(snap.interactions),
            "touches": len(snap.touches),
            "salient_groups": len(snap.salient_blocks or ()),
        }
    manifest["video_root_none"] = triple.meta["video_root_none"]
    manifest["ad_root_none"] = triple.meta["ad_root_none"]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "."
    written = write_fixture_files(target)
    print(json.dumps(written, indent=1))
