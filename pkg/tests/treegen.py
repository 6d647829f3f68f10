"""Seeded random DOM snapshots and mutations for diff fuzzing."""

from __future__ import annotations

import random

from breakwatch.snapshot import Condition, DomNode, NodeAttrs, Snapshot, VisualCues

TAGS = ("div", "p", "span", "img", "a", "section")
TEXTS = ("", "alpha", "beta", "alpha beta", "menu", "x")
CLASS_POOL = ("c1", "c2", "wide", "hero")
IDS = (None, None, None, "main", "side")
SRCS = (None, None, "https://cdn.example/a.js", "https://cdn.example/b.png")


def _cues(rng: random.Random) -> VisualCues:
    return VisualCues(
        x=float(rng.randrange(0, 20) * 50),
        y=float(rng.randrange(0, 20) * 50),
        width=float(rng.choice((0.0, 40.0, 100.0))),
        height=float(rng.choice((0.0, 30.0, 80.0))),
        visible=rng.random() < 0.8,
        text=rng.choice(TEXTS),
        background_color=rng.choice(((255, 255, 255), (0, 0, 0), (200, 40, 40))),
        font_size=float(rng.choice((12, 16, 24))),
        font_weight=float(rng.choice((400, 700))),
    )


def _attrs(rng: random.Random) -> NodeAttrs:
    classes = tuple(c for c in CLASS_POOL if rng.random() < 0.3)
    return NodeAttrs(
        html_id=rng.choice(IDS),
        class_list=classes,
        src=rng.choice(SRCS),
        name=None,
    )


class MutableTree:
    """Node records as dicts so mutations stay simple; frozen into a Snapshot."""

    def __init__(self):
        self.records: list[dict] = []

    @classmethod
    def random(cls, rng: random.Random, max_nodes: int) -> "MutableTree":
        tree = cls()
        n = rng.randrange(1, max_nodes + 1)
        for i in range(n):
            parent = None if i == 0 else rng.randrange(0, i)
            tree.records.append(
                {
                    "tag": "html" if i == 0 else rng.choice(TAGS),
                    "parent": parent,
                    "cues": _cues(rng),
                    "attrs": _attrs(rng),
                }
            )
        return tree

    def clone(self) -> "MutableTree":
        out = MutableTree()
        out.records = [dict(r) for r in self.records]
        return out

    def _descendants(self, idx: int) -> set[int]:
        out = {idx}
        changed = True
        while changed:
            changed = False
            for i, rec in enumerate(self.records):
                if rec is not None and rec["parent"] in out and i not in out:
                    out.add(i)
                    changed = True
        return out

    def mutate(self, rng: random.Random, ops: int) -> None:
        for _ in range(ops):
            live = [i for i, r in enumerate(self.records) if r is not None]
            op = rng.choice(("drop", "add", "edit", "move_text", "reclass"))
            if op == "drop" and len(live) > 1:
                victim = rng.choice(live[1:])
                for i in self._descendants(victim):
                    self.records[i] = None
            elif op == "add":
                parent = rng.choice(live)
                self.records.append(
                    {
                        "tag": rng.choice(TAGS),
                        "parent": parent,
                        "cues": _cues(rng),
                        "attrs": _attrs(rng),
                    }
                )
            else:
                victim = rng.choice(live)
                rec = self.records[victim]
                if op == "edit":
                    rec["cues"] = _cues(rng)
                elif op == "move_text":
                    c = rec["cues"]
                    rec["cues"] = VisualCues(
                        x=c.x,
                        y=c.y,
                        width=c.width,
                        height=c.height,
                        visible=c.visible,
                        text=rng.choice(TEXTS),
                        background_color=c.background_color,
                        font_size=c.font_size,
                        font_weight=c.font_weight,
                    )
                else:
                    a = rec["attrs"]
                    rec["attrs"] = NodeAttrs(
                        html_id=a.html_id,
                        class_list=tuple(c for c in CLASS_POOL if rng.random() < 0.3),
                        src=a.src,
                        name=a.name,
                    )

    def freeze(self, condition=Condition.NONE, url="https://fuzz.test/") -> Snapshot:
        # Reassign ids in document order, as a crawler would per visit.
        live = [i for i, r in enumerate(self.records) if r is not None]
        children: dict[int, list[int]] = {i: [] for i in live}
        for i in live:
            p = self.records[i]["parent"]
            if p is not None:
                children[p].append(i)
        order: list[int] = []
        stack = [live[0]]
        while stack:
            cur = stack.pop()
            order.append(cur)
            stack.extend(reversed(children[cur]))
        new_id = {old: new for new, old in enumerate(order)}
        nodes = []
        for old in order:
            rec = self.records[old]
            parent = rec["parent"]
            nodes.append(
                DomNode(
                    id=new_id[old],
                    tag=rec["tag"],
                    parent=None if parent is None else new_id[parent],
                    children=tuple(new_id[c] for c in children[old]),
                    attrs=rec["attrs"],
                    cues=rec["cues"],
                )
            )
        nodes.sort(key=lambda n: n.id)
        return Snapshot(
            page_url=url,
            condition=condition,
            captured_at="2024-05-01T00:00:00Z",
            nodes=tuple(nodes),
        )


def random_pair(rng: random.Random, max_nodes: int = 30):
    """Either an independent pair or a mutated copy, fifty-fifty."""
    first = MutableTree.random(rng, max_nodes)
    if rng.random() < 0.5:
        second = MutableTree.random(rng, max_nodes)
    else:
        second = first.clone()
        second.mutate(rng, rng.randrange(1, 6))
    return first.freeze(), second.freeze(Condition.BREAKING)
