"""Snapshot data model: one page visit as an immutable DOM-plus-activity record.

A snapshot file captures everything one browser visit produced: the DOM tree
with per-node visual cues, the network requests, the interactions the crawler
performed, JavaScript errors, and script-to-node "touch" events. Snapshots are
parsed from JSON, validated against the structural invariants below, and then
never mutated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterator


class SnapshotError(Exception):
    """Base class for snapshot parsing/validation failures."""


class SchemaError(SnapshotError):
    """The file does not match the snapshot schema (missing field, wrong type)."""


class DanglingReferenceError(SnapshotError):
    """A record references a node id that does not exist in the snapshot."""


class InvalidSnapshotError(SnapshotError):
    """The file parsed but violates a structural invariant."""

    def __init__(self, violations: list["Violation"]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class Condition(Enum):
    """Which filter-list configuration was active during the visit."""

    NONE = "none"
    BREAKING = "breaking"
    FIXED = "fixed"


class InteractionKind(Enum):
    CLICK = "click"
    TYPE = "type"


@dataclass(frozen=True)
class VisualCues:
    """Rendered geometry and style of a node."""

    x: float
    y: float
    width: float
    height: float
    visible: bool
    text: str
    background_color: tuple[int, int, int]
    font_size: float
    font_weight: float

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.width / 2.0, self.y + self.height / 2.0)


@dataclass(frozen=True)
class NodeAttrs:
    """HTML attributes we track. `extra` holds any additional producer keys."""

    html_id: str | None = None
    class_list: tuple[str, ...] = ()
    src: str | None = None
    name: str | None = None
    extra: tuple[tuple[str, str], ...] = ()

    def extra_dict(self) -> dict[str, str]:
        return dict(self.extra)


@dataclass(frozen=True)
class DomNode:
    id: int
    tag: str
    parent: int | None
    children: tuple[int, ...]
    attrs: NodeAttrs
    cues: VisualCues

    @property
    def rendered(self) -> bool:
        """Visible with nonzero area: the nodes segmentation operates on."""
        return self.cues.visible and self.cues.width > 0 and self.cues.height > 0


@dataclass(frozen=True)
class Request:
    url: str
    initiator: int | None
    timestamp: float


@dataclass(frozen=True)
class Interaction:
    kind: InteractionKind
    target: int
    timestamp: float
    typed_text: str | None = None


@dataclass(frozen=True)
class JsError:
    error_type: str
    message: str
    timestamp: float
    cause_interaction: int | None = None


@dataclass(frozen=True)
class ScriptTouch:
    script_url: str
    node: int
    timestamp: float


@dataclass(frozen=True)
class Snapshot:
    """One visit to one page. Immutable; safe to share across threads."""

    page_url: str
    condition: Condition
    captured_at: str
    nodes: tuple[DomNode, ...]
    requests: tuple[Request, ...] = ()
    interactions: tuple[Interaction, ...] = ()
    errors: tuple[JsError, ...] = ()
    touches: tuple[ScriptTouch, ...] = ()
    salient_blocks: tuple[frozenset[int], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> DomNode:
        return self._by_id[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    @property
    def root(self) -> DomNode:
        roots = [n for n in self.nodes if n.parent is None]
        if len(roots) != 1:
            raise InvalidSnapshotError(
                [Violation("MULTIPLE_ROOTS" if roots else "NO_ROOT", "root lookup")]
            )
        return roots[0]

    def subtree_ids(self, root_id: int) -> Iterator[int]:
        """Yield node ids of the subtree rooted at `root_id`, preorder."""
        stack = [root_id]
        while stack:
            nid = stack.pop()
            yield nid
            stack.extend(reversed(self.node(nid).children))

    def page_bbox(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) hull over rendered nodes; zero box if none."""
        boxes = [n.cues for n in self.nodes if n.rendered]
        if not boxes:
            return (0.0, 0.0, 0.0, 0.0)
        x0 = min(c.x for c in boxes)
        y0 = min(c.y for c in boxes)
        x1 = max(c.x + c.width for c in boxes)
        y1 = max(c.y + c.height for c in boxes)
        return (x0, y0, x1, y1)

    def page_diag(self) -> float:
        """Diagonal of the rendered hull, floored at 1 so it can normalize distances."""
        x0, y0, x1, y1 = self.page_bbox()
        return max(1.0, math.hypot(x1 - x0, y1 - y0))


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


# ---------------------------------------------------------------------------
# Parsing / serialization


def _req(obj: dict, key: str, types, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing field {key!r} in {where}")
    val = obj[key]
    if types is not None and not isinstance(val, types):
        raise SchemaError(f"field {key!r} in {where} has wrong type {type(val).__name__}")
    return val


def _opt(obj: dict, key: str, types, where: str, default=None):
    if key not in obj or obj[key] is None:
        return default
    val = obj[key]
    if types is not None and not isinstance(val, types):
        raise SchemaError(f"field {key!r} in {where} has wrong type {type(val).__name__}")
    return val


_NUM = (int, float)
_WELL_KNOWN_ATTRS = ("id", "class", "src", "name")


def _parse_cues(obj: dict, where: str) -> VisualCues:
    bg = _req(obj, "bg", list, where)
    if len(bg) != 3 or not all(isinstance(v, int) for v in bg):
        raise SchemaError(f"field 'bg' in {where} must be three ints")
    return VisualCues(
        x=float(_req(obj, "x", _NUM, where)),
        y=float(_req(obj, "y", _NUM, where)),
        width=float(_req(obj, "w", _NUM, where)),
        height=float(_req(obj, "h", _NUM, where)),
        visible=_req(obj, "visible", bool, where),
        text=_req(obj, "text", str, where),
        background_color=(bg[0], bg[1], bg[2]),
        font_size=float(_req(obj, "font_size", _NUM, where)),
        font_weight=float(_req(obj, "font_weight", _NUM, where)),
    )


def _parse_node(obj: dict) -> DomNode:
    nid = _req(obj, "id", int, "node")
    where = f"node {nid}"
    attrs_obj = _opt(obj, "attrs", dict, where, {})
    class_list = attrs_obj.get("class", [])
    if not isinstance(class_list, list) or not all(isinstance(c, str) for c in class_list):
        raise SchemaError(f"field 'class' in {where} must be a string array")
    extra = tuple(
        sorted(
            (k, str(v))
            for k, v in attrs_obj.items()
            if k not in _WELL_KNOWN_ATTRS
        )
    )
    attrs = NodeAttrs(
        html_id=_opt(attrs_obj, "id", str, where),
        class_list=tuple(class_list),
        src=_opt(attrs_obj, "src", str, where),
        name=_opt(attrs_obj, "name", str, where),
        extra=extra,
    )
    children = _req(obj, "children", list, where)
    if not all(isinstance(c, int) for c in children):
        raise SchemaError(f"field 'children' in {where} must be ints")
    return DomNode(
        id=nid,
        tag=_req(obj, "tag", str, where).lower(),
        parent=_opt(obj, "parent", int, where),
        children=tuple(children),
        attrs=attrs,
        cues=_parse_cues(_req(obj, "cues", dict, where), where),
    )


def parse_snapshot(raw: bytes | str) -> Snapshot:
    """Parse and validate one snapshot file.

    Raises SchemaError for malformed documents, DanglingReferenceError when a
    record points at a nonexistent node, and InvalidSnapshotError for any
    other invariant violation.
    """
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")

    cond_raw = _req(doc, "condition", str, "document")
    try:
        condition = Condition(cond_raw)
    except ValueError:
        raise SchemaError(f"unknown condition {cond_raw!r}")

    nodes = tuple(_parse_node(n) for n in _req(doc, "nodes", list, "document"))

    requests = []
    for i, r in enumerate(_opt(doc, "requests", list, "document", [])):
        where = f"request {i}"
        requests.append(
            Request(
                url=_req(r, "url", str, where),
                initiator=_opt(r, "initiator", int, where),
                timestamp=float(_req(r, "timestamp", _NUM, where)),
            )
        )

    interactions = []
    for i, it in enumerate(_opt(doc, "interactions", list, "document", [])):
        where = f"interaction {i}"
        kind_raw = _req(it, "kind", str, where)
        try:
            kind = InteractionKind(kind_raw)
        except ValueError:
            raise SchemaError(f"unknown interaction kind {kind_raw!r} in {where}")
        interactions.append(
            Interaction(
                kind=kind,
                target=_req(it, "target", int, where),
                timestamp=float(_req(it, "timestamp", _NUM, where)),
                typed_text=_opt(it, "typed_text", str, where),
            )
        )

    errors = []
    for i, e in enumerate(_opt(doc, "errors", list, "document", [])):
        where = f"error {i}"
        errors.append(
            JsError(
                error_type=_req(e, "error_type", str, where),
                message=_req(e, "message", str, where),
                timestamp=float(_req(e, "timestamp", _NUM, where)),
                cause_interaction=_opt(e, "cause_interaction", int, where),
            )
        )

    touches = []
    for i, t in enumerate(_opt(doc, "touches", list, "document", [])):
        where = f"touch {i}"
        touches.append(
            ScriptTouch(
                script_url=_req(t, "script_url", str, where),
                node=_req(t, "node", int, where),
                timestamp=float(_req(t, "timestamp", _NUM, where)),
            )
        )

    salient_raw = _opt(doc, "salient_blocks", list, "document")
    salient = None
    if salient_raw is not None:
        salient = []
        for i, group in enumerate(salient_raw):
            if not isinstance(group, list) or not all(isinstance(v, int) for v in group):
                raise SchemaError(f"salient_blocks[{i}] must be an int array")
            salient.append(frozenset(group))
        salient = tuple(salient)

    snap = Snapshot(
        page_url=_req(doc, "page_url", str, "document"),
        condition=condition,
        captured_at=_req(doc, "captured_at", str, "document"),
        nodes=nodes,
        requests=tuple(requests),
        interactions=tuple(interactions),
        errors=tuple(errors),
        touches=tuple(touches),
        salient_blocks=salient,
    )

    violations = validate_snapshot(snap)
    if violations:
        dangling = [v for v in violations if v.code in _REFERENCE_CODES]
        if dangling:
            raise DanglingReferenceError("; ".join(str(v) for v in dangling))
        raise InvalidSnapshotError(violations)
    return snap


def serialize_snapshot(snap: Snapshot) -> bytes:
    """Inverse of parse_snapshot for valid snapshots."""

    def node_obj(n: DomNode) -> dict[str, Any]:
        attrs: dict[str, Any] = {}
        if n.attrs.html_id is not None:
            attrs["id"] = n.attrs.html_id
        if n.attrs.class_list:
            attrs["class"] = list(n.attrs.class_list)
        if n.attrs.src is not None:
            attrs["src"] = n.attrs.src
        if n.attrs.name is not None:
            attrs["name"] = n.attrs.name
        attrs.update(n.attrs.extra_dict())
        c = n.cues
        return {
            "id": n.id,
            "tag": n.tag,
            "parent": n.parent,
            "children": list(n.children),
            "attrs": attrs,
            "cues": {
                "x": c.x,
                "y": c.y,
                "w": c.width,
                "h": c.height,
                "visible": c.visible,
                "text": c.text,
                "bg": list(c.background_color),
                "font_size": c.font_size,
                "font_weight": c.font_weight,
            },
        }

    doc: dict[str, Any] = {
        "page_url": snap.page_url,
        "condition": snap.condition.value,
        "captured_at": snap.captured_at,
        "nodes": [node_obj(n) for n in snap.nodes],
        "requests": [
            {"url": r.url, "initiator": r.initiator, "timestamp": r.timestamp}
            for r in snap.requests
        ],
        "interactions": [
            {
                "kind": it.kind.value,
                "target": it.target,
                "timestamp": it.timestamp,
                **({"typed_text": it.typed_text} if it.typed_text is not None else {}),
            }
            for it in snap.interactions
        ],
        "errors": [
            {
                "error_type": e.error_type,
                "message": e.message,
                "timestamp": e.timestamp,
                "cause_interaction": e.cause_interaction,
            }
            for e in snap.errors
        ],
        "touches": [
            {"script_url": t.script_url, "node": t.node, "timestamp": t.timestamp}
            for t in snap.touches
        ],
    }
    if snap.salient_blocks is not None:
        doc["salient_blocks"] = [sorted(g) for g in snap.salient_blocks]
    return json.dumps(doc, indent=1, sort_keys=False).encode("utf-8")


# Codes that indicate a reference to a nonexistent node (vs. other invariants).
_REFERENCE_CODES = frozenset(
    {
        "UNKNOWN_PARENT",
        "UNKNOWN_CHILD",
        "BAD_REQUEST_INITIATOR",
        "BAD_INTERACTION_TARGET",
        "BAD_TOUCH_NODE",
        "BAD_SALIENT_REF",
    }
)


def validate_snapshot(snap: Snapshot) -> list[Violation]:
    """Check every structural invariant; an empty list means the snapshot is valid."""
    out: list[Violation] = []
    ids = [n.id for n in snap.nodes]
    id_set = set(ids)
    if len(ids) != len(id_set):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        out.append(Violation("DUPLICATE_ID", f"node ids repeated: {dupes}"))

    roots = [n for n in snap.nodes if n.parent is None]
    if not snap.nodes:
        out.append(Violation("NO_ROOT", "snapshot has no nodes"))
    elif not roots:
        out.append(Violation("NO_ROOT", "every node has a parent"))
    elif len(roots) > 1:
        out.append(
            Violation("MULTIPLE_ROOTS", f"parentless nodes: {sorted(n.id for n in roots)}")
        )

    for n in snap.nodes:
        if n.parent is not None and n.parent not in id_set:
            out.append(Violation("UNKNOWN_PARENT", f"node {n.id} parent {n.parent}"))
        for c in n.children:
            if c not in id_set:
                out.append(Violation("UNKNOWN_CHILD", f"node {n.id} child {c}"))
            else:
                child = snap.node(c)
                if child.parent != n.id:
                    out.append(
                        Violation(
                            "PARENT_CHILD_MISMATCH",
                            f"node {c} is listed under {n.id} but has parent {child.parent}",
                        )
                    )
        if n.parent is not None and n.parent in id_set:
            if n.id not in snap.node(n.parent).children:
                out.append(
                    Violation(
                        "PARENT_CHILD_MISMATCH",
                        f"node {n.id} has parent {n.parent} but is not among its children",
                    )
                )
        if n.cues.width < 0 or n.cues.height < 0:
            out.append(Violation("NEGATIVE_DIMENSION", f"node {n.id}"))
        if n.cues.font_size < 0:
            out.append(Violation("NEGATIVE_FONT_SIZE", f"node {n.id}"))

    # Tree check by DFS from the root: every node reached exactly once.
    if len(roots) == 1 and not any(v.code in ("UNKNOWN_CHILD", "DUPLICATE_ID") for v in out):
        seen: set[int] = set()
        stack = [roots[0].id]
        back_edge = False
        while stack:
            nid = stack.pop()
            if nid in seen:
                back_edge = True
                break
            seen.add(nid)
            stack.extend(snap.node(nid).children)
        if back_edge:
            out.append(Violation("CYCLE", "DFS revisited a node"))
        elif len(seen) != len(id_set):
            unreachable = sorted(id_set - seen)
            out.append(Violation("UNREACHABLE", f"nodes not under the root: {unreachable}"))

    for i, r in enumerate(snap.requests):
        if r.initiator is not None and r.initiator not in id_set:
            out.append(Violation("BAD_REQUEST_INITIATOR", f"request {i} -> {r.initiator}"))
    for i, it in enumerate(snap.interactions):
        if it.target not in id_set:
            out.append(Violation("BAD_INTERACTION_TARGET", f"interaction {i} -> {it.target}"))
        if (it.typed_text is not None) != (it.kind is InteractionKind.TYPE):
            out.append(
                Violation(
                    "TYPED_TEXT_MISMATCH",
                    f"interaction {i} kind={it.kind.value} typed_text={it.typed_text!r}",
                )
            )
    for i, e in enumerate(snap.errors):
        if e.cause_interaction is not None and not (
            0 <= e.cause_interaction < len(snap.interactions)
        ):
            out.append(Violation("BAD_ERROR_CAUSE", f"error {i} -> {e.cause_interaction}"))
    for i, t in enumerate(snap.touches):
        if t.node not in id_set:
            out.append(Violation("BAD_TOUCH_NODE", f"touch {i} -> {t.node}"))
    if snap.salient_blocks is not None:
        for i, group in enumerate(snap.salient_blocks):
            missing = sorted(v for v in group if v not in id_set)
            if missing:
                out.append(Violation("BAD_SALIENT_REF", f"salient group {i} -> {missing}"))
    return out


# ---------------------------------------------------------------------------
# Environment graph


class EdgeKind(Enum):
    REQUEST = "request"          # DOM element -> request it initiated
    TOUCH = "touch"              # script -> DOM node it queried
    INTERACTION = "interaction"  # DOM element -> interaction performed on it
    ERROR = "error"              # interaction -> error it caused


@dataclass(frozen=True)
class GraphEdge:
    src: tuple[str, Any]
    dst: tuple[str, Any]
    kind: EdgeKind


@dataclass(frozen=True)
class EnvironmentGraph:
    """DOM nodes joined with requests, scripts, interactions, and errors.

    Node keys are ("dom", id), ("request", index), ("script", url),
    ("interaction", index), ("error", index).
    """

    nodes: frozenset[tuple[str, Any]]
    edges: tuple[GraphEdge, ...]

    def edges_of_kind(self, kind: EdgeKind) -> list[GraphEdge]:
        return [e for e in self.edges if e.kind is kind]


def build_environment_graph(snap: Snapshot) -> EnvironmentGraph:
    """Augment the DOM with request, touch, interaction, and error relationships.

    One edge per initiated request, per touch, per interaction, and per error
    with a recorded cause: edge count is exactly the sum of those four counts.
    """
    nodes: set[tuple[str, Any]] = {("dom", n.id) for n in snap.nodes}
    edges: list[GraphEdge] = []

    for i, r in enumerate(snap.requests):
        nodes.add(("request", i))
        if r.initiator is not None:
            edges.append(GraphEdge(("dom", r.initiator), ("request", i), EdgeKind.REQUEST))

    for t in snap.touches:
        nodes.add(("script", t.script_url))
    for i, t in enumerate(snap.touches):
        edges.append(GraphEdge(("script", t.script_url), ("dom", t.node), EdgeKind.TOUCH))

    for i, it in enumerate(snap.interactions):
        nodes.add(("interaction", i))
        edges.append(GraphEdge(("dom", it.target), ("interaction", i), EdgeKind.INTERACTION))

    for i, e in enumerate(snap.errors):
        nodes.add(("error", i))
        if e.cause_interaction is not None:
            edges.append(
                GraphEdge(("interaction", e.cause_interaction), ("error", i), EdgeKind.ERROR)
            )

    return EnvironmentGraph(nodes=frozenset(nodes), edges=tuple(edges))
