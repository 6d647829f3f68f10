"""Walk through the snapshot model: parse a bundled visit, inspect the DOM,
validate the invariants, and build the environment graph.

Run:  python3 demos/01_snapshots_and_graphs.py
"""

from importlib import resources

from breakwatch import build_environment_graph, parse_snapshot, validate_snapshot
from breakwatch.snapshot import EdgeKind

data = resources.files("breakwatch.data").joinpath("fixtures")
snap = parse_snapshot(data.joinpath("fixture_site_A.cn.snapshot").read_bytes())

print(f"page: {snap.page_url}")
print(f"visit condition: {snap.condition.value}")
print(f"nodes: {len(snap.nodes)}, requests: {len(snap.requests)}, "
      f"interactions: {len(snap.interactions)}, touches: {len(snap.touches)}")

# The DOM is one tree: exactly one parentless node, every child link mirrored.
print(f"root element: <{snap.root.tag}> spanning {snap.root.cues.width:.0f}x"
      f"{snap.root.cues.height:.0f}px")
print(f"violations: {validate_snapshot(snap) or 'none'}")

# A few visible elements with their screen boxes.
print("\nsample of rendered elements:")
for node in [n for n in snap.nodes if n.rendered][:8]:
    label = node.attrs.html_id or (node.attrs.class_list or ("",))[0]
    print(f"  <{node.tag}> {label!r:>14} at ({node.cues.x:.0f},{node.cues.y:.0f}) "
          f"{node.cues.width:.0f}x{node.cues.height:.0f}")

# The environment graph ties requests, scripts, interactions, and errors to
# the DOM nodes that caused or received them.
graph = build_environment_graph(snap)
print(f"\nenvironment graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
for kind in EdgeKind:
    print(f"  {kind.value:<12} edges: {len(graph.edges_of_kind(kind))}")

for edge in graph.edges_of_kind(EdgeKind.REQUEST)[:3]:
    src_node = snap.node(edge.src[1])
    url = snap.requests[edge.dst[1]].url
    print(f"  <{src_node.tag}> initiated {url}")
