/** Serialize a finished visit into the consumer's snapshot JSON schema. */

import { LivePage } from "./engine.js";
import { Condition, SnapshotFile, SnapshotNode } from "./types.js";

/** Emit the snapshot document with node ids renumbered in document order. */
export function buildSnapshot(
  page: LivePage,
  condition: Condition,
  capturedAt: string,
): SnapshotFile {
  const order: number[] = [];
  const walk = (id: number): void => {
    order.push(id);
    for (const child of page.nodes.get(id)!.children) walk(child);
  };
  walk(page.rootId);
  const newId = new Map(order.map((old, fresh) => [old, fresh]));

  const nodes: SnapshotNode[] = order.map((old) => {
    const n = page.nodes.get(old)!;
    const attrs: Record<string, unknown> = { ...n.attrs };
    if (n.htmlId !== undefined) attrs.id = n.htmlId;
    if (n.classes.length > 0) attrs.class = n.classes;
    if (n.src !== undefined) attrs.src = n.src;
    if (n.name !== undefined) attrs.name = n.name;
    return {
      id: newId.get(old)!,
      tag: n.tag,
      parent: n.parent === null ? null : newId.get(n.parent)!,
      children: n.children.map((c) => newId.get(c)!),
      attrs,
      cues: {
        x: n.x,
        y: n.y,
        w: n.w,
        h: n.h,
        visible: n.visible,
        text: n.text,
        bg: n.bg,
        font_size: n.fontSize,
        font_weight: n.fontWeight,
      },
    };
  });

  // Interactions whose target vanished are unmappable; keep an index map so
  // error causes stay aligned with the surviving entries.
  const interactionIndex = new Map<number, number>();
  const keptInteractions = page.interactions.filter((i, idx) => {
    if (!newId.has(i.target)) return false;
    interactionIndex.set(idx, interactionIndex.size);
    return true;
  });

  return {
    page_url: page.site.url,
    condition,
    captured_at: capturedAt,
    nodes,
    requests: page.requests.map((r) => ({
      url: r.url,
      initiator: r.initiator === null ? null : (newId.get(r.initiator) ?? null),
      timestamp: r.timestamp,
    })),
    interactions: keptInteractions.map((i) => ({
      kind: i.kind,
      target: newId.get(i.target)!,
      timestamp: i.timestamp,
      ...(i.typedText !== undefined ? { typed_text: i.typedText } : {}),
    })),
    errors: page.errors.map((e) => ({
      error_type: e.errorType,
      message: e.message,
      timestamp: e.timestamp,
      cause_interaction:
        e.causeInteraction === null
          ? null
          : (interactionIndex.get(e.causeInteraction) ?? null),
    })),
    // Touches on nodes that vanished later in the visit cannot be expressed.
    touches: page.touches
      .filter((t) => newId.has(t.node))
      .map((t) => ({
        script_url: t.scriptUrl,
        node: newId.get(t.node)!,
        timestamp: t.timestamp,
      })),
  };
}
