/** The embedded page engine.
 *
 * There is no real browser behind this harness: a visit "renders" a site
 * definition under a filter list, runs its declared scripts, accepts cookie
 * banners, replays interactions, and logs everything a snapshot needs.
 * The real-browser integration surface of the crawler is confined to this
 * module.
 */

import { FilterList, hidingSelectorsFor, isBlocked } from "./filters.js";
import {
  PlannedInteraction,
  SiteDefinition,
  SiteElement,
  SiteScript,
} from "./types.js";

export interface LiveNode {
  id: number;
  tag: string;
  parent: number | null;
  children: number[];
  htmlId?: string;
  classes: string[];
  src?: string;
  name?: string;
  attrs: Record<string, string>;
  text: string;
  x: number;
  y: number;
  w: number;
  h: number;
  visible: boolean;
  bg: [number, number, number];
  fontSize: number;
  fontWeight: number;
}

export interface LoggedRequest {
  url: string;
  initiator: number | null;
  timestamp: number;
}

export interface LoggedInteraction {
  kind: "click" | "type";
  target: number;
  timestamp: number;
  typedText?: string;
}

export interface LoggedError {
  errorType: string;
  message: string;
  timestamp: number;
  causeInteraction: number | null;
}

export interface LoggedTouch {
  scriptUrl: string;
  node: number;
  timestamp: number;
}

/** One rendered visit, mutable while the "browser session" is open. */
export class LivePage {
  nodes = new Map<number, LiveNode>();
  rootId = 0;
  requests: LoggedRequest[] = [];
  interactions: LoggedInteraction[] = [];
  errors: LoggedError[] = [];
  touches: LoggedTouch[] = [];
  clockMs = 0;
  private blockedScriptUrls = new Set<string>();
  private handlers: { script: SiteScript; owner: string }[] = [];

  constructor(
    readonly site: SiteDefinition,
    readonly filters: FilterList,
  ) {}

  /** Simple selector match: `#id`, `.class`, or a bare tag name. */
  matches(node: LiveNode, selector: string): boolean {
    const sel = selector.trim();
    if (sel.startsWith("#")) return node.htmlId === sel.slice(1);
    if (sel.startsWith(".")) return node.classes.includes(sel.slice(1));
    return node.tag === sel.toLowerCase();
  }

  query(selector: string): LiveNode[] {
    return [...this.nodes.values()]
      .filter((n) => this.matches(n, selector))
      .sort((a, b) => a.id - b.id);
  }

  queryOne(selector: string): LiveNode | undefined {
    return this.query(selector)[0];
  }

  removeSubtree(id: number): void {
    const node = this.nodes.get(id);
    if (!node) return;
    for (const child of [...node.children]) this.removeSubtree(child);
    if (node.parent !== null) {
      const parent = this.nodes.get(node.parent);
      if (parent) parent.children = parent.children.filter((c) => c !== id);
    }
    this.nodes.delete(id);
  }

  private materialize(spec: SiteElement, parent: number | null): number {
    const id = this.nodes.size === 0 ? 0 : Math.max(...this.nodes.keys()) + 1;
    const node: LiveNode = {
      id,
      tag: spec.tag.toLowerCase(),
      parent,
      children: [],
      htmlId: spec.id,
      classes: spec.classes ?? [],
      src: spec.src,
      name: spec.name,
      attrs: spec.attrs ?? {},
      text: spec.text ?? "",
      x: spec.x ?? 0,
      y: spec.y ?? 0,
      w: spec.w ?? 0,
      h: spec.h ?? 0,
      visible: spec.visible ?? true,
      bg: spec.bg ?? [255, 255, 255],
      fontSize: spec.fontSize ?? 16,
      fontWeight: spec.fontWeight ?? 400,
    };
    this.nodes.set(id, node);
    if (parent !== null) this.nodes.get(parent)!.children.push(id);
    for (const child of spec.children ?? []) this.materialize(child, id);
    return id;
  }

  private logRequest(url: string, initiator: number | null): boolean {
    if (isBlocked(this.filters, url)) return false;
    this.requests.push({ url, initiator, timestamp: this.clockMs });
    return true;
  }

  /** Build the DOM, apply hiding rules, fetch resources, run scripts. */
  load(): void {
    this.rootId = this.materialize(this.site.dom, null);
    this.clockMs = 10;
    this.logRequest(this.site.url, null);

    // Content rules drop matching subtrees before anything renders them.
    for (const selector of hidingSelectorsFor(this.filters, this.site.url)) {
      for (const hit of this.query(selector)) this.removeSubtree(hit.id);
    }

    // Element resources: anything with a src fetches it, unless blocked.
    this.clockMs = 100;
    for (const node of [...this.nodes.values()].sort((a, b) => a.id - b.id)) {
      if (!node.src) continue;
      this.clockMs += 10;
      this.logRequest(node.src, node.id);
    }

    // Scripts: a blocked script is inert for the whole visit.
    this.clockMs = 500;
    for (const script of this.site.scripts ?? []) {
      if (isBlocked(this.filters, script.url)) {
        this.blockedScriptUrls.add(script.url);
        continue;
      }
      for (const selector of script.touches ?? []) {
        for (const hit of this.query(selector)) {
          this.clockMs += 5;
          this.touches.push({
            scriptUrl: script.url,
            node: hit.id,
            timestamp: this.clockMs,
          });
        }
      }
      for (const handler of script.onInteraction ?? []) {
        this.handlers.push({ script, owner: handler.target });
      }
    }
  }

  scriptIsBlocked(url: string): boolean {
    return this.blockedScriptUrls.has(url);
  }

  /** Replay one planned interaction; false when the target is gone. */
  perform(plan: PlannedInteraction): boolean {
    const target = this.queryOne(plan.selector);
    if (!target || !target.visible) return false;
    this.clockMs += 500;
    const index = this.interactions.length;
    this.interactions.push({
      kind: plan.kind,
      target: target.id,
      timestamp: this.clockMs,
      typedText: plan.kind === "type" ? (plan.typedText ?? "test input") : undefined,
    });
    for (const script of this.site.scripts ?? []) {
      if (this.scriptIsBlocked(script.url)) continue;
      for (const handler of script.onInteraction ?? []) {
        if (!this.matches(target, handler.target)) continue;
        const missing = (handler.requires ?? []).filter((u) => this.scriptIsBlocked(u));
        if (missing.length > 0) {
          this.errors.push({
            errorType: "ReferenceError",
            message: `${missing[0]} is not available`,
            timestamp: this.clockMs + 50,
            causeInteraction: index,
          });
          continue;
        }
        for (const selector of handler.touches ?? []) {
          for (const hit of this.query(selector)) {
            this.touches.push({
              scriptUrl: script.url,
              node: hit.id,
              timestamp: this.clockMs + 100,
            });
          }
        }
        if (handler.request) this.logRequest(handler.request, target.id);
      }
    }
    return true;
  }
}
