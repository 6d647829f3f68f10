/** Shared types: site definitions, crawl configuration, and snapshot JSON. */

export type Condition = "none" | "breaking" | "fixed";

/** One element of a site definition; geometry in CSS pixels. */
export interface SiteElement {
  tag: string;
  id?: string;
  classes?: string[];
  src?: string;
  name?: string;
  attrs?: Record<string, string>;
  text?: string;
  x?: number;
  y?: number;
  w?: number;
  h?: number;
  visible?: boolean;
  bg?: [number, number, number];
  fontSize?: number;
  fontWeight?: number;
  children?: SiteElement[];
}

/** An interaction handler a script attaches to a target element. */
export interface ScriptHandler {
  /** Selector of the element the handler listens on. */
  target: string;
  /** Selectors the script queries when the handler fires. */
  touches?: string[];
  /** Script URLs the handler needs; if any is blocked the handler throws. */
  requires?: string[];
  /** Extra request issued by the handler (subject to blocking rules). */
  request?: string;
}

export interface SiteScript {
  url: string;
  /** Selectors the script queries while the page loads. */
  touches?: string[];
  onInteraction?: ScriptHandler[];
}

export interface CookieBannerSpec {
  /** Selector of the banner container element. */
  selector: string;
}

/** A self-contained page the engine can "visit". */
export interface SiteDefinition {
  url: string;
  /** Simulated wall-clock load time; compared against the visit timeout. */
  loadMs?: number;
  dom: SiteElement;
  scripts?: SiteScript[];
  cookieBanner?: CookieBannerSpec;
}

export interface PlannedInteraction {
  kind: "click" | "type";
  /** Stable selector resolved on every visit. */
  selector: string;
  typedText?: string;
}

export interface CrawlConfig {
  url: string;
  siteFile: string;
  fixedListFile: string;
  breakingListFile: string;
  planFile?: string;
  outDir: string;
  /** Visit timeout, seconds (simulated load time is checked against it). */
  timeoutS: number;
  /** Minimum delay between visits to the same page, seconds. */
  interVisitDelayS: number;
  /** Buffer between browser sessions, seconds. */
  sessionBufferS: number;
}

export const DEFAULT_TIMEOUT_S = 400;
export const DEFAULT_INTER_VISIT_DELAY_S = 50;
export const DEFAULT_SESSION_BUFFER_S = 20;

export type VisitStatus = "OK" | "TIMEOUT" | "NAV_ERROR";

export interface VisitResult {
  condition: Condition;
  status: VisitStatus;
  snapshotPath?: string;
  /** The selector-level sequence actually replayed, for cross-visit identity. */
  executedSequence: PlannedInteraction[];
  error?: string;
}

// --- snapshot JSON, exactly as the consumer's schema spells it ---

export interface SnapshotCues {
  x: number;
  y: number;
  w: number;
  h: number;
  visible: boolean;
  text: string;
  bg: [number, number, number];
  font_size: number;
  font_weight: number;
}

export interface SnapshotNode {
  id: number;
  tag: string;
  parent: number | null;
  children: number[];
  attrs: Record<string, unknown>;
  cues: SnapshotCues;
}

export interface SnapshotFile {
  page_url: string;
  condition: Condition;
  captured_at: string;
  nodes: SnapshotNode[];
  requests: { url: string; initiator: number | null; timestamp: number }[];
  interactions: {
    kind: "click" | "type";
    target: number;
    timestamp: number;
    typed_text?: string;
  }[];
  errors: {
    error_type: string;
    message: string;
    timestamp: number;
    cause_interaction: number | null;
  }[];
  touches: { script_url: string; node: number; timestamp: number }[];
  salient_blocks?: number[][];
}

/** Wall-clock abstraction so tests can run the protocol instantly. */
export interface Clock {
  now(): number;
  sleep(ms: number): Promise<void>;
}

export class RealClock implements Clock {
  now(): number {
    return Date.now();
  }
  sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
  }
}

/** Instant clock that records every requested sleep. */
export class VirtualClock implements Clock {
  private t = 0;
  readonly sleeps: number[] = [];
  now(): number {
    return this.t;
  }
  async sleep(ms: number): Promise<void> {
    this.sleeps.push(ms);
    this.t += ms;
  }
}
