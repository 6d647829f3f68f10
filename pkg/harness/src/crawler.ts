/** The three-visit protocol.
 *
 * Order is fixed-list first (the visit that defines the interaction plan),
 * then the breaking list, then no list. The browser state resets between
 * visits, a session buffer separates sessions, and same-page visits keep a
 * minimum spacing so the target server is never hammered.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { acceptCookieBanner } from "./cookies.js";
import { EMPTY_LIST, FilterList, parseFilterList } from "./filters.js";
import { LivePage } from "./engine.js";
import { buildSnapshot } from "./snapshot.js";
import {
  Clock,
  Condition,
  CrawlConfig,
  PlannedInteraction,
  RealClock,
  SiteDefinition,
  VisitResult,
} from "./types.js";

export function loadSite(path: string): SiteDefinition {
  const site = JSON.parse(readFileSync(path, "utf-8")) as SiteDefinition;
  if (!site.url || !site.dom) throw new Error(`not a site definition: ${path}`);
  return site;
}

export function loadPlan(path: string): PlannedInteraction[] {
  return JSON.parse(readFileSync(path, "utf-8")) as PlannedInteraction[];
}

/** Default plan when none is supplied: one click on the first button-like
 * element of the fixed-list visit, addressed by a stable selector. */
export function derivePlan(page: LivePage): PlannedInteraction[] {
  const clickable = [...page.nodes.values()]
    .filter((n) => (n.tag === "button" || n.tag === "a") && n.visible)
    .sort((a, b) => a.id - b.id);
  const target = clickable[0];
  if (!target) return [];
  const selector = target.htmlId
    ? `#${target.htmlId}`
    : target.classes[0]
      ? `.${target.classes[0]}`
      : target.tag;
  return [{ kind: "click", selector }];
}

export interface VisitOptions {
  site: SiteDefinition;
  condition: Condition;
  filters: FilterList;
  plan: PlannedInteraction[];
  outDir: string;
  timeoutS: number;
  clock: Clock;
}

export function runVisit(options: VisitOptions): VisitResult {
  const { site, condition, filters, plan, outDir, timeoutS, clock } = options;
  const executed: PlannedInteraction[] = [];
  if ((site.loadMs ?? 0) / 1000 > timeoutS) {
    return { condition, status: "TIMEOUT", executedSequence: executed };
  }
  let page: LivePage;
  try {
    page = new LivePage(site, filters);
    page.load();
  } catch (err) {
    return {
      condition,
      status: "NAV_ERROR",
      executedSequence: executed,
      error: String(err),
    };
  }
  acceptCookieBanner(page);
  for (const step of plan) {
    if (page.perform(step)) executed.push(step);
  }
  const capturedAt = new Date(clock.now()).toISOString();
  const snapshot = buildSnapshot(page, condition, capturedAt);
  mkdirSync(outDir, { recursive: true });
  const path = join(outDir, `visit_${condition}.snapshot`);
  writeFileSync(path, JSON.stringify(snapshot, null, 1));
  return { condition, status: "OK", snapshotPath: path, executedSequence: executed };
}

export interface TripleResult {
  visits: VisitResult[]; // in execution order: fixed, breaking, none
  plan: PlannedInteraction[];
}

export async function runTriple(
  config: CrawlConfig,
  clock: Clock = new RealClock(),
): Promise<TripleResult> {
  let site: SiteDefinition;
  try {
    site = loadSite(config.siteFile);
    if (site.url !== config.url) {
      throw new Error(`site file serves ${site.url}, not ${config.url}`);
    }
  } catch (err) {
    const failure = (condition: Condition): VisitResult => ({
      condition,
      status: "NAV_ERROR",
      executedSequence: [],
      error: String(err),
    });
    return { visits: [failure("fixed"), failure("breaking"), failure("none")], plan: [] };
  }

  const fixedList = parseFilterList(readFileSync(config.fixedListFile, "utf-8"));
  const breakingList = parseFilterList(readFileSync(config.breakingListFile, "utf-8"));

  // The plan comes from a file, or from a scout render of the fixed-list
  // visit (the visit expected to show full functionality with the fewest ads).
  let plan: PlannedInteraction[];
  if (config.planFile) {
    plan = loadPlan(config.planFile);
  } else {
    const scout = new LivePage(site, fixedList);
    scout.load();
    acceptCookieBanner(scout);
    plan = derivePlan(scout);
  }

  const schedule: { condition: Condition; filters: FilterList }[] = [
    { condition: "fixed", filters: fixedList },
    { condition: "breaking", filters: breakingList },
    { condition: "none", filters: EMPTY_LIST },
  ];
  const visits: VisitResult[] = [];
  for (const [index, step] of schedule.entries()) {
    if (index > 0) {
      // Same page again: honor both the per-page spacing and session buffer.
      const waitS = Math.max(config.interVisitDelayS, config.sessionBufferS);
      await clock.sleep(waitS * 1000);
    }
    visits.push(
      runVisit({
        site,
        condition: step.condition,
        filters: step.filters,
        plan,
        outDir: config.outDir,
        timeoutS: config.timeoutS,
        clock,
      }),
    );
  }
  return { visits, plan };
}
