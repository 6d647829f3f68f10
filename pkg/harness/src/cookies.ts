/** Cookie-banner acceptance via a keyword heuristic.
 *
 * The keyword list ships as data and is English-first by design; banners
 * phrased in other languages are left alone, which is a documented
 * limitation of keyword matching.
 */

import { LivePage, LiveNode } from "./engine.js";

export const DEFAULT_ACCEPT_KEYWORDS = [
  "accept",
  "accept all",
  "agree",
  "i agree",
  "allow",
  "allow all",
  "got it",
  "ok",
  "consent",
];

const CLICKABLE = new Set(["button", "a", "input"]);

function textMatchesKeyword(text: string, keywords: string[]): boolean {
  const lowered = text.trim().toLowerCase();
  if (!lowered) return false;
  return keywords.some((k) => lowered.includes(k));
}

/** Click the banner's accept control when a keyword matches; returns whether
 * a click happened. An accepted banner disappears before the snapshot. */
export function acceptCookieBanner(
  page: LivePage,
  keywords: string[] = DEFAULT_ACCEPT_KEYWORDS,
): boolean {
  const spec = page.site.cookieBanner;
  if (!spec) return false;
  const banner = page.queryOne(spec.selector);
  if (!banner) return false;

  const stack = [...banner.children];
  let accept: LiveNode | undefined;
  while (stack.length > 0) {
    const node = page.nodes.get(stack.shift()!);
    if (!node) continue;
    if (CLICKABLE.has(node.tag) && textMatchesKeyword(node.text, keywords)) {
      accept = node;
      break;
    }
    stack.push(...node.children);
  }
  if (!accept) return false;
  page.clockMs += 200;
  page.removeSubtree(banner.id);
  return true;
}
