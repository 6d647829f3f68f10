/** Minimal filter-list interpreter: enough of the adblock grammar to apply
 * bundled lists to fixture sites. Supported: `!` comments and `[...]`
 * headers (ignored), `@@` exceptions, `||host^` anchors, plain substring
 * patterns (network rules, `$options` stripped), and `domain##selector` /
 * `##selector` element-hiding rules. */

export interface FilterList {
  blocking: NetworkRule[];
  exceptions: NetworkRule[];
  hiding: HidingRule[];
}

export interface NetworkRule {
  raw: string;
  hostAnchor?: string;
  substring?: string;
}

export interface HidingRule {
  raw: string;
  domains: string[]; // empty means every domain
  selector: string;
}

function parseNetworkRule(line: string): NetworkRule {
  const pattern = line.split("$", 1)[0];
  if (pattern.startsWith("||")) {
    const rest = pattern.slice(2);
    const end = rest.search(/[\^/]/);
    return { raw: line, hostAnchor: end < 0 ? rest : rest.slice(0, end) };
  }
  return { raw: line, substring: pattern.replaceAll("*", "") };
}

export function parseFilterList(text: string): FilterList {
  const list: FilterList = { blocking: [], exceptions: [], hiding: [] };
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trim();
    if (!line || line.startsWith("!") || line.startsWith("[")) continue;
    const hideAt = line.indexOf("##");
    if (hideAt >= 0) {
      const domains = line
        .slice(0, hideAt)
        .split(",")
        .map((d) => d.trim())
        .filter(Boolean);
      list.hiding.push({ raw: line, domains, selector: line.slice(hideAt + 2) });
      continue;
    }
    if (line.startsWith("@@")) {
      list.exceptions.push(parseNetworkRule(line.slice(2)));
    } else {
      list.blocking.push(parseNetworkRule(line));
    }
  }
  return list;
}

function hostOf(url: string): string {
  const rest = url.includes("://") ? url.split("://", 2)[1] : url;
  return rest.split("/", 1)[0].split("@").pop()!.split(":", 1)[0].toLowerCase();
}

function ruleMatches(rule: NetworkRule, url: string): boolean {
  if (rule.hostAnchor) {
    const host = hostOf(url);
    return host === rule.hostAnchor || host.endsWith("." + rule.hostAnchor);
  }
  return rule.substring !== undefined && rule.substring !== "" && url.includes(rule.substring);
}

/** True when `url` would be blocked at the network level. */
export function isBlocked(list: FilterList, url: string): boolean {
  if (list.exceptions.some((r) => ruleMatches(r, url))) return false;
  return list.blocking.some((r) => ruleMatches(r, url));
}

/** Hiding selectors that apply to a page host. */
export function hidingSelectorsFor(list: FilterList, pageUrl: string): string[] {
  const host = hostOf(pageUrl);
  return list.hiding
    .filter(
      (r) =>
        r.domains.length === 0 ||
        r.domains.some((d) => host === d || host.endsWith("." + d)),
    )
    .map((r) => r.selector);
}

export const EMPTY_LIST: FilterList = { blocking: [], exceptions: [], hiding: [] };
