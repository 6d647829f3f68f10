import { describe, expect, it } from "vitest";

import {
  hidingSelectorsFor,
  isBlocked,
  parseFilterList,
} from "../src/filters.js";

describe("parseFilterList", () => {
  it("skips comments and headers", () => {
    const list = parseFilterList("! note\n[Adblock Plus 2.0]\n\n||ads.example.com^\n");
    expect(list.blocking).toHaveLength(1);
    expect(list.exceptions).toHaveLength(0);
    expect(list.hiding).toHaveLength(0);
  });

  it("separates hiding rules with their domains", () => {
    const list = parseFilterList("example.com,example.org##.banner\n##.global-ad\n");
    expect(list.hiding).toHaveLength(2);
    expect(list.hiding[0].domains).toEqual(["example.com", "example.org"]);
    expect(list.hiding[1].domains).toEqual([]);
  });
});

describe("isBlocked", () => {
  const list = parseFilterList(
    [
      "||ads.example.com^",
      "/media-api.",
      "@@||cdn.example.com^",
      "||cdn.example.com^",
    ].join("\n"),
  );

  it("matches host anchors including subdomains", () => {
    expect(isBlocked(list, "https://ads.example.com/x.js")).toBe(true);
    expect(isBlocked(list, "https://sub.ads.example.com/y.gif")).toBe(true);
    expect(isBlocked(list, "https://example.com/")).toBe(false);
  });

  it("matches plain substrings", () => {
    expect(isBlocked(list, "https://static.example.net/js/media-api.v2.js")).toBe(true);
    expect(isBlocked(list, "https://static.example.net/js/player.js")).toBe(false);
  });

  it("lets exceptions win", () => {
    expect(isBlocked(list, "https://cdn.example.com/app.js")).toBe(false);
  });
});

describe("hidingSelectorsFor", () => {
  it("scopes rules by page host", () => {
    const list = parseFilterList("example.com##.ad\nother.net##.promo\n##.everywhere\n");
    const selectors = hidingSelectorsFor(list, "https://www.example.com/page");
    expect(selectors).toContain(".ad");
    expect(selectors).toContain(".everywhere");
    expect(selectors).not.toContain(".promo");
  });
});
