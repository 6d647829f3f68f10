"""Parse exported breakage issues: URL extraction per forum format, filter-rule
classification, and breaking/fixing list recovery from the issue timeline.

Run:  python3 demos/06_forum_ingest.py
"""

from breakwatch.forum import (
    AuthorRole,
    Forum,
    IssueEvent,
    IssueRecord,
    classify_filter_rule,
    extract_issue_url,
    recover_list_refs,
    registrable_domain,
)

# --- registrable domains come from a pinned suffix snapshot
for host in ("www.example.com", "news.bbc.co.uk", "app.me.github.io"):
    print(f"{host:<24} -> {registrable_domain(host)}")

# --- URL extraction: each forum has its own posting conventions
records = [
    IssueRecord(
        forum=Forum.EASYLIST,
        title="example.com product pages broken",
        body="Images vanish on https://example.com/products after the update; "
        "the blocked asset is https://ads.adnetwork.example/pixel.gif",
        created_at=0.0,
    ),
    IssueRecord(
        forum=Forum.UBLOCK,
        title="[Breakage] player stuck",
        body="### URL(s) where the issue occurs\nhttps://video.example.org/watch/5\n"
        "### Category\nbreakage",
        created_at=0.0,
    ),
    IssueRecord(
        forum=Forum.ADGUARD,
        title="cart broken",
        body="screenshot attached, no template followed",
        created_at=0.0,
    ),
]
print()
for rec in records:
    out = extract_issue_url(rec)
    print(f"{rec.forum.value:<9} -> {out.status.value:<7} {out.url or ''}")

# --- rule classification: network blocking vs. content rewriting
print()
for rule in (
    "||ads.example.com^",
    "@@||cdn.example.net^$script",
    "example.com##.banner",
    "example.com#%#//scriptlet('set-constant', 'adsEnabled', 'true')",
):
    print(f"{rule:<55} {classify_filter_rule(rule).value}")

# --- timeline recovery: breaking list = state before the first maintainer
# commit, fixing list = the last commit on the issue
issue = IssueRecord(
    forum=Forum.ADGUARD,
    title="video site broken",
    body="### Issue URL\nhttps://tv.example.net/live",
    created_at=0.0,
    events=(
        IssueEvent(AuthorRole.USER, 1.0, "report"),
        IssueEvent(AuthorRole.MAINTAINER, 5.0, "first fix", commit_ref="a1b2c3"),
        IssueEvent(AuthorRole.USER, 7.0, "still broken"),
        IssueEvent(AuthorRole.MAINTAINER, 9.0, "follow-up fix", commit_ref="d4e5f6"),
    ),
)
refs = recover_list_refs(issue)
print(f"\nbreaking list state: {refs.breaking_ref}")
print(f"fixing list state:   {refs.fixing_ref}")
