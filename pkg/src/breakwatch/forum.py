"""Offline parsing of exported breakage-issue records.

Covers three forum families with different posting conventions: EasyList
(free-form posts whose titles name the broken site), uBlock (templated
sections with a URL heading), and AdGuard (strictly templated reports).
Also classifies filter-list rules into network-blocking vs. content rules
and recovers the breaking/fixing list references from an issue's timeline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class Forum(Enum):
    EASYLIST = "easylist"
    UBLOCK = "ublock"
    ADGUARD = "adguard"


class AuthorRole(Enum):
    USER = "user"
    MAINTAINER = "maintainer"


class RuleKind(Enum):
    BLOCKING = "blocking"
    CONTENT = "content"


class ExtractionStatus(Enum):
    OK = "ok"
    MANUAL = "manual"  # ambiguous post, needs a human
    DROP = "drop"  # post does not follow the forum's format


class UnparsableRule(Exception):
    """Comments, headers, and blank lines are not filter rules."""


class NoMaintainerCommit(Exception):
    """The issue timeline contains no maintainer commit to anchor on."""


@dataclass(frozen=True)
class IssueEvent:
    author_role: AuthorRole
    timestamp: float
    text: str
    commit_ref: str | None = None


@dataclass(frozen=True)
class IssueRecord:
    forum: Forum
    title: str
    body: str
    created_at: float
    events: tuple[IssueEvent, ...] = ()

    def __post_init__(self):
        times = [e.timestamp for e in self.events]
        if times != sorted(times):
            raise ValueError("issue events must be sorted by timestamp")


@dataclass(frozen=True)
class UrlExtraction:
    status: ExtractionStatus
    url: str | None = None


@dataclass(frozen=True)
class CommitRef:
    """A list state anchored on a commit; `pre` marks the state just before it."""

    sha: str
    pre: bool
    timestamp: float

    def __str__(self) -> str:
        return f"PRE({self.sha})" if self.pre else self.sha


@dataclass(frozen=True)
class ListRecovery:
    breaking_ref: CommitRef
    fixing_ref: CommitRef


# ---------------------------------------------------------------------------
# Registrable domains (pinned public-suffix snapshot)

_URL_RE = re.compile(r"https?://[^\s<>\"')\]},]+", re.IGNORECASE)
_DOMAIN_RE = re.compile(r"\b(?:[a-z0-9-]+\.)+[a-z]{2,}\b", re.IGNORECASE)


def _load_suffixes() -> frozenset[str]:
    data = resources.files("breakwatch.data").joinpath("public_suffix_snapshot.txt")
    lines = data.read_text(encoding="utf-8").splitlines()
    return frozenset(
        line.strip().lower() for line in lines if line.strip() and not line.startswith("#")
    )


_SUFFIXES: frozenset[str] | None = None


def _suffixes() -> frozenset[str]:
    global _SUFFIXES
    if _SUFFIXES is None:
        _SUFFIXES = _load_suffixes()
    return _SUFFIXES


def registrable_domain(host: str) -> str | None:
    """Registered domain of a host per the bundled suffix snapshot.

    The longest matching public suffix plus one label; unknown TLDs fall back
    to the last two labels.
    """
    host = host.lower().strip(".")
    labels = host.split(".")
    if len(labels) < 2:
        return None
    suffixes = _suffixes()
    for i in range(1, len(labels)):
        candidate = ".".join(labels[i:])
        if candidate in suffixes:
            if i == 0:
                return None
            return ".".join(labels[i - 1 :])
    return ".".join(labels[-2:])


def _host_of(url: str) -> str:
    rest = url.split("://", 1)[-1]
    host = rest.split("/", 1)[0]
    host = host.split("@")[-1].split(":")[0]
    return host.lower()


def _urls_in(text: str) -> list[str]:
    return [m.group(0).rstrip(".,;:!?") for m in _URL_RE.finditer(text)]


# ---------------------------------------------------------------------------
# Per-forum URL extraction

_UBLOCK_MARKERS = ("url address of the web page", "url(s) where the issue occurs")
_ADGUARD_MARKERS = ("### issue url", "** issue url", "where is the problem encountered?")
_SECTION_RE = re.compile(r"^\s*(#{2,}|\*\*)\s*\S", re.MULTILINE)


def _section_after(body: str, markers: tuple[str, ...]) -> str | None:
    low = body.lower()
    for marker in markers:
        pos = low.find(marker)
        if pos < 0:
            continue
        start = pos + len(marker)
        nxt = _SECTION_RE.search(body, start)
        return body[start : nxt.start() if nxt else len(body)]
    return None


def extract_issue_url(rec: IssueRecord) -> UrlExtraction:
    """Pull the broken-page URL out of one issue record.

    EasyList posts are matched by registrable domain against the title;
    uBlock and AdGuard posts by their template sections. Ambiguity flags the
    record MANUAL; AdGuard records that do not follow the template are
    DROPped.
    """
    if rec.forum is Forum.EASYLIST:
        title_domains = {
            d
            for d in (registrable_domain(m.group(0)) for m in _DOMAIN_RE.finditer(rec.title))
            if d
        }
        candidates = [
            u for u in _urls_in(rec.body) if registrable_domain(_host_of(u)) in title_domains
        ]
        unique = list(dict.fromkeys(candidates))
        if len(unique) == 1:
            return UrlExtraction(ExtractionStatus.OK, unique[0])
        return UrlExtraction(ExtractionStatus.MANUAL)

    if rec.forum is Forum.UBLOCK:
        section = _section_after(rec.body, _UBLOCK_MARKERS)
        urls = list(dict.fromkeys(_urls_in(section))) if section else []
        if len(urls) == 1:
            return UrlExtraction(ExtractionStatus.OK, urls[0])
        return UrlExtraction(ExtractionStatus.MANUAL)

    section = _section_after(rec.body, _ADGUARD_MARKERS)
    if section is None:
        return UrlExtraction(ExtractionStatus.DROP)
    urls = _urls_in(section)
    if not urls:
        return UrlExtraction(ExtractionStatus.DROP)
    return UrlExtraction(ExtractionStatus.OK, urls[0])


# ---------------------------------------------------------------------------
# Filter-rule classification

# Separators that switch a rule from network blocking to content rewriting:
# element hiding (##), hiding exceptions (#@#), procedural/extended CSS
# selectors (#?#), CSS injection (#$#), scriptlet injection (#%#), and
# HTML filtering ($$).
_CONTENT_SEPARATORS = ("#@#", "#?#", "#$#", "#%#", "##", "$$")


def classify_filter_rule(rule: str) -> RuleKind:
    """Classify one filter-list line as a network or a content rule."""
    line = rule.strip()
    if not line or line.startswith("!") or line.startswith("["):
        raise UnparsableRule(f"not a rule: {rule!r}")
    for sep in _CONTENT_SEPARATORS:
        if sep in line:
            return RuleKind.CONTENT
    return RuleKind.BLOCKING


# ---------------------------------------------------------------------------
# Breaking / fixing list recovery


def recover_list_refs(rec: IssueRecord) -> ListRecovery:
    """Anchor the breaking and fixing list states on the issue timeline.

    The breaking list is the state just before the first maintainer commit
    (PRE marker); the fixing list is the last commit any event references.
    """
    maintainer_commits = [
        e
        for e in rec.events
        if e.author_role is AuthorRole.MAINTAINER and e.commit_ref
    ]
    if not maintainer_commits:
        raise NoMaintainerCommit(rec.title)
    first = maintainer_commits[0]
    all_commits = [e for e in rec.events if e.commit_ref]
    last = all_commits[-1]
    return ListRecovery(
        breaking_ref=CommitRef(first.commit_ref, pre=True, timestamp=first.timestamp),
        fixing_ref=CommitRef(last.commit_ref, pre=False, timestamp=last.timestamp),
    )


# ---------------------------------------------------------------------------
# Issue-export parsing (offline JSON files)


def parse_issue_export(doc: list[dict]) -> list[IssueRecord]:
    """Parse a list of exported issue objects into records.

    Expected object shape: forum, title, body, created_at (number), events:
    [{author_role, timestamp, text, commit_ref?}], events sorted by time.
    """
    records = []
    for obj in doc:
        events = tuple(
            IssueEvent(
                author_role=AuthorRole(e["author_role"]),
                timestamp=float(e["timestamp"]),
                text=e.get("text", ""),
                commit_ref=e.get("commit_ref"),
            )
            for e in obj.get("events", [])
        )
        records.append(
            IssueRecord(
                forum=Forum(obj["forum"]),
                title=obj["title"],
                body=obj.get("body", ""),
                created_at=float(obj.get("created_at", 0)),
                events=events,
            )
        )
    return records
