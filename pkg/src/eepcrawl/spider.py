"""Per-site crawling: BFS over same-host pages, link extraction, content stats."""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple
from urllib.parse import urljoin, urlsplit

from lxml import etree

from .language import UNKNOWN, Detector, detect_language
from .model import EepsiteId, InvalidURL, normalize_url
from .transport import HTTP_TIMEOUT, FaultReason, FetchFault, Transport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PageStats:
    letters: int = 0
    words: int = 0
    images: int = 0
    scripts: int = 0


@dataclass(frozen=True)
class CrawlLimits:
    max_pages: int = 25_000
    max_depth: int = 50
    timeout: float = HTTP_TIMEOUT

    def __post_init__(self):
        if self.max_pages < 1 or self.max_depth < 0 or self.timeout <= 0:
            raise ValueError(f"invalid crawl limits: {self}")


@dataclass(frozen=True)
class CrawlResult:
    id: EepsiteId
    page_count: int
    home_stats: PageStats
    out_links: frozenset[EepsiteId]
    language: str = UNKNOWN
    crawled_at: float = 0.0
    surface_links: int = 0

    def __post_init__(self):
        if self.page_count < 1:
            raise ValueError("a crawl result covers at least the home page")
        if self.id in self.out_links:
            raise ValueError("self-links are internal, not out-links")


class CrawlError(Exception):
    """The home page could not be fetched; the crawl counts as CRAWL_ERROR."""

    def __init__(self, site: EepsiteId, reason: str):
        super().__init__(f"{site}: {reason}")
        self.site = site
        self.reason = reason


class Links(NamedTuple):
    internal: set[str]
    external: set[EepsiteId]
    surface: set[str]


class _PageTarget:
    """lxml parser target: collects hrefs, visible text and element counts."""

    _hidden = ("script", "style")

    def __init__(self):
        self.hrefs: list[str] = []
        self.text: list[str] = []
        self.images = 0
        self.scripts = 0
        self._hidden_depth = 0

    def start(self, tag, attrib):
        if tag == "a":
            href = attrib.get("href")
            if href:
                self.hrefs.append(href)
        elif tag == "img":
            self.images += 1
        elif tag == "script":
            self.scripts += 1
        if tag in self._hidden:
            self._hidden_depth += 1

    def end(self, tag):
        if tag in self._hidden and self._hidden_depth:
            self._hidden_depth -= 1

    def data(self, data):
        if not self._hidden_depth:
            self.text.append(data)

    def comment(self, text):
        pass

    def close(self):
        return self


class ParsedPage(NamedTuple):
    stats: PageStats
    links: Links
    text: str


def _count_stats(text: str, images: int, scripts: int) -> PageStats:
    letters = sum(map(str.isalpha, text))
    return PageStats(letters=letters, words=len(text.split()), images=images, scripts=scripts)


_normalize = lru_cache(maxsize=100_000)(normalize_url)


def _partition(hrefs: list[str], base: EepsiteId, page_path: str) -> Links:
    internal: set[str] = set()
    external: set[EepsiteId] = set()
    surface: set[str] = set()
    page_url = f"http://{base.host}{page_path}"
    for href in hrefs:
        href = href.strip()
        if not href or href[0] == "#":
            continue
        if href[0] == "/" and not href.startswith("//") and "/." not in href:
            # root-relative: same site, no resolution needed
            path, _, query = href.partition("#")[0].partition("?")
            internal.add(f"{path}?{query}" if query else path)
            continue
        try:
            absolute = urljoin(page_url, href)
            parts = urlsplit(absolute)
        except ValueError:
            continue
        if parts.scheme not in ("http", "https"):
            continue
        try:
            target = _normalize(absolute)
        except InvalidURL as exc:
            if exc.reason == "NOT_I2P" and parts.hostname:
                surface.add(parts.hostname.lower())
            continue
        if target == base:
            path = parts.path or "/"
            internal.add(f"{path}?{parts.query}" if parts.query else path)
        else:
            external.add(target)
    return Links(internal, external, surface)


def _run_parser(html: str) -> _PageTarget:
    target = _PageTarget()
    if not html.strip():
        return target
    parser = etree.HTMLParser(target=target)
    try:
        parser.feed(html)
        parser.close()
    except etree.LxmlError:  # lenient parser, but never let markup kill a crawl
        logger.debug("parser gave up", exc_info=True)
    return target


def parse_page(html: str, base: EepsiteId, page_path: str = "/") -> ParsedPage:
    parser = _run_parser(html)
    text = "".join(parser.text)
    stats = _count_stats(text, parser.images, parser.scripts)
    return ParsedPage(stats, _partition(parser.hrefs, base, page_path), text)


def extract_links(html: str, base: EepsiteId, page_path: str = "/") -> tuple[set[str], set[EepsiteId]]:
    """Split a page's anchors into same-site paths and external eepsites.

    Relative links resolve against ``page_path`` on ``base``. Fragments are
    dropped, query strings kept. Surface-web hosts are left out; use
    :func:`parse_page` to see them.
    """
    links = parse_page(html, base, page_path).links
    return links.internal, links.external


def page_stats(html: str) -> PageStats:
    """Letters, words, images and scripts of a document.

    Visible text is the concatenated text nodes outside ``script`` and
    ``style`` bodies. Letters are Unicode-alphabetic characters, words are
    maximal runs of non-whitespace.
    """
    parser = _run_parser(html)
    return _count_stats("".join(parser.text), parser.images, parser.scripts)


FetchLog = Callable[[dict], None]


def jsonl_fetch_log(stream) -> FetchLog:
    def write(entry: dict) -> None:
        stream.write(json.dumps(entry, sort_keys=True) + "\n")
    return write


@dataclass
class _Traversal:
    pages: int = 0
    out_links: set[EepsiteId] = field(default_factory=set)
    surface: set[str] = field(default_factory=set)


def crawl_site(site: EepsiteId, transport: Transport, limits: CrawlLimits = CrawlLimits(),
               detector: Detector | None = None, now: float = 0.0,
               fetch_log: FetchLog | None = None) -> CrawlResult:
    """Breadth-first crawl of one eepsite starting from ``/``.

    Only same-host pages are fetched; every distinct external ``.i2p`` host
    seen on any fetched page becomes an out-link. Raises
    :class:`CrawlError` when the home page fails. Later failures are
    skipped, and a dead proxy ends the traversal early with what was
    gathered so far.
    """
    seen = {"/"}
    frontier: deque[tuple[str, int]] = deque([("/", 0)])
    acc = _Traversal()
    home: ParsedPage | None = None

    while frontier and acc.pages < limits.max_pages:
        path, depth = frontier.popleft()
        try:
            resp = transport.fetch(site, path, limits.timeout)
        except FetchFault as fault:
            if fetch_log:
                fetch_log({"ts": now, "site": site.host, "path": path, "bytes": 0,
                           "status": fault.reason.value})
            if home is None:
                raise CrawlError(site, fault.reason.value) from None
            if fault.reason is FaultReason.PROXY_DOWN:
                logger.warning("proxy down while crawling %s, keeping partial result", site)
                break
            continue
        if fetch_log:
            fetch_log({"ts": now, "site": site.host, "path": path,
                       "bytes": len(resp.body.encode("utf-8")), "status": resp.status})
        if not resp.ok:
            if home is None:
                raise CrawlError(site, f"HTTP {resp.status}")
            continue

        parsed = parse_page(resp.body, site, path)
        if home is None:
            home = parsed
        acc.pages += 1
        acc.out_links |= parsed.links.external
        acc.surface |= parsed.links.surface
        if depth >= limits.max_depth:
            continue
        for link in sorted(parsed.links.internal):
            if link not in seen:
                seen.add(link)
                frontier.append((link, depth + 1))

    assert home is not None
    language = detect_language(home.text, detector, site)
    return CrawlResult(id=site, page_count=acc.pages, home_stats=home.stats,
                       out_links=frozenset(acc.out_links), language=language,
                       crawled_at=now, surface_links=len(acc.surface))
