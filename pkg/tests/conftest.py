"""Shared fixtures: reference measurement tables and small helpers."""

from __future__ import annotations

import pytest

from eepcrawl.config import CrawlConfig
from eepcrawl.model import EepsiteId, EepsiteRecord, SimClock, Source, Status

# Records by (source, status) from the reference measurement, with each source's stated total.
# The reference table only lists FINISHED / DISCOVERING / DISCARDED rows.
TABLE2_SOURCE_TOTALS = {Source.SEED: 3938, Source.FLOODFILL: 50784, Source.DISCOVERED: 292}
TABLE2_GRAND_TOTAL = 54974
TABLE2_COUNTS = {
    (Source.SEED, Status.FINISHED): 129,
    (Source.SEED, Status.DISCOVERING): 0,
    (Source.SEED, Status.DISCARDED): 3768,
    (Source.FLOODFILL, Status.FINISHED): 600,
    (Source.FLOODFILL, Status.DISCOVERING): 12167,
    (Source.FLOODFILL, Status.DISCARDED): 38012,
    (Source.DISCOVERED, Status.FINISHED): 58,
    (Source.DISCOVERED, Status.DISCOVERING): 3,
    (Source.DISCOVERED, Status.DISCARDED): 230,
}
# (pct by status, pct of total services)
TABLE2_PCTS = {
    (Source.SEED, Status.FINISHED): (3.31, 0.25),
    (Source.SEED, Status.DISCOVERING): (0.0, 0.0),
    (Source.SEED, Status.DISCARDED): (96.66, 6.85),
    (Source.FLOODFILL, Status.FINISHED): (1.18, 1.09),
    (Source.FLOODFILL, Status.DISCOVERING): (23.96, 22.13),
    (Source.FLOODFILL, Status.DISCARDED): (74.85, 69.14),
    (Source.DISCOVERED, Status.FINISHED): (19.86, 0.15),
    (Source.DISCOVERED, Status.DISCOVERING): (1.03, 0.005),
    (Source.DISCOVERED, Status.DISCARDED): (78.77, 0.42),
}

# (degree, host, status, source) rows of the reference top out-degree table
TABLE4_OUT = [
    (385, "identiguy.i2p", "FINISHED", "SEED"),
    (248, "i2pwiki.i2p", "FINISHED", "SEED"),
    (152, "inr.i2p", "FINISHED", "SEED"),
    (70, "s6lagaqbn572fvnr7vsxsqwbwxb6m3gr5hu6eetstykdm2opp2ia.b32.i2p", "FINISHED", "FLOODFILL"),
    (54, "zy37tq6ynucp3ufoyeegswqjaeofmj57cpm5ecd7nbanh2h6f2ja.b32.i2p", "FINISHED", "SEED"),
    (45, "5ypxuqf2ufqdsf3ejv5xwrgwatjxf2uw7tyxz2av44pka4w3pvza.b32.i2p", "FINISHED", "FLOODFILL"),
    (31, "fex6v4zccrovs7dixqbigbbqtrb7ylrmpgphwnwoyjutrg56qmoa.b32.i2p", "FINISHED", "FLOODFILL"),
    (28, "i2pforum.i2p", "FINISHED", "DISCOVERED"),
    (26, "stats.i2p", "FINISHED", "DISCOVERED"),
    (26, "pwgma3snbsgkddxgb54mrxxkt3l4jzchrtp52vxmw7rbkjygylxq.b32.i2p", "FINISHED", "SEED"),
    (19, "trac.i2p2.i2p", "FINISHED", "SEED"),
    (18, "i2p-projekt.i2p", "FINISHED", "SEED"),
    (17, "isxls447iuumsb35pq5r3di6xrxr2igugvshqwhi5hj5gvhwvqba.b32.i2p", "FINISHED", "SEED"),
    (17, "4bpcp4fmvyr46vb4kqjvtxlst6puz4r3dld24umooiy5mesxzspa.b32.i2p", "FINISHED", "SEED"),
    (15, "uda2rkhskjdb4w7xiftz3btfpl7bhxsy5gwpiiiongte4gulbuza.b32.i2p", "FINISHED", "FLOODFILL"),
]

# (degree, host, status, source) rows of the reference top in-degree table
TABLE5_IN = [
    (58, "forum.i2p", "DISCARDED", "SEED"),
    (55, "ugha.i2p", "DISCARDED", "SEED"),
    (52, "www.i2p2.i2p", "DISCARDED", "SEED"),
    (49, "i2p-projekt.i2p", "FINISHED", "SEED"),
    (47, "no.i2p", "DISCARDED", "SEED"),
    (46, "inproxy.tino.i2p", "DISCARDED", "SEED"),
    (45, "i2host.i2p", "DISCARDED", "SEED"),
    (45, "perv.i2p", "DISCARDED", "SEED"),
    (45, "tino.i2p", "DISCARDED", "SEED"),
    (41, "i2pwiki.i2p", "FINISHED", "SEED"),
    (21, "sperrbezirk.i2p", "DISCARDED", "SEED"),
    (17, "diftracker.i2p", "FINISHED", "SEED"),
    (13, "visibility.i2p", "DISCARDED", "SEED"),
    (12, "vstr4d.i2p", "DISCARDED", "SEED"),
    (11, "www.imule.i2p", "DISCARDED", "SEED"),
    (11, "bote.i2p", "DISCARDED", "SEED"),
    (11, "bkillyourtv.i2p", "DISCARDED", "SEED"),
]

# crawled eepsites per detected language; 813 sites with a detected language
TABLE6_COUNTS = {"en": 783, "fr": 7, "de": 7, "es": 5, "no": 2, "la": 2, "it": 2,
                 "cy": 1, "tr": 1, "pt": 1, "nl": 1, "ca": 1}
TABLE6_PCTS = {"en": 96.31, "fr": 0.86, "de": 0.86, "es": 0.62, "no": 0.25, "la": 0.25,
               "it": 0.25, "cy": 0.12, "tr": 0.12, "pt": 0.12, "nl": 0.12, "ca": 0.12}


def make_record(host: str, status: Status = Status.DISCOVERING, source: Source = Source.SEED,
                t: float = 0.0, owner: str = "0", **kw) -> EepsiteRecord:
    base = dict(id=EepsiteId(host), source=source, status=status, discovery_attempts=0,
                crawl_attempts=0, first_seen=t, discovery_started=t, last_transition=t,
                owner_instance=owner)
    base.update(kw)
    return EepsiteRecord(**base)


@pytest.fixture
def config() -> CrawlConfig:
    return CrawlConfig()


@pytest.fixture
def clock() -> SimClock:
    return SimClock(1_000_000.0)


@pytest.fixture
def store(tmp_path):
    from eepcrawl.store import Store
    return Store(tmp_path / "store.db")


def simulate(net, path, seeds=None, **overrides):
    """Crawl a simulated network in lockstep; returns (store, summary)."""
    from eepcrawl.manager import FloodfillFeed, run_lockstep
    from eepcrawl.simnet import SimTransport
    from eepcrawl.store import Store

    cfg = CrawlConfig(**overrides)
    clock = SimClock(cfg.epoch)
    transport = SimTransport(net, clock, epoch=cfg.epoch)
    feed = FloodfillFeed.from_simnet(net, epoch=cfg.epoch)
    seed_ids = [net.site_id(i) for i in (net.seeds if seeds is None else seeds)]
    store = Store(path)
    summary = run_lockstep(cfg, store, transport, clock, seed_ids, feed)
    return store, summary


def snapshot(store):
    with store.session("reader") as s:
        return {r.id.host: r for r in s.records()}, s.results()


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
