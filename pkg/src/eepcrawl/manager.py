"""Run orchestration: one manager loop per crawler instance.

Each instance ingests its seed batch and its share of floodfill-announced
hosts, probes DISCOVERING records once per discovery interval, hands
PENDING records to spiders and feeds crawl output back into the store.
Instances never talk to each other; the store is the only shared state.

Simulated runs advance a :class:`SimClock` one discovery interval per
tick and step every instance in a fixed order, so a given (network,
config) pair always produces the same store contents.
"""

from __future__ import annotations

import bisect
import logging
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .config import CrawlConfig, partition_seeds
from .discovery import DiscoverySchedule, ProbeResult, next_due, probe
from .language import Detector
from .model import (Clock, EepsiteId, EepsiteRecord, Event, InvalidURL, SimClock, Source, Status,
                    SystemClock, normalize_url, transition)
from .spider import CrawlError, CrawlLimits, CrawlResult, crawl_site
from .store import Store, StoreSession
from .transport import Transport

logger = logging.getLogger(__name__)


class FloodfillFeed:
    """Hosts announced by floodfill routers, each visible from a given time on.

    Live runs build one from a host-list file (everything visible at
    start); simulated runs from the network's announcement schedule.
    """

    def __init__(self, announcements: Iterable[tuple[float, str]] = ()):
        self._items = sorted(announcements)
        self._times = [t for t, _ in self._items]

    @classmethod
    def from_simnet(cls, net, epoch: float = 0.0) -> FloodfillFeed:
        return cls((epoch + net.announce_at[i], net.hosts[i]) for i in net.announced)

    @classmethod
    def from_host_list(cls, path: str | Path, at: float = 0.0) -> FloodfillFeed:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls((at, ln.strip()) for ln in lines if ln.strip() and not ln.startswith("#"))

    def __len__(self) -> int:
        return len(self._items)

    def visible(self, start: int, now: float) -> tuple[list[str], int]:
        """Hosts at positions ``start..`` announced by ``now``, and the new cursor."""
        end = bisect.bisect_right(self._times, now)
        return [h for _, h in self._items[start:end]], max(start, end)

    def next_time(self, cursor: int) -> float | None:
        return self._times[cursor] if cursor < len(self._times) else None


def owner_of(host: str, instances: int) -> int:
    """Stable instance assignment for floodfill hosts."""
    return zlib.crc32(host.encode("ascii")) % instances


@dataclass
class StepStats:
    ingested: int = 0
    probes: int = 0
    crawls: int = 0
    crawl_errors: int = 0
    discovered: int = 0


@dataclass
class RunSummary:
    ticks: int
    started: float
    ended: float
    counts: dict[Status, int] = field(default_factory=dict)
    totals: StepStats = field(default_factory=StepStats)

    @property
    def complete(self) -> bool:
        return all(s.terminal for s, n in self.counts.items() if n)

    def describe(self) -> str:
        parts = [f"{s.value}={self.counts.get(s, 0)}" for s in Status]
        days = (self.ended - self.started) / 86_400
        return f"{self.ticks} ticks, {days:.2f} days: " + " ".join(parts)


class InstanceManager:
    """The control loop of one crawler instance."""

    def __init__(self, config: CrawlConfig, session: StoreSession, transport: Transport,
                 clock: Clock, seeds: Iterable[EepsiteId] = (), feed: FloodfillFeed | None = None,
                 detector: Detector | None = None):
        self.config = config
        self.session = session
        self.transport = transport
        self.clock = clock
        self.detector = detector
        self.feed = feed or FloodfillFeed()
        self._feed_cursor = 0
        self._pending_seeds = list(seeds)
        self.limits = CrawlLimits(config.max_pages, config.max_depth, config.http_timeout)
        self.schedule = DiscoverySchedule(
            interval=config.discovery_interval, max_attempts=config.max_discovery_attempts,
            max_duration=config.max_discovery_duration,
            max_parallel_probes=config.max_discovery_single_threads)
        # even if every probe runs into the timeout, a probe slot completes this
        # many rounds within one discovery interval
        self.probe_rounds = max(1, math.floor(config.discovery_interval / config.http_timeout))
        self._probe_pool = ThreadPoolExecutor(config.max_discovery_single_threads,
                                              thread_name_prefix=f"probe-{session.instance}")
        self._spider_pool = ThreadPoolExecutor(config.max_ongoing_spiders,
                                               thread_name_prefix=f"spider-{session.instance}")

    @property
    def instance(self) -> str:
        return self.session.instance

    def close(self) -> None:
        self._probe_pool.shutdown()
        self._spider_pool.shutdown()

    # ------------------------------------------------------------ ingestion

    def _add(self, site: EepsiteId, source: Source, now: float) -> bool:
        return self.session.insert_new(EepsiteRecord.new(site, source, now, self.instance))

    def ingest(self, now: float) -> int:
        added = 0
        for site in self._pending_seeds:
            added += self._add(site, Source.SEED, now)
        self._pending_seeds = []
        hosts, self._feed_cursor = self.feed.visible(self._feed_cursor, now)
        for raw in hosts:
            if owner_of(raw, self.config.instances) != self.config.instance_id:
                continue
            try:
                site = normalize_url(raw)
            except InvalidURL as exc:
                logger.warning("floodfill host skipped (%s): %s", exc.reason, raw)
                continue
            added += self._add(site, Source.FLOODFILL, now)
        return added

    def feed_exhausted(self) -> bool:
        return self._feed_cursor >= len(self.feed) and not self._pending_seeds

    def next_announcement(self) -> float | None:
        return self.feed.next_time(self._feed_cursor)

    # ------------------------------------------------------------ discovery

    def discover(self, now: float) -> int:
        """Probe every due record, ``max_discovery_single_threads`` at a time."""
        records = {r.id: r for r in self.session.records(Status.DISCOVERING, owner=self.instance)}
        done = 0
        for _ in range(self.probe_rounds):
            due = next_due(records.values(), now, self.schedule)
            if not due:
                break
            results: list[ProbeResult] = list(self._probe_pool.map(
                lambda s: probe(s, self.transport, self.config.http_timeout), due))
            log = []
            for res in results:  # applied in schedule order, whatever order the probes finished in
                updated = transition(records.pop(res.site), res.event, self.config, now)
                self.session.upsert_record(updated)
                log.append((now, res, updated.discovery_attempts))
            self.session.log_probes(log)
            done += len(results)
        return done

    # ------------------------------------------------------------ crawling

    def _take_batch(self, now: float) -> list[EepsiteRecord]:
        batch = []
        while len(batch) < self.config.max_ongoing_spiders:
            site = self.session.dequeue_pending(now)
            if site is None:
                break
            rec = self.session.get(site)
            if rec is None or rec.status not in (Status.PENDING, Status.ERROR):
                continue  # stale queue entry
            rec = self.session.upsert_record(transition(rec, Event.DEQUEUE_FOR_CRAWL, self.config, now))
            if rec.status is Status.ONGOING:
                batch.append(rec)
        return batch

    def _crawl(self, rec: EepsiteRecord, now: float) -> CrawlResult | CrawlError:
        try:
            return crawl_site(rec.id, self.transport, self.limits, self.detector, now)
        except CrawlError as exc:
            return exc

    def crawl(self, now: float, stats: StepStats) -> None:
        while True:
            batch = self._take_batch(now)
            if not batch:
                return
            outcomes = list(self._spider_pool.map(lambda r: self._crawl(r, now), batch))
            for rec, out in zip(batch, outcomes):
                if isinstance(out, CrawlError):
                    logger.info("crawl of %s failed: %s", rec.id, out.reason)
                    self.session.upsert_record(transition(rec, Event.CRAWL_ERROR, self.config, now))
                    stats.crawl_errors += 1
                    continue
                self.session.save_result(out)
                self.session.upsert_record(transition(rec, Event.CRAWL_OK, self.config, now))
                stats.crawls += 1
                for site in sorted(out.out_links):
                    stats.discovered += self._add(site, Source.DISCOVERED, now)

    # ------------------------------------------------------------ loop

    def step(self) -> StepStats:
        now = self.clock.now()
        stats = StepStats()
        stats.ingested = self.ingest(now)
        stats.probes = self.discover(now)
        self.crawl(now, stats)
        return stats


def _accumulate(total: StepStats, step: StepStats) -> None:
    for name in ("ingested", "probes", "crawls", "crawl_errors", "discovered"):
        setattr(total, name, getattr(total, name) + getattr(step, name))


def run_lockstep(config: CrawlConfig, store: Store, transport: Transport, clock: SimClock,
                 seeds: list[EepsiteId], feed: FloodfillFeed | None = None,
                 detector: Detector | None = None,
                 instance_ids: Iterable[int] | None = None) -> RunSummary:
    """Drive ``config.instances`` managers on a shared simulated clock.

    Every tick each instance runs one step in id order, then the clock
    moves one discovery interval. The run ends when no record is active
    and no announcement is outstanding, or at the horizon. With
    ``instance_ids`` only those instances are driven.
    """
    feed = feed or FloodfillFeed()
    ids = list(range(config.instances)) if instance_ids is None else list(instance_ids)
    batches = partition_seeds(seeds, config.instances)
    managers = []
    for i in ids:
        cfg = config.with_overrides(instance_id=i)
        session = store.session(str(i), error_retry_delay=config.discovery_interval)
        managers.append(InstanceManager(cfg, session, transport, clock, batches[i], feed, detector))

    started = clock.now()
    horizon = started + config.horizon_days * 86_400.0
    tick = config.discovery_interval
    totals = StepStats()
    ticks = 0
    try:
        while clock.now() < horizon:
            for m in managers:
                _accumulate(totals, m.step())
            ticks += 1
            if sum(m.session.active_count(owner=m.instance) for m in managers) == 0:
                upcoming = [t for t in (m.next_announcement() for m in managers) if t is not None]
                if not upcoming:
                    break
                # nothing to probe or crawl: jump to the tick holding the next announcement
                target = started + math.ceil((min(upcoming) - started) / tick) * tick
                clock.set(max(target, clock.now() + tick))
            else:
                clock.advance(tick)
        counts = managers[0].session.status_counts()
    finally:
        for m in managers:
            m.close()
            m.session.close()
    logger.info("run finished after %d ticks", ticks)
    return RunSummary(ticks, started, clock.now(), counts, totals)


def run_live(config: CrawlConfig, store: Store, transport: Transport,
             seeds: list[EepsiteId], feed: FloodfillFeed | None = None,
             detector: Detector | None = None, sleep=time.sleep) -> RunSummary:
    """Single instance against a real transport, one step per discovery interval."""
    clock = SystemClock()
    batch = partition_seeds(seeds, config.instances)[config.instance_id]
    session = store.session(str(config.instance_id), error_retry_delay=config.discovery_interval)
    manager = InstanceManager(config, session, transport, clock, batch, feed, detector)
    started = clock.now()
    horizon = started + config.horizon_days * 86_400.0
    totals = StepStats()
    ticks = 0
    try:
        while clock.now() < horizon:
            t0 = clock.now()
            _accumulate(totals, manager.step())
            ticks += 1
            if session.active_count(owner=manager.instance) == 0 and manager.feed_exhausted():
                break
            sleep(max(0.0, t0 + config.discovery_interval - clock.now()))
        counts = session.status_counts()
    finally:
        manager.close()
        session.close()
    return RunSummary(ticks, started, clock.now(), counts, totals)

