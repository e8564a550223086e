"""Central persistence shared by every crawler instance.

The default backend is a single SQLite file in WAL mode. Each
:class:`StoreSession` owns one connection and tags its writes with an
instance id; every public operation runs as one transaction, so concurrent
sessions (threads or processes) never see half-written rows.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sqlite3
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .discovery import ProbeResult
from .model import EepsiteId, EepsiteRecord, Source, Status
from .spider import CrawlResult, PageStats

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS records (
    host TEXT PRIMARY KEY,
    source TEXT NOT NULL,
    status TEXT NOT NULL,
    discovery_attempts INTEGER NOT NULL,
    crawl_attempts INTEGER NOT NULL,
    first_seen REAL NOT NULL,
    discovery_started REAL NOT NULL,
    last_transition REAL NOT NULL,
    owner TEXT NOT NULL,
    last_probe REAL
);
CREATE INDEX IF NOT EXISTS records_owner_status ON records (owner, status);
CREATE TABLE IF NOT EXISTS queue (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    host TEXT NOT NULL,
    owner TEXT NOT NULL,
    not_before REAL NOT NULL
);
CREATE INDEX IF NOT EXISTS queue_owner ON queue (owner, seq);
CREATE TABLE IF NOT EXISTS results (
    host TEXT PRIMARY KEY,
    page_count INTEGER NOT NULL,
    letters INTEGER NOT NULL,
    words INTEGER NOT NULL,
    images INTEGER NOT NULL,
    scripts INTEGER NOT NULL,
    language TEXT NOT NULL,
    crawled_at REAL NOT NULL,
    surface_links INTEGER NOT NULL,
    out_links TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS probes (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    ts REAL NOT NULL,
    host TEXT NOT NULL,
    outcome TEXT NOT NULL,
    reason TEXT,
    attempt INTEGER NOT NULL,
    instance TEXT NOT NULL
);
"""

_RECORD_COLS = ("host, source, status, discovery_attempts, crawl_attempts, first_seen, "
                "discovery_started, last_transition, owner, last_probe")

SOURCE_ORDER = list(Source)
STATUS_ORDER = [Status.FINISHED, Status.DISCOVERING, Status.DISCARDED,
                Status.PENDING, Status.ONGOING, Status.ERROR]


class StoreError(Exception):
    pass


class OwnershipConflict(StoreError):
    def __init__(self, host: str, owner: str, caller: str):
        super().__init__(f"OWNERSHIP_CONFLICT: {host} is owned by {owner}, not {caller}")
        self.host = host
        self.owner = owner


class InvalidRecord(StoreError):
    pass


def _row_to_record(row) -> EepsiteRecord:
    return EepsiteRecord(EepsiteId(row[0]), Source(row[1]), Status(row[2]), row[3], row[4],
                         row[5], row[6], row[7], row[8], row[9])


def _record_params(r: EepsiteRecord) -> tuple:
    return (r.id.host, r.source.value, r.status.value, r.discovery_attempts, r.crawl_attempts,
            r.first_seen, r.discovery_started, r.last_transition, r.owner_instance, r.last_probe)


@dataclass(frozen=True)
class AggregateRow:
    source: Source
    status: Status
    count: int
    pct_within_source: float
    pct_of_total: float


@dataclass(frozen=True)
class StatusAggregate:
    rows: list[AggregateRow]
    source_totals: dict[Source, int]
    total: int

    def cell(self, source: Source, status: Status) -> AggregateRow | None:
        for row in self.rows:
            if row.source is source and row.status is status:
                return row
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "status", "count", "pct_within_source", "pct_of_total"])
        for r in self.rows:
            w.writerow([r.source.value, r.status.value, r.count,
                        f"{r.pct_within_source:.2f}", f"{r.pct_of_total:.2f}"])
        return buf.getvalue()


def aggregate_counts(counts: dict[tuple[Source, Status], int]) -> StatusAggregate:
    """Build the source x status table from raw counts.

    Percentages are taken over all records of the source (and of the
    store), whatever their status, and rounded to two decimals.
    """
    totals: Counter[Source] = Counter()
    for (source, _), n in counts.items():
        totals[source] += n
    total = sum(totals.values())
    rows = []
    for source in SOURCE_ORDER:
        for status in STATUS_ORDER:
            n = counts.get((source, status), 0)
            if n:
                rows.append(AggregateRow(source, status, n,
                                         round(100.0 * n / totals[source], 2),
                                         round(100.0 * n / total, 2)))
    return StatusAggregate(rows, {s: totals[s] for s in SOURCE_ORDER if totals[s]}, total)


@dataclass(frozen=True)
class DailyRow:
    day: date
    services_observed: int
    eepsites_finished: int


def _utc_day(ts: float) -> date:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date()


def bucket_days(first_seen: Iterable[float], finished_at: Iterable[float]) -> list[DailyRow]:
    services = Counter(map(_utc_day, first_seen))
    finished = Counter(map(_utc_day, finished_at))
    days = set(services) | set(finished)
    if not days:
        return []
    day, last = min(days), max(days)
    out = []
    while day <= last:
        out.append(DailyRow(day, services.get(day, 0), finished.get(day, 0)))
        day += timedelta(days=1)
    return out


class Store:
    """Handle on a store file; hand out one :class:`StoreSession` per worker."""

    def __init__(self, path: str | Path, timeout: float = 120.0, create: bool = True):
        self.path = Path(path)
        self.timeout = timeout
        if not create and not self.path.exists():
            raise StoreError(f"MISSING_STORE: {self.path}")
        conn = self._connect()
        try:
            conn.execute("PRAGMA journal_mode=WAL")
            conn.executescript(_SCHEMA)
            conn.execute("INSERT OR IGNORE INTO meta VALUES ('schema_version', ?)",
                         (str(SCHEMA_VERSION),))
            version = conn.execute("SELECT value FROM meta WHERE key='schema_version'").fetchone()[0]
            if int(version) != SCHEMA_VERSION:
                raise StoreError(f"store schema {version} != supported {SCHEMA_VERSION}")
        except sqlite3.Error as exc:
            raise StoreError(f"cannot open store {self.path}: {exc}") from exc
        finally:
            conn.close()

    def _connect(self) -> sqlite3.Connection:
        try:
            conn = sqlite3.connect(self.path, timeout=self.timeout, isolation_level=None,
                                   check_same_thread=False)
            conn.execute("PRAGMA synchronous=NORMAL")
        except sqlite3.Error as exc:
            raise StoreError(f"cannot open store {self.path}: {exc}") from exc
        return conn

    def session(self, instance: str, error_retry_delay: float = 0.0) -> StoreSession:
        return StoreSession(self._connect(), str(instance), error_retry_delay)


class StoreSession:
    """One instance's transactional handle.

    ``error_retry_delay`` holds records re-queued after a crawl error back
    from :meth:`dequeue_pending` for that many seconds.
    """

    def __init__(self, conn: sqlite3.Connection, instance: str, error_retry_delay: float = 0.0):
        self.conn = conn
        self.instance = instance
        self.error_retry_delay = error_retry_delay

    def close(self) -> None:
        self.conn.close()

    def __enter__(self) -> StoreSession:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @contextmanager
    def _tx(self) -> Iterator[sqlite3.Connection]:
        self.conn.execute("BEGIN IMMEDIATE")
        try:
            yield self.conn
        except BaseException:
            self.conn.execute("ROLLBACK")
            raise
        self.conn.execute("COMMIT")

    # ---------------------------------------------------------- records

    def _enqueue(self, conn, record: EepsiteRecord) -> None:
        delay = self.error_retry_delay if record.status is Status.ERROR else 0.0
        conn.execute("INSERT INTO queue (host, owner, not_before) VALUES (?, ?, ?)",
                     (record.id.host, record.owner_instance, record.last_transition + delay))

    def upsert_record(self, record: EepsiteRecord) -> EepsiteRecord:
        """Insert an unseen id (claiming it) or update a record this instance owns.

        The stored source never changes after insertion. Entering PENDING
        or ERROR puts the record on this instance's crawl queue.
        """
        try:
            record.validate()
        except ValueError as exc:
            raise InvalidRecord(f"INVALID_RECORD {record.id}: {exc}") from None
        record = _claim(record, self.instance)
        with self._tx() as conn:
            row = conn.execute("SELECT owner, source, status FROM records WHERE host = ?",
                               (record.id.host,)).fetchone()
            if row is None:
                conn.execute(f"INSERT INTO records ({_RECORD_COLS}) VALUES (?,?,?,?,?,?,?,?,?,?)",
                             _record_params(record))
                previous = None
            else:
                owner, source, previous = row
                if owner != self.instance:
                    raise OwnershipConflict(record.id.host, owner, self.instance)
                record = _with_source(record, Source(source))
                conn.execute(
                    "UPDATE records SET status=?, discovery_attempts=?, crawl_attempts=?, "
                    "discovery_started=?, last_transition=?, last_probe=? WHERE host=?",
                    (record.status.value, record.discovery_attempts, record.crawl_attempts,
                     record.discovery_started, record.last_transition, record.last_probe,
                     record.id.host))
                previous = Status(previous)
            if record.status in (Status.PENDING, Status.ERROR) and previous is not record.status:
                self._enqueue(conn, record)
        return self.get(record.id) if row is not None else record

    def insert_new(self, record: EepsiteRecord) -> bool:
        """Insert only if the id has never been seen; returns whether it was."""
        record = _claim(record, self.instance)
        with self._tx() as conn:
            cur = conn.execute(
                f"INSERT OR IGNORE INTO records ({_RECORD_COLS}) VALUES (?,?,?,?,?,?,?,?,?,?)",
                _record_params(record))
            inserted = cur.rowcount == 1
            if inserted and record.status in (Status.PENDING, Status.ERROR):
                self._enqueue(conn, record)
        return inserted

    def bulk_load(self, records: Iterable[EepsiteRecord]) -> int:
        """Load records verbatim (owners included) in a single transaction."""
        with self._tx() as conn:
            cur = conn.executemany(
                f"INSERT INTO records ({_RECORD_COLS}) VALUES (?,?,?,?,?,?,?,?,?,?)",
                (_record_params(r) for r in records))
            return cur.rowcount

    def get(self, site: EepsiteId) -> EepsiteRecord | None:
        row = self.conn.execute(f"SELECT {_RECORD_COLS} FROM records WHERE host = ?",
                                (site.host,)).fetchone()
        return None if row is None else _row_to_record(row)

    def records(self, status: Status | None = None, owner: str | None = None) -> list[EepsiteRecord]:
        sql = f"SELECT {_RECORD_COLS} FROM records"
        where, params = [], []
        if status is not None:
            where.append("status = ?")
            params.append(status.value)
        if owner is not None:
            where.append("owner = ?")
            params.append(owner)
        if where:
            sql += " WHERE " + " AND ".join(where)
        return [_row_to_record(r) for r in self.conn.execute(sql + " ORDER BY host", params)]

    def count(self) -> int:
        return self.conn.execute("SELECT COUNT(*) FROM records").fetchone()[0]

    def status_counts(self, owner: str | None = None) -> dict[Status, int]:
        sql = "SELECT status, COUNT(*) FROM records"
        params: tuple = ()
        if owner is not None:
            sql += " WHERE owner = ?"
            params = (owner,)
        return {Status(s): n for s, n in self.conn.execute(sql + " GROUP BY status", params)}

    def active_count(self, owner: str | None = None) -> int:
        counts = self.status_counts(owner)
        return sum(n for s, n in counts.items() if not s.terminal)

    # ---------------------------------------------------------- queue

    def dequeue_pending(self, now: float | None = None) -> EepsiteId | None:
        """Pop the oldest queued record owned by this instance, or ``None``."""
        cutoff = float("inf") if now is None else now
        rows = self.conn.execute(
            "DELETE FROM queue WHERE seq = (SELECT seq FROM queue WHERE owner = ? "
            "AND not_before <= ? ORDER BY seq LIMIT 1) RETURNING host",
            (self.instance, cutoff)).fetchall()
        return EepsiteId(rows[0][0]) if rows else None

    def queue_length(self, owner: str | None = None) -> int:
        owner = self.instance if owner is None else owner
        return self.conn.execute("SELECT COUNT(*) FROM queue WHERE owner = ?", (owner,)).fetchone()[0]

    def next_queue_time(self) -> float | None:
        return self.conn.execute("SELECT MIN(not_before) FROM queue WHERE owner = ?",
                                 (self.instance,)).fetchone()[0]

    # ---------------------------------------------------------- results & logs

    def save_result(self, result: CrawlResult) -> None:
        s = result.home_stats
        with self._tx() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO results VALUES (?,?,?,?,?,?,?,?,?,?)",
                (result.id.host, result.page_count, s.letters, s.words, s.images, s.scripts,
                 result.language, result.crawled_at, result.surface_links,
                 json.dumps(sorted(x.host for x in result.out_links))))

    def results(self) -> list[CrawlResult]:
        out = []
        for row in self.conn.execute("SELECT * FROM results ORDER BY host"):
            out.append(CrawlResult(EepsiteId(row[0]), row[1], PageStats(*row[2:6]),
                                   frozenset(EepsiteId(h) for h in json.loads(row[9])),
                                   row[6], row[7], row[8]))
        return out

    def log_probes(self, entries: Iterable[tuple[float, ProbeResult, int]]) -> None:
        with self._tx() as conn:
            conn.executemany(
                "INSERT INTO probes (ts, host, outcome, reason, attempt, instance) "
                "VALUES (?,?,?,?,?,?)",
                ((ts, r.site.host, r.event.value, r.reason, attempt, self.instance)
                 for ts, r, attempt in entries))

    def probes(self) -> Iterator[dict]:
        for ts, host, outcome, reason, attempt, instance in self.conn.execute(
                "SELECT ts, host, outcome, reason, attempt, instance FROM probes ORDER BY seq"):
            yield {"ts": ts, "id": host, "outcome": outcome, "reason": reason,
                   "attempt": attempt, "instance": instance}

    # ---------------------------------------------------------- reporting

    def aggregate_source_status(self) -> StatusAggregate:
        counts = {(Source(src), Status(st)): n for src, st, n in self.conn.execute(
            "SELECT source, status, COUNT(*) FROM records GROUP BY source, status")}
        return aggregate_counts(counts)

    def daily_series(self) -> list[DailyRow]:
        first = [r[0] for r in self.conn.execute("SELECT first_seen FROM records")]
        done = [r[0] for r in self.conn.execute(
            "SELECT last_transition FROM records WHERE status = ?", (Status.FINISHED.value,))]
        return bucket_days(first, done)

    def export_records_jsonl(self, stream) -> None:
        for r in self.records():
            stream.write(json.dumps(record_to_dict(r), sort_keys=True) + "\n")

    def export_results_jsonl(self, stream) -> None:
        for r in self.results():
            stream.write(json.dumps(result_to_dict(r), sort_keys=True) + "\n")

    def export_probes_jsonl(self, stream) -> None:
        for entry in self.probes():
            stream.write(json.dumps(entry, sort_keys=True) + "\n")


def _claim(record: EepsiteRecord, instance: str) -> EepsiteRecord:
    if record.owner_instance == instance:
        return record
    return replace(record, owner_instance=instance)


def _with_source(record: EepsiteRecord, source: Source) -> EepsiteRecord:
    if record.source is source:
        return record
    return replace(record, source=source)


def record_to_dict(r: EepsiteRecord) -> dict:
    return {"id": r.id.host, "source": r.source.value, "status": r.status.value,
            "discovery_attempts": r.discovery_attempts, "crawl_attempts": r.crawl_attempts,
            "first_seen": r.first_seen, "discovery_started": r.discovery_started,
            "last_transition": r.last_transition, "owner_instance": r.owner_instance,
            "last_probe": r.last_probe}


def result_to_dict(r: CrawlResult) -> dict:
    return {"id": r.id.host, "page_count": r.page_count,
            "home_stats": {"letters": r.home_stats.letters, "words": r.home_stats.words,
                           "images": r.home_stats.images, "scripts": r.home_stats.scripts},
            "out_links": sorted(x.host for x in r.out_links), "language": r.language,
            "crawled_at": r.crawled_at, "surface_links": r.surface_links}
