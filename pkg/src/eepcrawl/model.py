"""Domain types and the eepsite lifecycle state machine.

Everything here is value-level: records are frozen dataclasses and
:func:`transition` returns a new record instead of mutating one.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Protocol
from urllib.parse import urlsplit

_LABEL_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]*[a-z0-9])?$")


class Source(str, Enum):
    SEED = "SEED"
    FLOODFILL = "FLOODFILL"
    DISCOVERED = "DISCOVERED"


class Status(str, Enum):
    DISCOVERING = "DISCOVERING"
    PENDING = "PENDING"
    ONGOING = "ONGOING"
    ERROR = "ERROR"
    FINISHED = "FINISHED"
    DISCARDED = "DISCARDED"

    @property
    def terminal(self) -> bool:
        return self in (Status.FINISHED, Status.DISCARDED)


class Event(str, Enum):
    CONTACT_OK = "CONTACT_OK"
    CONTACT_FAIL = "CONTACT_FAIL"
    DEQUEUE_FOR_CRAWL = "DEQUEUE_FOR_CRAWL"
    CRAWL_OK = "CRAWL_OK"
    CRAWL_ERROR = "CRAWL_ERROR"


class InvalidURL(ValueError):
    """Raised by :func:`normalize_url`; ``reason`` is ``NOT_I2P`` or ``MALFORMED``."""

    def __init__(self, reason: str, raw: str):
        super().__init__(f"{reason}: {raw!r}")
        self.reason = reason
        self.raw = raw


class IllegalTransition(Exception):
    def __init__(self, status: Status, event: Event):
        super().__init__(f"ILLEGAL_TRANSITION: {status.value} + {event.value}")
        self.status = status
        self.event = event


@dataclass(frozen=True, order=True)
class EepsiteId:
    host: str

    def __post_init__(self):
        h = self.host
        if not h or h != h.lower() or not h.endswith(".i2p") or len(h) <= 4:
            raise ValueError(f"not a normalized eepsite host: {h!r}")

    def __str__(self) -> str:
        return self.host

    @property
    def url(self) -> str:
        return f"http://{self.host}/"


def normalize_url(raw: str) -> EepsiteId:
    """Reduce any scraped URL or bare host to its canonical eepsite id.

    Scheme, userinfo, port, path, query and fragment are dropped and the
    host lower-cased. Raises :class:`InvalidURL` for non-``.i2p`` hosts
    (``NOT_I2P``) and for anything that does not parse as an http(s) URL
    (``MALFORMED``).
    """
    text = raw.strip()
    if not text:
        raise InvalidURL("MALFORMED", raw)
    if "://" not in text:
        if ":" in text.split("/", 1)[0] and not re.match(r"^[^:/]+:\d*(/|$)", text):
            # mailto:, javascript:, ...
            raise InvalidURL("MALFORMED", raw)
        text = "http://" + text.lstrip("/")
    try:
        parts = urlsplit(text)
        parts.port  # noqa: B018 - raises on a garbage port
    except ValueError:
        raise InvalidURL("MALFORMED", raw) from None
    if parts.scheme.lower() not in ("http", "https"):
        raise InvalidURL("MALFORMED", raw)
    host = (parts.hostname or "").rstrip(".")
    if not host:
        raise InvalidURL("MALFORMED", raw)
    labels = host.split(".")
    if not all(_LABEL_RE.match(label) for label in labels):
        raise InvalidURL("MALFORMED", raw)
    if labels[-1] != "i2p":
        raise InvalidURL("NOT_I2P", raw)
    if len(labels) < 2:
        raise InvalidURL("MALFORMED", raw)
    return EepsiteId(host)


@dataclass(frozen=True)
class EepsiteRecord:
    id: EepsiteId
    source: Source
    status: Status
    discovery_attempts: int
    crawl_attempts: int
    first_seen: float
    discovery_started: float
    last_transition: float
    owner_instance: str
    last_probe: float | None = None

    @classmethod
    def new(cls, id: EepsiteId, source: Source, now: float, owner: str) -> EepsiteRecord:
        return cls(id, source, Status.DISCOVERING, 0, 0, now, now, now, owner)

    def validate(self) -> None:
        if self.discovery_attempts < 0 or self.crawl_attempts < 0:
            raise ValueError("attempt counters must be non-negative")
        if self.last_transition < self.first_seen:
            raise ValueError("last_transition precedes first_seen")


class Limits(Protocol):
    """The slice of the crawl configuration the state machine reads."""

    max_discovery_attempts: int
    max_discovery_duration: float  # minutes
    max_crawling_attempts_on_error: int


class Clock(Protocol):
    def now(self) -> float: ...


class SystemClock:
    def now(self) -> float:
        return time.time()


class SimClock:
    """Logical clock; only the harness moves it."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("clock cannot run backwards")
        self._now += seconds
        return self._now

    def set(self, t: float) -> None:
        if t < self._now:
            raise ValueError("clock cannot run backwards")
        self._now = float(t)


def transition(record: EepsiteRecord, event: Event, config: Limits, now: float) -> EepsiteRecord:
    """Apply one lifecycle event and return the updated record.

    Attempt counting: every probe (successful or not) consumes one
    discovery attempt, so a site reachable on the first try finishes with
    ``discovery_attempts == 1``. A failed probe that uses up the last
    allowed attempt, or arrives after the discovery window has elapsed,
    discards the record.
    """
    status = record.status
    if now < record.first_seen:
        raise ValueError("event timestamp precedes first_seen")

    if status is Status.DISCOVERING and event is Event.CONTACT_OK:
        return replace(record, status=Status.PENDING,
                       discovery_attempts=record.discovery_attempts + 1,
                       last_probe=now, last_transition=now)

    if status is Status.DISCOVERING and event is Event.CONTACT_FAIL:
        attempts = record.discovery_attempts + 1
        expired = now - record.discovery_started > config.max_discovery_duration * 60.0
        new_status = Status.DISCARDED if attempts >= config.max_discovery_attempts or expired \
            else Status.DISCOVERING
        return replace(record, status=new_status, discovery_attempts=attempts,
                       last_probe=now, last_transition=now)

    if status is Status.PENDING and event is Event.DEQUEUE_FOR_CRAWL:
        return replace(record, status=Status.ONGOING, last_transition=now)

    if status is Status.ONGOING and event is Event.CRAWL_OK:
        return replace(record, status=Status.FINISHED, last_transition=now)

    if status is Status.ONGOING and event is Event.CRAWL_ERROR:
        return replace(record, status=Status.ERROR, crawl_attempts=record.crawl_attempts + 1,
                       last_transition=now)

    if status is Status.ERROR and event is Event.DEQUEUE_FOR_CRAWL:
        if record.crawl_attempts <= config.max_crawling_attempts_on_error:
            return replace(record, status=Status.ONGOING, last_transition=now)
        if record.discovery_attempts >= config.max_discovery_attempts:
            # no probe left to spend on rediscovery
            return replace(record, status=Status.DISCARDED, crawl_attempts=0, last_transition=now)
        # back to availability probing with a fresh discovery window
        return replace(record, status=Status.DISCOVERING, crawl_attempts=0,
                       discovery_started=now, last_transition=now)

    raise IllegalTransition(status, event)
