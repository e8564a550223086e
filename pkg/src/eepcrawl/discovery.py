"""Discoverers: availability probes and the hourly probe scheduler."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

from .model import EepsiteId, EepsiteRecord, Event, Status
from .transport import HTTP_TIMEOUT, FetchFault, Transport


@dataclass(frozen=True)
class DiscoverySchedule:
    interval: float = 3600.0  # seconds between probes of one eepsite
    max_attempts: int = 720
    max_duration: float = 43_200.0  # minutes
    max_parallel_probes: int = 50

    def __post_init__(self):
        if self.interval <= 0 or self.max_attempts < 1 or self.max_parallel_probes < 1:
            raise ValueError(f"invalid discovery schedule: {self}")


@dataclass(frozen=True)
class ProbeResult:
    site: EepsiteId
    event: Event
    reason: str | None = None
    status: int | None = None
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.event is Event.CONTACT_OK


def probe(site: EepsiteId, transport: Transport, timeout: float = HTTP_TIMEOUT) -> ProbeResult:
    """Fetch the home page once. Failures come back as data, never as exceptions."""
    try:
        resp = transport.fetch(site, "/", timeout)
    except FetchFault as fault:
        return ProbeResult(site, Event.CONTACT_FAIL, fault.reason.value)
    except Exception as exc:  # a misbehaving backend is just another failed contact
        return ProbeResult(site, Event.CONTACT_FAIL, f"ERROR:{type(exc).__name__}")
    if resp.ok:
        return ProbeResult(site, Event.CONTACT_OK, None, resp.status, resp.elapsed)
    return ProbeResult(site, Event.CONTACT_FAIL, "BAD_STATUS", resp.status, resp.elapsed)


def next_due(records: Iterable[EepsiteRecord], now: float, schedule: DiscoverySchedule,
             in_flight: int = 0) -> list[EepsiteId]:
    """Ids whose last probe is at least one interval old, oldest probe first.

    Never-probed records come first. Ties go to the lexicographically
    smaller id. The list is cut to the free probe slots.
    """
    free = schedule.max_parallel_probes - in_flight
    if free <= 0:
        return []
    due = []
    for r in records:
        if r.status is not Status.DISCOVERING:
            raise ValueError(f"{r.id} is {r.status.value}, not DISCOVERING")
        last = -math.inf if r.last_probe is None else r.last_probe
        if now - last >= schedule.interval:
            due.append((last, r.id))
    due.sort()
    return [site for _, site in due[:free]]


def probe_log_line(ts: float, result: ProbeResult, attempt: int, instance: str | None = None) -> str:
    entry = {"ts": ts, "id": result.site.host, "outcome": result.event.value,
             "reason": result.reason, "attempt": attempt}
    if instance is not None:
        entry["instance"] = instance
    return json.dumps(entry, sort_keys=True)
