"""Fetch interface shared by discoverers and spiders.

Two backends implement :class:`Transport`: ``SimTransport`` (in
:mod:`eepcrawl.simnet`) and :class:`ProxyTransport`, a thin adapter for
the HTTP proxy a local I2P router exposes (``127.0.0.1:4444`` by default).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import requests

from .model import EepsiteId

logger = logging.getLogger(__name__)

HTTP_TIMEOUT = 30.0


class FaultReason(str, Enum):
    TIMEOUT = "TIMEOUT"
    REFUSED = "REFUSED"
    PROXY_DOWN = "PROXY_DOWN"


class FetchFault(Exception):
    def __init__(self, reason: FaultReason, detail: str = ""):
        super().__init__(f"{reason.value} {detail}".strip())
        self.reason = reason


@dataclass(frozen=True)
class FetchResponse:
    status: int
    body: str
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


class Transport(Protocol):
    def fetch(self, site: EepsiteId, path: str, deadline: float = HTTP_TIMEOUT) -> FetchResponse:
        """Return the response for ``http://<site><path>`` or raise :class:`FetchFault`."""
        ...


class ProxyTransport:
    """Fetch eepsites through an HTTP proxy (the I2P router's HTTP tunnel).

    Timeouts are enforced over the whole exchange: the body is streamed
    in chunks and the deadline is checked after each one, so a slow
    trickle cannot keep a request alive past ``deadline`` by more than a
    single read.
    """

    chunk_size = 16 * 1024

    def __init__(self, host: str = "127.0.0.1", port: int = 4444,
                 session: requests.Session | None = None, max_bytes: int = 8 * 1024 * 1024):
        self.proxy = f"http://{host}:{port}"
        self.session = session or requests.Session()
        self.session.trust_env = False
        self.max_bytes = max_bytes

    def fetch(self, site: EepsiteId, path: str, deadline: float = HTTP_TIMEOUT) -> FetchResponse:
        if deadline <= 0:
            raise ValueError("deadline must be positive")
        url = f"http://{site.host}{path if path.startswith('/') else '/' + path}"
        start = time.monotonic()
        try:
            resp = self.session.get(url, proxies={"http": self.proxy, "https": self.proxy},
                                    timeout=(deadline, deadline), stream=True,
                                    allow_redirects=False)
        except requests.exceptions.ProxyError as exc:
            raise FetchFault(FaultReason.PROXY_DOWN, str(exc)) from None
        except requests.exceptions.Timeout as exc:
            raise FetchFault(FaultReason.TIMEOUT, str(exc)) from None
        except requests.exceptions.RequestException as exc:
            raise FetchFault(FaultReason.REFUSED, str(exc)) from None

        chunks: list[bytes] = []
        size = 0
        try:
            for chunk in resp.iter_content(self.chunk_size):
                chunks.append(chunk)
                size += len(chunk)
                if time.monotonic() - start > deadline:
                    raise FetchFault(FaultReason.TIMEOUT, f"deadline {deadline}s exceeded")
                if size >= self.max_bytes:
                    break
        except requests.exceptions.RequestException as exc:
            raise FetchFault(FaultReason.TIMEOUT, str(exc)) from None
        finally:
            resp.close()

        body = b"".join(chunks).decode(resp.encoding or "utf-8", errors="replace")
        return FetchResponse(resp.status_code, body, time.monotonic() - start)
