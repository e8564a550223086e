"""Synthetic darknets with known ground truth.

A :class:`SimNetSpec` describes the network (size, link topology,
availability, page trees, languages, which sites are seeds or
floodfill-announced); :func:`generate` materializes it into a
:class:`SimNet`, which renders pages on demand and answers availability
queries. :class:`SimTransport` puts a ``SimNet`` behind the regular
:class:`~eepcrawl.transport.Transport` interface.

Everything is a pure function of the spec seed: hosts, edges, page
bodies and churn timelines replay identically across processes.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
import random
import re
import threading
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .language import STOPWORDS
from .model import Clock, EepsiteId
from .transport import HTTP_TIMEOUT, FaultReason, FetchFault, FetchResponse

SPEC_VERSION = 1

# node-class shares targeted by the paper-shape preset, in (source, sink, connected, isolated) order
PRESET_CLASS_SHARES = (0.10, 0.12, 0.12, 0.66)
PRESET_DIRECTORY_OUT_DEGREE = 385
PRESET_LANGUAGES = {
    "en": 96.31, "fr": 0.86, "de": 0.86, "es": 0.62, "no": 0.25, "la": 0.25, "it": 0.25,
    "cy": 0.12, "tr": 0.12, "pt": 0.12, "nl": 0.12, "ca": 0.12,
}

BRANCHING = 8
_B32 = "abcdefghijklmnopqrstuvwxyz234567"
_PAGE_RE = re.compile(r"^/page/(\d+)\.html$")


class InvalidSpec(ValueError):
    pass


class Presence(str, Enum):
    ONLINE = "ONLINE"
    OFFLINE = "OFFLINE"


@dataclass
class SimNetSpec:
    """Generative description of a synthetic darknet.

    ``topology`` is ``"explicit"`` (use ``edges``), ``"random"`` (each site
    draws an out-degree from ``out_degree_pmf`` or a geometric law with
    ``mean_out_degree`` and links to uniformly chosen sites) or
    ``"paper_shape"`` (exact source/sink/connected/isolated shares plus a
    planted high out-degree directory site).

    ``availability`` is ``"always_on"``, ``"bernoulli"`` (site online in each
    ``slot_seconds`` slot independently with probability ``p``) or
    ``"churn"`` (alternating exponential on/off periods with means
    ``mean_online``/``mean_offline`` seconds).
    """

    seed: int = 0
    n_sites: int = 100
    topology: str = "random"
    edges: list[list[int]] = field(default_factory=list)
    mean_out_degree: float = 1.5
    out_degree_pmf: dict[int, float] | None = None
    class_shares: tuple[float, float, float, float] = PRESET_CLASS_SHARES
    directory_out_degree: int | None = None

    availability: str = "always_on"
    p: float | list[float] = 1.0
    slot_seconds: float = 3600.0
    mean_online: float = 86_400.0
    mean_offline: float = 0.0

    pages: str = "fixed"
    pages_fixed: int = 1
    pages_low: int = 1
    pages_high: int = 10
    small_share: float = 0.8
    small_max: int = 30
    tail_max: int = 1000
    page_counts: list[int] | None = None
    words_range: tuple[int, int] = (20, 300)
    images_max: int = 8
    scripts_max: int = 5
    languages: dict[str, float] = field(default_factory=lambda: {"en": 1.0})

    seeds: list[int] | None = None
    seed_share: float = 0.1
    announced: list[int] | None = None
    announced_share: float = 0.3
    announce_spread_days: float = 0.0
    ensure_reachable: bool = True

    @classmethod
    def paper_shape(cls, n_sites: int = 1000, seed: int = 0, **overrides) -> SimNetSpec:
        params = dict(seed=seed, n_sites=n_sites, topology="paper_shape", pages="skewed",
                      languages=dict(PRESET_LANGUAGES))
        params.update(overrides)
        return cls(**params)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["class_shares"] = list(self.class_shares)
        data["words_range"] = list(self.words_range)
        if self.out_degree_pmf is not None:
            data["out_degree_pmf"] = {str(k): v for k, v in self.out_degree_pmf.items()}
        return {"spec_version": SPEC_VERSION, **data}

    @classmethod
    def from_dict(cls, data: dict) -> SimNetSpec:
        data = dict(data)
        version = data.pop("spec_version", SPEC_VERSION)
        if version != SPEC_VERSION:
            raise InvalidSpec(f"unsupported spec_version {version}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
        if data.get("out_degree_pmf") is not None:
            data["out_degree_pmf"] = {int(k): float(v) for k, v in data["out_degree_pmf"].items()}
        for key in ("class_shares", "words_range"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> SimNetSpec:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def validate(self) -> None:
        n = self.n_sites
        if not isinstance(n, int) or n < 1:
            raise InvalidSpec("n_sites must be >= 1")
        if self.topology not in ("explicit", "random", "paper_shape"):
            raise InvalidSpec(f"unknown topology {self.topology!r}")
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidSpec(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v:
                raise InvalidSpec(f"self-loop on site {u}")
        if self.mean_out_degree < 0:
            raise InvalidSpec("mean_out_degree must be >= 0")
        if self.out_degree_pmf is not None:
            if any(k < 0 or w < 0 for k, w in self.out_degree_pmf.items()) \
                    or sum(self.out_degree_pmf.values()) <= 0:
                raise InvalidSpec("out_degree_pmf needs non-negative degrees and weights")
        if len(self.class_shares) != 4 or any(s < 0 for s in self.class_shares) \
                or not math.isclose(sum(self.class_shares), 1.0, abs_tol=1e-6):
            raise InvalidSpec("class_shares must be four non-negative shares summing to 1")
        if self.availability not in ("always_on", "bernoulli", "churn"):
            raise InvalidSpec(f"unknown availability model {self.availability!r}")
        ps = self.p if isinstance(self.p, list) else [self.p]
        if isinstance(self.p, list) and len(self.p) != n:
            raise InvalidSpec("per-site p needs one probability per site")
        if any(not 0.0 <= x <= 1.0 for x in ps):
            raise InvalidSpec("probabilities must lie in [0, 1]")
        if self.slot_seconds <= 0:
            raise InvalidSpec("slot_seconds must be positive")
        if self.mean_online < 0 or self.mean_offline < 0 \
                or (self.mean_online == 0 and self.mean_offline == 0):
            raise InvalidSpec("churn means must be >= 0 and not both zero")
        if self.pages not in ("fixed", "uniform", "skewed"):
            raise InvalidSpec(f"unknown page profile {self.pages!r}")
        if self.pages_fixed < 1 or not 1 <= self.pages_low <= self.pages_high \
                or self.small_max < 1 or self.tail_max <= self.small_max:
            raise InvalidSpec("page counts must be >= 1 with low <= high and tail_max > small_max")
        if self.page_counts is not None and (len(self.page_counts) != n
                                             or any(c < 1 for c in self.page_counts)):
            raise InvalidSpec("page_counts needs one count >= 1 per site")
        for share in (self.small_share, self.seed_share, self.announced_share):
            if not 0.0 <= share <= 1.0:
                raise InvalidSpec("shares must lie in [0, 1]")
        lo, hi = self.words_range
        if not 0 <= lo <= hi or self.images_max < 0 or self.scripts_max < 0:
            raise InvalidSpec("home-page content ranges must be non-negative")
        if not self.languages or any(w < 0 for w in self.languages.values()) \
                or sum(self.languages.values()) <= 0:
            raise InvalidSpec("languages needs non-negative weights with a positive total")
        for name in ("seeds", "announced"):
            idx = getattr(self, name)
            if idx is not None and any(not 0 <= i < n for i in idx):
                raise InvalidSpec(f"{name} index outside [0, {n})")
        if self.announce_spread_days < 0:
            raise InvalidSpec("announce_spread_days must be >= 0")


# ---------------------------------------------------------------- churn


class _Timeline:
    """Switch times of one site's alternating on/off renewal process."""

    def __init__(self, seed: int, site: int, mean_on: float, mean_off: float):
        self.mean_on = mean_on
        self.mean_off = mean_off
        self._rng = random.Random(f"churn:{seed}:{site}")
        self.first_online = self._rng.random() < mean_on / (mean_on + mean_off)
        self.switches: list[float] = [0.0]
        self._lock = threading.Lock()

    def _extend(self, t: float) -> None:
        with self._lock:
            while self.switches[-1] <= t:
                online = (len(self.switches) % 2 == 1) == self.first_online
                mean = self.mean_on if online else self.mean_off
                self.switches.append(self.switches[-1] + self._rng.expovariate(1.0 / mean))

    def online(self, t: float) -> bool:
        if self.switches[-1] <= t:
            self._extend(t)
        period = bisect.bisect_right(self.switches, t) - 1
        return (period % 2 == 0) == self.first_online


@lru_cache(maxsize=65_536)
def _timeline(seed: int, site: int, mean_on: float, mean_off: float) -> _Timeline:
    return _Timeline(seed, site, mean_on, mean_off)


def churn_state(site: int, t: float, spec: SimNetSpec) -> Presence:
    """On/off state of ``site`` at simulated time ``t`` (seconds, >= 0)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if spec.mean_offline == 0:
        return Presence.ONLINE
    if spec.mean_online == 0:
        return Presence.OFFLINE
    line = _timeline(spec.seed, site, float(spec.mean_online), float(spec.mean_offline))
    return Presence.ONLINE if line.online(t) else Presence.OFFLINE


def _uniform(*key) -> float:
    digest = hashlib.blake2b(":".join(map(str, key)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


# ---------------------------------------------------------------- generation


def _largest_remainder(weights: list[float], total: int) -> list[int]:
    s = sum(weights)
    raw = [w / s * total for w in weights]
    counts = [math.floor(x) for x in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def _geometric(rng: random.Random, mean: float) -> int:
    if mean <= 0:
        return 0
    q = mean / (1.0 + mean)
    k = 0
    while rng.random() < q:
        k += 1
    return k


def _random_edges(spec: SimNetSpec, rng: random.Random) -> set[tuple[int, int]]:
    n = spec.n_sites
    edges: set[tuple[int, int]] = set()
    if spec.out_degree_pmf:
        degrees, weights = zip(*sorted(spec.out_degree_pmf.items()))
    for u in range(n):
        if spec.out_degree_pmf:
            k = rng.choices(degrees, weights)[0]
        else:
            k = _geometric(rng, spec.mean_out_degree)
        k = min(k, n - 1)
        for t in rng.sample(range(n - 1), k):
            edges.add((u, t + 1 if t >= u else t))
    return edges


def _paper_shape_edges(spec: SimNetSpec, rng: random.Random):
    n = spec.n_sites
    n_src, n_sink, n_conn, n_iso = _largest_remainder(list(spec.class_shares), n)
    order = list(range(n))
    rng.shuffle(order)
    sources = order[:n_src]
    sinks = order[n_src:n_src + n_sink]
    connected = order[n_src + n_sink:n_src + n_sink + n_conn]
    isolated = sorted(order[n_src + n_sink + n_conn:])
    if (sinks or connected) and not sources:
        raise InvalidSpec("paper_shape needs at least one source site to feed sinks/connected")
    if len(connected) == 1 and not sinks:
        raise InvalidSpec("a single connected site needs a sink to link to")

    targets = sinks + connected
    if sources and not targets:
        raise InvalidSpec("paper_shape source sites need a sink or connected site to link to")
    directory = sources[0] if sources else None
    others = sources[1:]
    planted: set[int] = set()
    if directory is not None:
        want = spec.directory_out_degree
        if want is None:
            scaled = round(PRESET_DIRECTORY_OUT_DEGREE * n / 1000)
            want = min(scaled, int(0.8 * len(targets)))
        planted = set(rng.sample(targets, max(1, min(want, len(targets)))))

    edges: set[tuple[int, int]] = set()
    # in-edges come from non-directory sources or earlier connected sites, so
    # everything stays reachable from the sources; the directory covers the rest
    for j, c in enumerate(connected):
        pool = others + connected[:j]
        if pool:
            edges.add((rng.choice(pool), c))
        else:
            planted.add(c)
    for c in connected:
        edges.add((c, rng.choice([t for t in targets if t != c])))
    for s in sinks:
        pool = others + connected
        if pool:
            edges.add((rng.choice(pool), s))
        else:
            planted.add(s)
    for u in others:
        edges.add((u, rng.choice(targets)))
    extra_mean = max(0.0, spec.mean_out_degree - 1.0)
    for u in others + connected:
        for _ in range(_geometric(rng, extra_mean)):
            v = rng.choice(targets)
            if v != u:
                edges.add((u, v))
    if directory is not None:
        edges |= {(directory, v) for v in planted}
    return edges, directory, sources, isolated


def _b32_host(rng: random.Random) -> str:
    return "".join(rng.choice(_B32) for _ in range(52)) + ".b32.i2p"


def _reach(adj: dict[int, list[int]], roots) -> set[int]:
    seen = set(roots)
    todo = deque(seen)
    while todo:
        u = todo.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def generate(spec: SimNetSpec) -> SimNet:
    """Materialize ``spec``. Raises :class:`InvalidSpec` on a bad spec."""
    spec.validate()
    n = spec.n_sites
    rng = random.Random(f"simnet:{spec.seed}")

    hosts: list[str] = []
    taken: set[str] = set()
    while len(hosts) < n:
        h = _b32_host(rng)
        if h not in taken:
            taken.add(h)
            hosts.append(h)

    directory = None
    if spec.topology == "explicit":
        edges = {(int(u), int(v)) for u, v in spec.edges}
    elif spec.topology == "random":
        edges = _random_edges(spec, rng)
    else:
        edges, directory, sources, isolated = _paper_shape_edges(spec, rng)
    adj: dict[int, list[int]] = {}
    for u, v in sorted(edges):
        adj.setdefault(u, []).append(v)

    # seeds and floodfill announcements
    if spec.seeds is not None:
        seeds = sorted(set(spec.seeds))
    elif spec.topology == "paper_shape":
        pool = list(isolated)
        rng.shuffle(pool)
        seeds = sorted(set(sources) | set(pool[: round(0.1 * len(pool))]))
    else:
        seeds = sorted(rng.sample(range(n), max(1, round(spec.seed_share * n))))
    seed_set = set(seeds)
    if spec.announced is not None:
        announced = sorted(set(spec.announced) - seed_set)
    elif spec.topology == "paper_shape":
        announced = sorted(set(isolated) - seed_set)
    else:
        rest = [i for i in range(n) if i not in seed_set]
        announced = sorted(rng.sample(rest, min(len(rest), round(spec.announced_share * n))))
    if spec.ensure_reachable:
        reached = _reach(adj, seeds + announced)
        extra = []
        for i in range(n):
            if i not in reached:
                extra.append(i)
                reached |= _reach(adj, [i])
        announced = sorted(set(announced) | set(extra))
    announce_at = {}
    for i in announced:
        spread = spec.announce_spread_days * 86_400.0
        announce_at[i] = round(rng.uniform(0.0, spread), 3) if spread else 0.0

    # page trees
    if spec.page_counts is not None:
        pages = list(spec.page_counts)
    elif spec.pages == "fixed":
        pages = [spec.pages_fixed] * n
    elif spec.pages == "uniform":
        pages = [rng.randint(spec.pages_low, spec.pages_high) for _ in range(n)]
    else:
        n_small = round(spec.small_share * n)
        order = list(range(n))
        rng.shuffle(order)
        pages = [0] * n
        for rank, i in enumerate(order):
            if rank < n_small:
                pages[i] = min(spec.small_max, int(spec.small_max ** rng.random()))
            else:
                lo, hi = math.log(spec.small_max + 1), math.log(spec.tail_max)
                pages[i] = max(spec.small_max + 1, min(spec.tail_max, round(math.exp(rng.uniform(lo, hi)))))

    langs, weights = zip(*sorted(spec.languages.items()))
    lang_counts = _largest_remainder(list(weights), n)
    languages = [lang for lang, c in zip(langs, lang_counts) for _ in range(c)]
    rng.shuffle(languages)

    lo, hi = spec.words_range
    home = [(rng.randint(lo, hi), rng.randint(0, spec.images_max), rng.randint(0, spec.scripts_max))
            for _ in range(n)]

    placements: list[dict[int, list[int]]] = []
    for u in range(n):
        spots: dict[int, list[int]] = {}
        for v in adj.get(u, ()):
            spots.setdefault(rng.randrange(pages[u]), []).append(v)
        placements.append(spots)

    return SimNet(spec=spec, hosts=hosts, edges=sorted(edges), pages=pages, languages=languages,
                  home=home, seeds=seeds, announced=announced, announce_at=announce_at,
                  placements=placements, directory=directory)


# ---------------------------------------------------------------- the network


class SimNet:
    """A generated network. Immutable after construction; safe to share."""

    def __init__(self, spec, hosts, edges, pages, languages, home, seeds, announced,
                 announce_at, placements, directory=None):
        self.spec = spec
        self.hosts: list[str] = hosts
        self.index = {h: i for i, h in enumerate(hosts)}
        self.edges: list[tuple[int, int]] = edges
        self.pages: list[int] = pages
        self.languages: list[str] = languages
        self.home = home
        self.seeds: list[int] = seeds
        self.announced: list[int] = announced
        self.announce_at: dict[int, float] = announce_at
        self.placements = placements
        self.directory = directory
        self.out_degree = [0] * len(hosts)
        self.in_degree = [0] * len(hosts)
        for u, v in edges:
            self.out_degree[u] += 1
            self.in_degree[v] += 1

    def __len__(self) -> int:
        return len(self.hosts)

    def site_id(self, i: int) -> EepsiteId:
        return EepsiteId(self.hosts[i])

    def node_class(self, i: int) -> str:
        o, d = self.out_degree[i] > 0, self.in_degree[i] > 0
        return {(True, False): "SOURCE", (False, True): "SINK",
                (True, True): "CONNECTED", (False, False): "ISOLATED"}[(o, d)]

    def edge_hosts(self) -> set[tuple[str, str]]:
        return {(self.hosts[u], self.hosts[v]) for u, v in self.edges}

    def announced_until(self, t: float) -> list[int]:
        return [i for i in self.announced if self.announce_at[i] <= t]

    def next_announcement_after(self, t: float) -> float | None:
        later = [a for a in self.announce_at.values() if a > t]
        return min(later) if later else None

    def language_of(self, host: str) -> str | None:
        i = self.index.get(host)
        return None if i is None else self.languages[i]

    def is_online(self, i: int, t: float) -> bool:
        spec = self.spec
        if spec.availability == "always_on":
            return True
        if spec.availability == "bernoulli":
            p = spec.p[i] if isinstance(spec.p, list) else spec.p
            slot = math.floor(t / spec.slot_seconds)
            return _uniform(spec.seed, "up", i, slot) < p
        return churn_state(i, max(t, 0.0), spec) is Presence.ONLINE

    # ---- rendering

    @staticmethod
    def page_path(page: int) -> str:
        return "/" if page == 0 else f"/page/{page}.html"

    def page_index(self, i: int, path: str) -> int | None:
        if path == "/":
            return 0
        m = _PAGE_RE.match(path)
        if m and 0 < int(m.group(1)) < self.pages[i]:
            return int(m.group(1))
        return None

    def render(self, i: int, path: str) -> str | None:
        """Body of ``path`` on site ``i``, or ``None`` when the page does not exist."""
        page = self.page_index(i, path)
        if page is None:
            return None
        host = self.hosts[i]
        lang = self.languages[i]
        vocab = STOPWORDS.get(lang, STOPWORDS["en"])
        rng = random.Random(f"page:{self.spec.seed}:{i}:{page}")
        if page == 0:
            n_words, n_images, n_scripts = self.home[i]
        else:
            n_words, n_images, n_scripts = rng.randint(5, 60), rng.randint(0, 3), rng.randint(0, 2)

        out = [f'<!DOCTYPE html>\n<html lang="{lang}"><head><meta charset="utf-8">',
               "<style>body { font-family: serif; }</style></head>\n<body>\n"]
        words = [rng.choice(vocab) for _ in range(n_words)]
        for k in range(0, len(words), 12):
            out.append("<p>" + " ".join(words[k:k + 12]) + "</p>\n")
        for k in range(n_images):
            out.append(f'<img src="/img/{page}-{k}.png" alt="">\n')
        for k in range(n_scripts):
            out.append(f'<script type="text/javascript">var s{k} = "{rng.choice(vocab)} x";</script>\n')

        out.append('<div class="nav"><a href="#top">top</a> <a href="/">home</a>\n')
        if page:
            parent = (page - 1) // BRANCHING
            out.append(f'<a href="{self.page_path(parent)}">up</a>\n')
        first = BRANCHING * page + 1
        for child in range(first, min(first + BRANCHING, self.pages[i])):
            if rng.random() < 0.3:  # absolute self-host form with a fragment
                out.append(f'<a href="http://{host}/page/{child}.html#s">{child}</a>\n')
            else:
                out.append(f'<a href="/page/{child}.html">{child}</a>\n')
        out.append("</div>\n")

        targets = self.placements[i].get(page, [])
        if targets:
            out.append("<ul>\n")
            for v in targets:
                out.append(f'<li><a href="http://{self.hosts[v]}/">{self.hosts[v][:12]}</a></li>\n')
                if rng.random() < 0.25:  # duplicate anchor in another form
                    out.append(f'<li><a href="//{self.hosts[v].upper()}/index">again</a></li>\n')
            out.append("</ul>\n")
        if page == 0 and i % 3 == 0:
            out.append('<a href="http://example.com/">clearnet mirror</a>\n')
        out.append("</body></html>\n")
        return "".join(out)

    # ---- ground truth

    def ground_truth(self) -> dict:
        spec = self.spec
        if spec.availability == "always_on":
            availability = [{"model": "always_on"}] * len(self)
        elif spec.availability == "bernoulli":
            availability = [{"model": "bernoulli", "slot_seconds": spec.slot_seconds,
                             "p": spec.p[i] if isinstance(spec.p, list) else spec.p}
                            for i in range(len(self))]
        else:
            availability = [{"model": "churn", "mean_online": spec.mean_online,
                             "mean_offline": spec.mean_offline}] * len(self)
        seeds, announced = set(self.seeds), set(self.announced)
        sites = [{"index": i, "host": h, "pages": self.pages[i], "language": self.languages[i],
                  "seed": i in seeds, "announced": i in announced,
                  "announce_at": self.announce_at.get(i),
                  "in_degree": self.in_degree[i], "out_degree": self.out_degree[i],
                  "class": self.node_class(i)}
                 for i, h in enumerate(self.hosts)]
        return {"spec_version": SPEC_VERSION, "seed": spec.seed, "n_sites": len(self),
                "directory": self.directory, "sites": sites,
                "edges": [list(e) for e in self.edges], "availability": availability,
                "languages": list(self.languages)}

    def ground_truth_json(self) -> str:
        return json.dumps(self.ground_truth(), indent=1, sort_keys=True) + "\n"

    def write_ground_truth(self, path: str | Path) -> None:
        Path(path).write_text(self.ground_truth_json(), encoding="utf-8")

    def seeds_text(self) -> str:
        return "".join(f"http://{self.hosts[i]}/\n" for i in self.seeds)


class SimTransport:
    """Transport backed by a :class:`SimNet` and a logical clock.

    ``epoch`` is the clock reading that corresponds to simulated time zero.
    Offline or unknown hosts raise ``REFUSED``; missing paths return 404.
    """

    def __init__(self, net: SimNet, clock: Clock, epoch: float = 0.0):
        self.net = net
        self.clock = clock
        self.epoch = epoch

    def sim_time(self) -> float:
        return self.clock.now() - self.epoch

    def fetch(self, site: EepsiteId, path: str, deadline: float = HTTP_TIMEOUT) -> FetchResponse:
        if deadline <= 0:
            raise ValueError("deadline must be positive")
        i = self.net.index.get(site.host)
        if i is None or not self.net.is_online(i, self.sim_time()):
            raise FetchFault(FaultReason.REFUSED, site.host)
        body = self.net.render(i, path)
        if body is None:
            return FetchResponse(404, "<html><body>Not found</body></html>")
        return FetchResponse(200, body)
