"""Link-graph analytics over crawl output.

Builds the directed eepsite graph, then answers degree, node-class,
top-k, k-hop neighborhood and distribution questions about it. Also
holds the small series helpers (SMA, histograms) the reports use and the
GraphML/DOT writers.
"""

from __future__ import annotations

import bisect
import math
import xml.etree.ElementTree as ET
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .language import UNKNOWN
from .model import EepsiteId, EepsiteRecord, Source, Status
from .spider import CrawlResult


class NodeClass(str, Enum):
    SOURCE = "SOURCE"
    SINK = "SINK"
    CONNECTED = "CONNECTED"
    ISOLATED = "ISOLATED"


class Direction(str, Enum):
    IN = "IN"
    OUT = "OUT"


class DanglingResult(ValueError):
    pass


class UnknownNode(KeyError):
    pass


@dataclass(frozen=True)
class NodeInfo:
    status: Status | None
    source: Source | None


class LinkGraph:
    """Directed, deduplicated, self-loop-free graph over eepsite ids."""

    def __init__(self, nodes: dict[EepsiteId, NodeInfo], edges: Iterable[tuple[EepsiteId, EepsiteId]]):
        self.nodes: dict[EepsiteId, NodeInfo] = dict(sorted(nodes.items()))
        self.succ: dict[EepsiteId, set[EepsiteId]] = {n: set() for n in self.nodes}
        self.pred: dict[EepsiteId, set[EepsiteId]] = {n: set() for n in self.nodes}
        for u, v in edges:
            if u == v:
                continue
            if u not in self.nodes or v not in self.nodes:
                raise UnknownNode(f"edge ({u}, {v}) leaves the node set")
            self.succ[u].add(v)
            self.pred[v].add(u)

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinkGraph) and self.nodes == other.nodes and self.succ == other.succ

    @property
    def edges(self) -> set[tuple[EepsiteId, EepsiteId]]:
        return {(u, v) for u, vs in self.succ.items() for v in vs}

    def edge_count(self) -> int:
        return sum(map(len, self.succ.values()))

    def sorted_edges(self) -> list[tuple[EepsiteId, EepsiteId]]:
        return sorted(self.edges)


def build_graph(results: Iterable[CrawlResult], records: Iterable[EepsiteRecord]) -> LinkGraph:
    """Nodes are every recorded eepsite; edges are the crawl results' out-links.

    Link targets without a record (possible in partial stores) still join
    the graph, annotated with unknown status and source.
    """
    nodes = {r.id: NodeInfo(r.status, r.source) for r in records}
    edges = []
    for res in results:
        if res.id not in nodes:
            raise DanglingResult(f"DANGLING_RESULT: no record for {res.id}")
        for v in res.out_links:
            edges.append((res.id, v))
            if v not in nodes:
                nodes[v] = NodeInfo(None, None)
    return LinkGraph(nodes, edges)


def degree(graph: LinkGraph, node: EepsiteId) -> tuple[int, int]:
    """``(in_degree, out_degree)`` of ``node``."""
    if node not in graph.nodes:
        raise UnknownNode(f"UNKNOWN_NODE: {node}")
    return len(graph.pred[node]), len(graph.succ[node])


def node_class(in_degree: int, out_degree: int) -> NodeClass:
    if out_degree and not in_degree:
        return NodeClass.SOURCE
    if in_degree and not out_degree:
        return NodeClass.SINK
    if in_degree and out_degree:
        return NodeClass.CONNECTED
    return NodeClass.ISOLATED


def classify(graph: LinkGraph) -> tuple[dict[EepsiteId, NodeClass], dict[NodeClass, float]]:
    """Per-node class and class shares (percent of all nodes)."""
    classes = {n: node_class(len(graph.pred[n]), len(graph.succ[n])) for n in graph.nodes}
    counts = Counter(classes.values())
    total = len(classes)
    shares = {c: (100.0 * counts[c] / total if total else 0.0) for c in NodeClass}
    return classes, shares


@dataclass(frozen=True)
class RankedNode:
    id: EepsiteId
    degree: int
    status: Status | None
    source: Source | None


def top_k(graph: LinkGraph, direction: Direction | str, k: int) -> list[RankedNode]:
    if k < 1:
        raise ValueError("k must be >= 1")
    adj = graph.pred if Direction(direction) is Direction.IN else graph.succ
    ranked = sorted(graph.nodes, key=lambda n: (-len(adj[n]), n.host))
    return [RankedNode(n, len(adj[n]), graph.nodes[n].status, graph.nodes[n].source)
            for n in ranked[:k]]


def khop(graph: LinkGraph, root: EepsiteId, k: int) -> set[EepsiteId]:
    """Nodes reachable from ``root`` along edge direction in at most ``k`` hops."""
    if root not in graph.nodes:
        raise UnknownNode(f"UNKNOWN_NODE: {root}")
    if k < 0:
        raise ValueError("k must be >= 0")
    dist = {root: 0}
    todo = deque([root])
    while todo:
        u = todo.popleft()
        if dist[u] == k:
            continue
        for v in graph.succ[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    del dist[root]
    return set(dist)


def degree_distribution(graph: LinkGraph, direction: Direction | str) -> dict[int, int]:
    adj = graph.pred if Direction(direction) is Direction.IN else graph.succ
    return dict(sorted(Counter(len(adj[n]) for n in graph.nodes).items()))


# ------------------------------------------------------------- series


class EmptySeries(ValueError):
    pass


def sma(series: Sequence[float], window: int) -> list[float]:
    """Simple moving average; the first ``window - 1`` points average the prefix so far."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series) == 0:
        raise EmptySeries("EMPTY_SERIES")
    out = []
    for i in range(len(series)):
        chunk = series[max(0, i - window + 1):i + 1]
        out.append(math.fsum(chunk) / len(chunk))
    return out


def pow2_edges(limit: int = 2 ** 15) -> list[int]:
    edges = [0, 1]
    while edges[-1] < limit:
        edges.append(edges[-1] * 2)
    return edges


@dataclass(frozen=True)
class Histogram:
    """Counts over ``[edges[i], edges[i+1])`` plus one overflow bucket ``>= edges[-1]``."""

    metric: str
    edges: list[int]
    counts: list[int]
    values: list[int]  # sorted raw observations, for the empirical CDF

    @property
    def total(self) -> int:
        return len(self.values)

    def buckets(self) -> list[tuple[int, int | None, int]]:
        bounds = list(zip(self.edges, self.edges[1:] + [None]))
        return [(lo, hi, c) for (lo, hi), c in zip(bounds, self.counts)]

    def cdf(self, x: float) -> float:
        """Fraction of observations ``<= x``."""
        if not self.values:
            return 0.0
        return bisect.bisect_right(self.values, x) / len(self.values)

    def cdf_points(self) -> list[tuple[int, float]]:
        n = len(self.values)
        seen = Counter(self.values)
        acc, out = 0, []
        for v in sorted(seen):
            acc += seen[v]
            out.append((v, acc / n))
        return out


def histogram(values: Iterable[int], edges: Sequence[int] | None = None, metric: str = "") -> Histogram:
    edges = list(edges) if edges is not None else pow2_edges()
    if sorted(set(edges)) != edges:
        raise ValueError("bucket edges must be strictly increasing")
    vals = sorted(values)
    counts = [0] * len(edges)
    for v in vals:
        i = bisect.bisect_right(edges, v) - 1
        counts[max(i, 0)] += 1
    return Histogram(metric, edges, counts, vals)


SIZE_METRICS = ("pages", "letters", "words", "images", "scripts")


def size_histogram(results: Iterable[CrawlResult], edges: Sequence[int] | None = None) -> dict[str, Histogram]:
    """Page-count and home-page content distributions, keyed by metric name."""
    results = list(results)
    columns = {
        "pages": [r.page_count for r in results],
        "letters": [r.home_stats.letters for r in results],
        "words": [r.home_stats.words for r in results],
        "images": [r.home_stats.images for r in results],
        "scripts": [r.home_stats.scripts for r in results],
    }
    return {m: histogram(v, edges, m) for m, v in columns.items()}


def language_table(results: Iterable[CrawlResult]) -> tuple[list[tuple[str, float]], int]:
    """``([(language, pct), ...] descending, unknown_count)``; UNKNOWN is left out of the shares."""
    counts = Counter(r.language for r in results)
    unknown = counts.pop(UNKNOWN, 0)
    known = sum(counts.values())
    rows = [(lang, round(100.0 * n / known, 2)) for lang, n in counts.items()]
    rows.sort(key=lambda kv: (-counts[kv[0]], kv[0]))
    return rows, unknown


# ------------------------------------------------------------- export


def _attrs(graph: LinkGraph, classes, n: EepsiteId) -> dict[str, str]:
    info = graph.nodes[n]
    return {"status": info.status.value if info.status else "",
            "source": info.source.value if info.source else "",
            "in": str(len(graph.pred[n])), "out": str(len(graph.succ[n])),
            "class": classes[n].value}


def to_graphml(graph: LinkGraph) -> str:
    classes, _ = classify(graph)
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    for key, typ in (("status", "string"), ("source", "string"), ("in", "int"),
                     ("out", "int"), ("class", "string")):
        ET.SubElement(root, "key", {"id": key, "for": "node", "attr.name": key, "attr.type": typ})
    g = ET.SubElement(root, "graph", id="eepsites", edgedefault="directed")
    for n in graph.nodes:
        node = ET.SubElement(g, "node", id=n.host)
        for key, value in _attrs(graph, classes, n).items():
            ET.SubElement(node, "data", key=key).text = value
    for i, (u, v) in enumerate(graph.sorted_edges()):
        ET.SubElement(g, "edge", id=f"e{i}", source=u.host, target=v.host)
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def to_dot(graph: LinkGraph) -> str:
    classes, _ = classify(graph)
    lines = ["digraph eepsites {"]
    for n in graph.nodes:
        attrs = " ".join(f'{k}="{v}"' for k, v in _attrs(graph, classes, n).items())
        lines.append(f'  "{n.host}" [{attrs}];')
    for u, v in graph.sorted_edges():
        lines.append(f'  "{u.host}" -> "{v.host}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
