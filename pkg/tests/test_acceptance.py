"""Exit-criteria suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -m acceptance -s``; the lines are also repeated in
the terminal summary.
"""

import csv
import filecmp
import itertools
import random
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import pytest

from conftest import (ACCEPTANCE_LINES, TABLE2_COUNTS, TABLE2_GRAND_TOTAL, TABLE2_PCTS,
                      TABLE2_SOURCE_TOTALS, TABLE4_OUT, TABLE5_IN, make_record, simulate, snapshot)
from eepcrawl.cli import main
from eepcrawl.config import CrawlConfig, partition_seeds
from eepcrawl.graphlab import (Direction, LinkGraph, NodeClass, NodeInfo, build_graph, classify,
                               degree, khop, size_histogram, sma, top_k)
from eepcrawl.model import EepsiteId, Event, IllegalTransition, Source, Status, transition
from eepcrawl.report import ARTIFACTS, analyze
from eepcrawl.simnet import SimNetSpec, generate
from eepcrawl.spider import page_stats
from eepcrawl.store import Store, aggregate_counts
from test_graphlab import matrix_khop, random_graph
from test_model import expected_after
from test_spider import random_document, regex_page_stats

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(number, title, budget_s):
    """Time the block, enforce the runtime budget and record one PASS/FAIL line."""
    t0 = time.perf_counter()
    detail = {"note": ""}
    try:
        yield detail
        elapsed = time.perf_counter() - t0
        assert elapsed < budget_s, f"took {elapsed:.2f}s, budget {budget_s}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - t0
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        line = f"CRITERION {number} FAIL ({elapsed:.2f}s) {title}: {reason}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"CRITERION {number} PASS ({elapsed:.2f}s) {title}"
    if detail["note"]:
        line += f": {detail['note']}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# ------------------------------------------------------------------ 1


def test_criterion_1_state_machine():
    cfg = CrawlConfig()
    with criterion(1, "state machine relation, absorption, 720-probe cap", 1.0) as d:
        checked = 0
        for status, event in itertools.product(Status, Event):
            for disc, crawls in ((0, 0), (3, 1), (719, 2), (720, 3), (5, 3)):
                rec = make_record("a.i2p", status, discovery_attempts=disc, crawl_attempts=crawls)
                want = expected_after(rec, event, cfg, 60.0)
                if want is None:
                    with pytest.raises(IllegalTransition):
                        transition(rec, event, cfg, 60.0)
                else:
                    got = transition(rec, event, cfg, 60.0)
                    assert (got.status, got.discovery_attempts, got.crawl_attempts) == want, (status, event)
                checked += 1
        for status in (Status.FINISHED, Status.DISCARDED):
            for event in Event:
                with pytest.raises(IllegalTransition):
                    transition(make_record("a.i2p", status), event, cfg, 1.0)
        rec = make_record("a.i2p")
        for k in range(1, 721):
            assert rec.status is Status.DISCOVERING
            rec = transition(rec, Event.CONTACT_FAIL, cfg, (k - 1) * 3600.0)
        assert rec.status is Status.DISCARDED and rec.discovery_attempts == 720
        d["note"] = f"{checked} (status, event, counters) cases"


# ------------------------------------------------------------------ 2


def table2_counts():
    """Listed cells plus each source's unlisted remainder, held as PENDING."""
    counts = dict(TABLE2_COUNTS)
    for source, total in TABLE2_SOURCE_TOTALS.items():
        listed = sum(n for (s, _), n in TABLE2_COUNTS.items() if s is source)
        counts[(source, Status.PENDING)] = total - listed
    return counts


def test_criterion_2_source_status_table():
    with criterion(2, "source x status percentages within 0.1pp", 1.0) as d:
        agg = aggregate_counts(table2_counts())
        off = []
        for (source, status), (by_status, of_total) in TABLE2_PCTS.items():
            row = agg.cell(source, status)
            got = (row.pct_within_source, row.pct_of_total) if row else (0.0, 0.0)
            for label, g, w in (("by status", got[0], by_status), ("of total", got[1], of_total)):
                if abs(g - w) > 0.1:
                    off.append(f"{source.value}-{status.value} {label} {g:.2f} vs {w}")
        d["note"] = f"loaded total {agg.total} vs stated {TABLE2_GRAND_TOTAL}"
        assert not off, "; ".join(off) + f" (loaded total {agg.total}, stated {TABLE2_GRAND_TOTAL})"


# ------------------------------------------------------------------ 3


BRUTE_CLASS = {(False, True): NodeClass.SOURCE, (True, False): NodeClass.SINK,
               (True, True): NodeClass.CONNECTED, (False, False): NodeClass.ISOLATED}


def _brute_force_classes(nodes, edges):
    """host -> (in, out, class) by scanning the whole edge list per node."""
    out = {}
    for x in nodes:
        i = sum(1 for _, v in edges if v == x)
        o = sum(1 for u, _ in edges if u == x)
        out[x] = (i, o, BRUTE_CLASS[(i > 0, o > 0)])
    return out


def test_criterion_3_oracle_crawl_equivalence(tmp_path):
    rng = random.Random(2024)
    with criterion(3, "25 random always-on networks recovered exactly", 60.0) as d:
        total_edges = 0
        for trial in range(25):
            spec = SimNetSpec(seed=rng.randrange(10 ** 6), n_sites=rng.randint(10, 300),
                              topology="random", mean_out_degree=rng.choice([0.5, 1.5, 3.0]),
                              pages="uniform", pages_low=1, pages_high=6)
            net = generate(spec)
            store, summary = simulate(net, tmp_path / f"t{trial}.db", instances=rng.randint(1, 4))
            assert summary.complete
            records, results = snapshot(store)
            graph = build_graph(results, list(records.values()))
            got = {(u.host, v.host) for u, v in graph.edges}
            assert got == net.edge_hosts(), f"trial {trial}"
            assert set(records) == set(net.hosts)
            truth = _brute_force_classes(net.hosts, net.edge_hosts())
            classes, _ = classify(graph)
            for host, (i, o, cls) in truth.items():
                assert degree(graph, EepsiteId(host)) == (i, o)
                assert classes[EepsiteId(host)] is cls
            total_edges += len(got)
        d["note"] = f"{total_edges} edges recovered"


# ------------------------------------------------------------------ 4


def test_criterion_4_paper_shape_recovery(tmp_path):
    with criterion(4, "paper-shape class shares and pages CDF", 120.0) as d:
        net = generate(SimNetSpec.paper_shape(1000, seed=3))
        store, summary = simulate(net, tmp_path / "p.db", instances=10)
        assert summary.complete
        analyze(tmp_path / "p.db", tmp_path / "report")
        with open(tmp_path / "report" / "node_classes.csv") as fh:
            shares = {r["class"]: float(r["pct"]) for r in csv.DictReader(fh)}
        targets = {"SOURCE": 10.0, "SINK": 12.0, "CONNECTED": 12.0, "ISOLATED": 66.0}
        for cls, want in targets.items():
            assert abs(shares[cls] - want) <= 2.0, f"{cls} {shares[cls]} vs {want}"
        _, results = snapshot(store)
        cdf30 = size_histogram(results)["pages"].cdf(30)
        assert 0.78 <= cdf30 <= 0.82, f"CDF(30) = {cdf30}"
        d["note"] = f"shares {shares}, CDF(30) = {cdf30:.3f}"


# ------------------------------------------------------------------ 5


@pytest.mark.parametrize("p", [0.5, 0.2])
def test_criterion_5_churn_statistics(tmp_path, p):
    with criterion(5, f"mean discovery attempts at p={p}", 120.0) as d:
        n = 2000
        net = generate(SimNetSpec(seed=11, n_sites=n, topology="explicit", seeds=list(range(n)),
                                  availability="bernoulli", p=p))
        store, summary = simulate(net, tmp_path / "c.db", instances=10)
        records, _ = snapshot(store)
        finished = [r.discovery_attempts for r in records.values() if r.status is Status.FINISHED]
        assert len(finished) >= 0.99 * n
        mean = sum(finished) / len(finished)
        assert abs(mean - 1 / p) <= 0.1 / p, f"mean {mean:.3f} vs {1 / p}"
        d["note"] = f"mean {mean:.3f} over {len(finished)} finished (target {1 / p:.1f})"


# ------------------------------------------------------------------ 6


def _fixture_graph():
    """Named rows from both ranking tables; degrees realized with distinct filler nodes."""
    info, edges = {}, []
    filler = NodeInfo(Status.FINISHED, Source.FLOODFILL)
    for deg, host, status, source in TABLE4_OUT + TABLE5_IN:
        info[EepsiteId(host)] = NodeInfo(Status[status], Source[source])
    for deg, host, _, _ in TABLE4_OUT:
        for j in range(deg):
            sink = EepsiteId(f"sink-{host.split('.')[0][:20]}-{j}.i2p")
            info[sink] = filler
            edges.append((EepsiteId(host), sink))
    for deg, host, _, _ in TABLE5_IN:
        for j in range(deg):
            src = EepsiteId(f"src-{host.split('.')[0][:20]}-{j}.i2p")
            info[src] = filler
            edges.append((src, EepsiteId(host)))
    return LinkGraph(info, edges)


def _assert_ranking(ranked, table):
    assert [r.degree for r in ranked] == [row[0] for row in table]
    by_degree = {}
    for deg, host, status, source in table:
        by_degree.setdefault(deg, set()).add((host, status, source))
    got = {}
    for r in ranked:
        got.setdefault(r.degree, set()).add((r.id.host, r.status.value, r.source.value))
    assert got == by_degree  # same rows; order within equal degrees is free


def test_criterion_6_top_k_fixtures():
    with criterion(6, "top out/in degree rankings from the ranking fixtures", 1.0) as d:
        graph = _fixture_graph()
        out = top_k(graph, Direction.OUT, len(TABLE4_OUT))
        inn = top_k(graph, Direction.IN, len(TABLE5_IN))
        assert (out[0].id.host, out[0].degree, out[0].status, out[0].source) == \
            ("identiguy.i2p", 385, Status.FINISHED, Source.SEED)
        assert (inn[0].id.host, inn[0].degree, inn[0].status, inn[0].source) == \
            ("forum.i2p", 58, Status.DISCARDED, Source.SEED)
        _assert_ranking(out, TABLE4_OUT)
        _assert_ranking(inn, TABLE5_IN)
        d["note"] = f"{len(graph)} nodes, {graph.edge_count()} edges"


# ------------------------------------------------------------------ 7


def test_criterion_7_concurrency_soundness(tmp_path):
    n_sessions, own_per_session, shared, tries = 500, 4, 50, 5
    store = Store(tmp_path / "c.db")
    barrier = threading.Barrier(n_sessions)

    def worker(i):
        owner = f"I{i % 10}"
        won, dequeued = 0, []
        with store.session(owner) as s:
            barrier.wait()
            for j in range(own_per_session):
                s.upsert_record(make_record(f"own-{i:03d}-{j}.i2p", Status.PENDING))
                if j % 2:
                    site = s.dequeue_pending()
                    if site is not None:
                        dequeued.append(site.host)
            for j in range(tries):
                won += s.insert_new(make_record(f"shared-{(i * tries + j) % shared:02d}.i2p"))
            while (site := s.dequeue_pending()) is not None:
                dequeued.append(site.host)
        return won, dequeued

    with criterion(7, "500 concurrent sessions, mixed upsert/dequeue", 60.0) as d:
        with ThreadPoolExecutor(n_sessions) as pool:
            outcomes = list(pool.map(worker, range(n_sessions)))
        wins = sum(w for w, _ in outcomes)
        delivered = Counter(h for _, batch in outcomes for h in batch)
        with store.session("check") as s:
            hosts = [r.id.host for r in s.records()]
            assert len(hosts) == len(set(hosts)), "duplicate ids"
            assert s.count() == n_sessions * own_per_session + shared
            assert wins == shared
            owners_left = sum(s.queue_length(f"I{k}") for k in range(10))
        doubles = [h for h, c in delivered.items() if c > 1]
        assert not doubles, f"double dequeues: {doubles[:5]}"
        assert set(delivered) == {f"own-{i:03d}-{j}.i2p" for i in range(n_sessions)
                                  for j in range(own_per_session)}
        assert owners_left == 0
        d["note"] = f"{len(hosts)} records, {sum(delivered.values())} dequeues"


# ------------------------------------------------------------------ 8


def test_criterion_8_numeric_micro_oracles():
    rng = random.Random(99)
    with criterion(8, "sma, page_stats, khop, partition_seeds vs brute force", 10.0) as d:
        for _ in range(200):
            series = [rng.uniform(-1e3, 1e3) for _ in range(rng.randint(1, 150))]
            w = rng.randint(1, 30)
            for i, v in enumerate(sma(series, w)):
                chunk = series[max(0, i - w + 1):i + 1]
                assert abs(v - sum(chunk) / len(chunk)) <= 1e-12 * max(1.0, max(map(abs, chunk)))
        for _ in range(200):
            doc = random_document(rng)
            assert page_stats(doc) == regex_page_stats(doc)
        for _ in range(100):
            graph, nodes, edges = random_graph(rng, rng.randint(2, 60), rng.choice([0.02, 0.08]))
            root, k = rng.choice(nodes), rng.randint(1, 3)
            assert khop(graph, root, k) == matrix_khop(nodes, edges, root, k)
        for _ in range(200):
            seeds = rng.sample(range(10 ** 6), rng.randint(0, 500))
            n = rng.randint(1, 40)
            oracle = [[] for _ in range(n)]
            for i, s in enumerate(seeds):
                oracle[i % n].append(s)
            assert partition_seeds(seeds, n) == oracle
        d["note"] = "200/200/100/200 randomized inputs"


# ------------------------------------------------------------------ 9


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "run + analyze twice gives byte-identical bundles", 120.0) as d:
        work = tmp_path / "net"
        assert main(["simulate", "--preset", "paper", "--n-sites", "400", "--seed", "21",
                     "--availability", "bernoulli", "--p", "0.5", "--out", str(work)]) == 0
        for rep in ("a", "b"):
            assert main(["run", "--config", str(work / "eepcrawl.toml"), "--instances", "4",
                         "--out", str(tmp_path / rep)]) == 0
            assert main(["analyze", "--store", str(tmp_path / rep / "eepcrawl.db"),
                         "--out", str(tmp_path / f"report-{rep}")]) == 0
        _, mismatch, errors = filecmp.cmpfiles(tmp_path / "report-a", tmp_path / "report-b",
                                               ARTIFACTS, shallow=False)
        assert mismatch == [] and errors == [], f"differing files: {mismatch + errors}"
        d["note"] = f"{len(ARTIFACTS)} files identical"
