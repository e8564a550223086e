"""Report bundle: every table and figure series as CSV, the graph, a summary.

All outputs are sorted and formatted deterministically, so analyzing the
same store twice gives byte-identical files.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from pathlib import Path

from .graphlab import (Direction, build_graph, classify, degree_distribution, khop, language_table,
                       sma, size_histogram, to_dot, to_graphml, top_k)
from .model import Status
from .store import Store, StoreError

logger = logging.getLogger(__name__)

TOP_K = 10
SMA_WINDOW = 5
NEIGHBORHOOD_HOPS = 3

ARTIFACTS = (
    "table2_source_status.csv", "table3_largest_sites.csv", "table4_top_out_degree.csv",
    "table5_top_in_degree.csv", "table6_languages.csv", "node_classes.csv",
    "fig4_daily_services.csv", "fig5_discovery_attempts.csv", "fig6_content_hist.csv",
    "fig7_pages_hist.csv", "fig7_pages_cdf.csv", "fig8_degree_hist.csv", "fig9_neighborhood.csv",
    "graph.graphml", "graph.dot", "records.jsonl", "results.jsonl", "probes.jsonl", "summary.txt",
)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _bucket_rows(hist):
    return [(lo, "" if hi is None else hi, c) for lo, hi, c in hist.buckets()]


def analyze(store_path: str | Path, out_dir: str | Path) -> dict[str, Path]:
    """Write the report bundle for ``store_path`` into ``out_dir``; returns name -> path."""
    if not Path(store_path).exists():
        raise StoreError(f"MISSING_STORE: {store_path}")
    store = Store(store_path, create=False)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    with store.session("analyze") as s:
        records = s.records()
        results = s.results()
        aggregate = s.aggregate_source_status()
        daily = s.daily_series()
        for name, export in (("records.jsonl", s.export_records_jsonl),
                             ("results.jsonl", s.export_results_jsonl),
                             ("probes.jsonl", s.export_probes_jsonl)):
            buf = io.StringIO()
            export(buf)
            files[name] = buf.getvalue()

    by_id = {r.id: r for r in records}
    graph = build_graph(results, records)
    classes, shares = classify(graph)

    files["table2_source_status.csv"] = aggregate.to_csv()

    # daily observations with their moving averages
    if daily:
        svc = sma([d.services_observed for d in daily], SMA_WINDOW)
        fin = sma([d.eepsites_finished for d in daily], SMA_WINDOW)
    else:
        svc = fin = []
    files["fig4_daily_services.csv"] = _csv(
        ["date", "services_observed", "eepsites_finished", "services_sma5", "eepsites_sma5"],
        [(d.day.isoformat(), d.services_observed, d.eepsites_finished, _fmt(a), _fmt(b))
         for d, a, b in zip(daily, svc, fin)])

    attempts = Counter(r.discovery_attempts for r in records if r.status is Status.FINISHED)
    n_fin = sum(attempts.values())
    acc, rows = 0, []
    for k in sorted(attempts):
        acc += attempts[k]
        rows.append((k, attempts[k], _fmt(acc / n_fin)))
    files["fig5_discovery_attempts.csv"] = _csv(["attempts", "finished_sites", "cdf"], rows)

    hists = size_histogram(results)
    files["fig6_content_hist.csv"] = _csv(
        ["metric", "bucket_lo", "bucket_hi", "count"],
        [(m, *row) for m in ("letters", "words", "images", "scripts")
         for row in _bucket_rows(hists[m])])
    files["fig7_pages_hist.csv"] = _csv(["bucket_lo", "bucket_hi", "count"],
                                        _bucket_rows(hists["pages"]))
    files["fig7_pages_cdf.csv"] = _csv(["pages", "cdf"],
                                       [(v, _fmt(c)) for v, c in hists["pages"].cdf_points()])

    files["fig8_degree_hist.csv"] = _csv(
        ["direction", "degree", "nodes"],
        [(d.value, deg, n) for d in (Direction.IN, Direction.OUT)
         for deg, n in degree_distribution(graph, d).items()])

    largest = sorted(results, key=lambda r: (-r.page_count, r.id.host))[:TOP_K]
    files["table3_largest_sites.csv"] = _csv(
        ["rank", "id", "pages", "language", "status", "source"],
        [(i, r.id.host, r.page_count, r.language, by_id[r.id].status.value,
          by_id[r.id].source.value) for i, r in enumerate(largest, 1)])

    def ranked(direction):
        if not len(graph):
            return []
        return [(i, n.id.host, n.degree, n.status.value if n.status else "",
                 n.source.value if n.source else "")
                for i, n in enumerate(top_k(graph, direction, TOP_K), 1)]

    header = ["rank", "id", "degree", "status", "source"]
    files["table4_top_out_degree.csv"] = _csv(header, ranked(Direction.OUT))
    files["table5_top_in_degree.csv"] = _csv(header, ranked(Direction.IN))

    langs, unknown = language_table(results)
    lang_counts = Counter(r.language for r in results)
    lang_rows = [(lang, lang_counts[lang], f"{pct:.2f}") for lang, pct in langs]
    if unknown:
        lang_rows.append(("UNKNOWN", unknown, ""))
    files["table6_languages.csv"] = _csv(["language", "sites", "pct"], lang_rows)

    class_counts = Counter(classes.values())
    files["node_classes.csv"] = _csv(
        ["class", "nodes", "pct"],
        [(c.value, class_counts[c], f"{shares[c]:.2f}") for c in shares])

    # neighborhood of the node with the most out-links
    hood_rows = []
    if graph.edge_count():
        root = top_k(graph, Direction.OUT, 1)[0].id
        placed: set = set()
        for k in range(1, NEIGHBORHOOD_HOPS + 1):
            ring = sorted(khop(graph, root, k) - placed)
            placed.update(ring)
            for v in ring:
                info = graph.nodes[v]
                hood_rows.append((root.host, k, v.host, info.status.value if info.status else "",
                                  info.source.value if info.source else ""))
    files["fig9_neighborhood.csv"] = _csv(["root", "hops", "id", "status", "source"], hood_rows)

    files["graph.graphml"] = to_graphml(graph)
    files["graph.dot"] = to_dot(graph)

    lines = [f"records: {len(records)}", f"crawled eepsites: {len(results)}",
             f"graph: {len(graph)} nodes, {graph.edge_count()} edges", "",
             "records by source and status:"]
    lines += [f"  {r.source.value:<10} {r.status.value:<11} {r.count:>7}  "
              f"{r.pct_within_source:6.2f}%  {r.pct_of_total:6.2f}% of total" for r in aggregate.rows]
    lines += ["", "node classes:"]
    lines += [f"  {c.value:<9} {class_counts[c]:>7}  {shares[c]:6.2f}%" for c in shares]
    for title, name in (("largest out-degree:", "table4_top_out_degree.csv"),
                        ("largest in-degree:", "table5_top_in_degree.csv")):
        lines += ["", title]
        rows = list(csv.reader(io.StringIO(files[name])))[1:]
        lines += [f"  {rank:>2}. {host} {deg} {st} {src}" for rank, host, deg, st, src in rows]
    lines += ["", "languages:"]
    lines += [f"  {lang:<4} {pct:6.2f}%" for lang, pct in langs]
    lines.append(f"  unknown: {unknown}")
    files["summary.txt"] = "\n".join(lines) + "\n"

    paths = {}
    for name in ARTIFACTS:
        path = out / name
        path.write_text(files[name], encoding="utf-8")
        paths[name] = path
    logger.info("wrote %d report files to %s", len(paths), out)
    return paths
