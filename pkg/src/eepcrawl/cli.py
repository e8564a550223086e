"""Command line: ``eepcrawl run | simulate | analyze | export-graph``.

Exit codes: 0 success, 1 configuration error, 2 store error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, CrawlConfig, load_config, load_seeds
from .graphlab import build_graph, to_dot, to_graphml
from .manager import FloodfillFeed, run_lockstep, run_live
from .model import SimClock
from .report import analyze
from .simnet import InvalidSpec, SimNetSpec, SimTransport, generate
from .store import Store, StoreError
from .transport import ProxyTransport

logger = logging.getLogger("eepcrawl")

EXIT_OK, EXIT_CONFIG, EXIT_STORE = 0, 1, 2


def _resolve(base: Path | None, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() or base is None else base / p


def cmd_run(args) -> int:
    config = load_config(args.config)
    config = config.with_overrides(instance_id=args.instance_id, instances=args.instances,
                                   horizon_days=args.horizon_days)
    base = Path(args.config).parent if args.config else None
    store_path = _resolve(base, config.store)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        store_path = Path(args.out) / store_path.name
    seeds = load_seeds(_resolve(base, config.initial_seeds))
    store = Store(store_path)

    if config.transport == "simnet":
        if not config.simnet_spec:
            raise ConfigError("transport 'simnet' needs simnet_spec")
        spec = SimNetSpec.load(_resolve(base, config.simnet_spec))
        if args.seed is not None:
            spec = SimNetSpec.from_dict({**spec.to_dict(), "seed": args.seed})
        net = generate(spec)
        clock = SimClock(config.epoch)
        transport = SimTransport(net, clock, epoch=config.epoch)
        feed = FloodfillFeed.from_simnet(net, epoch=config.epoch)
        only = None if args.instance_id is None else [config.instance_id]
        summary = run_lockstep(config, store, transport, clock, seeds, feed, instance_ids=only)
    else:
        feed = (FloodfillFeed.from_host_list(_resolve(base, config.floodfill_hosts))
                if config.floodfill_hosts else None)
        transport = ProxyTransport(config.proxy_host, config.proxy_port)
        summary = run_live(config, store, transport, seeds, feed)

    print(summary.describe())
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.spec:
        spec = SimNetSpec.load(args.spec)
    elif args.preset == "paper":
        spec = SimNetSpec.paper_shape(args.n_sites, seed=args.seed or 0)
    else:
        spec = SimNetSpec(seed=args.seed or 0, n_sites=args.n_sites, topology="random",
                          pages="uniform")
    if args.availability:
        spec = SimNetSpec.from_dict({**spec.to_dict(), "availability": args.availability,
                                     "p": args.p, "mean_offline": args.mean_offline})
    net = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec.save(out / "simnet.json")
    net.write_ground_truth(out / "ground_truth.json")
    (out / "seeds.txt").write_text(net.seeds_text(), encoding="utf-8")
    CrawlConfig(transport="simnet", simnet_spec="simnet.json", initial_seeds="seeds.txt",
                store="eepcrawl.db").save(out / "eepcrawl.toml")
    print(f"{len(net)} sites, {len(net.edges)} edges, {len(net.seeds)} seeds, "
          f"{len(net.announced)} announced -> {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    paths = analyze(args.store, args.out)
    print(f"wrote {len(paths)} files to {args.out}")
    return EXIT_OK


def cmd_export_graph(args) -> int:
    if not Path(args.store).exists():
        raise StoreError(f"MISSING_STORE: {args.store}")
    with Store(args.store, create=False).session("export") as s:
        graph = build_graph(s.results(), s.records())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("graphml", "both"):
        (out / "graph.graphml").write_text(to_graphml(graph), encoding="utf-8")
    if args.format in ("dot", "both"):
        (out / "graph.dot").write_text(to_dot(graph), encoding="utf-8")
    print(f"{len(graph)} nodes, {graph.edge_count()} edges -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eepcrawl", description="Distributed eepsite crawler.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="crawl from the configured seeds")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--instance-id", type=int, help="drive only this instance")
    p.add_argument("--instances", type=int, help="number of crawler instances")
    p.add_argument("--horizon-days", type=float, help="stop after this many (simulated) days")
    p.add_argument("--out", help="directory for the store file")
    p.add_argument("--seed", type=int, help="override the simulated network's RNG seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="generate a simulated network and a matching config")
    p.add_argument("--spec", help="existing network spec (JSON) to materialize")
    p.add_argument("--preset", choices=("paper", "random"), default="paper")
    p.add_argument("--n-sites", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--availability", choices=("always_on", "bernoulli", "churn"))
    p.add_argument("--p", type=float, default=1.0, help="bernoulli availability")
    p.add_argument("--mean-offline", type=float, default=0.0, help="churn: mean offline seconds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="write the report bundle for a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export-graph", help="write the link graph as GraphML and/or DOT")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("graphml", "dot", "both"), default="both")
    p.set_defaults(func=cmd_export_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StoreError as exc:
        print(f"store error: {exc}", file=sys.stderr)
        return EXIT_STORE


if __name__ == "__main__":
    sys.exit(main())
