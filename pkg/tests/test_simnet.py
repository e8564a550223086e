import json
import math
from collections import Counter

import pytest

from conftest import TABLE6_COUNTS, TABLE6_PCTS
from eepcrawl.model import SimClock
from eepcrawl.simnet import (PRESET_CLASS_SHARES, InvalidSpec, Presence, SimNetSpec, SimTransport,
                             churn_state, generate)
from eepcrawl.spider import crawl_site
from eepcrawl.transport import FetchFault


def test_single_edge_net():
    net = generate(SimNetSpec(seed=0, n_sites=2, topology="explicit", edges=[[0, 1]], seeds=[0]))
    res = crawl_site(net.site_id(0), SimTransport(net, SimClock(0.0)))
    assert {v.host for v in res.out_links} == {net.hosts[1]}
    assert net.edges == [(0, 1)]


def test_same_spec_same_ground_truth(tmp_path):
    spec = SimNetSpec.paper_shape(300, seed=4)
    a, b = generate(spec), generate(SimNetSpec.from_dict(json.loads(spec.dumps())))
    a.write_ground_truth(tmp_path / "a.json")
    b.write_ground_truth(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert generate(SimNetSpec.paper_shape(300, seed=5)).hosts != a.hosts


def test_ground_truth_format():
    net = generate(SimNetSpec(seed=3, n_sites=20, availability="churn", mean_offline=100.0))
    gt = json.loads(net.ground_truth_json())
    assert gt["spec_version"] == 1
    assert len(gt["sites"]) == len(gt["availability"]) == len(gt["languages"]) == 20
    assert [tuple(e) for e in gt["edges"]] == net.edges
    assert all(0 <= u < 20 and 0 <= v < 20 and u != v for u, v in net.edges)


def test_spec_file_roundtrip(tmp_path):
    spec = SimNetSpec(seed=8, n_sites=10, topology="explicit", edges=[[0, 1], [2, 3]],
                      availability="bernoulli", p=[0.5] * 10, languages={"en": 0.5, "fr": 0.5})
    spec.save(tmp_path / "s.json")
    assert SimNetSpec.load(tmp_path / "s.json") == spec


@pytest.mark.parametrize("bad", [
    dict(n_sites=0),
    dict(n_sites=3, topology="explicit", edges=[[0, 3]]),
    dict(availability="bernoulli", p=1.5),
    dict(availability="bernoulli", p=[0.5, 0.5]),
    dict(topology="mesh"),
    dict(mean_offline=-1.0, availability="churn"),
])
def test_invalid_specs(bad):
    with pytest.raises(InvalidSpec):
        generate(SimNetSpec(**{"n_sites": 10, **bad}))


def test_unknown_spec_fields_rejected():
    with pytest.raises(InvalidSpec):
        SimNetSpec.from_dict({"spec_version": 1, "n_sites": 5, "bogus": 1})


def test_paper_shape_is_exact_by_construction():
    net = generate(SimNetSpec.paper_shape(1000, seed=3))
    counts = Counter(net.node_class(i) for i in range(len(net)))
    want = dict(zip(("SOURCE", "SINK", "CONNECTED", "ISOLATED"), PRESET_CLASS_SHARES))
    for cls, share in want.items():
        assert counts[cls] == round(share * 1000)
    assert net.out_degree[net.directory] == max(net.out_degree)
    # planted at 385 per 1000 sites, capped at 80% of the sinks plus connected sites
    assert net.out_degree[net.directory] == min(385, int(0.8 * (120 + 120)))
    assert sum(p <= 30 for p in net.pages) == 800


def test_isolated_sites_are_seeded_or_announced_never_linked():
    net = generate(SimNetSpec.paper_shape(500, seed=1))
    entry = set(net.seeds) | set(net.announced)
    for i in range(len(net)):
        if net.node_class(i) == "ISOLATED":
            assert i in entry and net.in_degree[i] == 0


def test_every_site_reachable_from_entry_points():
    net = generate(SimNetSpec(seed=2, n_sites=150, mean_out_degree=1.2))
    adj = {}
    for u, v in net.edges:
        adj.setdefault(u, []).append(v)
    seen, todo = set(net.seeds) | set(net.announced), list(set(net.seeds) | set(net.announced))
    while todo:
        for v in adj.get(todo.pop(), []):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    assert seen == set(range(150))


def test_churn_edge_cases():
    always_on = SimNetSpec(n_sites=3, availability="churn", mean_online=10.0, mean_offline=0.0)
    always_off = SimNetSpec(n_sites=3, availability="churn", mean_online=0.0, mean_offline=10.0)
    for t in (0.0, 5.0, 1e6):
        assert churn_state(1, t, always_on) is Presence.ONLINE
        assert churn_state(1, t, always_off) is Presence.OFFLINE


@pytest.mark.parametrize("mean_on, mean_off", [(3600.0, 3600.0), (7200.0, 21600.0), (86400.0, 3600.0)])
def test_churn_long_run_online_fraction(mean_on, mean_off):
    # Monte Carlo over sites and a fine time grid on [0, 1e6]
    spec = SimNetSpec(seed=17, n_sites=200, availability="churn", mean_online=mean_on,
                      mean_offline=mean_off)
    grid = [k * 500.0 for k in range(2001)]
    online = sum(churn_state(i, t, spec) is Presence.ONLINE for i in range(200) for t in grid)
    frac = online / (200 * len(grid))
    assert frac == pytest.approx(mean_on / (mean_on + mean_off), abs=0.02)


def test_churn_deterministic_and_alternating():
    spec = SimNetSpec(seed=5, n_sites=2, availability="churn", mean_online=100.0, mean_offline=100.0)
    a = [churn_state(0, t, spec) for t in range(0, 5000, 7)]
    assert a == [churn_state(0, t, spec) for t in range(0, 5000, 7)]
    assert len(set(a)) == 2


def test_bernoulli_availability_rate():
    net = generate(SimNetSpec(seed=6, n_sites=400, availability="bernoulli", p=0.3))
    up = sum(net.is_online(i, k * 3600.0) for i in range(400) for k in range(50))
    assert up / 20000 == pytest.approx(0.3, abs=0.015)
    # constant within a slot
    assert all(net.is_online(i, 10.0) == net.is_online(i, 3599.0) for i in range(400))


def test_transport_faults_and_404():
    net = generate(SimNetSpec(seed=1, n_sites=2, availability="bernoulli", p=[1.0, 0.0],
                              topology="explicit"))
    t = SimTransport(net, SimClock(0.0))
    assert t.fetch(net.site_id(0), "/nope").status == 404
    with pytest.raises(FetchFault):
        t.fetch(net.site_id(1), "/")


def test_languages_follow_largest_remainder():
    net = generate(SimNetSpec(seed=1, n_sites=813, languages=TABLE6_PCTS))
    assert Counter(net.languages) == TABLE6_COUNTS


def test_announcement_schedule():
    net = generate(SimNetSpec(seed=1, n_sites=100, announce_spread_days=10))
    assert all(0 <= net.announce_at[i] <= 10 * 86400 for i in net.announced)
    assert len(net.announced_until(math.inf)) == len(net.announced)
    assert net.announced_until(-1) == []
    first = net.next_announcement_after(-1)
    assert first == min(net.announce_at.values())
