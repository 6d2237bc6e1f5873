import functools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from nocforge.router import RouterConfig
from nocforge.topology import KINDS, TopologySpec, build_from_graph, build_topology, load_edge_list, route_path
from nocforge.harness import (
    ConfigError,
    EmptyWindow,
    ExperimentConfig,
    Packet,
    PacketRecord,
    TrafficSpec,
    XorShift64Star,
    compute_stats,
    generate_injections,
    golden_check,
    parse_config,
    percentile,
    permutation,
    run_experiment,
    run_packets,
    simulate,
    splitmix64,
)

M = (1 << 64) - 1


# ---- random source ---------------------------------------------------------


def test_splitmix64_reference_values():
    # first outputs of the reference splitmix64 generator seeded with 0
    state, outs = 0, []
    for _ in range(3):
        outs.append(splitmix64(state))
        state = (state + 0x9E3779B97F4A7C15) & M
    assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def xorshift_star_oracle(state, n):
    out = []
    for _ in range(n):
        state ^= state >> 12
        state ^= (state << 25) & M
        state ^= state >> 27
        out.append((state * 2685821657736338717) % (1 << 64))
    return out


def test_xorshift_matches_written_recurrence():
    rng = XorShift64Star(42, 7)
    start = rng.state
    assert [rng.next() for _ in range(100)] == xorshift_star_oracle(start, 100)


def test_keyed_streams_differ():
    a = [XorShift64Star(1, k).next() for k in range(50)]
    assert len(set(a)) == 50


def test_chance_extremes():
    rng = XorShift64Star(3)
    assert not any(rng.chance(0.0) for _ in range(1000))
    assert all(rng.chance(1.0) for _ in range(1000))


# ---- traffic ---------------------------------------------------------------


def test_rate_zero_injects_nothing():
    spec = TrafficSpec(rate=0.0)
    assert all(p is None for c in range(500) for p in generate_injections(spec, c))


def test_injections_are_deterministic():
    spec = TrafficSpec(rate=0.3, seed=9)
    a = [generate_injections(spec, c) for c in range(300)]
    b = [generate_injections(spec, c) for c in range(300)]
    assert a == b
    other = [generate_injections(TrafficSpec(rate=0.3, seed=10), c) for c in range(300)]
    assert a != other


@functools.lru_cache(maxsize=None)
def flits_per_endpoint(seed, cycles=100_000):
    spec = TrafficSpec(rate=0.1, seed=seed)
    flits = [0] * 16
    for c in range(cycles):
        for p in generate_injections(spec, c):
            if p is not None:
                flits[p.src] += p.length
                assert p.dst != p.src
    return tuple(flits)


def test_uniform_rate_per_endpoint_fixed_seed():
    # Packets arrive as Bernoulli trials, so one endpoint's flit count has a
    # standard deviation of about 2% here and +-5% is only ~2.5 sigma. Across
    # 16 endpoints an unbiased stream misses it about one seed in five (seed 1
    # does, by 0.1%); this check pins seed 2 and the seed-independent test
    # below carries the statistical claim.
    for f in flits_per_endpoint(2):
        assert abs(f - 10_000) <= 0.05 * 10_000


def test_uniform_rate_is_unbiased():
    sigma = 4 * math.sqrt(2500 * (1 - 0.025))  # flits: 4 per packet, p = 0.025 per cycle
    for seed in (1, 2, 3):
        flits = flits_per_endpoint(seed)
        assert abs(sum(flits) / 16 - 10_000) <= 3 * sigma / 4  # mean of 16 endpoints
        assert all(abs(f - 10_000) <= 4 * sigma for f in flits)


def test_not_ready_endpoint_is_skipped():
    spec = TrafficSpec(rate=1.0, packet_len=1)
    ready = [e % 2 == 0 for e in range(16)]
    out = generate_injections(spec, 0, ready=ready)
    assert all((p is None) == (not ready[e]) for e, p in enumerate(out))


def test_patterns():
    n = 16
    for c in range(50):
        for p in generate_injections(TrafficSpec("neighbor", 1.0, 1), c):
            assert p.dst == (p.src + 1) % n
        perm = permutation(1, n)
        for p in generate_injections(TrafficSpec("fixed-permutation", 1.0, 1), c):
            assert p.dst == perm[p.src]
        flows = [p for p in generate_injections(TrafficSpec("single-flow", 1.0, 1, flow_src=3, flow_dst=9), c) if p]
        assert [(p.src, p.dst) for p in flows] == [(3, 9)]


@pytest.mark.parametrize("seed", range(20))
def test_permutation_has_no_fixed_points(seed):
    perm = permutation(seed, 16)
    assert sorted(perm) == list(range(16))
    assert all(perm[i] != i for i in range(16))


def test_packet_flits_and_fields():
    spec = TrafficSpec(rate=1.0, packet_len=3)
    c, e, p = next((c, e, p) for c in range(100) for e, p in enumerate(generate_injections(spec, c, num_vcs=1, width=8)) if p)
    assert p.id == c * 16 + e and p.src == e and p.created == c and p.vc == 0
    fl = p.flits()
    assert [f.is_tail for f in fl] == [False, False, True]
    assert all(f.payload < 256 and f.dst == p.dst for f in fl)


@pytest.mark.parametrize("bad", [dict(rate=1.5), dict(rate=-0.1), dict(packet_len=0), dict(pattern="hotspot"), dict(drain=-1)])
def test_traffic_validation(bad):
    with pytest.raises(ValueError):
        TrafficSpec(**bad).validate()


# ---- golden check ----------------------------------------------------------


def record_for(p, deliver, **kw):
    return PacketRecord(p.id, p.src, p.dst, p.vc, p.created, deliver, p.length, kw.pop("payloads", p.payloads), kw.pop("to", p.dst))


def packets(n, src=0, dst=1, vc=0):
    return [Packet(k, src, dst, vc, k, (k, k + 1)) for k in range(n)]


def test_empty_trace_passes():
    assert golden_check([], []).passed


def test_violations_are_reported():
    ps = packets(4)
    recs = [record_for(ps[0], 10), record_for(ps[1], 9), record_for(ps[2], 12, payloads=(0, 0)), record_for(ps[2], 13)]
    recs.append(record_for(Packet(99, 0, 1, 0, 0, ()), 5))
    recs.append(PacketRecord(ps[3].id, 0, 1, 0, 3, 20, 2, ps[3].payloads, delivered_to=5))
    text = "\n".join(golden_check(recs, ps).violations)
    for needle in ("payload mismatch", "more than once", "never injected", "delivered to 5", "delivery order"):
        assert needle in text


def test_missing_packet():
    ps = packets(2)
    v = golden_check([record_for(ps[0], 5)], ps)
    assert not v.passed and v.violations == ["packet 1: never delivered"]


def test_violation_list_is_capped():
    ps = packets(100)
    v = golden_check([], ps, limit=10)
    assert len(v.violations) == 11


def line_topology():
    g = load_edge_list("routers 2\nlink 0 1\nendpoint 0 0\nendpoint 1 1\n")
    return build_from_graph(g, RouterConfig())


def test_two_router_line_hand_trace():
    topo = line_topology()
    # created cycle -> expected latency; each flit crosses 2 routers at 2 cycles each,
    # and a packet of L flits has its tail arrive L cycles after its creation offset
    ps = [
        Packet(1, 0, 1, 0, 0, (1, 2, 3, 4)),  # 2 routers, 4 flits: 2*2 + 4
        Packet(2, 1, 0, 1, 20, (5, 6)),  # 2 routers, 2 flits: 2*2 + 2
        Packet(3, 0, 1, 0, 40, (7,)),  # 2 routers, 1 flit: 2*2 + 1
    ]
    records, verdict = run_packets(topo, ps)
    assert verdict.passed
    assert {r.id: r.latency for r in records} == {1: 8, 2: 6, 3: 5}


def test_corrupted_record_fails_integrity():
    topo = line_topology()
    ps = [Packet(1, 0, 1, 0, 0, (1, 2))]
    records, _ = run_packets(topo, ps)
    bad = [PacketRecord(**{**r.__dict__, "payloads": (1, 3)}) for r in records]
    assert "payload mismatch" in golden_check(bad, ps).violations[0]


@pytest.mark.parametrize("kind", KINDS)
def test_zero_load_latency_per_topology(kind):
    topo = build_topology(TopologySpec(kind))
    rng = random.Random(kind)
    pairs = [(rng.randrange(16), rng.randrange(16)) for _ in range(12)]
    ps = [Packet(k, s, d, 0, 60 * k, tuple(range(4))) for k, (s, d) in enumerate(pairs)]
    records, verdict = run_packets(topo, ps)
    assert verdict.passed
    for r in records:
        hops = len(route_path(topo, r.src, r.dst))
        assert r.latency == 2 * hops + 4


# ---- statistics ------------------------------------------------------------


def rec(latency, length=4, k=0):
    return PacketRecord(k, 0, 1, 0, 100, 100 + latency, length)


def test_single_packet_stats():
    s = compute_stats([rec(7)])
    assert (s.latency_mean, s.latency_median, s.latency_p99) == (7, 7, 7)


def test_two_packet_mean():
    assert compute_stats([rec(4), rec(10)]).latency_mean == 7


def test_empty_window():
    with pytest.raises(EmptyWindow):
        compute_stats([])


def test_nearest_rank_percentile():
    assert percentile(list(range(1, 101)), 99) == 99
    assert percentile([5], 99) == 5
    assert percentile([1, 2], 50) == 1


def test_throughput_and_link_utilisation():
    s = compute_stats([rec(5, 4), rec(6, 4)], cycles=10, endpoints=2, link_flits={"r0.out1": 5})
    assert s.throughput == 8 / 20
    assert s.link_utilization == {"r0.out1": 0.5}


@settings(max_examples=100)
@given(st.lists(st.integers(1, 500), min_size=1, max_size=40), st.lists(st.integers(1, 500), min_size=1, max_size=40))
def test_concatenated_windows_equal_union(a, b):
    ra, rb = [rec(x) for x in a], [rec(x) for x in b]
    whole = compute_stats(ra + rb)
    union = sorted(a + b)
    assert whole.packets == len(union)
    assert whole.latency_mean == pytest.approx(sum(union) / len(union))
    assert whole.latency_mean == pytest.approx(
        (compute_stats(ra).latency_mean * len(a) + compute_stats(rb).latency_mean * len(b)) / len(union)
    )
    assert whole == compute_stats(rb + ra)
    mid = len(union) // 2
    assert whole.latency_median == (union[mid] if len(union) % 2 else (union[mid - 1] + union[mid]) / 2)


# ---- configuration ---------------------------------------------------------


def test_parse_config():
    cfg = parse_config("# comment\ntopology = torus\nrate = 0.2  # offered load\nseed=7\ntrace = yes\n\n")
    assert (cfg.topology, cfg.rate, cfg.seed, cfg.trace) == ("Torus", 0.2, 7, True)
    assert cfg.vcs == 2 and cfg.buffer_depth == 8 and cfg.flit_width == 32


def test_config_round_trip():
    cfg = ExperimentConfig(topology="FatTree", rate=0.5, trace=True, payload_buffer="separate")
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "text,key",
    [
        ("topology = Hypercube", "topology"),
        ("colour = red", "colour"),
        ("seed = 1\nseed = 2", "seed"),
        ("rate = fast", "rate"),
        ("rate = 2", "rate"),
        ("vcs = 0", "vcs"),
        ("trace = maybe", "trace"),
        ("pattern = hotspot", "pattern"),
        ("topology = Ring\nvcs = 1", "vcs"),
        ("flow_dst = 16", "flow_dst"),
        ("payload_buffer = fancy", "payload_buffer"),
    ],
)
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key and key in str(exc.value)


def test_config_line_without_equals():
    with pytest.raises(ConfigError):
        parse_config("topology Mesh")


# ---- experiments -----------------------------------------------------------


def small(**kw):
    base = dict(warmup=100, measure=1000, drain=2000)
    base.update(kw)
    return ExperimentConfig(**base)


def test_mesh_low_rate_run_writes_report(tmp_path):
    path = tmp_path / "mesh.cfg"
    path.write_text(small(rate=0.05).to_text())
    result = run_experiment(path)
    assert result.passed
    report = (tmp_path / "mesh.report.csv").read_text()
    assert report.startswith("metric,value\n") and "golden_check,pass" in report


def test_reports_are_byte_identical(tmp_path):
    text = small(topology="Torus", rate=0.3, seed=4).to_text()
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        (d / "t.cfg").write_text(text)
        run_experiment(d / "t.cfg")
        outs.append((d / "t.report.csv").read_bytes())
    assert outs[0] == outs[1]


def test_trace_file_format(tmp_path):
    path = tmp_path / "tr.cfg"
    path.write_text(small(rate=0.05, measure=200, trace=True).to_text())
    run_experiment(path, tmp_path / "out")
    lines = (tmp_path / "out" / "tr.trace.csv").read_text().splitlines()
    assert lines[0] == "cycle,router,port,dir,vc,dst,tail,payload_hex"
    cycle, router, port, direction, vc, dst, tail, payload = lines[1].split(",")
    assert router.startswith("r") and direction in ("in", "out") and tail in ("0", "1")
    assert len(payload) == 8 and int(payload, 16) >= 0


def test_single_flow_zero_load_latency():
    cfg = small(topology="Mesh", pattern="single-flow", rate=0.02, flow_src=0, flow_dst=15)
    result = simulate(cfg)
    topo = build_topology(cfg.topology_spec())
    hops = len(route_path(topo, 0, 15))
    assert result.passed and result.records
    assert min(r.latency for r in result.records) == 2 * hops + cfg.packet_len
    assert result.stats.latency_median == 2 * hops + cfg.packet_len


def test_saturated_run_drains_without_loss():
    result = simulate(small(topology="Ring", rate=1.0))
    assert result.passed
    assert result.stats.throughput < 1.0


def test_no_packets_gives_no_stats():
    result = simulate(small(rate=0.0))
    assert result.passed and result.stats is None
    assert dict(result.report)["latency_mean"] == "NA"
