"""Build, simulate, check and report one experiment."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..kernel import Simulator
from ..topology import Topology, build_topology
from .config import ExperimentConfig, load_config
from .golden import PacketRecord, Verdict, golden_check
from .stats import EmptyWindow, Stats, compute_stats
from .traffic import Packet, generate_injections

log = logging.getLogger(__name__)

TRACE_HEADER = "cycle,router,port,dir,vc,dst,tail,payload_hex"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[PacketRecord]
    injected: list[Packet]
    verdict: Verdict
    stats: Stats | None
    cycles: int
    drain_cycles: int
    report: list[tuple[str, str]]
    trace: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    def report_csv(self) -> str:
        return "metric,value\n" + "".join(f"{k},{v}\n" for k, v in self.report)


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


class _Collector:
    """Reassembles ejected flits into packet records."""

    def __init__(self, injected: dict[int, Packet]):
        self.injected = injected
        self.partial: dict[int, list[int]] = {}
        self.records: list[PacketRecord] = []
        self.order_errors: list[str] = []
        self.flits = 0

    def eject(self, endpoint: int, flit, cycle: int) -> None:
        self.flits += 1
        pid, k = flit.tag
        got = self.partial.setdefault(pid, [])
        if k != len(got):
            self.order_errors.append(f"packet {pid}: flit {k} arrived in position {len(got)}")
        got.append(flit.payload)
        if flit.is_tail:
            del self.partial[pid]
            p = self.injected[pid]
            self.records.append(
                PacketRecord(pid, p.src, p.dst, p.vc, p.created, cycle, len(got), tuple(got), endpoint)
            )


def _trace_slots(sim: Simulator, topo: Topology):
    slots = []
    for name, n in zip(topo.router_names, topo.graph.num_ports):
        for p in range(n):
            slots.append((name, p, "in", sim.slot_of(f"{name}.in{p}")))
            slots.append((name, p, "out", sim.slot_of(f"{name}.out{p}")))
    return slots


def simulate(cfg: ExperimentConfig) -> ExperimentResult:
    topo = build_topology(cfg.topology_spec())
    traffic = cfg.traffic().validate()
    sim = Simulator(topo.netlist)
    n_ep = len(topo.endpoint_names)
    endpoints = [topo.netlist.state(name) for name in topo.endpoint_names]
    routers = [topo.netlist.state(name) for name in topo.router_names]
    inject_keys = [f"inject{e}" for e in range(n_ep)]
    eject_keys = [f"eject{e}" for e in range(n_ep)]
    gen_end = traffic.warmup + traffic.measure
    horizon = gen_end + traffic.drain
    injected: dict[int, Packet] = {}
    collector = _Collector(injected)
    trace_slots = _trace_slots(sim, topo) if cfg.trace else None
    hexw = (cfg.flit_width + 3) // 4
    trace: list[str] = []
    sent_at_start = None
    measured_flits = 0
    idle_inputs = dict.fromkeys(inject_keys)

    cycle = 0
    last_delivery = None
    while cycle < horizon:
        if cycle == traffic.warmup:
            sent_at_start = [list(r.sent) for r in routers]
        if cycle < gen_end:
            ready = [ep.can_accept() for ep in endpoints]
            inputs = {}
            for e, pkt in enumerate(
                generate_injections(traffic, cycle, n_ep, topo.injection_vcs, cfg.flit_width, ready)
            ):
                if pkt is None:
                    inputs[inject_keys[e]] = None
                else:
                    injected[pkt.id] = pkt
                    inputs[inject_keys[e]] = pkt.flits()
        else:
            inputs = idle_inputs
        out = sim.step(inputs)
        for e in range(n_ep):
            f = out[eject_keys[e]]
            if f is not None:
                collector.eject(e, f, cycle)
                last_delivery = cycle
                if traffic.warmup <= cycle < gen_end:
                    measured_flits += 1
        if trace_slots is not None:
            vals = sim.values
            for name, p, d, s in trace_slots:
                f = vals[s]
                if f is not None:
                    trace.append(f"{cycle},{name},{p},{d},{f.vc},{f.dst},{int(f.is_tail)},{f.payload:0{hexw}x}")
        cycle += 1
        if cycle == gen_end:
            sent_at_end = [list(r.sent) for r in routers]
        if cycle >= gen_end and len(collector.records) == len(injected) and not collector.partial:
            break
    if sent_at_start is None:
        sent_at_start = [list(r.sent) for r in routers]
    if cycle < gen_end:
        sent_at_end = [list(r.sent) for r in routers]
    drain_cycles = 0 if last_delivery is None else max(0, last_delivery + 1 - gen_end)

    verdict = golden_check(collector.records, injected.values())
    verdict.violations.extend(collector.order_errors)

    link_flits = {}
    for r, name in enumerate(topo.router_names):
        for p in range(topo.graph.num_ports[r]):
            if (r, p) in topo.graph.links:
                link_flits[f"{name}.out{p}"] = sent_at_end[r][p] - sent_at_start[r][p]
    window = [rec for rec in collector.records if traffic.warmup <= rec.inject < gen_end]
    try:
        stats = compute_stats(window, traffic.measure, n_ep, measured_flits, link_flits)
    except EmptyWindow:
        stats = None

    report = [
        ("topology", cfg.topology),
        ("pattern", cfg.pattern),
        ("rate", _fmt(float(cfg.rate))),
        ("seed", str(cfg.seed)),
        ("cycles", str(cycle)),
        ("packets_injected", str(len(injected))),
        ("packets_delivered", str(len(collector.records))),
        ("flits_delivered", str(collector.flits)),
        ("drain_cycles", str(drain_cycles)),
        ("golden_check", "pass" if verdict.passed else "fail"),
        ("violations", str(len(verdict.violations))),
        ("measured_packets", str(0 if stats is None else stats.packets)),
        ("latency_mean", _fmt(stats and stats.latency_mean)),
        ("latency_median", _fmt(stats and stats.latency_median)),
        ("latency_p99", _fmt(stats and stats.latency_p99)),
        ("throughput", _fmt(stats and stats.throughput)),
    ]
    if stats is not None:
        report += [(f"link_util.{k}", _fmt(v)) for k, v in stats.link_utilization.items()]
    return ExperimentResult(
        cfg, collector.records, list(injected.values()), verdict, stats, cycle, drain_cycles, report,
        trace,
    )


def run_packets(topo: Topology, packets: Iterable[Packet], max_cycles: int = 100_000) -> tuple[list[PacketRecord], Verdict]:
    """Inject hand-chosen packets into ``topo`` and run until all arrive.

    A packet enters its source at its ``created`` cycle, or later if the
    source queue is full.
    """
    sim = Simulator(topo.netlist)
    n_ep = len(topo.endpoint_names)
    endpoints = [topo.netlist.state(name) for name in topo.endpoint_names]
    pending: list[deque[Packet]] = [deque() for _ in range(n_ep)]
    packets = sorted(packets, key=lambda p: (p.created, p.id))
    for p in packets:
        pending[p.src].append(p)
    injected = {p.id: p for p in packets}
    collector = _Collector(injected)
    for cycle in range(max_cycles):
        inputs = {}
        for e in range(n_ep):
            q = pending[e]
            if q and q[0].created <= cycle and endpoints[e].can_accept():
                inputs[f"inject{e}"] = q.popleft().flits()
            else:
                inputs[f"inject{e}"] = None
        out = sim.step(inputs)
        for e in range(n_ep):
            f = out[f"eject{e}"]
            if f is not None:
                collector.eject(e, f, cycle)
        if len(collector.records) == len(injected) and not any(pending):
            break
    verdict = golden_check(collector.records, packets)
    verdict.violations.extend(collector.order_errors)
    return collector.records, verdict


def run_experiment(path: str | Path, out_dir: str | Path | None = None) -> ExperimentResult:
    """Load a config, simulate it, and write ``<stem>.report.csv`` (plus
    ``<stem>.trace.csv`` when tracing) next to the config or into ``out_dir``."""
    path = Path(path)
    cfg = load_config(path)
    result = simulate(cfg)
    dest = Path(out_dir) if out_dir is not None else path.parent
    dest.mkdir(parents=True, exist_ok=True)
    (dest / f"{path.stem}.report.csv").write_text(result.report_csv())
    if cfg.trace:
        (dest / f"{path.stem}.trace.csv").write_text(TRACE_HEADER + "\n" + "".join(t + "\n" for t in result.trace))
    for v in result.verdict.violations[:10]:
        log.warning("%s: %s", path.name, v)
    return result
