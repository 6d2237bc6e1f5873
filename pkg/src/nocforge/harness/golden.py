"""Delivery checking against the injected packet trace."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .traffic import Packet


@dataclass(frozen=True)
class PacketRecord:
    id: int
    src: int
    dst: int
    vc: int
    inject: int
    deliver: int
    length: int
    # payloads in arrival order, as seen by the receiving endpoint
    payloads: tuple[int, ...] = ()
    # endpoint the packet actually arrived at
    delivered_to: int | None = None

    @property
    def latency(self) -> int:
        return self.deliver - self.inject


@dataclass
class Verdict:
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed


def golden_check(records: Iterable[PacketRecord], injected: Iterable[Packet], limit: int = 50) -> Verdict:
    """Every injected packet delivered once, intact, to its destination, and
    in injection order within each (src, dst, vc) flow."""
    verdict = Verdict()
    bad = verdict.violations
    sent = {p.id: p for p in injected}
    seen: set[int] = set()
    flows: dict[tuple[int, int, int], list[PacketRecord]] = {}
    for r in records:
        p = sent.get(r.id)
        if p is None:
            bad.append(f"packet {r.id}: delivered but never injected")
            continue
        if r.id in seen:
            bad.append(f"packet {r.id}: delivered more than once")
            continue
        seen.add(r.id)
        where = r.dst if r.delivered_to is None else r.delivered_to
        if where != p.dst:
            bad.append(f"packet {r.id}: delivered to {where}, addressed to {p.dst}")
        if r.payloads != p.payloads:
            bad.append(f"packet {r.id}: payload mismatch")
        flows.setdefault((p.src, p.dst, p.vc), []).append(r)
    for pid in sorted(set(sent) - seen):
        bad.append(f"packet {pid}: never delivered")
    for key in sorted(flows):
        got = [r.id for r in sorted(flows[key], key=lambda r: r.deliver)]
        want = sorted(got, key=lambda i: (sent[i].created, i))
        if got != want:
            bad.append(f"flow {key}: delivery order {got[:8]} differs from injection order {want[:8]}")
    if len(bad) > limit:
        del bad[limit:]
        bad.append("... further violations suppressed")
    return verdict
