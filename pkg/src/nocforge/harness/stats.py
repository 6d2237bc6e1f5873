"""Latency and throughput statistics."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .golden import PacketRecord


class EmptyWindow(ValueError):
    pass


@dataclass(frozen=True)
class Stats:
    packets: int
    latency_mean: float
    latency_median: float
    latency_p99: float
    throughput: float | None = None  # accepted flits per endpoint per cycle
    link_utilization: Mapping[str, float] = field(default_factory=dict)


def percentile(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile of ``values`` (q in (0, 100])."""
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return ordered[rank - 1]


def compute_stats(
    records: Sequence[PacketRecord],
    cycles: int | None = None,
    endpoints: int = 16,
    accepted_flits: int | None = None,
    link_flits: Mapping[str, int] | None = None,
) -> Stats:
    if not records:
        raise EmptyWindow("no packets in the measurement window")
    lat = [r.latency for r in records]
    throughput = None
    util = {}
    if cycles:
        flits = sum(r.length for r in records) if accepted_flits is None else accepted_flits
        throughput = flits / (endpoints * cycles)
        util = {k: v / cycles for k, v in (link_flits or {}).items()}
    return Stats(
        packets=len(lat),
        latency_mean=statistics.fmean(lat),
        latency_median=float(statistics.median(lat)),
        latency_p99=float(percentile(lat, 99)),
        throughput=throughput,
        link_utilization=util,
    )
