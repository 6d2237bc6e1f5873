"""Synthetic traffic generation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from ..router import Flit
from .rng import XorShift64Star

PATTERNS = ("uniform-random", "neighbor", "fixed-permutation", "single-flow")

# stream key reserved for the fixed permutation
_PERM_KEY = 0xFFFF_FFFF_FFFF_FFFF


@dataclass(frozen=True)
class TrafficSpec:
    pattern: str = "uniform-random"
    rate: float = 0.1  # offered flits per endpoint per cycle
    packet_len: int = 4
    seed: int = 1
    warmup: int = 1000
    measure: int = 10000
    drain: int = 10000
    flow_src: int = 0
    flow_dst: int = 15

    def validate(self) -> "TrafficSpec":
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown traffic pattern {self.pattern!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must lie in [0, 1], got {self.rate}")
        if self.packet_len < 1:
            raise ValueError("packet_len must be at least 1")
        for name in ("warmup", "measure", "drain"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        return self


@dataclass(frozen=True)
class Packet:
    id: int
    src: int
    dst: int
    vc: int
    created: int
    payloads: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.payloads)

    def flits(self) -> tuple[Flit, ...]:
        last = len(self.payloads) - 1
        return tuple(Flit(self.vc, k == last, self.dst, p, (self.id, k)) for k, p in enumerate(self.payloads))


@lru_cache(maxsize=64)
def permutation(seed: int, n: int) -> tuple[int, ...]:
    """Seed-derived single-cycle permutation (Sattolo), so no endpoint maps to itself."""
    rng = XorShift64Star(seed, _PERM_KEY)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i)
        perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


def generate_injections(
    spec: TrafficSpec,
    cycle: int,
    num_endpoints: int = 16,
    num_vcs: int = 2,
    width: int = 32,
    ready: Sequence[bool] | None = None,
) -> list[Packet | None]:
    """New packets for ``cycle``, one slot per endpoint.

    Each (seed, cycle, endpoint) has its own random stream, so the result
    depends only on its arguments. An endpoint whose ``ready`` flag is false
    generates nothing that cycle: a backed-up source is throttled rather than
    made to drop packets.
    """
    out: list[Packet | None] = [None] * num_endpoints
    if spec.rate <= 0.0:
        return out
    p_packet = spec.rate / spec.packet_len
    mask = (1 << width) - 1
    pattern = spec.pattern
    for src in range(num_endpoints):
        if ready is not None and not ready[src]:
            continue
        if pattern == "single-flow" and src != spec.flow_src:
            continue
        rng = XorShift64Star(spec.seed, cycle * num_endpoints + src)
        if not rng.chance(p_packet):
            continue
        if pattern == "uniform-random":
            dst = rng.below(num_endpoints - 1)
            if dst >= src:
                dst += 1
        elif pattern == "neighbor":
            dst = (src + 1) % num_endpoints
        elif pattern == "fixed-permutation":
            dst = permutation(spec.seed, num_endpoints)[src]
        else:
            dst = spec.flow_dst
        vc = rng.below(num_vcs)
        payloads = tuple(rng.next() & mask for _ in range(spec.packet_len))
        out[src] = Packet(cycle * num_endpoints + src, src, dst, vc, cycle, payloads)
    return out
