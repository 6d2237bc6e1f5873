"""Virtual-channel router with credit-based flow control.

Datapath, two pipeline stages:

1. a flit arriving on an input port is looked up in the routing table and
   written into its (input, VC) buffer;
2. the separable input-first allocator matches buffer fronts that hold a
   downstream credit to free output ports; winners are dequeued into the
   per-output pipeline registers, and a credit for each dequeue is latched
   toward the upstream sender.

Outputs (flit registers and credit registers) depend only on state, so a
flit offered at cycle ``t`` leaves at cycle ``t + 2`` when uncontended.

Wire conventions: a flit wire carries a :class:`Flit` or ``None`` (idle);
a credit wire carries the returned VC index or ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple, Sequence

from .arbitration import allocate_inplace
from .kernel import ModuleDescriptor, QueryNode, UpdateNode
from .primitives import Fifo, PackedVcBuffer, SeparateVcBuffer

PIPELINE_LATENCY = 2


class RouterError(AssertionError):
    pass


class BufferOverflow(RouterError):
    pass


class CreditOverflow(RouterError):
    pass


class InvalidConfig(ValueError):
    pass


class UnknownDestination(LookupError):
    pass


class Flit(NamedTuple):
    vc: int
    is_tail: bool
    dst: int
    payload: int
    # simulation bookkeeping (packet id, flit index); not part of the hardware flit
    tag: Any = None


@dataclass(frozen=True)
class RouterConfig:
    num_in: int = 5
    num_out: int = 5
    num_vcs: int = 2
    buffer_depth: int = 8
    flit_data_width: int = 32
    payload_buffer: str = "packed"
    downstream_depth: int | None = None

    def validate(self) -> "RouterConfig":
        for name in ("num_in", "num_out", "num_vcs", "buffer_depth", "flit_data_width"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {value!r}")
        if self.payload_buffer not in ("packed", "separate"):
            raise InvalidConfig(f"payload_buffer must be 'packed' or 'separate', got {self.payload_buffer!r}")
        if self.downstream_depth is not None and self.downstream_depth < 1:
            raise InvalidConfig("downstream_depth must be positive")
        return self

    @property
    def credit_limit(self) -> int:
        return self.downstream_depth or self.buffer_depth


def route_lookup(table: Mapping[int, int], dst: int) -> int:
    try:
        return table[dst]
    except KeyError:
        raise UnknownDestination(f"no route for destination {dst}") from None


class Router:
    """Router state plus its query/update behaviour.

    ``vc_map[i][o][v]``, when given, is the VC a flit buffered on input ``i``
    VC ``v`` takes when forwarded to output ``o``; by default the VC is kept.
    """

    def __init__(self, config: RouterConfig, table: Mapping[int, int], vc_map=None):
        config.validate()
        self.config = config
        self.table = dict(table)
        for dst, port in self.table.items():
            if not 0 <= port < config.num_out:
                raise InvalidConfig(f"route for {dst} names output {port}; router has {config.num_out}")
        n_in, n_out, n_vc = config.num_in, config.num_out, config.num_vcs
        if vc_map is None:
            vc_map = [[list(range(n_vc)) for _ in range(n_out)] for _ in range(n_in)]
        self.vc_map = vc_map
        depth = config.buffer_depth
        self.route_bufs = [[Fifo(depth) for _ in range(n_vc)] for _ in range(n_in)]
        buf_cls = PackedVcBuffer if config.payload_buffer == "packed" else SeparateVcBuffer
        self.payload_bufs = [buf_cls(n_vc, depth) for _ in range(n_in)]
        self._limit = config.credit_limit
        self.credits = [[self._limit] * n_vc for _ in range(n_out)]
        self.in_ptrs = [0] * n_in
        self.out_ptrs = [0] * n_out
        self.out_regs: list[Flit | None] = [None] * n_out
        self.credit_regs: list[int | None] = [None] * n_in
        self.occupancy = 0
        self.sent = [0] * n_out
        self._outputs: tuple = tuple(self.out_regs) + tuple(self.credit_regs)

    def buffer_length(self, port: int, vc: int) -> int:
        return len(self.route_bufs[port][vc].entries)

    def buffered_flits(self, port: int, vc: int) -> list[Flit]:
        entries = self.route_bufs[port][vc].entries
        payloads = self.payload_bufs[port].contents(vc)
        return [Flit(e[1], e[3], e[2], p, e[4]) for e, p in zip(entries, payloads)]

    def query(self) -> tuple:
        """``out_flits + out_credits``; a pure function of the registers."""
        return self._outputs

    def update(self, in_flits: Sequence[Flit | None], in_credits: Sequence[int | None]) -> None:
        cfg = self.config
        credits = self.credits
        limit = self._limit
        for o, c in enumerate(in_credits):
            if c is not None:
                row = credits[o]
                row[c] += 1
                if row[c] > limit:
                    raise CreditOverflow(f"output {o} VC {c}: credit count exceeds {limit}")

        route_bufs = self.route_bufs
        depth = cfg.buffer_depth
        n_vc = cfg.num_vcs
        width = cfg.flit_data_width
        arrivals = []
        for i, f in enumerate(in_flits):
            if f is None:
                continue
            v = f.vc
            if not 0 <= v < n_vc:
                raise RouterError(f"input {i}: flit VC {v} outside [0, {n_vc})")
            if len(route_bufs[i][v].entries) >= depth:
                raise BufferOverflow(f"input {i} VC {v}: flit arrived at a full buffer")
            if f.payload >> width:
                raise RouterError(f"input {i}: payload wider than {width} bits")
            arrivals.append((i, f))

        out_regs = [None] * cfg.num_out
        credit_regs = [None] * cfg.num_in
        payload_bufs = self.payload_bufs
        touched = set()
        if self.occupancy:
            # request = looked-up output of each VC's front flit, if that VC holds a credit
            reqs = []
            for fifos in route_bufs:
                row = []
                for fifo in fifos:
                    q = fifo.entries
                    if q:
                        e = q[0]
                        row.append(e[0] if credits[e[0]][e[1]] > 0 else None)
                    else:
                        row.append(None)
                reqs.append(row)
            by_input, _ = allocate_inplace(reqs, self.in_ptrs, self.out_ptrs)
            sent = self.sent
            for i, g in enumerate(by_input):
                if g is None:
                    continue
                v, o = g
                e = route_bufs[i][v].entries.popleft()
                payload = payload_bufs[i].deq(v)
                touched.add(i)
                credits[o][e[1]] -= 1
                out_regs[o] = Flit(e[1], e[3], e[2], payload, e[4])
                credit_regs[i] = v
                sent[o] += 1
                self.occupancy -= 1

        table = self.table
        vc_map = self.vc_map
        for i, f in arrivals:
            try:
                o = table[f.dst]
            except KeyError:
                raise UnknownDestination(f"no route for destination {f.dst}") from None
            v = f.vc
            route_bufs[i][v].entries.append((o, vc_map[i][o][v], f.dst, f.is_tail, f.tag))
            payload_bufs[i].enq(v, f.payload)
            self.occupancy += 1
            touched.add(i)
        for i in touched:
            payload_bufs[i].tick()

        self.out_regs = out_regs
        self.credit_regs = credit_regs
        self._outputs = (*out_regs, *credit_regs)


def router_query(state: Router) -> tuple[list[Flit | None], list[int | None]]:
    n = state.config.num_out
    out = state.query()
    return list(out[:n]), list(out[n:])


def router_update(state: Router, in_flits: Sequence[Flit | None], in_credits: Sequence[int | None]) -> None:
    state.update(in_flits, in_credits)


def flit_ports(config: RouterConfig) -> tuple[list[str], list[str], list[str], list[str]]:
    """Port names: flit inputs, flit outputs, credit inputs (per output), credit outputs (per input)."""
    return (
        [f"in{i}" for i in range(config.num_in)],
        [f"out{o}" for o in range(config.num_out)],
        [f"cin{o}" for o in range(config.num_out)],
        [f"cout{i}" for i in range(config.num_in)],
    )


def make_router(config: RouterConfig, table: Mapping[int, int], name: str = "router", vc_map=None) -> ModuleDescriptor:
    config.validate()
    ins, outs, cins, couts = flit_ports(config)
    n_in = config.num_in

    def query(state):
        return state._outputs

    def update(state, *wires):
        state.update(wires[:n_in], wires[n_in:])

    return ModuleDescriptor(
        name=name,
        kind="router",
        queries=[QueryNode("q", (), tuple(outs + couts), query)],
        update=UpdateNode(tuple(ins + cins), update),
        make_state=lambda: Router(config, table, vc_map),
    )
