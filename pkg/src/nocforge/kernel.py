"""Clocked-module kernel.

A design is a :class:`Netlist` of module instances joined by wires. Every
module splits its behaviour into side-effect-free *query* nodes (output
logic) and exactly one *update* node (next-state logic). One call to
:func:`step` is one clock cycle: all query nodes run in dataflow order
against the pre-cycle state, then every update node runs once against the
settled wire values.

Port references are strings. ``"inst.port"`` names a port of an instance;
a bare ``"name"`` names an external input or output of the netlist.
"""

from __future__ import annotations

import heapq
import pickle
from operator import itemgetter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence


class KernelError(Exception):
    pass


class DuplicateName(KernelError):
    pass


class UnknownPort(KernelError):
    pass


class MultipleDrivers(KernelError):
    pass


class UndrivenPort(KernelError):
    pass


class CombinationalCycle(KernelError):
    def __init__(self, nodes: list[str]):
        self.nodes = nodes
        super().__init__("combinational cycle through " + " -> ".join(nodes))


class UncomputedRead(KernelError):
    """A query node was ordered before the node driving one of its inputs."""


class PurityViolation(KernelError):
    pass


@dataclass
class QueryNode:
    """Combinational output logic: ``fn(state, *reads) -> tuple of writes``."""

    name: str
    reads: tuple[str, ...]
    writes: tuple[str, ...]
    fn: Callable[..., Sequence[Any]]


@dataclass
class UpdateNode:
    """Next-state logic: ``fn(state, *reads)``; mutates ``state``, returns None."""

    reads: tuple[str, ...]
    fn: Callable[..., None]


def _no_update(state):
    return None


@dataclass
class ModuleDescriptor:
    name: str
    kind: str
    queries: list[QueryNode]
    update: UpdateNode = field(default_factory=lambda: UpdateNode((), _no_update))
    make_state: Callable[[], Any] = lambda: None

    def __post_init__(self):
        writes: set[str] = set()
        qnames: set[str] = set()
        for q in self.queries:
            if q.name in qnames:
                raise DuplicateName(f"{self.name}: query node {q.name!r} defined twice")
            qnames.add(q.name)
            for w in q.writes:
                if w in writes:
                    raise MultipleDrivers(f"{self.name}.{w} written by more than one query node")
                writes.add(w)
        clash = writes & self.input_ports
        if clash:
            raise KernelError(f"{self.name}: ports both read and written: {sorted(clash)}")
        for p in writes | self.input_ports:
            if "." in p or not p:
                raise KernelError(f"{self.name}: invalid port name {p!r}")

    @property
    def input_ports(self) -> set[str]:
        ports = set(self.update.reads)
        for q in self.queries:
            ports.update(q.reads)
        return ports

    @property
    def output_ports(self) -> set[str]:
        return {w for q in self.queries for w in q.writes}


@dataclass
class Instance:
    id: int
    desc: ModuleDescriptor
    state: Any

    @property
    def name(self) -> str:
        return self.desc.name


@dataclass
class Wire:
    id: int
    driver: str
    sink: str


class Netlist:
    def __init__(self):
        self.instances: list[Instance] = []
        self._by_name: dict[str, Instance] = {}
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.wires: list[Wire] = []
        self._sink_driver: dict[str, str] = {}

    def add_instance(self, desc: ModuleDescriptor) -> int:
        if desc.name in self._by_name or desc.name in self.inputs or desc.name in self.outputs:
            raise DuplicateName(desc.name)
        if "." in desc.name:
            raise KernelError(f"instance name may not contain '.': {desc.name!r}")
        inst = Instance(len(self.instances), desc, desc.make_state())
        self.instances.append(inst)
        self._by_name[desc.name] = inst
        return inst.id

    def add_input(self, name: str) -> None:
        self._check_external(name)
        self.inputs.append(name)

    def add_output(self, name: str) -> None:
        self._check_external(name)
        self.outputs.append(name)

    def _check_external(self, name: str) -> None:
        if "." in name or not name:
            raise KernelError(f"invalid external port name {name!r}")
        if name in self.inputs or name in self.outputs or name in self._by_name:
            raise DuplicateName(name)

    def instance(self, name: str) -> Instance:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownPort(f"no instance named {name!r}") from None

    def state(self, name: str) -> Any:
        return self.instance(name).state

    def _split(self, ref: str) -> tuple[Instance, str]:
        inst_name, _, port = ref.partition(".")
        return self.instance(inst_name), port

    def _is_driver(self, ref: str) -> bool:
        if "." not in ref:
            return ref in self.inputs
        inst, port = self._split(ref)
        return port in inst.desc.output_ports

    def _is_sink(self, ref: str) -> bool:
        if "." not in ref:
            return ref in self.outputs
        inst, port = self._split(ref)
        return port in inst.desc.input_ports

    def connect(self, driver: str, sink: str) -> int:
        if not self._is_driver(driver):
            raise UnknownPort(f"{driver!r} is not an instance output or external input")
        if not self._is_sink(sink):
            raise UnknownPort(f"{sink!r} is not an instance input or external output")
        if sink in self._sink_driver:
            raise MultipleDrivers(f"{sink} already driven by {self._sink_driver[sink]}")
        wire = Wire(len(self.wires), driver, sink)
        self.wires.append(wire)
        self._sink_driver[sink] = driver
        return wire.id

    def driver_of(self, sink: str) -> str | None:
        return self._sink_driver.get(sink)

    def dump(self) -> str:
        lines = [f"inst {i.name} {i.desc.kind}" for i in self.instances]
        lines += [f"wire {w.driver} -> {w.sink}" for w in self.wires]
        return "\n".join(lines) + "\n"

    def query_graph(self) -> tuple[list[tuple[int, int]], dict[tuple[int, int], set[tuple[int, int]]]]:
        """Query nodes and their dataflow successors (driver node -> reader nodes)."""
        nodes = [(inst.id, n) for inst in self.instances for n in range(len(inst.desc.queries))]
        writer: dict[str, tuple[int, int]] = {}
        for inst in self.instances:
            for n, q in enumerate(inst.desc.queries):
                for w in q.writes:
                    writer[f"{inst.name}.{w}"] = (inst.id, n)
        succ: dict[tuple[int, int], set[tuple[int, int]]] = {v: set() for v in nodes}
        for inst in self.instances:
            for n, q in enumerate(inst.desc.queries):
                for r in q.reads:
                    drv = self._sink_driver.get(f"{inst.name}.{r}")
                    if drv is not None and drv in writer:
                        succ[writer[drv]].add((inst.id, n))
        return nodes, succ

    def node_label(self, node: tuple[int, int]) -> str:
        inst = self.instances[node[0]]
        return f"{inst.name}.{inst.desc.queries[node[1]].name}"


@dataclass
class Schedule:
    order: list[tuple[int, int]]
    updates: list[int]
    _plan: Any = field(default=None, repr=False, compare=False)

    @classmethod
    def from_order(cls, netlist: Netlist, order: Iterable[tuple[int, int]]) -> "Schedule":
        """Build a schedule from an explicit query order, rejecting any read
        of a wire whose driving query has not yet run."""
        order = list(order)
        nodes, succ = netlist.query_graph()
        if sorted(order) != sorted(nodes):
            raise KernelError("order must list every query node exactly once")
        done: set[tuple[int, int]] = set()
        pred: dict[tuple[int, int], set[tuple[int, int]]] = {v: set() for v in nodes}
        for u, vs in succ.items():
            for v in vs:
                pred[v].add(u)
        for node in order:
            missing = pred[node] - done
            if missing:
                first = min(missing)
                raise UncomputedRead(
                    f"{netlist.node_label(node)} reads the output of "
                    f"{netlist.node_label(first)} before it is computed"
                )
            done.add(node)
        _check_driven(netlist)
        return cls(order, [inst.id for inst in netlist.instances])


def _check_driven(netlist: Netlist) -> None:
    for inst in netlist.instances:
        for port in sorted(inst.desc.input_ports):
            if netlist.driver_of(f"{inst.name}.{port}") is None:
                raise UndrivenPort(f"{inst.name}.{port}")
    for out in netlist.outputs:
        if netlist.driver_of(out) is None:
            raise UndrivenPort(out)


def _find_cycle(remaining: set[tuple[int, int]], succ) -> list[tuple[int, int]]:
    # every remaining node has a remaining predecessor; walk backwards until a repeat
    pred: dict[tuple[int, int], list[tuple[int, int]]] = {v: [] for v in remaining}
    for u in remaining:
        for v in succ[u]:
            if v in remaining:
                pred[v].append(u)
    node = min(remaining)
    seen: dict[tuple[int, int], int] = {}
    path: list[tuple[int, int]] = []
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = min(pred[node])
    cycle = path[seen[node]:]
    cycle.reverse()
    return cycle


def elaborate(netlist: Netlist) -> Schedule:
    """Return the deterministic topological order of all query nodes.

    Ties are broken by (instance id, node id).
    """
    _check_driven(netlist)
    nodes, succ = netlist.query_graph()
    indeg = {v: 0 for v in nodes}
    for vs in succ.values():
        for v in vs:
            indeg[v] += 1
    ready = [v for v in nodes if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != len(nodes):
        remaining = set(nodes) - set(order)
        cycle = _find_cycle(remaining, succ)
        raise CombinationalCycle([netlist.node_label(v) for v in cycle])
    return Schedule(order, [inst.id for inst in netlist.instances])


def _gather(slots: Sequence[int]) -> Callable[[list], tuple]:
    """Fetch ``slots`` from the value list as a tuple."""
    if not slots:
        return lambda vals: ()
    if len(slots) == 1:
        s = slots[0]
        return lambda vals: (vals[s],)
    return itemgetter(*slots)


class _Plan:
    """Schedule compiled to slot indices over a flat wire-value list."""

    def __init__(self, netlist: Netlist, schedule: Schedule):
        slot: dict[str, int] = {}
        for name in netlist.inputs:
            slot[name] = len(slot)
        for inst in netlist.instances:
            for q in inst.desc.queries:
                for w in q.writes:
                    slot[f"{inst.name}.{w}"] = len(slot)
        self.nslots = len(slot)
        self.slot = slot
        self.input_slots = [(name, slot[name]) for name in netlist.inputs]

        def src(inst: Instance, port: str) -> int:
            return slot[netlist.driver_of(f"{inst.name}.{port}")]

        self.queries = []
        for iid, nid in schedule.order:
            inst = netlist.instances[iid]
            q = inst.desc.queries[nid]
            self.queries.append(
                (q.fn, inst, _gather([src(inst, r) for r in q.reads]), tuple(slot[f"{inst.name}.{w}"] for w in q.writes), q)
            )
        self.updates = {}
        for iid in schedule.updates:
            inst = netlist.instances[iid]
            u = inst.desc.update
            self.updates[iid] = (u.fn, inst, _gather([src(inst, r) for r in u.reads]))
        self.outputs = [(name, slot[netlist.driver_of(name)]) for name in netlist.outputs]
        self.sink_slot = {w.sink: slot[w.driver] for w in netlist.wires}


class Simulator:
    """Runs a netlist cycle by cycle; keeps the most recent wire values for probing."""

    def __init__(self, netlist: Netlist, schedule: Schedule | None = None, check: bool = False):
        self.netlist = netlist
        self.schedule = schedule if schedule is not None else elaborate(netlist)
        self.check = check
        self.cycle = 0
        self._plan = _Plan(netlist, self.schedule)
        self.values: list[Any] = [None] * self._plan.nslots

    def query_phase(self, inputs: Mapping[str, Any]) -> list[Any]:
        plan = self._plan
        vals = [None] * plan.nslots
        for name, s in plan.input_slots:
            try:
                vals[s] = inputs[name]
            except KeyError:
                raise KernelError(f"missing external input {name!r}") from None
        check = self.check
        for fn, inst, rs, ws, q in plan.queries:
            state = inst.state
            if check:
                before = pickle.dumps(state)
            out = fn(state, *rs(vals))
            if check and pickle.dumps(state) != before:
                raise PurityViolation(f"query {inst.name}.{q.name} mutated instance state")
            if len(out) != len(ws):
                raise KernelError(
                    f"query {inst.name}.{q.name} produced {len(out)} values for {len(ws)} write-ports"
                )
            for s, v in zip(ws, out):
                vals[s] = v
        return vals

    def update_phase(self, vals: list[Any], order: Sequence[int] | None = None) -> None:
        updates = self._plan.updates
        for iid in self.schedule.updates if order is None else order:
            fn, inst, rs = updates[iid]
            if fn(inst.state, *rs(vals)) is not None:
                raise KernelError(f"update of {inst.name} returned a value; updates drive no wires")

    def step(self, inputs: Mapping[str, Any], update_order: Sequence[int] | None = None) -> dict[str, Any]:
        vals = self.query_phase(inputs)
        self.update_phase(vals, update_order)
        self.values = vals
        self.cycle += 1
        return {name: vals[s] for name, s in self._plan.outputs}

    def probe(self, ref: str) -> Any:
        """Value carried last cycle by the wire at ``ref`` (a driver or a sink)."""
        plan = self._plan
        if ref in plan.slot:
            return self.values[plan.slot[ref]]
        if ref in plan.sink_slot:
            return self.values[plan.sink_slot[ref]]
        raise UnknownPort(ref)

    def slot_of(self, ref: str) -> int:
        plan = self._plan
        return plan.slot[ref] if ref in plan.slot else plan.sink_slot[ref]


def step(netlist: Netlist, schedule: Schedule, inputs: Mapping[str, Any]) -> dict[str, Any]:
    """Advance ``netlist`` one clock cycle under ``schedule``.

    Stateless convenience form; long runs should hold a :class:`Simulator`.
    """
    if schedule._plan is None or schedule._plan[0] is not netlist:
        schedule._plan = (netlist, Simulator(netlist, schedule))
    return schedule._plan[1].step(inputs)
