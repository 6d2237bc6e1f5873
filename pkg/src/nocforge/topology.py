"""16-endpoint network builders and routing-table generation.

A :class:`TopologyGraph` describes routers, their ports, directed
router-to-router links and endpoint attachment. :func:`build_topology`
turns it into a kernel netlist of routers and endpoint interfaces.

Port 0 (and, where a router hosts several endpoints, the ports right
after it) are the local ports. Mesh and Torus ports follow the order
local, East, West, North, South, skipping directions with no neighbour.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any

from .kernel import ModuleDescriptor, Netlist, QueryNode, UpdateNode, elaborate
from .router import Flit, RouterConfig, make_router

KINDS = ("Ring", "DoubleRing", "FatTree", "Mesh", "Torus", "HighRadix")
DATELINE_KINDS = ("Ring", "DoubleRing", "Torus")


class TopologyError(ValueError):
    pass


class InvalidSpec(TopologyError):
    pass


class DisconnectedGraph(TopologyError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    kind: str
    router: RouterConfig = RouterConfig()
    endpoints: int = 16

    def validate(self) -> "TopologySpec":
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown topology {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.endpoints != 16:
            raise InvalidSpec("the named topologies are defined for 16 endpoints")
        if self.kind in DATELINE_KINDS and self.router.num_vcs < 2:
            raise InvalidSpec(f"{self.kind} needs at least 2 VCs for the dateline rule")
        self.router.validate()
        return self


@dataclass
class TopologyGraph:
    kind: str
    num_ports: list[int]
    # (router, out port) -> (router, in port)
    links: dict[tuple[int, int], tuple[int, int]]
    # endpoint id -> (router, port)
    endpoints: list[tuple[int, int]]
    coords: list[tuple[int, int]] | None = None
    dims: tuple[int, int] | None = None
    # (router, port) -> axis id, for router-to-router ports
    axis: dict[tuple[int, int], int] = field(default_factory=dict)
    # (router, out port) links whose traversal moves a flit to the upper VC class
    dateline: set[tuple[int, int]] = field(default_factory=set)

    @property
    def num_routers(self) -> int:
        return len(self.num_ports)

    def neighbors(self, r: int) -> list[tuple[int, int, int]]:
        """(out port, next router, its in port), by port."""
        return sorted((p, s, q) for (rr, p), (s, q) in self.links.items() if rr == r)

    def degree_census(self) -> dict[int, int]:
        census: dict[int, int] = {}
        for n in self.num_ports:
            census[n] = census.get(n, 0) + 1
        return dict(sorted(census.items()))

    def validate(self) -> None:
        used: set[tuple[int, int]] = set()
        for e, rp in enumerate(self.endpoints):
            if rp in used:
                raise InvalidSpec(f"endpoint {e} shares port {rp}")
            used.add(rp)
        outs = set(self.links) | used
        ins = set(self.links.values()) | used
        for r, n in enumerate(self.num_ports):
            for p in range(n):
                if (r, p) not in outs:
                    raise InvalidSpec(f"router {r} output {p} unconnected")
                if (r, p) not in ins:
                    raise InvalidSpec(f"router {r} input {p} unconnected")
        if len(ins) != len(outs) or len(set(self.links.values())) != len(self.links):
            raise InvalidSpec("an input port is fed by more than one link")


def _mesh(kx: int, ky: int, wrap: bool) -> TopologyGraph:
    n = kx * ky
    coords = [(r % kx, r // kx) for r in range(n)]
    dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    port_of: list[dict[tuple[int, int], int]] = []
    for x, y in coords:
        ports = {}
        for d in dirs:
            nx, ny = x + d[0], y + d[1]
            if wrap or (0 <= nx < kx and 0 <= ny < ky):
                ports[d] = len(ports) + 1
        port_of.append(ports)
    links = {}
    axis = {}
    dateline = set()
    for r, (x, y) in enumerate(coords):
        for d, p in port_of[r].items():
            nx, ny = (x + d[0]) % kx, (y + d[1]) % ky
            s = ny * kx + nx
            links[(r, p)] = (s, port_of[s][(-d[0], -d[1])])
            axis[(r, p)] = 0 if d[1] == 0 else 1
            if wrap and not (0 <= x + d[0] < kx and 0 <= y + d[1] < ky):
                dateline.add((r, p))
    return TopologyGraph(
        kind="Torus" if wrap else "Mesh",
        num_ports=[len(p) + 1 for p in port_of],
        links=links,
        endpoints=[(r, 0) for r in range(n)],
        coords=coords,
        dims=(kx, ky),
        axis=axis,
        dateline=dateline,
    )


def _ring(n: int) -> TopologyGraph:
    links = {(r, 1): ((r + 1) % n, 1) for r in range(n)}
    return TopologyGraph(
        kind="Ring",
        num_ports=[2] * n,
        links=links,
        endpoints=[(r, 0) for r in range(n)],
        axis={(r, 1): 0 for r in range(n)},
        dateline={(n - 1, 1)},
    )


def _double_ring(n: int) -> TopologyGraph:
    # port 1 faces r+1, port 2 faces r-1
    links = {}
    for r in range(n):
        links[(r, 1)] = ((r + 1) % n, 2)
        links[(r, 2)] = ((r - 1) % n, 1)
    return TopologyGraph(
        kind="DoubleRing",
        num_ports=[3] * n,
        links=links,
        endpoints=[(r, 0) for r in range(n)],
        axis={(r, p): 0 for r in range(n) for p in (1, 2)},
        dateline={(n - 1, 1), (0, 2)},
    )


def _fat_tree() -> TopologyGraph:
    # leaves 0..3 host endpoints 4*leaf + port on ports 0..3; ports 4..7 go up
    # to roots 4..7; root port l faces leaf l
    links = {}
    for leaf in range(4):
        for j in range(4):
            root = 4 + j
            links[(leaf, 4 + j)] = (root, leaf)
            links[(root, leaf)] = (leaf, 4 + j)
    return TopologyGraph(
        kind="FatTree",
        num_ports=[8] * 4 + [4] * 4,
        links=links,
        endpoints=[(e // 4, e % 4) for e in range(16)],
    )


def _high_radix() -> TopologyGraph:
    n = 8
    port_of = []
    for r in range(n):
        others = [s for s in range(n) if s != r]
        port_of.append({s: 2 + k for k, s in enumerate(others)})
    links = {}
    for r in range(n):
        for s, p in port_of[r].items():
            links[(r, p)] = (s, port_of[s][r])
    return TopologyGraph(
        kind="HighRadix",
        num_ports=[9] * n,
        links=links,
        endpoints=[(e // 2, e % 2) for e in range(16)],
    )


def make_graph(kind: str) -> TopologyGraph:
    builders = {
        "Ring": lambda: _ring(16),
        "DoubleRing": lambda: _double_ring(16),
        "FatTree": _fat_tree,
        "Mesh": lambda: _mesh(4, 4, False),
        "Torus": lambda: _mesh(4, 4, True),
        "HighRadix": _high_radix,
    }
    if kind not in builders:
        raise InvalidSpec(f"unknown topology {kind!r}")
    graph = builders[kind]()
    graph.validate()
    return graph


def load_edge_list(text: str) -> TopologyGraph:
    """Parse a generic graph: ``routers N``, ``link A B`` (bidirectional) and
    ``endpoint E R`` lines; ``#`` starts a comment. Routing is shortest-path."""
    n = None
    edges: list[tuple[int, int]] = []
    eps: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        try:
            if line[0] == "routers" and len(line) == 2:
                n = int(line[1])
            elif line[0] == "link" and len(line) == 3:
                edges.append((int(line[1]), int(line[2])))
            elif line[0] == "endpoint" and len(line) == 3:
                eps[int(line[1])] = int(line[2])
            else:
                raise ValueError
        except ValueError:
            raise InvalidSpec(f"line {lineno}: cannot parse {raw.strip()!r}") from None
    if n is None or n < 1:
        raise InvalidSpec("missing 'routers N' line")
    if sorted(eps) != list(range(len(eps))) or not eps:
        raise InvalidSpec("endpoint ids must be 0..E-1")
    ports: list[int] = [0] * n
    endpoints: list[tuple[int, int]] = []
    for e in range(len(eps)):
        r = eps[e]
        if not 0 <= r < n:
            raise InvalidSpec(f"endpoint {e} on unknown router {r}")
        endpoints.append((r, ports[r]))
        ports[r] += 1
    links = {}
    for a, b in edges:
        if not (0 <= a < n and 0 <= b < n) or a == b:
            raise InvalidSpec(f"bad link {a} {b}")
        pa, pb = ports[a], ports[b]
        ports[a] += 1
        ports[b] += 1
        links[(a, pa)] = (b, pb)
        links[(b, pb)] = (a, pa)
    graph = TopologyGraph(kind="Custom", num_ports=ports, links=links, endpoints=endpoints)
    graph.validate()
    return graph


def router_distances(graph: TopologyGraph, target: int) -> list[int | None]:
    """Router-to-router hop counts to ``target`` along directed links."""
    rev: dict[int, list[int]] = {r: [] for r in range(graph.num_routers)}
    for (r, _), (s, _) in graph.links.items():
        rev[s].append(r)
    dist: list[int | None] = [None] * graph.num_routers
    dist[target] = 0
    queue = deque([target])
    while queue:
        s = queue.popleft()
        for r in rev[s]:
            if dist[r] is None:
                dist[r] = dist[s] + 1
                queue.append(r)
    return dist


def _bfs_tables(graph: TopologyGraph) -> list[dict[int, int]]:
    tables: list[dict[int, int]] = [{} for _ in range(graph.num_routers)]
    dist_to = {}
    for e, (tr, tp) in enumerate(graph.endpoints):
        if tr not in dist_to:
            dist_to[tr] = router_distances(graph, tr)
        dist = dist_to[tr]
        for r in range(graph.num_routers):
            if r == tr:
                tables[r][e] = tp
                continue
            if dist[r] is None:
                raise DisconnectedGraph(f"router {r} cannot reach endpoint {e}")
            best = min(p for p, s, _ in graph.neighbors(r) if dist[s] == dist[r] - 1)
            tables[r][e] = best
    return tables


def _dor_tables(graph: TopologyGraph, wrap: bool) -> list[dict[int, int]]:
    kx, ky = graph.dims
    tables: list[dict[int, int]] = [{} for _ in range(graph.num_routers)]
    port_to = [{s: p for p, s, _ in graph.neighbors(r)} for r in range(graph.num_routers)]
    for r, (x, y) in enumerate(graph.coords):
        for e, (tr, tp) in enumerate(graph.endpoints):
            tx, ty = graph.coords[tr]
            step = _dor_step(x, tx, kx, wrap)
            if step:
                nxt = (y * kx + (x + step) % kx)
            else:
                step = _dor_step(y, ty, ky, wrap)
                nxt = ((y + step) % ky) * kx + x if step else None
            tables[r][e] = tp if nxt is None else port_to[r][nxt]
    return tables


def _dor_step(cur: int, target: int, k: int, wrap: bool) -> int:
    if cur == target:
        return 0
    if not wrap:
        return 1 if target > cur else -1
    ahead = (target - cur) % k
    return 1 if ahead <= k // 2 else -1


def _fat_tree_tables(graph: TopologyGraph) -> list[dict[int, int]]:
    tables: list[dict[int, int]] = [{} for _ in range(graph.num_routers)]
    for e, (leaf, port) in enumerate(graph.endpoints):
        for r in range(4):
            tables[r][e] = port if r == leaf else 4 + e % 4
        for root in range(4, 8):
            tables[root][e] = leaf
    return tables


def compute_routing_tables(graph: TopologyGraph) -> list[dict[int, int]]:
    """Mesh/Torus: X-then-Y dimension order. FatTree: up to root ``dst % 4``,
    then down. Everything else: shortest path, lowest port index on ties."""
    if graph.kind == "Mesh":
        return _dor_tables(graph, wrap=False)
    if graph.kind == "Torus":
        return _dor_tables(graph, wrap=True)
    if graph.kind == "FatTree":
        return _fat_tree_tables(graph)
    return _bfs_tables(graph)


def vc_maps(graph: TopologyGraph, num_vcs: int) -> list[Any]:
    """Per-router ``[in][out][vc] -> vc`` tables implementing the dateline rule.

    VCs split into a lower and an upper class of ``num_vcs // 2`` each. A flit
    starts in the lower class, moves to the upper class when it crosses a
    dateline link and drops back to the lower class when it turns onto a new
    axis. Graphs without datelines keep the VC unchanged (``None``).
    """
    if not graph.dateline:
        return [None] * graph.num_routers
    half = num_vcs // 2
    if half < 1:
        raise InvalidSpec("dateline routing needs at least 2 VCs")
    maps = []
    for r, n in enumerate(graph.num_ports):
        table = []
        for i in range(n):
            rows = []
            for o in range(n):
                row = []
                for v in range(num_vcs):
                    cls, lo = divmod(v, half)
                    if (r, o) not in graph.links or cls > 1:
                        row.append(v)
                        continue
                    if graph.axis.get((r, i)) != graph.axis[(r, o)]:
                        cls = 0
                    if (r, o) in graph.dateline:
                        cls = 1
                    row.append(cls * half + lo)
                rows.append(row)
            table.append(rows)
        maps.append(table)
    return maps


def injection_vcs(graph: TopologyGraph, num_vcs: int) -> int:
    """Number of VCs (counted from 0) a source may inject on."""
    return num_vcs // 2 if graph.dateline else num_vcs


class EndpointInterface:
    """Network interface of one endpoint.

    Holds a bounded source queue of whole packets and a per-VC credit count
    toward its router's local input. Received flits are sunk immediately and a
    credit is returned one cycle later.
    """

    def __init__(self, num_vcs: int, credit_limit: int, queue_packets: int = 4):
        self.credits = [credit_limit] * num_vcs
        self.credit_limit = credit_limit
        self.queue_packets = queue_packets
        self.queue: deque = deque()
        self.queued = 0
        self.out_reg: Flit | None = None
        self.credit_reg: int | None = None
        self.sent = 0

    def can_accept(self) -> bool:
        return self.queued < self.queue_packets

    def update(self, packet, flit_in: Flit | None, credit_in: int | None) -> None:
        if credit_in is not None:
            self.credits[credit_in] += 1
            if self.credits[credit_in] > self.credit_limit:
                raise AssertionError(f"endpoint credit overflow on VC {credit_in}")
        self.credit_reg = None if flit_in is None else flit_in.vc
        if packet:
            if not self.can_accept():
                raise AssertionError("packet offered to a full source queue")
            self.queue.extend(packet)
            self.queued += 1
        self.out_reg = None
        if self.queue:
            f = self.queue[0]
            if self.credits[f.vc] > 0:
                self.queue.popleft()
                self.credits[f.vc] -= 1
                self.out_reg = f
                self.sent += 1
                if f.is_tail:
                    self.queued -= 1


def make_endpoint(name: str, num_vcs: int, credit_limit: int, queue_packets: int = 4) -> ModuleDescriptor:
    return ModuleDescriptor(
        name=name,
        kind="endpoint",
        queries=[
            QueryNode("tx", (), ("flit_out", "credit_out"), lambda s: (s.out_reg, s.credit_reg)),
            QueryNode("rx", ("flit_in",), ("eject",), lambda s, f: (f,)),
        ],
        update=UpdateNode(("inject", "flit_in", "credit_in"), EndpointInterface.update),
        make_state=lambda: EndpointInterface(num_vcs, credit_limit, queue_packets),
    )


@dataclass
class Topology:
    spec: TopologySpec | None
    graph: TopologyGraph
    netlist: Netlist
    tables: list[dict[int, int]]
    router_names: list[str]
    endpoint_names: list[str]
    # endpoint id -> (router instance name, port)
    endpoint_ports: list[tuple[str, int]]
    injection_vcs: int

    def diameter(self) -> int:
        """Largest number of routers traversed between two endpoints."""
        return max(len(route_path(self, s, d)) for s in range(len(self.endpoint_ports)) for d in range(len(self.endpoint_ports)))

    def dump(self) -> str:
        lines = [self.netlist.dump().rstrip("\n")]
        lines += [f"endpoint {e} -> {r}.{p}" for e, (r, p) in enumerate(self.endpoint_ports)]
        return "\n".join(lines) + "\n"


def route_path(topo: Topology, src: int, dst: int) -> list[tuple[int, int]]:
    """Follow routing tables from ``src``'s router; returns (router, out port) hops."""
    graph = topo.graph
    r, _ = graph.endpoints[src]
    path = []
    for _ in range(graph.num_routers + 1):
        p = topo.tables[r][dst]
        path.append((r, p))
        if (r, p) == graph.endpoints[dst]:
            return path
        if (r, p) not in graph.links:
            raise TopologyError(f"router {r} sends endpoint {dst} out of local port {p}")
        r = graph.links[(r, p)][0]
    raise TopologyError(f"routing loop from {src} to {dst}")


def build_from_graph(graph: TopologyGraph, router: RouterConfig, spec: TopologySpec | None = None) -> Topology:
    tables = compute_routing_tables(graph)
    maps = vc_maps(graph, router.num_vcs)
    net = Netlist()
    rnames = [f"r{r}" for r in range(graph.num_routers)]
    for r, n in enumerate(graph.num_ports):
        cfg = replace(router, num_in=n, num_out=n)
        net.add_instance(make_router(cfg, tables[r], rnames[r], maps[r]))
    enames = [f"ep{e}" for e in range(len(graph.endpoints))]
    for e, name in enumerate(enames):
        net.add_instance(make_endpoint(name, router.num_vcs, router.buffer_depth))
        net.add_input(f"inject{e}")
        net.add_output(f"eject{e}")
    for (r, p), (s, q) in sorted(graph.links.items()):
        net.connect(f"{rnames[r]}.out{p}", f"{rnames[s]}.in{q}")
        net.connect(f"{rnames[s]}.cout{q}", f"{rnames[r]}.cin{p}")
    for e, (r, p) in enumerate(graph.endpoints):
        ep, rn = enames[e], rnames[r]
        net.connect(f"inject{e}", f"{ep}.inject")
        net.connect(f"{ep}.flit_out", f"{rn}.in{p}")
        net.connect(f"{rn}.cout{p}", f"{ep}.credit_in")
        net.connect(f"{rn}.out{p}", f"{ep}.flit_in")
        net.connect(f"{ep}.credit_out", f"{rn}.cin{p}")
        net.connect(f"{ep}.eject", f"eject{e}")
    return Topology(
        spec=spec,
        graph=graph,
        netlist=net,
        tables=tables,
        router_names=rnames,
        endpoint_names=enames,
        endpoint_ports=[(rnames[r], p) for r, p in graph.endpoints],
        injection_vcs=injection_vcs(graph, router.num_vcs),
    )


def build_topology(spec: TopologySpec) -> Topology:
    spec.validate()
    topo = build_from_graph(make_graph(spec.kind), spec.router, spec)
    elaborate(topo.netlist)
    return topo
