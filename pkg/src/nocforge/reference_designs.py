"""Small reference designs built on the kernel.

The odd/even switch family steers integer inputs to an ``Odd`` and an
``Even`` output with valid/accept handshakes; ``foo`` is a one-register
Mealy machine used to exercise instance identity and evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .arbitration import RoundRobinState, allocate_separable_input_first
from .kernel import ModuleDescriptor, Netlist, QueryNode, UpdateNode
from .primitives import Fifo


class VDat(NamedTuple):
    v: bool
    d: int = 0


INVALID = VDat(False, 0)


def _odd(x: VDat) -> bool:
    return x.v and x.d % 2 != 0


def _even(x: VDat) -> bool:
    return x.v and x.d % 2 == 0


class Path(NamedTuple):
    L1xOdd: bool = False
    L1xEven: bool = False
    L2xOdd: bool = False
    L2xEven: bool = False


class InvalidN(ValueError):
    pass


def switch_try(i1: int, i2: int) -> tuple[int | None, int | None]:
    """The handshake-free first attempt; ``None`` marks an undriven output.

    When both inputs share a parity, ``i2`` is silently lost.
    """
    odd = i1 if i1 % 2 else (i2 if i2 % 2 else None)
    even = i1 if not i1 % 2 else (i2 if not i2 % 2 else None)
    return odd, even


def switch_comb(i1: VDat, i2: VDat) -> tuple[VDat, VDat, bool, bool]:
    acpt1 = acpt2 = False
    odd = even = INVALID
    if _odd(i1):
        odd, acpt1 = i1, True
    elif _odd(i2):
        odd, acpt2 = i2, True
    if _even(i1):
        even, acpt1 = i1, True
    elif _even(i2):
        even, acpt2 = i2, True
    return odd, even, acpt1, acpt2


def decode_path(l1: VDat, l2: VDat) -> Path:
    return Path(_odd(l1), _even(l1), _odd(l2), _even(l2))


@dataclass(frozen=True)
class PathArbiter:
    """Allocator state for :func:`allocate_path`: two sources, two destinations.

    Each source has one request slot per destination, so any request subset
    is expressible.
    """

    inputs: tuple[RoundRobinState, ...] = (RoundRobinState(2), RoundRobinState(2))
    outputs: tuple[RoundRobinState, ...] = (RoundRobinState(2), RoundRobinState(2))


def allocate_path(req: Path, state: PathArbiter) -> tuple[Path, PathArbiter]:
    reqs = [
        [0 if req.L1xOdd else None, 1 if req.L1xEven else None],
        [0 if req.L2xOdd else None, 1 if req.L2xEven else None],
    ]
    grants, ins, outs = allocate_separable_input_first(reqs, state.inputs, state.outputs)
    src_odd, src_even = grants.by_output
    grant = Path(src_odd == 0, src_even == 0, src_odd == 1, src_even == 1)
    return grant, PathArbiter(tuple(ins), tuple(outs))


@dataclass
class Switch2Stage:
    """Two-stage switch: input latches ``L1``/``L2`` and a decoded request latch.

    ``acpt`` stays combinational against latch occupancy; data reach an
    output one cycle after acceptance.
    """

    L1: VDat = INVALID
    L2: VDat = INVALID
    Lreq: Path = Path()
    arb: PathArbiter = field(default_factory=PathArbiter)

    def _grant(self) -> tuple[Path, PathArbiter]:
        return allocate_path(self.Lreq, self.arb)

    def outputs(self) -> tuple[VDat, VDat]:
        g, _ = self._grant()
        odd = self.L1 if g.L1xOdd else self.L2 if g.L2xOdd else INVALID
        even = self.L1 if g.L1xEven else self.L2 if g.L2xEven else INVALID
        return odd, even

    def accepts(self, i1: VDat, i2: VDat) -> tuple[bool, bool]:
        g, _ = self._grant()
        free1 = not self.L1.v or g.L1xOdd or g.L1xEven
        free2 = not self.L2.v or g.L2xOdd or g.L2xEven
        return i1.v and free1, i2.v and free2

    def update(self, i1: VDat, i2: VDat) -> None:
        g, arb = self._grant()
        a1, a2 = self.accepts(i1, i2)
        l1 = INVALID if g.L1xOdd or g.L1xEven else self.L1
        l2 = INVALID if g.L2xOdd or g.L2xEven else self.L2
        self.L1 = i1 if a1 else l1
        self.L2 = i2 if a2 else l2
        self.Lreq = decode_path(self.L1, self.L2)
        self.arb = arb

    def cycle(self, i1: VDat, i2: VDat) -> tuple[VDat, VDat, bool, bool]:
        odd, even = self.outputs()
        a1, a2 = self.accepts(i1, i2)
        self.update(i1, i2)
        return odd, even, a1, a2


@dataclass
class Switch2StageN:
    """``Switch2Stage`` generalised to ``n`` inputs."""

    n: int
    L: list[VDat] = field(default_factory=list)
    Lreq: list[int | None] = field(default_factory=list)
    in_arbs: list[RoundRobinState] = field(default_factory=list)
    out_arbs: list[RoundRobinState] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidN(f"need at least one input, got {self.n}")
        self.L = self.L or [INVALID] * self.n
        self.Lreq = self.Lreq or [None] * self.n
        self.in_arbs = self.in_arbs or [RoundRobinState(1) for _ in range(self.n)]
        self.out_arbs = self.out_arbs or [RoundRobinState(self.n) for _ in range(2)]

    def _grant(self):
        grants, ins, outs = allocate_separable_input_first([[r] for r in self.Lreq], self.in_arbs, self.out_arbs)
        return grants, ins, outs

    def outputs(self) -> tuple[VDat, VDat]:
        grants, _, _ = self._grant()
        odd_src, even_src = grants.by_output
        return (
            INVALID if odd_src is None else self.L[odd_src],
            INVALID if even_src is None else self.L[even_src],
        )

    def accepts(self, inputs: Sequence[VDat]) -> list[bool]:
        grants, _, _ = self._grant()
        return [x.v and (not l.v or g is not None) for x, l, g in zip(inputs, self.L, grants.by_input)]

    def update(self, inputs: Sequence[VDat]) -> None:
        grants, ins, outs = self._grant()
        acpt = self.accepts(inputs)
        for k in range(self.n):
            if acpt[k]:
                self.L[k] = inputs[k]
            elif grants.by_input[k] is not None:
                self.L[k] = INVALID
        self.Lreq = [0 if _odd(l) else 1 if _even(l) else None for l in self.L]
        self.in_arbs, self.out_arbs = ins, outs


# ---- kernel modules -------------------------------------------------------


def make_switch_comb(name: str = "sw") -> ModuleDescriptor:
    return ModuleDescriptor(
        name,
        "switch_comb",
        [QueryNode("comb", ("I1", "I2"), ("Odd", "Even", "acpt1", "acpt2"), lambda s, a, b: switch_comb(a, b))],
    )


def make_switch_2stage(name: str = "sw") -> ModuleDescriptor:
    return ModuleDescriptor(
        name,
        "switch_2stage",
        [
            QueryNode("out", (), ("Odd", "Even"), lambda s: s.outputs()),
            QueryNode("acpt", ("I1", "I2"), ("acpt1", "acpt2"), Switch2Stage.accepts),
        ],
        UpdateNode(("I1", "I2"), Switch2Stage.update),
        make_state=Switch2Stage,
    )


def make_switch_2stage_n(n: int, name: str = "sw") -> ModuleDescriptor:
    if n < 1:
        raise InvalidN(f"need at least one input, got {n}")
    ins = tuple(f"I{k}" for k in range(n))
    return ModuleDescriptor(
        name,
        "switch_2stage_n",
        [
            QueryNode("out", (), ("Odd", "Even"), lambda s: s.outputs()),
            QueryNode("acpt", ins, tuple(f"acpt{k}" for k in range(n)), lambda s, *x: s.accepts(x)),
        ],
        UpdateNode(ins, lambda s, *x: s.update(x)),
        make_state=lambda: Switch2StageN(n),
    )


def make_fifo_module(name: str, depth: int) -> ModuleDescriptor:
    """Front-readable FIFO with a valid-tagged front and an accept output."""

    def front(f: Fifo):
        return (VDat(True, f.entries[0]) if f.entries else INVALID,)

    def accept(f: Fifo, push: VDat):
        return (push.v and not f.full,)

    def update(f: Fifo, push: VDat, pop: bool):
        f.step(push.d if push.v and not f.full else None, pop)

    return ModuleDescriptor(
        name,
        "fifo",
        [QueryNode("front", (), ("front",), front), QueryNode("accept", ("push",), ("acpt",), accept)],
        UpdateNode(("push", "pop"), update),
        make_state=lambda: Fifo(depth),
    )


def build_switch_buffered(inner: str = "2stage", depth: int = 4) -> Netlist:
    """FIFO-buffered switch; ``inner`` is ``"2stage"`` or ``"comb"``.

    External inputs ``I1``, ``I2``; outputs ``Odd``, ``Even``, ``acpt1``, ``acpt2``.
    """
    makers = {"2stage": make_switch_2stage, "comb": make_switch_comb}
    if inner not in makers:
        raise ValueError(f"unknown inner switch {inner!r}")
    net = Netlist()
    for k in (1, 2):
        net.add_input(f"I{k}")
        net.add_instance(make_fifo_module(f"F{k}", depth))
    net.add_instance(makers[inner]("sw"))
    for name in ("Odd", "Even", "acpt1", "acpt2"):
        net.add_output(name)
    for k in (1, 2):
        net.connect(f"I{k}", f"F{k}.push")
        net.connect(f"F{k}.acpt", f"acpt{k}")
        net.connect(f"F{k}.front", f"sw.I{k}")
        net.connect(f"sw.acpt{k}", f"F{k}.pop")
    net.connect("sw.Odd", "Odd")
    net.connect("sw.Even", "Even")
    return net


def build_switch_buffered_n(n: int, depth: int = 4) -> Netlist:
    """``n``-input buffered switch; inputs ``I0..``, outputs ``Odd``, ``Even``, ``acpt0..``."""
    if n < 1:
        raise InvalidN(f"need at least one input, got {n}")
    net = Netlist()
    net.add_instance(make_switch_2stage_n(n, "sw"))
    for k in range(n):
        net.add_input(f"I{k}")
        net.add_output(f"acpt{k}")
        net.add_instance(make_fifo_module(f"F{k}", depth))
        net.connect(f"I{k}", f"F{k}.push")
        net.connect(f"F{k}.acpt", f"acpt{k}")
        net.connect(f"F{k}.front", f"sw.I{k}")
        net.connect(f"sw.acpt{k}", f"F{k}.pop")
    for name in ("Odd", "Even"):
        net.add_output(name)
        net.connect(f"sw.{name}", name)
    return net


# ---- foo: one-register Mealy machine --------------------------------------


@dataclass
class FooState:
    L: int = 1


def make_foo(name: str, init: int = 1) -> ModuleDescriptor:
    """``O = I1 * L`` combinationally; ``L += I2`` at the clock edge."""
    return ModuleDescriptor(
        name,
        "foo",
        [QueryNode("query", ("I1",), ("O",), lambda s, i1: (i1 * s.L,))],
        UpdateNode(("I2",), _foo_update),
        make_state=lambda: FooState(init),
    )


def _foo_update(s: FooState, i2: int) -> None:
    s.L = i2 + s.L


def make_foo_fused(name: str, init: int = 1) -> ModuleDescriptor:
    """``foo`` written as a single function call: its output node consumes
    both arguments, as one invocation of the C function does."""
    return ModuleDescriptor(
        name,
        "foo_fused",
        [QueryNode("call", ("I1", "I2"), ("O",), lambda s, i1, i2: (i1 * s.L,))],
        UpdateNode(("I2",), _foo_update),
        make_state=lambda: FooState(init),
    )


def build_top_ordering(init: int = 1, fused: bool = False) -> Netlist:
    """Two ``foo`` instances, each output feeding the other's input.

    ``foo1.I1 = I``, ``foo2.I1 = foo2.I2 = foo1.O``, ``foo1.I2 = foo2.O``, ``O = foo2.O``.
    """
    make = make_foo_fused if fused else make_foo
    net = Netlist()
    net.add_input("I")
    net.add_output("O")
    net.add_instance(make("foo1", init))
    net.add_instance(make("foo2", init))
    net.connect("I", "foo1.I1")
    net.connect("foo1.O", "foo2.I1")
    net.connect("foo1.O", "foo2.I2")
    net.connect("foo2.O", "foo1.I2")
    net.connect("foo2.O", "O")
    return net


def build_top_reuse(init: int = 1) -> Netlist:
    """Two ``foo`` instances in series: ``left(I, I) -> tmp``, ``right(tmp, tmp) -> O``."""
    net = Netlist()
    net.add_input("I")
    net.add_output("O")
    net.add_instance(make_foo("left", init))
    net.add_instance(make_foo("right", init))
    net.connect("I", "left.I1")
    net.connect("I", "left.I2")
    net.connect("left.O", "right.I1")
    net.connect("left.O", "right.I2")
    net.connect("right.O", "O")
    return net


def fxn_reuse_try(i: int, shared: FooState) -> int:
    """One cycle of calling a single stateful ``foo`` at both sites."""

    def foo(i1: int, i2: int) -> int:
        o = i1 * shared.L
        shared.L = i2 + shared.L
        return o

    tmp = foo(i, i)
    return foo(tmp, tmp)
