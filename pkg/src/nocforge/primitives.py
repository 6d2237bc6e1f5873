"""Cycle-accurate storage primitives.

Each primitive offers a ``step`` method that performs one clock cycle of
operations and returns the outputs visible during that cycle (computed
from pre-cycle state), plus module-level ``*_step`` functions that leave
the given state untouched and return a new one.
"""

from __future__ import annotations

import copy
from collections import deque
from typing import Any, Sequence

FRONT_READABLE = "front-readable"
DEQUEUE_FIRST = "dequeue-first"


class PrimitiveError(AssertionError):
    """Simulation assertion inside a storage primitive."""


class PushWhenFull(PrimitiveError):
    pass


class PopWhenEmpty(PrimitiveError):
    pass


class AddressOutOfRange(PrimitiveError):
    pass


class MultipleOpsPerCycle(PrimitiveError):
    pass


class Fifo:
    """Bounded FIFO in one of two read disciplines.

    ``front-readable``: the oldest entry is visible combinationally and a pop
    removes it at the end of the cycle.

    ``dequeue-first``: a pop moves the oldest entry into a staging register;
    that value is what ``front`` shows on the following cycle.
    """

    __slots__ = ("capacity", "discipline", "entries", "staged")

    def __init__(self, capacity: int, discipline: str = FRONT_READABLE):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if discipline not in (FRONT_READABLE, DEQUEUE_FIRST):
            raise ValueError(f"unknown FIFO discipline {discipline!r}")
        self.capacity = capacity
        self.discipline = discipline
        self.entries: deque = deque()
        self.staged: Any = None

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Fifo)
            and self.capacity == other.capacity
            and self.discipline == other.discipline
            and list(self.entries) == list(other.entries)
            and self.staged == other.staged
        )

    def __repr__(self) -> str:
        return f"Fifo({self.capacity}, {self.discipline!r}, entries={list(self.entries)}, staged={self.staged})"

    @property
    def empty(self) -> bool:
        return not self.entries

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    @property
    def front(self) -> Any:
        if self.discipline == DEQUEUE_FIRST:
            return self.staged
        return self.entries[0] if self.entries else None

    def push(self, value: Any) -> None:
        if len(self.entries) >= self.capacity:
            raise PushWhenFull(f"push of {value!r} into full FIFO (capacity {self.capacity})")
        self.entries.append(value)

    def pop(self) -> Any:
        if not self.entries:
            raise PopWhenEmpty("pop from empty FIFO")
        value = self.entries.popleft()
        if self.discipline == DEQUEUE_FIRST:
            self.staged = value
        return value

    def step(self, push: Any = None, pop: bool = False) -> tuple[Any, bool, bool]:
        """One cycle; returns ``(front, empty, full)`` as seen before the cycle's ops."""
        front, empty, full = self.front, self.empty, self.full
        if push is not None and full:
            raise PushWhenFull(f"push of {push!r} into full FIFO (capacity {self.capacity})")
        if pop and empty:
            raise PopWhenEmpty("pop from empty FIFO")
        if self.discipline == DEQUEUE_FIRST:
            self.staged = None
        if pop:
            self.pop()
        if push is not None:
            self.entries.append(push)
        return front, empty, full


def fifo_step(state: Fifo, push: Any = None, pop: bool = False) -> tuple[Fifo, Any, bool, bool]:
    new = copy.deepcopy(state)
    front, empty, full = new.step(push, pop)
    return new, front, empty, full


class DequeueFirstShim:
    """Adapts a dequeue-first FIFO to a front-readable interface.

    The FIFO's staging register doubles as the presented front. Whenever that
    register is empty, or its value is taken this cycle, the shim dequeues the
    next entry so it is staged for the following cycle.
    """

    def __init__(self, capacity: int):
        self.fifo = Fifo(capacity, DEQUEUE_FIRST)

    @property
    def front(self) -> Any:
        return self.fifo.staged

    @property
    def full(self) -> bool:
        return self.fifo.full

    def __len__(self) -> int:
        return len(self.fifo) + (self.fifo.staged is not None)

    def step(self, push: Any = None, take: bool = False) -> tuple[Any, bool]:
        """One cycle; returns ``(front, full)`` before the cycle's ops."""
        front, full = self.front, self.full
        if take and front is None:
            raise PopWhenEmpty("take from empty shim")
        keep = front is not None and not take
        refill = not keep and not self.fifo.empty
        self.fifo.step(push, refill)
        if keep:
            self.fifo.staged = front
        return front, full


class Ram:
    """One asynchronous read port, one synchronous write port."""

    __slots__ = ("depth", "width", "cells")

    def __init__(self, depth: int, width: int, cells: Sequence[int] | None = None):
        if depth < 1 or width < 1:
            raise ValueError("depth and width must be positive")
        self.depth = depth
        self.width = width
        self.cells = list(cells) if cells is not None else [0] * depth
        if len(self.cells) != depth:
            raise ValueError("cells length must equal depth")
        limit = 1 << width
        if any(not 0 <= c < limit for c in self.cells):
            raise ValueError(f"cell value exceeds {width} bits")

    def __eq__(self, other) -> bool:
        return isinstance(other, Ram) and (self.depth, self.width, self.cells) == (other.depth, other.width, other.cells)

    def step(self, raddr: int, waddr: int, wdata: int, we: bool = True) -> int:
        """Return the pre-cycle ``cells[raddr]``; commit the write at cycle end."""
        if not 0 <= raddr < self.depth:
            raise AddressOutOfRange(f"raddr {raddr} outside [0, {self.depth})")
        if we:
            if not 0 <= waddr < self.depth:
                raise AddressOutOfRange(f"waddr {waddr} outside [0, {self.depth})")
            if not 0 <= wdata < (1 << self.width):
                raise ValueError(f"wdata {wdata} exceeds {self.width} bits")
        rdata = self.cells[raddr]
        if we:
            self.cells[waddr] = wdata
        return rdata


def ram_step(state: Ram, raddr: int, waddr: int, wdata: int, we: bool = True) -> tuple[Ram, int]:
    new = copy.deepcopy(state)
    return new, new.step(raddr, waddr, wdata, we)


class _VcBuffer:
    """Per-port VC flit storage with a one-enqueue, one-dequeue cycle budget.

    Operations are staged with :meth:`enq` / :meth:`deq` and applied by
    :meth:`tick`; ``front`` always reflects pre-tick contents.
    """

    def __init__(self, num_vcs: int, depth: int):
        if num_vcs < 1 or depth < 1:
            raise ValueError("num_vcs and depth must be positive")
        self.num_vcs = num_vcs
        self.depth = depth
        self._enq: tuple[int, Any] | None = None
        self._deq: int | None = None

    def enq(self, vc: int, value: Any) -> None:
        if self._enq is not None:
            raise MultipleOpsPerCycle("second enqueue in one cycle")
        if self.length(vc) >= self.depth:
            raise PushWhenFull(f"VC {vc} full")
        self._enq = (vc, value)

    def deq(self, vc: int) -> Any:
        if self._deq is not None:
            raise MultipleOpsPerCycle("second dequeue in one cycle")
        if self.length(vc) == 0:
            raise PopWhenEmpty(f"VC {vc} empty")
        self._deq = vc
        return self.front(vc)

    def tick(self) -> None:
        if self._deq is not None:
            self._pop(self._deq)
            self._deq = None
        if self._enq is not None:
            self._push(*self._enq)
            self._enq = None

    def step(self, enq: tuple[int, Any] | None = None, deq: int | None = None):
        """One cycle; returns pre-cycle ``(fronts, empties, fulls)`` per VC."""
        fronts = [self.front(v) for v in range(self.num_vcs)]
        empties = [self.length(v) == 0 for v in range(self.num_vcs)]
        fulls = [self.length(v) >= self.depth for v in range(self.num_vcs)]
        if deq is not None:
            self.deq(deq)
        if enq is not None:
            self.enq(*enq)
        self.tick()
        return fronts, empties, fulls

    def contents(self, vc: int) -> list[Any]:
        raise NotImplementedError

    def length(self, vc: int) -> int:
        raise NotImplementedError

    def front(self, vc: int) -> Any:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return (
            type(self) is type(other)
            and self.num_vcs == other.num_vcs
            and self.depth == other.depth
            and all(self.contents(v) == other.contents(v) for v in range(self.num_vcs))
        )


class PackedVcBuffer(_VcBuffer):
    """All VCs of one input port time-multiplexed onto a single cell array.

    VC ``v`` owns the circular region ``[v*depth, (v+1)*depth)``; only the
    per-VC head and length registers are replicated.
    """

    def __init__(self, num_vcs: int, depth: int):
        super().__init__(num_vcs, depth)
        self.cells: list[Any] = [None] * (num_vcs * depth)
        self.head = [0] * num_vcs
        self.len = [0] * num_vcs

    def length(self, vc: int) -> int:
        return self.len[vc]

    def front(self, vc: int) -> Any:
        if self.len[vc] == 0:
            return None
        return self.cells[vc * self.depth + self.head[vc]]

    def contents(self, vc: int) -> list[Any]:
        base, h, d = vc * self.depth, self.head[vc], self.depth
        return [self.cells[base + (h + k) % d] for k in range(self.len[vc])]

    def _push(self, vc: int, value: Any) -> None:
        d = self.depth
        self.cells[vc * d + (self.head[vc] + self.len[vc]) % d] = value
        self.len[vc] += 1

    def _pop(self, vc: int) -> None:
        self.head[vc] = (self.head[vc] + 1) % self.depth
        self.len[vc] -= 1


class SeparateVcBuffer(_VcBuffer):
    """One independent front-readable FIFO per VC."""

    def __init__(self, num_vcs: int, depth: int):
        super().__init__(num_vcs, depth)
        self.fifos = [Fifo(depth) for _ in range(num_vcs)]

    def length(self, vc: int) -> int:
        return len(self.fifos[vc].entries)

    def front(self, vc: int) -> Any:
        return self.fifos[vc].front

    def contents(self, vc: int) -> list[Any]:
        return list(self.fifos[vc].entries)

    def _push(self, vc: int, value: Any) -> None:
        self.fifos[vc].push(value)

    def _pop(self, vc: int) -> None:
        self.fifos[vc].pop()


def packed_vc_buffer_step(state: PackedVcBuffer, enq: tuple[int, Any] | None = None, deq: int | None = None):
    new = copy.deepcopy(state)
    fronts, empties, fulls = new.step(enq, deq)
    return new, fronts, empties, fulls
