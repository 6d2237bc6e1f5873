"""Round-robin arbitration and separable input-first allocation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RoundRobinState:
    size: int
    pointer: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("arbiter size must be positive")
        if not 0 <= self.pointer < self.size:
            raise ValueError(f"pointer {self.pointer} outside [0, {self.size})")


def rr_pick(requests: Sequence, pointer: int) -> int | None:
    """Index of the first truthy request at or after ``pointer``, wrapping."""
    n = len(requests)
    for k in range(pointer, n):
        if requests[k]:
            return k
    for k in range(pointer):
        if requests[k]:
            return k
    return None


def rr_arbitrate(requests: Sequence[bool], state: RoundRobinState) -> tuple[int | None, RoundRobinState]:
    """Grant one requester; the pointer moves just past the winner."""
    if len(requests) != state.size:
        raise DimensionMismatch(f"{len(requests)} requests for an arbiter of size {state.size}")
    g = rr_pick(requests, state.pointer)
    if g is None:
        return None, state
    return g, RoundRobinState(state.size, (g + 1) % state.size)


# requests[i][v] -> requested output, or None
AllocRequestMatrix = Sequence[Sequence[Optional[int]]]


@dataclass(frozen=True)
class AllocGrantMatrix:
    by_input: tuple[tuple[int, int] | None, ...]  # (vc, output)
    by_output: tuple[int | None, ...]  # input

    @property
    def count(self) -> int:
        return sum(g is not None for g in self.by_input)


def allocate_inplace(
    reqs: AllocRequestMatrix, in_ptrs: list[int], out_ptrs: list[int]
) -> tuple[list, list]:
    """Allocation core used by the router; advances the pointer lists in place.

    Returns ``(by_input, by_output)`` lists.
    """
    num_in = len(reqs)
    num_out = len(out_ptrs)
    # stage 1: per-input VC arbitration
    winner_vc = [None] * num_in
    bids: list[list[int]] = [[] for _ in range(num_out)]
    for i in range(num_in):
        row = reqs[i]
        n = len(row)
        p = in_ptrs[i]
        for k in range(n):
            v = p + k
            if v >= n:
                v -= n
            if row[v] is not None:
                winner_vc[i] = v
                bids[row[v]].append(i)
                break
    # stage 2: per-output input arbitration
    by_input: list = [None] * num_in
    by_output: list = [None] * num_out
    for o in range(num_out):
        contenders = bids[o]
        if not contenders:
            continue
        if len(contenders) == 1:
            i = contenders[0]
        else:
            # contenders are in ascending order: take the first at or past the pointer
            p = out_ptrs[o]
            i = next((c for c in contenders if c >= p), contenders[0])
        by_output[o] = i
        v = winner_vc[i]
        by_input[i] = (v, o)
        out_ptrs[o] = (i + 1) % num_in
        in_ptrs[i] = (v + 1) % len(reqs[i])
    return by_input, by_output


def allocate_separable_input_first(
    reqs: AllocRequestMatrix,
    input_states: Sequence[RoundRobinState],
    output_states: Sequence[RoundRobinState],
) -> tuple[AllocGrantMatrix, list[RoundRobinState], list[RoundRobinState]]:
    """Two-stage allocation: one VC per input, then one input per output.

    An input arbiter only advances when its stage-1 winner also wins stage 2,
    so a VC that loses at the output keeps its turn.
    """
    num_in, num_out = len(input_states), len(output_states)
    if len(reqs) != num_in:
        raise DimensionMismatch(f"{len(reqs)} request rows for {num_in} input arbiters")
    for i, row in enumerate(reqs):
        if len(row) != input_states[i].size:
            raise DimensionMismatch(f"input {i}: {len(row)} VCs for arbiter of size {input_states[i].size}")
        for o in row:
            if o is not None and not 0 <= o < num_out:
                raise DimensionMismatch(f"input {i} requests output {o}; only {num_out} outputs")
    for s in output_states:
        if s.size != num_in:
            raise DimensionMismatch(f"output arbiter of size {s.size} for {num_in} inputs")
    in_ptrs = [s.pointer for s in input_states]
    out_ptrs = [s.pointer for s in output_states]
    by_input, by_output = allocate_inplace(reqs, in_ptrs, out_ptrs)
    return (
        AllocGrantMatrix(tuple(by_input), tuple(by_output)),
        [RoundRobinState(s.size, p) for s, p in zip(input_states, in_ptrs)],
        [RoundRobinState(s.size, p) for s, p in zip(output_states, out_ptrs)],
    )
