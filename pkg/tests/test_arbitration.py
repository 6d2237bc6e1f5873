import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nocforge.arbitration import (
    DimensionMismatch,
    RoundRobinState,
    allocate_inplace,
    allocate_separable_input_first,
    rr_arbitrate,
)

from oracles import rr_oracle, separable_oracle


def test_no_request_keeps_pointer():
    g, s = rr_arbitrate([False] * 4, RoundRobinState(4, 2))
    assert g is None and s.pointer == 2


def test_single_requester():
    g, s = rr_arbitrate([False, False, True, False], RoundRobinState(4, 0))
    assert (g, s.pointer) == (2, 3)


def test_wraps_past_the_end():
    g, s = rr_arbitrate([True, True, False, True], RoundRobinState(4, 2))
    assert (g, s.pointer) == (3, 0)


def test_request_length_must_match():
    with pytest.raises(DimensionMismatch):
        rr_arbitrate([True], RoundRobinState(2))


@pytest.mark.parametrize("bad", [(0, 0), (3, 3), (3, -1)])
def test_state_validation(bad):
    with pytest.raises(ValueError):
        RoundRobinState(*bad)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_rr_matches_circular_scan_exhaustively(n):
    for bits in itertools.product([False, True], repeat=n):
        for p in range(n):
            g, s = rr_arbitrate(list(bits), RoundRobinState(n, p))
            assert (g, s.pointer) == rr_oracle(bits, p)


@settings(max_examples=300)
@given(st.integers(1, 16).flatmap(lambda n: st.tuples(st.lists(st.booleans(), min_size=n, max_size=n), st.integers(0, n - 1))))
def test_rr_matches_circular_scan_random(case):
    bits, p = case
    g, s = rr_arbitrate(bits, RoundRobinState(len(bits), p))
    assert (g, s.pointer) == rr_oracle(bits, p)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
@pytest.mark.parametrize("k", [1, 3])
def test_saturated_fairness(n, k):
    state = RoundRobinState(n, n // 2)
    counts = [0] * n
    for _ in range(k * n):
        g, state = rr_arbitrate([True] * n, state)
        counts[g] += 1
    assert counts == [k] * n


def test_allocator_single_request():
    grants, _, outs = allocate_separable_input_first(
        [[1, None], [None, None]], [RoundRobinState(2)] * 2, [RoundRobinState(2)] * 2
    )
    assert grants.by_input == ((0, 1), None)
    assert grants.by_output == (None, 0)
    assert grants.count == 1


def test_allocator_conflict_on_one_output():
    grants, ins, outs = allocate_separable_input_first(
        [[0, None], [0, None]], [RoundRobinState(2)] * 2, [RoundRobinState(2)] * 2
    )
    assert grants.by_input == ((0, 0), None)
    assert outs[0].pointer == 1
    # the loser's input arbiter did not move
    assert ins[1].pointer == 0


def test_allocator_disjoint_requests_all_granted():
    grants, _, _ = allocate_separable_input_first(
        [[None, 0], [1, None], [None, 2]], [RoundRobinState(2)] * 3, [RoundRobinState(3)] * 3
    )
    assert grants.count == 3


def test_allocator_dimension_checks():
    with pytest.raises(DimensionMismatch):
        allocate_separable_input_first([[0]], [RoundRobinState(1)] * 2, [RoundRobinState(2)])
    with pytest.raises(DimensionMismatch):
        allocate_separable_input_first([[5]], [RoundRobinState(1)], [RoundRobinState(1)])
    with pytest.raises(DimensionMismatch):
        allocate_separable_input_first([[0, 0]], [RoundRobinState(1)], [RoundRobinState(1)])


def check_legal(reqs, grants):
    outs_used = set()
    for i, g in enumerate(grants.by_input):
        if g is None:
            continue
        v, o = g
        assert reqs[i][v] == o, "granted something not requested"
        assert o not in outs_used, "output granted twice"
        outs_used.add(o)
        assert grants.by_output[o] == i
    assert sum(x is not None for x in grants.by_output) == len(outs_used)
    # an input that asked for nothing gets nothing
    for i, row in enumerate(reqs):
        if all(r is None for r in row):
            assert grants.by_input[i] is None

CONFIGS = [(2, 2, 2), (5, 2, 5), (5, 4, 5), (9, 2, 9), (4, 1, 3)]


@pytest.mark.parametrize("num_in,num_vc,num_out", CONFIGS)
def test_allocator_matches_oracle_and_is_legal(num_in, num_vc, num_out):
    rng = random.Random(num_in * 100 + num_vc * 10 + num_out)
    in_ptrs = [0] * num_in
    out_ptrs = [0] * num_out
    for _ in range(10_000):
        density = rng.random()
        reqs = [[rng.randrange(num_out) if rng.random() < density else None for _ in range(num_vc)] for _ in range(num_in)]
        want, want_in, want_out = separable_oracle(reqs, in_ptrs, out_ptrs)
        grants, ins, outs = allocate_separable_input_first(
            reqs, [RoundRobinState(num_vc, p) for p in in_ptrs], [RoundRobinState(num_in, p) for p in out_ptrs]
        )
        check_legal(reqs, grants)
        assert {i: g for i, g in enumerate(grants.by_input) if g is not None} == want
        in_ptrs, out_ptrs = [s.pointer for s in ins], [s.pointer for s in outs]
        assert (in_ptrs, out_ptrs) == (want_in, want_out)


def test_inplace_core_agrees_with_pure_form():
    rng = random.Random(3)
    ip, op = [0] * 5, [0] * 5
    for _ in range(500):
        reqs = [[rng.choice([None, 0, 1, 2, 3, 4]) for _ in range(2)] for _ in range(5)]
        grants, ins, outs = allocate_separable_input_first(
            reqs, [RoundRobinState(2, p) for p in ip], [RoundRobinState(5, p) for p in op]
        )
        by_input, by_output = allocate_inplace(reqs, ip, op)
        assert tuple(by_input) == grants.by_input and tuple(by_output) == grants.by_output
        assert ip == [s.pointer for s in ins] and op == [s.pointer for s in outs]


def test_allocator_every_output_served_when_possible():
    # each input asks for its own output on every VC: nothing can conflict
    reqs = [[o, o] for o in range(5)]
    grants, _, _ = allocate_separable_input_first(reqs, [RoundRobinState(2)] * 5, [RoundRobinState(5)] * 5)
    assert grants.count == 5
