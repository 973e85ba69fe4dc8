import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regionbench.backing import CountingBacking, SimulatedHeap
from regionbench.core import Region
from regionbench.errors import InvalidMarkError

from oracles import ceil_div, region_chunk_count, region_chunk_of


def test_first_allocation_at_chunk_base(backing):
    r = Region(backing, chunk_size=4096)
    a = r.allocate(16)
    assert a == r.chunks[0].base
    assert r.chunks[0].used == 16


def test_new_chunk_when_current_lacks_space(backing):
    r = Region(backing, chunk_size=4096, alignment=8)
    r.allocate(4088)
    assert r.current_chunk.available == 8
    a = r.allocate(16)
    assert len(r.chunks) == 2
    assert a == r.chunks[1].base
    assert backing.allocs == 2


def test_five_allocations_bump_by_sixteen(backing):
    r = Region(backing, chunk_size=4096)
    addrs = [r.allocate(16) for _ in range(5)]
    base = r.chunks[0].base
    assert [a - base for a in addrs] == [0, 16, 32, 48, 64]
    assert len(r.chunks) == 1


def test_alignment_padding(backing):
    r = Region(backing, chunk_size=4096)
    a = r.allocate(1)
    b = r.allocate(17)
    c = r.allocate(1)
    assert (b - a, c - b) == (16, 32)


def test_oversized_request_gets_dedicated_chunk(backing):
    r = Region(backing, chunk_size=4096)
    r.allocate(16)
    big = r.allocate(10_000)
    assert r.chunks[1].base == big and r.chunks[1].capacity == 10_000
    nxt = r.allocate(16)
    assert nxt == r.chunks[2].base


def test_reset_frees_every_chunk(backing):
    r = Region(backing, chunk_size=4096)
    for _ in range(3):
        r.allocate(4000)
    assert len(r.chunks) == 3
    r.reset()
    assert backing.frees == 3 and r.chunks == []
    assert not backing.outstanding


def test_reset_on_empty_region_is_silent(backing):
    r = Region(backing)
    r.reset()
    assert (backing.allocs, backing.frees) == (0, 0)


def test_reset_then_allocate_costs_one_backing_op(backing):
    r = Region(backing, chunk_size=4096)
    for _ in range(10):
        r.allocate(1000)
    r.reset()
    before = backing.allocs
    r.allocate(16)
    assert backing.allocs - before == 1


def test_free_to_rewinds_cursor(backing):
    r = Region(backing, chunk_size=4096)
    r.allocate(32)
    b = r.allocate(48)
    r.allocate(64)
    r.free_to(b)
    assert r.allocate(48) == b


def test_free_to_releases_later_chunks(backing):
    sizes = [1000] * 12  # four per 4096-byte chunk
    r = Region(backing, chunk_size=4096)
    addrs = [r.allocate(s) for s in sizes]
    owner = region_chunk_of(sizes, 4096)
    assert len(r.chunks) == owner[-1] + 1 == 3
    mark = addrs[owner.index(0) + 1]  # second object of chunk 0 (chunk "1" counting from one)
    frees = backing.frees
    r.free_to(mark)
    assert backing.frees - frees == 2
    assert len(r.chunks) == 1
    assert r.allocate(1000) == mark


def test_free_to_in_released_chunk_is_rejected(backing):
    r = Region(backing, chunk_size=4096)
    first = r.allocate(4000)
    later = r.allocate(4000)
    r.free_to(first)
    with pytest.raises(InvalidMarkError):
        r.free_to(later)


def test_free_to_none_means_everything(backing):
    r = Region(backing, chunk_size=4096)
    r.allocate(4000)
    r.allocate(4000)
    r.free_to(None)
    assert r.chunks == [] and backing.frees == 2


def test_growth_policy_doubles_to_cap(backing):
    r = Region(backing, chunk_size=65536, grow=True)
    for _ in range(60):
        r.allocate(60_000)
    caps = [c.capacity for c in r.chunks]
    assert caps[:5] == [65536, 131072, 262144, 524288, 1 << 20]
    assert max(caps) == 1 << 20


sizes_st = st.lists(st.integers(1, 512), min_size=1, max_size=400)


@settings(max_examples=60, deadline=None)
@given(sizes=sizes_st)
def test_contiguity_and_op_count(sizes):
    backing = CountingBacking(SimulatedHeap(capacity=8 << 20))
    r = Region(backing, chunk_size=4096)
    addrs = [r.allocate(s) for s in sizes]
    owner = region_chunk_of(sizes, 4096)
    assert backing.allocs == region_chunk_count(sizes, 4096) == len(r.chunks)
    # bound with waste allowance: every abandoned chunk wastes < one request
    aligned = [-(-s // 16) * 16 for s in sizes]
    assert backing.allocs <= ceil_div(sum(aligned) + len(r.chunks) * max(aligned), 4096)
    for i in range(1, len(sizes)):
        if owner[i] == owner[i - 1]:
            assert addrs[i] - addrs[i - 1] == aligned[i - 1]
    assert len(set(addrs)) == len(addrs)
    for a, ci in zip(addrs, owner):
        assert a in r.chunks[ci]
    r.reset()
    assert backing.frees == backing.allocs


@settings(max_examples=30, deadline=None)
@given(sizes=st.lists(st.integers(1, 64), min_size=1, max_size=2000))
def test_small_object_op_bound(sizes):
    backing = CountingBacking(SimulatedHeap(capacity=8 << 20))
    r = Region(backing, chunk_size=4096)
    for s in sizes:
        r.allocate(s)
    aligned = sum(-(-s // 16) * 16 for s in sizes)
    assert backing.allocs <= ceil_div(aligned, 4096) + 1
