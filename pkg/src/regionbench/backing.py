"""Backing (general-purpose) allocators.

Every custom allocator in :mod:`regionbench.core` obtains its memory from a
*backing* allocator through two calls, ``allocate(size) -> address`` and
``free(address)``.  The default backing is :class:`SimulatedHeap`, a
deterministic size-class segregated heap laid out in one numpy byte arena, so
addresses are reproducible integers and the workloads can chase real pointers
stored in that arena.  :class:`CountingBacking` wraps any backing to keep the
operation ledger used by the tests and the benchmark reports.
"""

from __future__ import annotations

import heapq
from typing import Protocol

import numpy as np

from .errors import AllocationError, InvalidFreeError

ALIGNMENT = 16
WORD = 8


def align_up(size: int, alignment: int = ALIGNMENT) -> int:
    return (size + alignment - 1) & ~(alignment - 1)


class BackingAllocator(Protocol):
    identity: str
    memory: np.ndarray
    cells: memoryview  # the arena as unsigned 64-bit words

    def allocate(self, size: int) -> int: ...

    def free(self, address: int) -> None: ...

    def load_word(self, address: int) -> int: ...

    def store_word(self, address: int, value: int) -> None: ...


class SimulatedHeap:
    """A size-class segregated heap over a flat byte arena.

    Each block carries a 16-byte header just before the user address holding
    the block size and an in-use bit.  Blocks up to ``small_limit`` bytes are
    recycled through exact-size bins and never coalesced; larger blocks go to
    a best-fit free list that coalesces neighbours and gives memory back to
    the top when possible.  New memory is carved from the top of the arena.

    ``reuse`` picks the order in which a small bin hands back freed blocks:
    ``"address"`` (default) returns the lowest free address first, as slab
    allocators such as jemalloc do, so a heap whose blocks were all freed is
    refilled contiguously while a sparsely freed one yields scattered blocks.
    ``"lifo"`` returns the most recently freed block, like glibc's tcache and
    fastbins.
    """

    HEADER = 16
    MIN_BLOCK = 32

    def __init__(
        self,
        capacity: int = 256 << 20,
        small_limit: int = 1024,
        base: int = 4096,
        reuse: str = "address",
    ):
        if capacity <= base:
            raise ValueError("capacity must exceed the arena base offset")
        if reuse not in ("address", "lifo"):
            raise ValueError(f"reuse must be 'address' or 'lifo', got {reuse!r}")
        self.reuse = reuse
        self.identity = f"simulated-segregated-fit/{reuse}"
        self._pop = heapq.heappop if reuse == "address" else list.pop
        self._push = heapq.heappush if reuse == "address" else list.append
        self.capacity = capacity
        self.small_limit = small_limit
        self.base = base
        # np.zeros maps lazily, so untouched capacity costs nothing
        self.memory = np.zeros(capacity, dtype=np.uint8)
        self.words = self.memory.view(np.uint64)
        self.cells = memoryview(self.memory).cast("Q")
        self._top = base
        self._bins: dict[int, list[int]] = {}
        self._large: dict[int, int] = {}  # block start -> block size
        self._large_ends: dict[int, int] = {}  # block end -> block start

    @property
    def top(self) -> int:
        return self._top

    @property
    def high_water(self) -> int:
        return self._top - self.base

    def load_word(self, address: int) -> int:
        return self.cells[address >> 3]

    def store_word(self, address: int, value: int) -> None:
        self.cells[address >> 3] = value

    def usable_size(self, address: int) -> int:
        return (self.cells[(address - 16) >> 3] & ~15) - self.HEADER

    def allocate(self, size: int) -> int:
        if size <= 0:
            raise ValueError(f"allocation size must be positive, got {size}")
        block = (size + 31) & ~15
        if block <= self.small_limit:
            stack = self._bins.get(block)
            if stack:
                addr = self._pop(stack)
                self.cells[(addr - 16) >> 3] = block | 1
                return addr
        elif self._large:
            start = self._take_large(block)
            if start is not None:
                return start + 16
        start = self._top
        if start + block > self.capacity:
            raise AllocationError(
                f"simulated heap exhausted: need {block} bytes, "
                f"{self.capacity - start} left of {self.capacity}"
            )
        self._top = start + block
        self.cells[start >> 3] = block | 1
        return start + 16

    def free(self, address: int) -> None:
        if address < self.base + 16 or address >= self._top or address & 15:
            raise InvalidFreeError(f"address {address:#x} was not returned by this heap")
        slot = (address - 16) >> 3
        header = self.cells[slot]
        if not header & 1:
            raise InvalidFreeError(f"double free of {address:#x}")
        block = header & ~15
        self.cells[slot] = block
        if block <= self.small_limit:
            stack = self._bins.get(block)
            if stack is None:
                self._bins[block] = [address]
            else:
                self._push(stack, address)
        else:
            self._release_large(address - 16, block)

    # -- large blocks -------------------------------------------------------

    def _take_large(self, block: int) -> int | None:
        best = None
        best_size = 0
        for start, bsize in self._large.items():
            if bsize >= block and (best is None or bsize < best_size or (bsize == best_size and start < best)):
                best, best_size = start, bsize
        if best is None:
            return None
        del self._large[best]
        del self._large_ends[best + best_size]
        rest = best_size - block
        if rest >= self.MIN_BLOCK:
            self.cells[best >> 3] = block | 1
            tail = best + block
            if rest <= self.small_limit:
                self.cells[tail >> 3] = rest
                self._push(self._bins.setdefault(rest, []), tail + 16)
            else:
                self.cells[tail >> 3] = rest
                self._large[tail] = rest
                self._large_ends[tail + rest] = tail
        else:
            self.cells[best >> 3] = best_size | 1
        return best

    def _release_large(self, start: int, block: int) -> None:
        prev = self._large_ends.pop(start, None)
        if prev is not None:
            block += self._large.pop(prev)
            start = prev
        end = start + block
        nxt = self._large.pop(end, None)
        if nxt is not None:
            del self._large_ends[end + nxt]
            block += nxt
            end = start + block
        if end == self._top:
            self._top = start
            return
        self.cells[start >> 3] = block
        self._large[start] = block
        self._large_ends[end] = start


class CountingBacking:
    """Pass-through shim that keeps a ledger of backing operations.

    ``allocs``/``frees``/``bytes_allocated`` are cumulative; ``outstanding``
    maps each live address to its requested size, so a balanced run ends with
    an empty mapping.  Set ``log`` to keep the full operation sequence.
    """

    def __init__(self, inner: BackingAllocator | None = None, log: bool = False):
        self.inner = inner if inner is not None else SimulatedHeap()
        self.identity = self.inner.identity
        self.memory = self.inner.memory
        self.cells = self.inner.cells
        self.load_word = self.inner.load_word
        self.store_word = self.inner.store_word
        self.allocs = 0
        self.frees = 0
        self.bytes_allocated = 0
        self.outstanding: dict[int, int] = {}
        self.log: list[tuple] | None = [] if log else None

    @property
    def words(self):
        return self.inner.words

    def allocate(self, size: int) -> int:
        addr = self.inner.allocate(size)
        self.allocs += 1
        self.bytes_allocated += size
        self.outstanding[addr] = size
        if self.log is not None:
            self.log.append(("alloc", size, addr))
        return addr

    def free(self, address: int) -> None:
        if address not in self.outstanding:
            raise InvalidFreeError(f"address {address:#x} is not outstanding in this ledger")
        self.inner.free(address)
        del self.outstanding[address]
        self.frees += 1
        if self.log is not None:
            self.log.append(("free", address))

    def snapshot(self) -> tuple[int, int, int]:
        return self.allocs, self.frees, self.bytes_allocated

    def delta(self, since: tuple[int, int, int]) -> tuple[int, int, int]:
        a, f, b = since
        return self.allocs - a, self.frees - f, self.bytes_allocated - b
