"""Custom allocators: region, per-class pool, stack heap and chunked mempool.

Each allocator takes a backing allocator (see :mod:`regionbench.backing`) and
a ``naive`` flag.  In naive mode every object request is forwarded to the
backing allocator, using the cheapest fallback that keeps the allocator's
interface intact:

=============  ==============================================================
Region         one chunk per object, so ``reset``/``free_to`` still bulk-free
ClassPool      freelist removed, ``allocate``/``free`` forward directly
StackHeap      ``allocate``/``free`` forward directly
MemPool        live objects tracked in a hash set for ``iterate``/``teardown``
=============  ==============================================================

Addresses are plain integers; ``0`` is never a valid address and doubles as
the empty-list sentinel.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable

from .backing import ALIGNMENT, BackingAllocator, align_up
from .errors import AllocationError, InvalidFreeError, InvalidMarkError

DEFAULT_CHUNK_SIZE = 65536
MAX_GROWN_CHUNK = 1 << 20
STACK_HEADER = 16
DEFAULT_STACK_CAPACITY = 64 << 20


class Chunk:
    """One backing allocation subdivided by bumping ``used``."""

    __slots__ = ("base", "capacity", "used")

    def __init__(self, base: int, capacity: int, used: int = 0):
        self.base = base
        self.capacity = capacity
        self.used = used

    @property
    def available(self) -> int:
        return self.capacity - self.used

    def __contains__(self, address: int) -> bool:
        return self.base <= address < self.base + self.used

    def __repr__(self) -> str:
        return f"Chunk(base={self.base:#x}, capacity={self.capacity}, used={self.used})"


@dataclass(slots=True)
class AllocatorStats:
    backing_allocs: int = 0
    backing_frees: int = 0
    allocations: int = 0
    frees: int = 0

    @property
    def outstanding_backing(self) -> int:
        return self.backing_allocs - self.backing_frees


class Region:
    """Chunked bump-pointer allocator with bulk reset and partial free.

    Objects are carved from the current chunk by bumping its cursor; when the
    request does not fit a fresh chunk is requested from the backing allocator
    and becomes current.  Requests larger than ``chunk_size`` get a dedicated
    chunk of exactly their (aligned) size.  With ``grow=True`` every new
    regular chunk doubles in size up to 1 MiB.
    """

    def __init__(
        self,
        backing: BackingAllocator,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        alignment: int = ALIGNMENT,
        grow: bool = False,
        naive: bool = False,
    ):
        if chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if alignment <= 0 or alignment & (alignment - 1):
            raise ValueError("alignment must be a power of two")
        self.backing = backing
        self.chunk_size = chunk_size
        self.alignment = alignment
        self.grow = grow
        self.naive = naive
        self.chunks: list[Chunk] = []
        self.stats = AllocatorStats()
        self._current: Chunk | None = None
        self._grown = 0

    @property
    def current_chunk(self) -> Chunk | None:
        return self._current

    def _next_chunk_size(self) -> int:
        if not self.grow:
            return self.chunk_size
        return min(self.chunk_size << self._grown, max(MAX_GROWN_CHUNK, self.chunk_size))

    def _new_chunk(self, capacity: int) -> Chunk:
        base = self.backing.allocate(capacity)
        self.stats.backing_allocs += 1
        chunk = Chunk(base, capacity)
        self.chunks.append(chunk)
        self._current = chunk
        return chunk

    def allocate(self, size: int) -> int:
        if size <= 0:
            raise ValueError(f"allocation size must be positive, got {size}")
        mask = self.alignment - 1
        need = (size + mask) & ~mask
        self.stats.allocations += 1
        if self.naive:
            chunk = self._new_chunk(need)
            chunk.used = need
            return chunk.base
        chunk = self._current
        if chunk is not None:
            addr = (chunk.base + chunk.used + mask) & ~mask
            if addr + need <= chunk.base + chunk.capacity:
                chunk.used = addr + need - chunk.base
                return addr
        capacity = self._next_chunk_size()
        if need > capacity:
            # dedicated chunk, left full so the next request opens a new one
            chunk = self._new_chunk(need)
            chunk.used = need
            return chunk.base
        if self.grow:
            self._grown += 1
        chunk = self._new_chunk(capacity)
        addr = (chunk.base + mask) & ~mask
        chunk.used = addr + need - chunk.base
        return addr

    def reset(self) -> None:
        """Return every chunk to the backing allocator."""
        # newest first, so LIFO backing bins come back in their old order
        for chunk in reversed(self.chunks):
            self.backing.free(chunk.base)
            self.stats.backing_frees += 1
        self.chunks.clear()
        self._current = None
        self._grown = 0

    def chunk_index(self, address: int) -> int:
        for i in range(len(self.chunks) - 1, -1, -1):
            if address in self.chunks[i]:
                return i
        raise InvalidMarkError(f"address {address:#x} is not inside any live chunk")

    def free_to(self, mark: int | None) -> None:
        """Free everything allocated at or after ``mark``.

        Chunks acquired after the one holding ``mark`` go back to the backing
        allocator and the holding chunk's cursor is rewound to ``mark``.
        ``None`` frees everything (same as :meth:`reset`).
        """
        if mark is None:
            self.reset()
            return
        idx = self.chunk_index(mark)
        for chunk in reversed(self.chunks[idx + 1:]):
            self.backing.free(chunk.base)
            self.stats.backing_frees += 1
        del self.chunks[idx + 1:]
        chunk = self.chunks[idx]
        if self.naive:
            # one object per chunk: the chunk holding mark goes too
            self.backing.free(chunk.base)
            self.stats.backing_frees += 1
            del self.chunks[idx]
            self._current = self.chunks[-1] if self.chunks else None
        else:
            chunk.used = mark - chunk.base
            self._current = chunk
        self._grown = len(self.chunks) if self.grow else 0

    def bytes_in_use(self) -> int:
        return sum(c.used for c in self.chunks)


class ClassPool:
    """Per-class allocator: one object size, freed slots kept on a freelist.

    The freelist is intrusive, the link to the next free slot lives in the
    first word of each freed object.  Double frees corrupt the list silently
    unless ``debug`` is set, which walks the list (O(n)) on every free.
    """

    def __init__(self, backing: BackingAllocator, object_size: int, naive: bool = False, debug: bool = False):
        if object_size < 8:
            raise ValueError("object_size must hold at least one address (8 bytes)")
        self.backing = backing
        self.object_size = object_size
        self.naive = naive
        self.debug = debug
        self.free_head = 0
        self.freelist_length = 0
        self.stats = AllocatorStats()
        self._owned: list[int] = []
        self._cells = backing.cells

    def allocate(self) -> int:
        self.stats.allocations += 1
        head = self.free_head
        if head and not self.naive:
            self.free_head = self._cells[head >> 3]
            self.freelist_length -= 1
            return head
        addr = self.backing.allocate(self.object_size)
        self.stats.backing_allocs += 1
        if not self.naive:
            self._owned.append(addr)
        return addr

    def free(self, obj: int) -> None:
        self.stats.frees += 1
        if self.naive:
            self.backing.free(obj)
            self.stats.backing_frees += 1
            return
        if self.debug:
            self._check_free(obj)
        self._cells[obj >> 3] = self.free_head
        self.free_head = obj
        self.freelist_length += 1

    def _check_free(self, obj: int) -> None:
        if obj not in self._owned:
            raise InvalidFreeError(f"{obj:#x} was not allocated by this pool")
        node = self.free_head
        while node:
            if node == obj:
                raise InvalidFreeError(f"double free of {obj:#x}")
            node = self._cells[node >> 3]

    def freelist(self) -> list[int]:
        out = []
        node = self.free_head
        while node:
            out.append(node)
            node = self._cells[node >> 3]
        return out

    def teardown(self) -> None:
        """Release every object this pool ever obtained, live or free."""
        for addr in self._owned:
            self.backing.free(addr)
            self.stats.backing_frees += 1
        self._owned.clear()
        self.free_head = 0
        self.freelist_length = 0


_LIVE = 1
_TAG = 0x5EA7 << 48
_TAG_MASK = 0xFFFF << 48
_SIZE_MASK = (1 << 48) - 1 - 15
_TAG_LIVE = _TAG | _LIVE


class StackHeap:
    """Fixed-buffer heap with stack-style rollback.

    Every object is preceded by a 16-byte header: word 0 holds the aligned
    size, a tag and the live bit, word 1 the address of the previous header.
    Freeing the topmost object rolls ``top`` back over all trailing dead
    objects, so space is reused only once everything allocated after it has
    been freed.
    """

    def __init__(self, backing: BackingAllocator, capacity: int = DEFAULT_STACK_CAPACITY, naive: bool = False):
        self.backing = backing
        self.capacity = capacity
        self.naive = naive
        self.stats = AllocatorStats()
        self._cells = backing.cells
        self._last = 0
        if naive:
            self.base = self.top = 0
            return
        self.base = backing.allocate(capacity)
        self.stats.backing_allocs += 1
        self.top = self.base

    @property
    def limit(self) -> int:
        return self.base + self.capacity if self.base else 0

    def allocate(self, size: int) -> int:
        if size <= 0:
            raise ValueError(f"allocation size must be positive, got {size}")
        self.stats.allocations += 1
        if self.naive:
            self.stats.backing_allocs += 1
            return self.backing.allocate(size)
        need = (size + 15) & ~15
        header = self.top
        obj = header + STACK_HEADER
        if obj + need > self.base + self.capacity:
            raise AllocationError(
                f"stack heap full: {need + STACK_HEADER} bytes requested, "
                f"{self.base + self.capacity - header} available"
            )
        cells = self._cells
        cells[header >> 3] = need | _TAG_LIVE
        cells[(header >> 3) + 1] = self._last
        self._last = header
        self.top = obj + need
        return obj

    def free(self, obj: int) -> None:
        self.stats.frees += 1
        if self.naive:
            self.stats.backing_frees += 1
            self.backing.free(obj)
            return
        header = obj - STACK_HEADER
        if obj & 15 or not self.base <= header < self.top:
            raise InvalidFreeError(f"{obj:#x} does not belong to this stack heap")
        cells = self._cells
        word = cells[header >> 3]
        if word & _TAG_MASK != _TAG or not word & _LIVE:
            raise InvalidFreeError(f"{obj:#x} is not a live stack-heap object")
        cells[header >> 3] = word ^ _LIVE
        if header != self._last:
            return
        # roll back over every trailing dead object
        last = cells[(header >> 3) + 1]
        top = header
        while last:
            if cells[last >> 3] & _LIVE:
                break
            top = last
            last = cells[(last >> 3) + 1]
        self._last = last
        self.top = top

    def objects(self) -> list[tuple[int, int, bool]]:
        """(address, aligned size, live) for every object below ``top``."""
        out = []
        h = self._last
        cells = self._cells
        while h:
            word = cells[h >> 3]
            out.append((h + STACK_HEADER, word & _SIZE_MASK, bool(word & _LIVE)))
            h = cells[(h >> 3) + 1]
        out.reverse()
        return out

    def teardown(self) -> None:
        if not self.naive and self.base:
            self.backing.free(self.base)
            self.stats.backing_frees += 1
            self.base = self.top = 0
            self._last = 0


_NEVER, _ALLOCATED, _FREED = 0, 1, 2


class MemPool:
    """Fixed-size object pool: chunks of ``objects_per_chunk`` slots plus a LIFO freelist.

    Supports iteration over live objects while the callback allocates and
    frees.  The walk goes chunk by chunk in acquisition order and slot by
    slot within a chunk; a slot is visited if it holds a live object at the
    moment the walk reaches it.
    """

    def __init__(
        self,
        backing: BackingAllocator,
        object_size: int,
        objects_per_chunk: int = 256,
        naive: bool = False,
        debug: bool = False,
    ):
        if object_size < 8:
            raise ValueError("object_size must hold at least one address (8 bytes)")
        if objects_per_chunk < 1:
            raise ValueError("objects_per_chunk must be positive")
        self.backing = backing
        self.object_size = object_size
        self.slot_size = align_up(object_size)
        self.objects_per_chunk = objects_per_chunk
        self.naive = naive
        self.debug = debug
        self.chunks: list[Chunk] = []
        self.free_head = 0
        self.freelist_length = 0
        self.live_count = 0
        self.stats = AllocatorStats()
        self._states: list[bytearray] = []
        self._bases: list[int] = []  # sorted chunk bases
        self._order: list[int] = []  # chunk index for each entry of _bases
        self._live: dict[int, None] = {}  # naive mode
        self._cells = backing.cells

    @property
    def total_slots(self) -> int:
        return len(self.chunks) * self.objects_per_chunk

    @property
    def unallocated_slots(self) -> int:
        if not self.chunks:
            return 0
        last = self.chunks[-1]
        return last.available // self.slot_size

    def _locate(self, obj: int) -> tuple[int, int]:
        i = bisect.bisect_right(self._bases, obj) - 1
        if i >= 0:
            ci = self._order[i]
            chunk = self.chunks[ci]
            offset = obj - chunk.base
            if offset < chunk.used and offset % self.slot_size == 0:
                return ci, offset // self.slot_size
        raise InvalidFreeError(f"{obj:#x} is not a slot of this pool")

    def allocate(self) -> int:
        self.stats.allocations += 1
        self.live_count += 1
        if self.naive:
            addr = self.backing.allocate(self.object_size)
            self.stats.backing_allocs += 1
            self._live[addr] = None
            return addr
        head = self.free_head
        if head:
            self.free_head = self._cells[head >> 3]
            self.freelist_length -= 1
            # head came off our own freelist, so the lookup cannot fail
            i = self._order[bisect.bisect_right(self._bases, head) - 1]
            self._states[i][(head - self.chunks[i].base) // self.slot_size] = _ALLOCATED
            return head
        chunk = self.chunks[-1] if self.chunks else None
        if chunk is None or chunk.used == chunk.capacity:
            chunk = self._new_chunk()
        addr = chunk.base + chunk.used
        self._states[-1][chunk.used // self.slot_size] = _ALLOCATED
        chunk.used += self.slot_size
        return addr

    def _new_chunk(self) -> Chunk:
        capacity = self.slot_size * self.objects_per_chunk
        try:
            base = self.backing.allocate(capacity)
        except AllocationError:
            self.live_count -= 1
            raise
        self.stats.backing_allocs += 1
        chunk = Chunk(base, capacity)
        pos = bisect.bisect_right(self._bases, base)
        self._bases.insert(pos, base)
        self._order.insert(pos, len(self.chunks))
        self.chunks.append(chunk)
        self._states.append(bytearray(self.objects_per_chunk))
        return chunk

    def free(self, obj: int) -> None:
        self.stats.frees += 1
        if self.naive:
            if self.debug and obj not in self._live:
                raise InvalidFreeError(f"{obj:#x} is not live in this pool")
            del self._live[obj]
            self.backing.free(obj)
            self.stats.backing_frees += 1
            self.live_count -= 1
            return
        i = bisect.bisect_right(self._bases, obj) - 1
        ci = self._order[i] if i >= 0 else -1
        offset = obj - self.chunks[ci].base if i >= 0 else -1
        if offset < 0 or offset >= self.chunks[ci].used or offset % self.slot_size:
            raise InvalidFreeError(f"{obj:#x} is not a slot of this pool")
        si = offset // self.slot_size
        states = self._states[ci]
        if self.debug and states[si] != _ALLOCATED:
            raise InvalidFreeError(f"double free of {obj:#x}")
        states[si] = _FREED
        self._cells[obj >> 3] = self.free_head
        self.free_head = obj
        self.freelist_length += 1
        self.live_count -= 1

    def iterate(self, visit: Callable[[int], object]) -> int:
        """Call ``visit(address)`` for every live object; returns the number of visits."""
        count = 0
        if self.naive:
            live = self._live
            for addr in list(live):
                if addr in live:
                    visit(addr)
                    count += 1
            return count
        slot = self.slot_size
        ci = 0
        while ci < len(self.chunks):
            chunk = self.chunks[ci]
            states = self._states[ci]
            si = 0
            while si * slot < chunk.used:
                if states[si] == _ALLOCATED:
                    visit(chunk.base + si * slot)
                    count += 1
                si += 1
            ci += 1
        return count

    def live_objects(self) -> list[int]:
        out: list[int] = []
        self.iterate(out.append)
        return out

    def teardown(self) -> None:
        """Bulk-free the whole pool."""
        if self.naive:
            for addr in self._live:
                self.backing.free(addr)
                self.stats.backing_frees += 1
            self._live.clear()
        else:
            for chunk in reversed(self.chunks):
                self.backing.free(chunk.base)
                self.stats.backing_frees += 1
            self.chunks.clear()
            self._states.clear()
            self._bases.clear()
            self._order.clear()
            self.free_head = 0
            self.freelist_length = 0
        self.live_count = 0


ALLOCATOR_KINDS = {
    "region": Region,
    "class": ClassPool,
    "stack": StackHeap,
    "mempool": MemPool,
}


def make_allocator(kind: str, backing: BackingAllocator, naive: bool = False, **kwargs):
    """Build an allocator by kind name, in custom or naive mode."""
    try:
        cls = ALLOCATOR_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown allocator kind {kind!r}; expected one of {sorted(ALLOCATOR_KINDS)}") from None
    return cls(backing, naive=naive, **kwargs)
