"""Desk-scale synthetic workloads, each runnable in ``custom`` or ``naive`` mode.

Every workload derives its object values and its operation sequence from the
spec seed alone, so the checksum it returns does not depend on which
allocator (or which addresses) served the objects.  That is the property the
mode-transparency checks rely on.

==============  ===========  ==================================================
name            allocator    pattern
==============  ===========  ==================================================
list-churn      Region       build a linked list, pointer-chase it repeatedly
stack-parse     StackHeap    nested, mostly-LIFO alloc/free (parser-like)
pool-churn      MemPool      working set, partial churn, iterate all live
region-phases   Region       K phases of batch alloc, traverse, bulk reset
class-churn     ClassPool    single-size free/allocate churn microbenchmark
==============  ===========  ==================================================
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels as K
from .adversary import make_rng, sample_sizes
from .core import DEFAULT_CHUNK_SIZE, ClassPool, MemPool, Region, StackHeap
from .errors import AllocationError, ProfileFormatError, WorkloadError
from .profile import AllocationProfile, load_profile

MODES = ("custom", "naive")
NODE_HEADER = 16  # next pointer + payload word


@dataclass
class WorkloadSpec:
    name: str
    object_count: int = 100_000
    object_size: int = 32
    size_profile: AllocationProfile | None = None
    traversal_passes: int = 10
    churn_ratio: float = 0.0
    seed: int = 0
    phases: int = 1
    depth: int = 64
    objects_per_chunk: int = 256
    chunk_size: int = DEFAULT_CHUNK_SIZE
    stack_capacity: int = 64 << 20
    profile_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.object_count < 0:
            raise ValueError("object_count must be non-negative")
        if self.object_size <= 0:
            raise ValueError("object_size must be positive")
        if self.traversal_passes < 0 or self.phases < 0:
            raise ValueError("traversal_passes and phases must be non-negative")
        if not 0.0 <= self.churn_ratio <= 1.0:
            raise ValueError("churn_ratio must lie in [0, 1]")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    def with_(self, **changes) -> "WorkloadSpec":
        return replace(self, **changes)

    def sizes(self, rng: np.random.Generator, k: int) -> np.ndarray:
        if self.size_profile is not None:
            return sample_sizes(self.size_profile, rng, k)
        return np.full(k, self.object_size, dtype=np.int64)


@dataclass
class WorkloadResult:
    checksum: int
    trace: np.ndarray
    trace_sizes: np.ndarray | int
    info: dict = field(default_factory=dict)


def _words(backing) -> np.ndarray:
    return backing.memory.view(np.int64)


def _wrap(name: str, exc: AllocationError) -> WorkloadError:
    return WorkloadError(name, f"allocation failed: {exc}")


# -- list-churn ---------------------------------------------------------------

def run_list_churn(spec: WorkloadSpec, mode: str, backing) -> WorkloadResult:
    """Linked list built in a region (or one object per chunk), then chased.

    With ``churn_ratio > 0`` a fraction of the nodes is replaced by freshly
    allocated copies before every pass after the first; replaced nodes stay
    dead in the region until the final reset.
    """
    _check_mode(mode)
    n = spec.object_count
    rng = make_rng(spec.seed)
    sizes = spec.sizes(rng, n)
    if n and sizes.min() < NODE_HEADER:
        raise ValueError(f"list nodes need at least {NODE_HEADER} bytes, got {int(sizes.min())}")
    values = rng.integers(0, 1 << 62, size=n, dtype=np.int64)
    region = Region(backing, chunk_size=spec.chunk_size, naive=mode == "naive")
    allocate = region.allocate
    try:
        addrs = np.fromiter((allocate(s) for s in sizes.tolist()), dtype=np.int64, count=n)
        words = _words(backing)
        K.link_list(words, addrs, values)
        h = K.FNV_OFFSET
        churned = 0
        for p in range(spec.traversal_passes):
            if p and spec.churn_ratio and n:
                k = int(round(spec.churn_ratio * n))
                picks = np.sort(rng.choice(n, size=k, replace=False))
                for i in picks.tolist():
                    addrs[i] = allocate(int(sizes[i]))
                values[picks] = (values[picks] * 31 + p) & ((1 << 62) - 1)
                K.link_list(words, addrs, values)
                churned += k
            head = int(addrs[0]) if n else 0
            h = K.fold(h, int(K.chase(words, head, 1)))
        trace = np.zeros(n, dtype=np.int64)
        if n:
            K.walk(words, int(addrs[0]), trace)
    except AllocationError as exc:
        raise _wrap(spec.name, exc) from exc
    finally:
        info = {"chunks": len(region.chunks), "backing_allocs": region.stats.backing_allocs}
        region.reset()
    info["churned"] = churned
    return WorkloadResult(0 if n == 0 else h, trace, sizes if spec.size_profile is not None else spec.object_size, info)


# -- stack-parse --------------------------------------------------------------

def stack_ops(spec: WorkloadSpec) -> list[tuple]:
    """Deterministic op sequence: ("a", size, value) or ("f", depth_index)."""
    r = random.Random(spec.seed)
    ops: list[tuple] = []
    live = 0
    allocated = 0
    while allocated < spec.object_count:
        if live and (live >= spec.depth or r.random() < 0.45):
            if live > 1 and spec.churn_ratio and r.random() < spec.churn_ratio:
                ops.append(("f", r.randrange(live - 1)))
            else:
                ops.append(("f", live - 1))
            live -= 1
        else:
            ops.append(("a", r.randint(1, 8) * 16, r.getrandbits(62)))
            live += 1
            allocated += 1
    while live:
        live -= 1
        ops.append(("f", live))
    return ops


def run_stack_parse(spec: WorkloadSpec, mode: str, backing, ops: list[tuple] | None = None) -> WorkloadResult:
    """Phrase-like nested allocation against a StackHeap (custom) or malloc/free (naive)."""
    _check_mode(mode)
    if ops is None:
        ops = stack_ops(spec)
    try:
        heap = StackHeap(backing, capacity=spec.stack_capacity, naive=mode == "naive")
    except AllocationError as exc:
        raise _wrap(spec.name, exc) from exc
    load, store = backing.load_word, backing.store_word
    h = K.FNV_OFFSET
    live: list[int] = []
    trace: list[int] = []
    peak_top = 0
    try:
        for op in ops:
            if op[0] == "a":
                addr = heap.allocate(op[1])
                store(addr, op[2])
                live.append(addr)
                trace.append(addr)
                if heap.top - heap.base > peak_top:
                    peak_top = heap.top - heap.base
            else:
                addr = live.pop(op[1])
                h = ((h ^ load(addr)) * K.FNV_PRIME) & K.MASK64
                heap.free(addr)
    except AllocationError as exc:
        raise WorkloadError(spec.name, f"stack heap too small for this spec ({exc}); raise stack_capacity") from exc
    info = {"final_top_offset": heap.top - heap.base, "peak_top_offset": peak_top,
            "backing_allocs": heap.stats.backing_allocs, "ops": len(ops)}
    heap.teardown()
    sizes = np.array([op[1] for op in ops if op[0] == "a"], dtype=np.int64)
    return WorkloadResult(h if ops else 0, np.array(trace, dtype=np.int64), sizes, info)


# -- pool-churn ---------------------------------------------------------------

def run_pool_churn(spec: WorkloadSpec, mode: str, backing) -> WorkloadResult:
    """Fixed-size working set in a MemPool with churn and full iterations.

    Pool iteration order is allocator-specific (slot order vs hash-set
    order), so each pass contributes an order-insensitive sum; passes are
    folded in order.
    """
    _check_mode(mode)
    n = spec.object_count
    r = random.Random(spec.seed)
    pool = MemPool(backing, spec.object_size, spec.objects_per_chunk, naive=mode == "naive")
    store = backing.store_word
    words = _words(backing)
    h = K.FNV_OFFSET
    visits = []
    try:
        live = []
        for _ in range(n):
            addr = pool.allocate()
            store(addr, r.getrandbits(62))
            live.append(addr)
        k = int(round(spec.churn_ratio * n))
        for p in range(spec.traversal_passes):
            if k:
                picks = r.sample(range(n), k)
                for i in picks:
                    pool.free(live[i])
                for i in picks:
                    addr = pool.allocate()
                    store(addr, r.getrandbits(62))
                    live[i] = addr
            seen: list[int] = []
            count = pool.iterate(seen.append)
            visits.append(count)
            h = K.fold(h, int(K.mixed_sum(words, np.array(seen, dtype=np.int64))))
    except AllocationError as exc:
        raise _wrap(spec.name, exc) from exc
    info = {"visits": visits, "chunks": len(pool.chunks), "backing_allocs": pool.stats.backing_allocs}
    pool.teardown()
    return WorkloadResult(h if n else 0, np.array(seen if spec.traversal_passes else [], dtype=np.int64),
                          pool.slot_size, info)


# -- region-phases ------------------------------------------------------------

def phase_sizes(spec: WorkloadSpec, phase: int) -> np.ndarray:
    rng = make_rng([spec.seed, phase])
    if spec.size_profile is not None:
        return sample_sizes(spec.size_profile, rng, spec.object_count)
    # small node-like sizes, 16 to 64 bytes in steps of 16
    return rng.integers(1, 5, size=spec.object_count) * 16


def run_region_phases(spec: WorkloadSpec, mode: str, backing) -> WorkloadResult:
    """Compiler-style phases: allocate a mixed-size batch, walk it, drop it all at once."""
    _check_mode(mode)
    region = Region(backing, chunk_size=spec.chunk_size, naive=mode == "naive")
    words = _words(backing)
    h = K.FNV_OFFSET
    chunk_counts = []
    addrs = np.empty(0, dtype=np.int64)
    sizes = addrs
    try:
        for phase in range(spec.phases):
            sizes = phase_sizes(spec, phase)
            rng = make_rng([spec.seed, phase, 1])
            values = rng.integers(0, 1 << 62, size=len(sizes), dtype=np.int64)
            allocate = region.allocate
            addrs = np.fromiter((allocate(s) for s in sizes.tolist()), dtype=np.int64, count=len(sizes))
            K.store_values(words, addrs, values)
            for _ in range(max(spec.traversal_passes, 1)):
                h = int(K.fold_values(words, addrs, np.uint64(h)))
            chunk_counts.append(len(region.chunks))
            region.reset()
    except AllocationError as exc:
        region.reset()
        raise _wrap(spec.name, exc) from exc
    info = {"chunks_per_phase": chunk_counts, "backing_allocs": region.stats.backing_allocs,
            "backing_frees": region.stats.backing_frees}
    checksum = h if spec.phases and spec.object_count else 0
    return WorkloadResult(checksum, addrs, sizes, info)


# -- class-churn --------------------------------------------------------------

def run_class_churn(spec: WorkloadSpec, mode: str, backing) -> WorkloadResult:
    """Free/allocate churn on one object size through a ClassPool (or forwarding)."""
    _check_mode(mode)
    n = spec.object_count
    r = random.Random(spec.seed)
    pool = ClassPool(backing, spec.object_size, naive=mode == "naive")
    load, store = backing.load_word, backing.store_word
    steps = n * max(spec.traversal_passes, 1)
    picks = [r.randrange(n) for _ in range(steps)] if n else []
    values = [r.getrandbits(62) for _ in range(n + steps)]
    h = K.FNV_OFFSET
    try:
        live = []
        for i in range(n):
            addr = pool.allocate()
            store(addr + 8, values[i])
            live.append(addr)
        allocate, free = pool.allocate, pool.free
        for step, i in enumerate(picks):
            old = live[i]
            h = ((h ^ load(old + 8)) * K.FNV_PRIME) & K.MASK64
            free(old)
            addr = allocate()
            store(addr + 8, values[n + step])
            live[i] = addr
        for addr in live:
            h = ((h ^ load(addr + 8)) * K.FNV_PRIME) & K.MASK64
            free(addr)
    except AllocationError as exc:
        raise _wrap(spec.name, exc) from exc
    info = {"backing_allocs": pool.stats.backing_allocs, "steps": steps}
    pool.teardown()
    return WorkloadResult(h if n else 0, np.array(live, dtype=np.int64), spec.object_size, info)


WORKLOADS: dict[str, Callable[..., WorkloadResult]] = {
    "list-churn": run_list_churn,
    "stack-parse": run_stack_parse,
    "pool-churn": run_pool_churn,
    "region-phases": run_region_phases,
    "class-churn": run_class_churn,
}

DEFAULT_SPECS = {
    "list-churn": WorkloadSpec("list-churn", object_count=100_000, object_size=32, traversal_passes=200),
    "stack-parse": WorkloadSpec("stack-parse", object_count=100_000, depth=64, churn_ratio=0.05),
    "pool-churn": WorkloadSpec("pool-churn", object_count=20_000, object_size=32, traversal_passes=5, churn_ratio=0.1),
    "region-phases": WorkloadSpec("region-phases", object_count=100_000, phases=3, traversal_passes=2),
    "class-churn": WorkloadSpec("class-churn", object_count=10_000, object_size=32, traversal_passes=10),
}


def default_spec(name: str, **changes) -> WorkloadSpec:
    try:
        spec = DEFAULT_SPECS[name]
    except KeyError:
        raise KeyError(f"unknown workload {name!r}; choose from {', '.join(WORKLOADS)}") from None
    return spec.with_(**changes) if changes else spec


def run_workload(spec: WorkloadSpec, mode: str, backing) -> WorkloadResult:
    try:
        fn = WORKLOADS[spec.name]
    except KeyError:
        raise KeyError(f"unknown workload {spec.name!r}; choose from {', '.join(WORKLOADS)}") from None
    return fn(spec, mode, backing)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


# -- spec files ---------------------------------------------------------------

_INT_KEYS = {"object_count", "object_size", "traversal_passes", "seed", "phases", "depth",
             "objects_per_chunk", "chunk_size", "stack_capacity"}


def dumps_spec(spec: WorkloadSpec) -> str:
    lines = ["# regionbench workload spec v1", f"name {spec.name}"]
    for key in sorted(_INT_KEYS):
        lines.append(f"{key} {getattr(spec, key)}")
    lines.append(f"churn_ratio {spec.churn_ratio!r}")
    if spec.profile_path:
        lines.append(f"size_profile {spec.profile_path}")
    return "\n".join(lines) + "\n"


def loads_spec(text: str, path=None) -> WorkloadSpec:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if not value:
            raise ProfileFormatError(f"missing value for {key!r}", path, lineno)
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key == "churn_ratio":
                values[key] = float(value)
            elif key == "name":
                if value not in WORKLOADS:
                    raise ProfileFormatError(f"unknown workload {value!r}", path, lineno)
                values[key] = value
            elif key == "size_profile":
                base = Path(path).parent if path else Path(".")
                values["profile_path"] = value
                values["size_profile"] = load_profile(base / value)
            else:
                raise ProfileFormatError(f"unknown key {key!r}", path, lineno)
        except ValueError as exc:
            if isinstance(exc, ProfileFormatError):
                raise
            raise ProfileFormatError(str(exc), path, lineno) from None
    if "name" not in values:
        raise ProfileFormatError("missing 'name' line", path)
    base = DEFAULT_SPECS[values["name"]]
    try:
        return base.with_(**values)
    except ValueError as exc:
        raise ProfileFormatError(str(exc), path) from None


def load_spec(path) -> WorkloadSpec:
    return loads_spec(Path(path).read_text(), path=path)
