"""Allocation profiling: size distribution and peak live-allocation count.

The profile is the first of the two adversarial-allocation phases.  A
:class:`ProfilingBacking` sits between a workload and its backing allocator
and feeds every request into an :class:`AllocationProfile`.

File format (text, one record per line)::

    # regionbench allocation profile v1
    cutoff 4096
    peak_live 2
    16 2
    32 1

Lines starting with ``#`` are comments.  Size lines are written in ascending
size order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AccountingError, ProfileFormatError

DEFAULT_CUTOFF = 4096
HEADER = "# regionbench allocation profile v1"


@dataclass
class AllocationProfile:
    """Exact-size allocation histogram (sizes below ``cutoff``) plus live-count peak."""

    counts: Counter = field(default_factory=Counter)
    cutoff: int = DEFAULT_CUTOFF
    peak_live: int = 0
    live: int = 0
    total_observed: int = 0

    @property
    def total_recorded(self) -> int:
        return sum(self.counts.values())

    def __bool__(self) -> bool:
        return bool(self.counts)

    def record_allocation(self, size: int) -> None:
        if size <= 0:
            raise ValueError(f"allocation size must be positive, got {size}")
        if size < self.cutoff:
            self.counts[size] += 1
        self.total_observed += 1
        self.live += 1
        if self.live > self.peak_live:
            self.peak_live = self.live

    def record_free(self) -> None:
        if self.live <= 0:
            raise AccountingError("free recorded with no live allocations (mismatched instrumentation)")
        self.live -= 1

    def binned(self, bins=None) -> dict[int, int]:
        """Counts grouped by size-class upper bound (powers of two from 8 by default)."""
        if bins is None:
            bins = []
            b = 8
            while b < self.cutoff:
                bins.append(b)
                b *= 2
            bins.append(self.cutoff)
        out = {b: 0 for b in bins}
        for size, n in self.counts.items():
            for b in bins:
                if size <= b:
                    out[b] += n
                    break
        return out

    def same_as(self, other: "AllocationProfile") -> bool:
        return (
            dict(self.counts) == dict(other.counts)
            and self.cutoff == other.cutoff
            and self.peak_live == other.peak_live
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, AllocationProfile):
            return NotImplemented
        return self.same_as(other)


class ProfilingBacking:
    """Backing wrapper that records every request into a profile."""

    def __init__(self, inner, profile: AllocationProfile | None = None):
        self.inner = inner
        self.profile = profile if profile is not None else AllocationProfile()
        self.identity = inner.identity
        self.memory = inner.memory
        self.cells = inner.cells
        self.load_word = inner.load_word
        self.store_word = inner.store_word

    @property
    def words(self):
        return self.inner.words

    def allocate(self, size: int) -> int:
        addr = self.inner.allocate(size)
        self.profile.record_allocation(size)
        return addr

    def free(self, address: int) -> None:
        self.inner.free(address)
        self.profile.record_free()


def dumps_profile(profile: AllocationProfile) -> str:
    lines = [HEADER, f"cutoff {profile.cutoff}", f"peak_live {profile.peak_live}"]
    lines += [f"{size} {profile.counts[size]}" for size in sorted(profile.counts)]
    return "\n".join(lines) + "\n"


def save_profile(profile: AllocationProfile, path) -> None:
    Path(path).write_text(dumps_profile(profile))


def loads_profile(text: str, path=None) -> AllocationProfile:
    cutoff = None
    peak = None
    counts: Counter = Counter()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ProfileFormatError(f"expected two fields, got {raw!r}", path, lineno)
        key, value = parts
        try:
            number = int(value)
        except ValueError:
            raise ProfileFormatError(f"not an integer: {value!r}", path, lineno) from None
        if key == "cutoff":
            if number <= 0:
                raise ProfileFormatError("cutoff must be positive", path, lineno)
            cutoff = number
        elif key == "peak_live":
            if number < 0:
                raise ProfileFormatError("peak_live must be non-negative", path, lineno)
            peak = number
        else:
            try:
                size = int(key)
            except ValueError:
                raise ProfileFormatError(f"unknown key {key!r}", path, lineno) from None
            if size <= 0:
                raise ProfileFormatError(f"size must be positive, got {size}", path, lineno)
            if number < 0:
                raise ProfileFormatError(f"negative count {number} for size {size}", path, lineno)
            if size in counts:
                raise ProfileFormatError(f"duplicate size {size}", path, lineno)
            if cutoff is not None and size >= cutoff:
                raise ProfileFormatError(f"size {size} is not below cutoff {cutoff}", path, lineno)
            if number:
                counts[size] = number
    if cutoff is None or peak is None:
        raise ProfileFormatError("missing 'cutoff' or 'peak_live' header line", path)
    bad = [s for s in counts if s >= cutoff]
    if bad:
        raise ProfileFormatError(f"size {min(bad)} is not below cutoff {cutoff}", path)
    return AllocationProfile(counts=counts, cutoff=cutoff, peak_live=peak)


def load_profile(path) -> AllocationProfile:
    return loads_profile(Path(path).read_text(), path=path)
