"""Adversarial allocation: precondition the heap with synthetic fragmentation.

Given a recorded :class:`~regionbench.profile.AllocationProfile`, the
preconditioner allocates ``n = multiplier * peak_live`` objects with sizes
drawn from the profile, shuffles them uniformly, frees the first
``m = n * (1 - occupancy)`` and keeps the rest live for good.  Live and free
blocks end up interleaved across the heap, which is what a long-running
process leaves behind.

Randomness comes from numpy's PCG64 generator seeded with the config seed;
both the stream and ``Generator.shuffle`` (Fisher-Yates) are stable across
platforms for a given numpy major version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import AllocationError, PreconditioningError, SamplingError
from .profile import AllocationProfile

TOUCH_BYTE = 0xA5


@dataclass(frozen=True)
class AdversarialConfig:
    multiplier: float = 0.0
    occupancy: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.multiplier >= 0 and math.isfinite(self.multiplier)):
            raise ValueError(f"multiplier must be a finite non-negative number, got {self.multiplier}")
        if not 0.0 <= self.occupancy < 1.0:
            raise ValueError(f"occupancy must lie in [0, 1), got {self.occupancy}")

    @property
    def is_noop(self) -> bool:
        return self.multiplier == 0

    @classmethod
    def preset(cls, name: str, seed: int = 0) -> "AdversarialConfig":
        try:
            multiplier, occupancy = PRESETS[name.lower()]
        except KeyError:
            raise ValueError(f"unknown adversarial preset {name!r}; choose from {', '.join(PRESETS)}") from None
        return cls(multiplier, occupancy, seed)

    def counts(self, peak_live: int) -> tuple[int, int]:
        """Number of objects allocated (n) and freed (m) for a given peak."""
        n = round_half_up(Decimal(repr(float(self.multiplier))) * peak_live)
        m = round_half_up(n * (1 - Decimal(repr(float(self.occupancy)))))
        return n, m

    def label(self) -> str:
        for name, (mult, occ) in PRESETS.items():
            if self.multiplier == mult and (mult == 0 or self.occupancy == occ):
                return name
        return f"m{self.multiplier:g}-o{self.occupancy:g}"


# name -> (multiplier, occupancy); occupancy is irrelevant when multiplier is 0
PRESETS = {
    "adv0": (0, 0.0),
    "adv1": (1, 0.33),
    "adv3": (3, 0.66),
    "adv10": (10, 0.8),
}


def round_half_up(value) -> int:
    return int(Decimal(value).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _table(profile: AllocationProfile) -> tuple[np.ndarray, np.ndarray]:
    if not profile.counts:
        raise SamplingError("cannot sample from an empty allocation profile")
    sizes = np.array(sorted(profile.counts), dtype=np.int64)
    cum = np.cumsum([profile.counts[int(s)] for s in sizes], dtype=np.int64)
    return sizes, cum


def sample_sizes(profile: AllocationProfile, rng: np.random.Generator, k: int) -> np.ndarray:
    """Draw ``k`` sizes, each with probability proportional to its recorded count."""
    sizes, cum = _table(profile)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    draws = rng.integers(0, cum[-1], size=k)
    return sizes[np.searchsorted(cum, draws, side="right")]


def sample_random_size(profile: AllocationProfile, rng: np.random.Generator) -> int:
    return int(sample_sizes(profile, rng, 1)[0])


def shuffle(objects, rng: np.random.Generator) -> None:
    """Uniform in-place permutation (Fisher-Yates via ``Generator.shuffle``)."""
    if isinstance(objects, np.ndarray):
        rng.shuffle(objects)
        return
    arr = np.asarray(objects)
    rng.shuffle(arr)
    objects[:] = arr.tolist()


@dataclass
class Preconditioned:
    """Outcome of one preconditioning pass.

    ``live`` holds the surviving addresses; they are meant to stay allocated
    for the rest of the process.  ``survivors`` are their indices in
    allocation order.
    """

    config: AdversarialConfig
    allocated: int
    freed: int
    live: np.ndarray
    survivors: np.ndarray

    def release(self, backing) -> None:
        """Free the surviving objects; only leak-check tests should need this."""
        for addr in self.live.tolist():
            backing.free(addr)
        self.live = self.live[:0]


def precondition(config: AdversarialConfig, profile: AllocationProfile | None, backing, touch: bool = True) -> Preconditioned:
    """Allocate, shuffle and partially free objects on ``backing``."""
    empty = np.empty(0, dtype=np.int64)
    if config.is_noop:
        return Preconditioned(config, 0, 0, empty, empty)
    if profile is None or not profile.counts or profile.peak_live <= 0:
        raise PreconditioningError("a non-empty allocation profile is required when multiplier > 0")
    n, m = config.counts(profile.peak_live)
    rng = make_rng(config.seed)
    sizes = sample_sizes(profile, rng, n).tolist()
    allocate = backing.allocate
    objects = []
    try:
        for size in sizes:
            objects.append(allocate(size))
    except AllocationError as exc:
        raise PreconditioningError(
            f"backing allocator exhausted after {len(objects)} of {n} preconditioning allocations: {exc}"
        ) from exc
    order = np.arange(n, dtype=np.int64)
    shuffle(order, rng)
    addrs = np.array(objects, dtype=np.int64)[order]
    free = backing.free
    for addr in addrs[:m].tolist():
        free(addr)
    live = addrs[m:]
    if touch and len(live):
        backing.memory[live] = TOUCH_BYTE
    return Preconditioned(config, n, m, live, np.sort(order[m:]))
