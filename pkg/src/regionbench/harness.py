"""Profile -> precondition -> measure, for one configuration or a sweep."""

from __future__ import annotations

import gc
import logging
import time

from . import _kernels
from .adversary import AdversarialConfig, precondition
from .backing import CountingBacking, SimulatedHeap
from .errors import PreconditioningError, RegionBenchError
from .locality import DEFAULT_LINE_SIZE, analyze_trace
from .profile import AllocationProfile, ProfilingBacking
from .report import RunReport
from .workloads import WorkloadSpec, run_workload

log = logging.getLogger(__name__)

DEFAULT_REPS = 7
DEFAULT_HEAP = 1 << 30


def profile_workload(spec: WorkloadSpec, cutoff: int = 4096, heap_size: int = DEFAULT_HEAP) -> AllocationProfile:
    """Run ``spec`` once in naive mode with every object request recorded."""
    backing = ProfilingBacking(SimulatedHeap(capacity=heap_size), AllocationProfile(cutoff=cutoff))
    run_workload(spec, "naive", backing)
    return backing.profile


def measure(
    spec: WorkloadSpec,
    mode: str,
    adv: AdversarialConfig,
    profile: AllocationProfile | None = None,
    reps: int = DEFAULT_REPS,
    line_size: int = DEFAULT_LINE_SIZE,
    heap_size: int = DEFAULT_HEAP,
    reuse: str = "address",
) -> RunReport:
    """Precondition a fresh heap once, then time ``reps`` runs of the workload.

    All repetitions share the preconditioned heap.  Backing-operation counts
    come from the first repetition and must match on every later one.
    Raises :class:`PreconditioningError` or :class:`WorkloadError`.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    _kernels.warm_up()
    backing = CountingBacking(SimulatedHeap(capacity=heap_size, reuse=reuse))
    pre = precondition(adv, profile, backing)
    report = RunReport(
        workload=spec.name, mode=mode, adv=adv.label(), multiplier=float(adv.multiplier),
        occupancy=float(adv.occupancy), seed=adv.seed, precondition_allocs=pre.allocated,
        precondition_frees=pre.freed, line_size=line_size, chunk_size=spec.chunk_size,
        backing=backing.identity,
    )
    counts = None
    gc_was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for rep in range(reps):
            before = backing.snapshot()
            t0 = time.perf_counter()
            result = run_workload(spec, mode, backing)
            elapsed = time.perf_counter() - t0
            delta = backing.delta(before)
            report.times_s.append(elapsed)
            if counts is None:
                counts = delta
                report.checksum = result.checksum
                if len(result.trace):
                    loc = analyze_trace(result.trace, result.trace_sizes, line_size)
                    report.objects = loc.objects
                    report.unique_lines = loc.unique_lines
                    report.lines_per_object = loc.lines_per_object
                    report.mean_traversal_gap = loc.mean_traversal_gap
                    report.span = loc.span
            elif delta != counts or result.checksum != report.checksum:
                raise RegionBenchError(
                    f"repetition {rep} diverged: ops {delta} vs {counts}, "
                    f"checksum {result.checksum} vs {report.checksum}"
                )
    finally:
        if gc_was_enabled:
            gc.enable()
    report.backing_allocs, report.backing_frees, report.backing_bytes = counts
    log.info("%s/%s/%s median %.4fs", spec.name, mode, report.adv, report.median_s)
    return report


def sweep(
    spec: WorkloadSpec,
    mode: str,
    multiplier: float,
    occupancies,
    seeds=(0,),
    profile: AllocationProfile | None = None,
    **kwargs,
) -> list[RunReport]:
    """One report per (occupancy, seed); a failing cell is kept with its error text."""
    occupancies = list(occupancies)
    if not occupancies:
        raise ValueError("occupancy list is empty")
    if profile is None and multiplier > 0:
        profile = profile_workload(spec)
    rows = []
    for occ in occupancies:
        for seed in seeds:
            adv = AdversarialConfig(multiplier, occ, seed)
            cell = spec.with_(seed=seed)
            try:
                rows.append(measure(cell, mode, adv, profile, **kwargs))
            except (RegionBenchError, MemoryError) as exc:
                kind = "precondition" if isinstance(exc, PreconditioningError) else "workload"
                rows.append(RunReport(
                    workload=spec.name, mode=mode, adv=adv.label(), multiplier=float(multiplier),
                    occupancy=float(occ), seed=seed, chunk_size=spec.chunk_size,
                    line_size=kwargs.get("line_size", DEFAULT_LINE_SIZE),
                    error=f"{kind}: {exc}".replace("\n", " "),
                ))
    return rows
