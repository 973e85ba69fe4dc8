"""Exception hierarchy shared by the allocators and the harness."""


class RegionBenchError(Exception):
    """Base class for every error raised by this package."""


class AllocationError(RegionBenchError, MemoryError):
    """The backing allocator (or a fixed buffer) cannot satisfy a request."""


class InvalidFreeError(RegionBenchError, ValueError):
    """An address was freed that is not live or not owned by the allocator."""


class InvalidMarkError(RegionBenchError, ValueError):
    """A partial-free mark does not lie inside any live region chunk."""


class AccountingError(RegionBenchError):
    """Instrumentation counters went inconsistent (e.g. more frees than allocations)."""


class SamplingError(RegionBenchError, ValueError):
    """Sampling from an empty size distribution."""


class ProfileFormatError(RegionBenchError, ValueError):
    """A profile, spec or report file could not be parsed or validated."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class PreconditioningError(RegionBenchError):
    """Heap preconditioning failed before any measurement started."""


class WorkloadError(RegionBenchError):
    """A workload failed while running; carries the workload name."""

    def __init__(self, workload, message):
        self.workload = workload
        super().__init__(f"workload {workload!r}: {message}")


class ComparisonError(RegionBenchError, ValueError):
    """Reports cannot be compared (different workloads, missing baseline)."""


class AnalysisError(RegionBenchError, ValueError):
    """A locality analysis was asked for on an empty or malformed trace."""
