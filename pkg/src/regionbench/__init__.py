"""Custom memory allocators and an adversarial-allocation benchmark harness."""

from .adversary import PRESETS, AdversarialConfig, precondition, sample_random_size, sample_sizes, shuffle
from .backing import CountingBacking, SimulatedHeap
from .core import ClassPool, MemPool, Region, StackHeap, make_allocator
from .errors import (
    AccountingError,
    AllocationError,
    AnalysisError,
    ComparisonError,
    InvalidFreeError,
    InvalidMarkError,
    PreconditioningError,
    ProfileFormatError,
    RegionBenchError,
    SamplingError,
    WorkloadError,
)
from .harness import measure, profile_workload, sweep
from .locality import LocalityReport, analyze_trace, sweep_occupancy
from .profile import AllocationProfile, ProfilingBacking, load_profile, save_profile
from .report import RunReport, compare
from .workloads import WORKLOADS, WorkloadSpec, default_spec, run_workload

__version__ = "0.1.0"
