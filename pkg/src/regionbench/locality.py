"""Locality proxies computed from traversal address traces.

These stand in for hardware cache-miss counters: they are exact, pure
functions of the addresses a workload touched, in the order it touched them.
Addresses are normalised to the trace minimum before lines are counted, so a
layout shifted by any offset reports the same numbers.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import AnalysisError

DEFAULT_LINE_SIZE = 64


@dataclass(frozen=True)
class LocalityReport:
    objects: int
    unique_lines: int
    lines_per_object: float
    mean_traversal_gap: float
    span: int
    line_size: int = DEFAULT_LINE_SIZE

    def to_dict(self) -> dict:
        return asdict(self)


def analyze_trace(trace, object_size, line_size: int = DEFAULT_LINE_SIZE) -> LocalityReport:
    """Summarise an ordered address trace.

    ``object_size`` is either one size for every object or an array aligned
    with ``trace``.
    """
    if line_size <= 0 or line_size & (line_size - 1):
        raise AnalysisError(f"line_size must be a power of two, got {line_size}")
    addrs = np.asarray(trace, dtype=np.int64)
    if addrs.ndim != 1 or addrs.size == 0:
        raise AnalysisError("cannot analyse an empty trace")
    sizes = np.broadcast_to(np.asarray(object_size, dtype=np.int64), addrs.shape)
    if (sizes <= 0).any():
        raise AnalysisError("object sizes must be positive")
    shift = line_size.bit_length() - 1
    rel = addrs - addrs.min()
    first = rel >> shift
    last = (rel + sizes - 1) >> shift
    spans = last - first + 1
    if spans.max() <= 2:
        lines = np.union1d(first, last)
    else:
        offsets = np.arange(spans.sum()) - np.repeat(np.cumsum(spans) - spans, spans)
        lines = np.unique(np.repeat(first, spans) + offsets)
    n = int(addrs.size)
    gap = float(np.abs(np.diff(addrs)).mean()) if n > 1 else 0.0
    return LocalityReport(
        objects=n,
        unique_lines=int(lines.size),
        lines_per_object=lines.size / n,
        mean_traversal_gap=gap,
        span=int(addrs.max() - addrs.min()),
        line_size=line_size,
    )


def sweep_occupancy(spec, mode, multiplier, occupancies, seeds=(0,), **kwargs):
    """Occupancy sweep at a fixed multiplier; one RunReport row per (occupancy, seed).

    Thin wrapper over :func:`regionbench.harness.sweep`, see there for options.
    """
    from .harness import sweep

    return sweep(spec, mode, multiplier, occupancies, seeds, **kwargs)
