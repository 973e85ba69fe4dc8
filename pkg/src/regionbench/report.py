"""Run reports: one measured configuration, serialised as CSV or JSON.

CSV columns, in this fixed order (JSON objects use the same keys in the same
order)::

    workload, mode, adv, multiplier, occupancy, seed, repetitions,
    median_s, min_s, max_s, stdev_s, times_s,
    backing_allocs, backing_frees, backing_bytes,
    precondition_allocs, precondition_frees,
    objects, unique_lines, lines_per_object, mean_traversal_gap, span,
    checksum, line_size, chunk_size, backing, error

``times_s`` is a ``;``-separated list of per-repetition wall times.  Floats
are written with ``repr`` so a read/write cycle is byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ComparisonError, ProfileFormatError

COLUMNS = (
    "workload", "mode", "adv", "multiplier", "occupancy", "seed", "repetitions",
    "median_s", "min_s", "max_s", "stdev_s", "times_s",
    "backing_allocs", "backing_frees", "backing_bytes",
    "precondition_allocs", "precondition_frees",
    "objects", "unique_lines", "lines_per_object", "mean_traversal_gap", "span",
    "checksum", "line_size", "chunk_size", "backing", "error",
)
_INTS = {"seed", "repetitions", "backing_allocs", "backing_frees", "backing_bytes",
         "precondition_allocs", "precondition_frees", "objects", "unique_lines", "span",
         "checksum", "line_size", "chunk_size"}
_FLOATS = {"multiplier", "occupancy", "median_s", "min_s", "max_s", "stdev_s",
           "lines_per_object", "mean_traversal_gap"}


@dataclass
class RunReport:
    workload: str
    mode: str
    adv: str
    multiplier: float
    occupancy: float
    seed: int
    times_s: list[float] = field(default_factory=list)
    backing_allocs: int = 0
    backing_frees: int = 0
    backing_bytes: int = 0
    precondition_allocs: int = 0
    precondition_frees: int = 0
    objects: int = 0
    unique_lines: int = 0
    lines_per_object: float = 0.0
    mean_traversal_gap: float = 0.0
    span: int = 0
    checksum: int = 0
    line_size: int = 64
    chunk_size: int = 65536
    backing: str = ""
    error: str = ""

    @property
    def repetitions(self) -> int:
        return len(self.times_s)

    @property
    def median_s(self) -> float:
        return statistics.median(self.times_s) if self.times_s else 0.0

    @property
    def min_s(self) -> float:
        return min(self.times_s) if self.times_s else 0.0

    @property
    def max_s(self) -> float:
        return max(self.times_s) if self.times_s else 0.0

    @property
    def stdev_s(self) -> float:
        return statistics.pstdev(self.times_s) if len(self.times_s) > 1 else 0.0

    @property
    def ok(self) -> bool:
        return not self.error

    def row(self) -> dict:
        out = {}
        for col in COLUMNS:
            value = getattr(self, col)
            if col == "times_s":
                value = list(value)
            out[col] = value
        return out

    @classmethod
    def from_row(cls, row: dict, source=None) -> "RunReport":
        missing = [c for c in COLUMNS if c not in row]
        if missing:
            raise ProfileFormatError(f"report row lacks columns {missing}", source)
        kwargs = {}
        try:
            for col in COLUMNS:
                if col in ("repetitions", "median_s", "min_s", "max_s", "stdev_s"):
                    continue
                value = row[col]
                if col == "times_s":
                    if isinstance(value, str):
                        value = [float(x) for x in value.split(";") if x]
                    kwargs[col] = [float(x) for x in value]
                elif col in _INTS:
                    kwargs[col] = int(value)
                elif col in _FLOATS:
                    kwargs[col] = float(value)
                else:
                    kwargs[col] = str(value)
        except (TypeError, ValueError) as exc:
            raise ProfileFormatError(f"bad report value: {exc}", source) from None
        report = cls(**kwargs)
        if int(row["repetitions"]) != report.repetitions:
            raise ProfileFormatError("repetitions does not match the number of time samples", source)
        return report


def _cell(value) -> str:
    if isinstance(value, list):
        return ";".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in reports:
        row = r.row()
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def dumps_json(reports) -> str:
    return json.dumps([r.row() for r in reports], indent=2) + "\n"


def loads_csv(text: str, source=None) -> list[RunReport]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
        raise ProfileFormatError("unexpected CSV header for a run report", source)
    return [RunReport.from_row(row, source) for row in reader]


def loads_json(text: str, source=None) -> list[RunReport]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"invalid JSON: {exc}", source, exc.lineno) from None
    if isinstance(data, dict):
        data = [data]
    return [RunReport.from_row(row, source) for row in data]


def write_reports(reports, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    path.write_text(dumps_json(reports) if fmt == "json" else dumps_csv(reports))


def read_reports(path) -> list[RunReport]:
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith(("[", "{")):
        return loads_json(text, path)
    return loads_csv(text, path)


COMPARE_COLUMNS = ("workload", "mode", "adv", "seed", "median_s", "time_ratio",
                   "lines_per_object", "locality_ratio", "backing_allocs", "alloc_ratio")


def compare(reports, baseline: int = 0) -> list[dict]:
    """Normalise every report against ``reports[baseline]``.

    Ratios follow the usual convention: values above 1 mean slower (or
    worse locality, or more backing operations) than the baseline.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ComparisonError("need at least two reports to compare")
    try:
        base = reports[baseline]
    except IndexError:
        raise ComparisonError(f"baseline index {baseline} out of range") from None
    names = {r.workload for r in reports}
    if len(names) > 1:
        raise ComparisonError(f"reports cover different workloads: {sorted(names)}")

    def ratio(a, b):
        return a / b if b else float("nan")

    return [
        {
            "workload": r.workload,
            "mode": r.mode,
            "adv": r.adv,
            "seed": r.seed,
            "median_s": r.median_s,
            "time_ratio": ratio(r.median_s, base.median_s),
            "lines_per_object": r.lines_per_object,
            "locality_ratio": ratio(r.lines_per_object, base.lines_per_object),
            "backing_allocs": r.backing_allocs,
            "alloc_ratio": ratio(r.backing_allocs, base.backing_allocs),
        }
        for r in reports
    ]


def dumps_comparison(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in COMPARE_COLUMNS])
    return buf.getvalue()
