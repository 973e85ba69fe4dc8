"""``regionbench`` command line: profile, run, sweep, compare.

Exit codes: 0 success, 2 usage error, 3 missing or unreadable profile,
4 preconditioning failure, 5 workload failure, 6 reports not comparable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .adversary import PRESETS, AdversarialConfig
from .errors import ComparisonError, PreconditioningError, ProfileFormatError, RegionBenchError, WorkloadError
from .harness import DEFAULT_HEAP, DEFAULT_REPS, measure, profile_workload, sweep
from .locality import DEFAULT_LINE_SIZE
from .profile import load_profile, save_profile
from .report import compare, dumps_comparison, dumps_csv, dumps_json, read_reports
from .workloads import WORKLOADS, default_spec, load_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROFILE = 3
EXIT_PRECONDITION = 4
EXIT_WORKLOAD = 5
EXIT_COMPARE = 6

class UsageError(Exception):
    pass

def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help=f"one of: {', '.join(WORKLOADS)}")
    p.add_argument("--spec", type=Path, help="workload spec file overriding the defaults")
    p.add_argument("--object-count", type=int)
    p.add_argument("--object-size", type=int)
    p.add_argument("--passes", type=int, dest="traversal_passes")
    p.add_argument("--churn", type=float, dest="churn_ratio")
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--heap-size", type=int, default=DEFAULT_HEAP)

def _measure_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("custom", "naive"), default="custom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--profile", type=Path, help="profile file written by 'regionbench profile'")
    p.add_argument("--line-size", type=int, default=DEFAULT_LINE_SIZE)
    p.add_argument("--reuse", choices=("address", "lifo"), default="address",
                   help="free-block reuse order of the simulated backing heap")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regionbench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="record the allocation size distribution of a workload")
    _spec_args(p)
    p.add_argument("--cutoff", type=int, default=4096)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="measure one configuration")
    _spec_args(p)
    _measure_args(p)
    p.add_argument("--adv", choices=sorted(PRESETS), help="adversarial preset")
    p.add_argument("--multiplier", type=float)
    p.add_argument("--occupancy", type=float)

    p = sub.add_parser("sweep", help="occupancy sweep at a fixed multiplier")
    _spec_args(p)
    _measure_args(p)
    p.add_argument("--multiplier", type=float, default=10.0)
    p.add_argument("--occupancies", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                   help="comma list, or start:stop:step (stop exclusive)")
    p.add_argument("--seeds", default="0", help="comma-separated seeds")

    p = sub.add_parser("compare", help="normalise reports against a baseline")
    p.add_argument("reports", nargs="+", type=Path)
    p.add_argument("--baseline", type=int, default=0, help="index of the baseline report")
    p.add_argument("--out", type=Path)
    return parser

def _spec(args):
    if args.workload not in WORKLOADS:
        raise UsageError(f"unknown workload {args.workload!r}; choose from {', '.join(WORKLOADS)}")
    spec = load_spec(args.spec) if args.spec else default_spec(args.workload)
    if spec.name != args.workload:
        raise UsageError(f"spec file describes {spec.name!r}, not {args.workload!r}")
    changes = {k: getattr(args, k) for k in ("object_count", "object_size", "traversal_passes", "churn_ratio", "chunk_size")
               if getattr(args, k, None) is not None}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    try:
        return spec.with_(**changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

def _parse_floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]

def _load_profile(args, needed: bool):
    if not needed:
        return None
    if args.profile is None:
        raise FileNotFoundError("a profile is required when multiplier > 0; create one with 'regionbench profile'")
    if not args.profile.exists():
        raise FileNotFoundError(f"profile {args.profile} not found; create it with 'regionbench profile'")
    return load_profile(args.profile)

def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)

def cmd_profile(args) -> int:
    spec = _spec(args)
    prof = profile_workload(spec, cutoff=args.cutoff, heap_size=args.heap_size)
    save_profile(prof, args.out)
    print(f"wrote {args.out}: {prof.total_recorded} allocations in {len(prof.counts)} sizes, peak live {prof.peak_live}",
          file=sys.stderr)
    return EXIT_OK

def _adv_config(args) -> AdversarialConfig:
    if args.adv and (args.multiplier is not None or args.occupancy is not None):
        raise UsageError("use either --adv or --multiplier/--occupancy, not both")
    try:
        if args.adv:
            return AdversarialConfig.preset(args.adv, args.seed)
        return AdversarialConfig(args.multiplier or 0.0, args.occupancy or 0.0, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

def cmd_run(args) -> int:
    spec = _spec(args)
    adv = _adv_config(args)
    prof = _load_profile(args, not adv.is_noop)
    report = measure(spec, args.mode, adv, prof, reps=args.reps, line_size=args.line_size,
                     heap_size=args.heap_size, reuse=args.reuse)
    _emit(dumps_json([report]) if args.format == "json" else dumps_csv([report]), args.out)
    return EXIT_OK

def cmd_sweep(args) -> int:
    spec = _spec(args)
    try:
        occupancies = _parse_floats(args.occupancies)
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --occupancies/--seeds: {exc}") from None
    if not occupancies:
        raise UsageError("occupancy list is empty")
    if not seeds:
        raise UsageError("seed list is empty")
    if any(not 0 <= o < 1 for o in occupancies):
        raise UsageError("occupancies must lie in [0, 1)")
    prof = _load_profile(args, args.multiplier > 0)
    rows = sweep(spec, args.mode, args.multiplier, occupancies, seeds, profile=prof, reps=args.reps,
                 line_size=args.line_size, heap_size=args.heap_size, reuse=args.reuse)
    _emit(dumps_json(rows) if args.format == "json" else dumps_csv(rows), args.out)
    return EXIT_OK

def cmd_compare(args) -> int:
    reports = []
    for path in args.reports:
        reports.extend(read_reports(path))
    _emit(dumps_comparison(compare(reports, args.baseline)), args.out)
    return EXIT_OK

COMMANDS = {"profile": cmd_profile, "run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"regionbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ProfileFormatError) as exc:
        print(f"regionbench: error: {exc}", file=sys.stderr)
        return EXIT_PROFILE
    except PreconditioningError as exc:
        print(f"regionbench: preconditioning failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ComparisonError as exc:
        print(f"regionbench: cannot compare: {exc}", file=sys.stderr)
        return EXIT_COMPARE
    except (WorkloadError, RegionBenchError, MemoryError) as exc:
        print(f"regionbench: workload failed: {exc}", file=sys.stderr)
        return EXIT_WORKLOAD

if __name__ == "__main__":
    sys.exit(main())
