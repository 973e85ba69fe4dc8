import math

import numpy as np
import pytest

from regionbench.adversary import AdversarialConfig, precondition
from regionbench.backing import CountingBacking, SimulatedHeap
from regionbench.errors import WorkloadError
from regionbench.profile import AllocationProfile, ProfilingBacking
from regionbench.workloads import (
    WORKLOADS,
    WorkloadSpec,
    default_spec,
    dumps_spec,
    load_spec,
    loads_spec,
    phase_sizes,
    run_workload,
    stack_ops,
)

from oracles import region_chunk_count


def fresh(capacity=256 << 20):
    return CountingBacking(SimulatedHeap(capacity=capacity))


SMALL = {
    "list-churn": dict(object_count=2000, traversal_passes=3, churn_ratio=0.1),
    "stack-parse": dict(object_count=2000),
    "pool-churn": dict(object_count=1000, traversal_passes=3, churn_ratio=0.2),
    "region-phases": dict(object_count=2000, phases=2),
    "class-churn": dict(object_count=500, traversal_passes=2),
}


@pytest.mark.parametrize("name", list(WORKLOADS))
def test_modes_agree_and_ledger_balances(name):
    spec = default_spec(name, **SMALL[name], seed=3)
    sums = []
    for mode in ("custom", "naive"):
        b = fresh()
        sums.append(run_workload(spec, mode, b).checksum)
        assert not b.outstanding and b.allocs == b.frees
    assert sums[0] == sums[1] != 0


@pytest.mark.parametrize("name", list(WORKLOADS))
def test_deterministic(name):
    spec = default_spec(name, **SMALL[name], seed=8)
    a, b = fresh(), fresh()
    ra, rb = run_workload(spec, "naive", a), run_workload(spec, "naive", b)
    assert ra.checksum == rb.checksum and a.snapshot() == b.snapshot()
    assert np.array_equal(ra.trace, rb.trace)


@pytest.mark.parametrize("name", list(WORKLOADS))
def test_seed_changes_checksum(name):
    a = run_workload(default_spec(name, **SMALL[name], seed=1), "custom", fresh()).checksum
    b = run_workload(default_spec(name, **SMALL[name], seed=2), "custom", fresh()).checksum
    assert a != b


def test_list_churn_empty():
    res = run_workload(default_spec("list-churn", object_count=0), "custom", fresh())
    assert res.checksum == 0 and len(res.trace) == 0


def test_list_churn_region_trace_monotone_within_chunks():
    b = fresh()
    spec = default_spec("list-churn", object_count=1000, traversal_passes=1)
    res = run_workload(spec, "custom", b)
    trace = res.trace
    chunk = (trace - trace[0]) // 65536  # 2048 nodes per chunk; chunks are adjacent here
    gaps = np.diff(trace)
    assert (gaps > 0).all()
    within = chunk[1:] == chunk[:-1]
    assert (gaps[within] == 32).all()
    assert b.allocs == math.ceil(1000 * 32 / 65536)


def test_list_churn_node_size_check():
    with pytest.raises(ValueError):
        run_workload(default_spec("list-churn", object_count=10, object_size=8), "custom", fresh())


def test_list_churn_sampled_sizes():
    prof = AllocationProfile(counts={16: 1, 48: 1, 96: 2}, peak_live=1)
    spec = default_spec("list-churn", object_count=500, traversal_passes=2, size_profile=prof)
    assert run_workload(spec, "custom", fresh()).checksum == run_workload(spec, "naive", fresh()).checksum


def test_stack_parse_nested_returns_to_base():
    spec = default_spec("stack-parse", object_count=500, depth=100, churn_ratio=0.0)
    res = run_workload(spec, "custom", fresh())
    assert res.info["final_top_offset"] == 0 and res.info["peak_top_offset"] > 0


def test_stack_parse_backing_ops():
    spec = default_spec("stack-parse", object_count=3000)
    ops = stack_ops(spec)
    custom, naive = fresh(), fresh()
    run_workload(spec, "custom", custom)
    run_workload(spec, "naive", naive)
    assert custom.allocs == 1
    assert naive.allocs == sum(op[0] == "a" for op in ops) == 3000


def test_stack_parse_too_small_buffer():
    spec = default_spec("stack-parse", object_count=5000, stack_capacity=1024)
    with pytest.raises(WorkloadError):
        run_workload(spec, "custom", fresh())


def test_pool_churn_without_churn_visits_everything():
    spec = default_spec("pool-churn", object_count=700, churn_ratio=0.0, traversal_passes=4)
    res = run_workload(spec, "custom", fresh())
    assert res.info["visits"] == [700] * 4


def test_pool_churn_backing_bound():
    spec = default_spec("pool-churn", object_count=5000, churn_ratio=0.3, traversal_passes=3)
    b = fresh()
    run_workload(spec, "custom", b)
    assert b.allocs <= math.ceil(5000 / spec.objects_per_chunk) + 1


def test_region_phases_op_counts():
    spec = default_spec("region-phases", object_count=5000, phases=1)
    custom, naive = fresh(), fresh()
    run_workload(spec, "custom", custom)
    run_workload(spec, "naive", naive)
    assert custom.allocs == custom.frees == region_chunk_count(phase_sizes(spec, 0).tolist(), 65536)
    assert naive.allocs == naive.frees == 5000


def test_region_phases_zero_phases():
    b = fresh()
    res = run_workload(default_spec("region-phases", phases=0), "custom", b)
    assert res.checksum == 0 and b.allocs == 0


def test_allocation_failure_carries_workload_name():
    spec = default_spec("list-churn", object_count=5000)
    with pytest.raises(WorkloadError, match="list-churn"):
        run_workload(spec, "naive", fresh(capacity=64 << 10))


def test_preconditioning_does_not_change_checksum():
    spec = default_spec("list-churn", object_count=3000, traversal_passes=2)
    prof = AllocationProfile(counts={32: 1}, peak_live=3000)
    base = run_workload(spec, "naive", fresh()).checksum
    b = fresh()
    precondition(AdversarialConfig.preset("adv10", 4), prof, b)
    assert run_workload(spec, "naive", b).checksum == base


def test_unknown_mode_and_workload():
    with pytest.raises(ValueError):
        run_workload(default_spec("list-churn", object_count=1), "hybrid", fresh())
    with pytest.raises(KeyError):
        default_spec("nope")


def test_spec_file_round_trip(tmp_path):
    spec = default_spec("pool-churn", object_count=123, churn_ratio=0.25, seed=9)
    path = tmp_path / "w.spec"
    path.write_text(dumps_spec(spec))
    assert load_spec(path) == spec


def test_spec_file_with_profile(tmp_path):
    (tmp_path / "p.txt").write_text("cutoff 4096\npeak_live 3\n16 2\n64 1\n")
    (tmp_path / "w.spec").write_text("name list-churn\nobject_count 10\nsize_profile p.txt\n")
    spec = load_spec(tmp_path / "w.spec")
    assert dict(spec.size_profile.counts) == {16: 2, 64: 1}


def test_profile_of_workloads():
    pb = ProfilingBacking(SimulatedHeap(capacity=64 << 20))
    run_workload(default_spec("list-churn", object_count=10_000, traversal_passes=1), "naive", pb)
    assert dict(pb.profile.counts) == {32: 10_000} and pb.profile.peak_live == 10_000
    pb = ProfilingBacking(SimulatedHeap(capacity=64 << 20))
    run_workload(default_spec("pool-churn", object_count=1000, churn_ratio=0.3), "naive", pb)
    assert pb.profile.peak_live < pb.profile.total_recorded
