import itertools
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from regionbench.adversary import (
    PRESETS,
    AdversarialConfig,
    make_rng,
    precondition,
    sample_random_size,
    sample_sizes,
    shuffle,
)
from regionbench.backing import CountingBacking, SimulatedHeap
from regionbench.errors import PreconditioningError, SamplingError
from regionbench.profile import AllocationProfile


def profile(counts, peak):
    return AllocationProfile(counts=Counter(counts), peak_live=peak)


def test_presets():
    assert PRESETS == {"adv0": (0, 0.0), "adv1": (1, 0.33), "adv3": (3, 0.66), "adv10": (10, 0.8)}
    cfg = AdversarialConfig.preset("adv3")
    assert (cfg.multiplier, cfg.occupancy) == (3, 0.66)
    with pytest.raises(ValueError):
        AdversarialConfig.preset("adv2")


@pytest.mark.parametrize("occ", [-0.1, 1.0, 1.5])
def test_occupancy_range(occ):
    with pytest.raises(ValueError):
        AdversarialConfig(1, occ)


def test_negative_multiplier():
    with pytest.raises(ValueError):
        AdversarialConfig(-1, 0.5)


def test_counts_for_large_peak():
    assert AdversarialConfig(10, 0.8).counts(491_000) == (4_910_000, 982_000)


def test_counts_small():
    assert AdversarialConfig(1, 0.8).counts(100) == (100, 20)


@pytest.mark.parametrize("n, occ, m", [(50, 0.33, 34), (3, 0.5, 2), (1, 0.5, 1), (7, 0.0, 7)])
def test_m_rounds_half_up(n, occ, m):
    assert AdversarialConfig(1, occ).counts(n)[1] == m


def test_adv0_is_a_noop():
    b = CountingBacking(SimulatedHeap(capacity=1 << 20))
    pre = precondition(AdversarialConfig.preset("adv0"), None, b)
    assert (b.allocs, b.frees, pre.allocated) == (0, 0, 0)


def test_n_100_occupancy_08():
    b = CountingBacking(SimulatedHeap(capacity=1 << 20))
    pre = precondition(AdversarialConfig(1, 0.8, seed=3), profile({16: 1}, 100), b)
    assert (b.allocs, b.frees) == (100, 20)
    assert len(pre.live) == 80 and len(b.outstanding) == 80
    assert set(pre.live.tolist()) == set(b.outstanding)


def test_live_objects_are_touched():
    b = CountingBacking(SimulatedHeap(capacity=1 << 20))
    pre = precondition(AdversarialConfig(2, 0.5, seed=1), profile({16: 1, 48: 1}, 50), b)
    assert (b.memory[pre.live] == 0xA5).all()


def test_release_for_leak_checks():
    b = CountingBacking(SimulatedHeap(capacity=1 << 20))
    pre = precondition(AdversarialConfig(2, 0.5, seed=1), profile({16: 1}, 50), b)
    pre.release(b)
    assert not b.outstanding


def test_precondition_needs_profile():
    b = CountingBacking(SimulatedHeap(capacity=1 << 20))
    with pytest.raises(PreconditioningError):
        precondition(AdversarialConfig(1, 0.5), AllocationProfile(), b)


def test_exhaustion_is_a_preconditioning_failure():
    b = CountingBacking(SimulatedHeap(capacity=64 << 10))
    with pytest.raises(PreconditioningError):
        precondition(AdversarialConfig(10, 0.5), profile({1024: 1}, 100), b)


def test_sampling_single_class():
    rng = make_rng(0)
    assert set(sample_sizes(profile({8: 1}, 1), rng, 1000).tolist()) == {8}
    assert sample_random_size(profile({8: 1}, 1), rng) == 8


def test_sampling_frequency():
    draws = sample_sizes(profile({16: 75, 32: 25}, 1), make_rng(42), 100_000)
    assert abs((draws == 16).mean() - 0.75) <= 0.02


def test_sampling_empty_profile():
    with pytest.raises(SamplingError):
        sample_random_size(AllocationProfile(), make_rng(0))


def test_shuffle_trivial_and_deterministic():
    one = [5]
    shuffle(one, make_rng(1))
    assert one == [5]
    a, b = list(range(50)), list(range(50))
    shuffle(a, make_rng(9))
    shuffle(b, make_rng(9))
    assert a == b and sorted(a) == list(range(50)) and a != list(range(50))


def test_shuffle_is_uniform_over_three():
    rng = make_rng(2024)
    freq = Counter()
    for _ in range(60_000):
        x = [0, 1, 2]
        shuffle(x, rng)
        freq[tuple(x)] += 1
    assert set(freq) == set(itertools.permutations(range(3)))
    for perm in freq:
        assert abs(freq[perm] / 60_000 - 1 / 6) <= 0.01


def test_reproducible_preconditioning():
    prof = profile({16: 3, 64: 1}, 200)
    runs = []
    for _ in range(2):
        b = CountingBacking(SimulatedHeap(capacity=4 << 20))
        runs.append(precondition(AdversarialConfig(3, 0.66, seed=5), prof, b).live.tolist())
    assert runs[0] == runs[1]


def test_survival_is_uniform():
    # per-index survival counts over many seeds follow Binomial(seeds, (n-m)/n)
    prof = profile({16: 1, 32: 1}, 40)
    cfg_n, cfg_m = AdversarialConfig(1, 0.5).counts(40)
    seeds = 400
    hits = np.zeros(cfg_n)
    for seed in range(seeds):
        b = CountingBacking(SimulatedHeap(capacity=1 << 20))
        hits[precondition(AdversarialConfig(1, 0.5, seed), prof, b).survivors] += 1
    p = (cfg_n - cfg_m) / cfg_n
    assert hits.sum() == seeds * (cfg_n - cfg_m)
    chi2 = ((hits - seeds * p) ** 2 / (seeds * p * (1 - p))).sum()
    assert stats.chi2.sf(chi2, cfg_n - 1) > 1e-3


def test_freed_positions_are_not_clustered():
    # runs of consecutive freed indices (in allocation order) vs the uniform expectation
    prof = profile({32: 1}, 2000)
    b = CountingBacking(SimulatedHeap(capacity=8 << 20))
    cfg = AdversarialConfig(1, 0.5, seed=11)
    pre = precondition(cfg, prof, b)
    n = pre.allocated
    alive = np.zeros(n, dtype=bool)
    alive[pre.survivors] = True
    runs = 1 + int((alive[1:] != alive[:-1]).sum())
    k = int(alive.sum())
    mean = 1 + 2 * k * (n - k) / n
    var = 2 * k * (n - k) * (2 * k * (n - k) - n) / (n * n * (n - 1))
    assert abs(runs - mean) / var ** 0.5 < 4
