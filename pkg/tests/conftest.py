import pytest

from regionbench.backing import CountingBacking, SimulatedHeap


@pytest.fixture
def heap():
    return SimulatedHeap(capacity=64 << 20)


@pytest.fixture
def backing(heap):
    return CountingBacking(heap)
