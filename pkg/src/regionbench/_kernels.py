"""Compiled inner loops that read and write the simulated heap arena.

``words`` is always the arena viewed as int64 words; an address ``a`` maps to
word ``a >> 3``.  Checksums are FNV-1a style folds over uint64.
"""

import numpy as np
from numba import njit

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fold(h: int, value: int) -> int:
    """Order-sensitive fold, identical to the compiled one."""
    return ((h ^ value) * FNV_PRIME) & MASK64


def mix(value: int) -> int:
    """splitmix64 finaliser, used for order-insensitive sums."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@njit(cache=True)
def link_list(words, addrs, values):
    n = addrs.shape[0]
    for i in range(n):
        w = addrs[i] >> 3
        if i + 1 < n:
            words[w] = addrs[i + 1]
        else:
            words[w] = 0
        words[w + 1] = values[i]


@njit(cache=True)
def chase(words, head, passes):
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    for _ in range(passes):
        node = head
        while node != 0:
            w = node >> 3
            h = (h ^ np.uint64(words[w + 1])) * prime
            node = words[w]
    return h


@njit(cache=True)
def walk(words, head, out):
    node = head
    i = 0
    while node != 0 and i < out.shape[0]:
        out[i] = node
        node = words[node >> 3]
        i += 1
    return i


@njit(cache=True)
def store_values(words, addrs, values):
    for i in range(addrs.shape[0]):
        words[addrs[i] >> 3] = values[i]


@njit(cache=True)
def fold_values(words, addrs, h):
    prime = np.uint64(FNV_PRIME)
    h = np.uint64(h)
    for i in range(addrs.shape[0]):
        h = (h ^ np.uint64(words[addrs[i] >> 3])) * prime
    return h


@njit(cache=True)
def mixed_sum(words, addrs):
    acc = np.uint64(0)
    for i in range(addrs.shape[0]):
        z = np.uint64(words[addrs[i] >> 3]) + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        acc += z ^ (z >> np.uint64(31))
    return acc


def warm_up() -> None:
    """Compile every kernel on a tiny arena so timings exclude JIT cost."""
    words = np.zeros(64, dtype=np.int64)
    addrs = np.array([16, 48], dtype=np.int64)
    vals = np.array([1, 2], dtype=np.int64)
    link_list(words, addrs, vals)
    chase(words, 16, 1)
    walk(words, 16, np.zeros(2, dtype=np.int64))
    store_values(words, addrs, vals)
    fold_values(words, addrs, np.uint64(FNV_OFFSET))
    mixed_sum(words, addrs)
