"""Random symbol placement with per-(user, file) deterministic streams.

Seed derivation: a 64-bit master seed is stirred through splitmix64 and each
context label (tag, user id, file id, ...) is absorbed one at a time with
``state = splitmix64(state XOR part)``.  Every (user, file) pair therefore owns
an independent stream that does not depend on iteration order or thread count.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import CacheContents, SubfilePartition, SystemParams, require_valid

_MASK64 = (1 << 64) - 1

# context labels for unrelated stream families derived from one master seed
TAG_PLACEMENT = 0x706C6163  # "plac"
TAG_FILE = 0x66696C65       # "file"
TAG_TRIAL = 0x7472696C      # "tril"
TAG_VIRTUAL = 0x76697274    # "virt"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *parts: int) -> int:
    state = splitmix64(master & _MASK64)
    for p in parts:
        state = splitmix64(state ^ (p & _MASK64))
    return state


class SymbolStream:
    """splitmix64 output stream with exact uniform bounded draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("bound must be positive")
        # rejection keeps the draw exactly uniform
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            v = self.u64()
            if v < limit:
                return v % n


@dataclass(frozen=True)
class PlacementSeed:
    """Master seed plus the derivation rule for per-(user, file) streams."""

    master: int

    def stream(self, user: int, file: int) -> SymbolStream:
        return SymbolStream(derive_seed(self.master, TAG_PLACEMENT, user, file))


def sample_without_replacement(stream: SymbolStream, n: int, m: int) -> np.ndarray:
    """m distinct values from [0, n), uniform over all (n choose m) subsets.

    Partial Fisher-Yates shuffle over a sparse identity permutation; only the
    touched entries are materialized.
    """
    if not 0 <= m <= n:
        raise ValueError(f"cannot sample {m} of {n}")
    perm: dict[int, int] = {}
    picked = np.empty(m, dtype=np.int64)
    for i in range(m):
        j = i + stream.randbelow(n - i) if n - i > 1 else i
        vi = perm.get(i, i)
        picked[i] = perm.get(j, j)
        perm[j] = vi
    picked.sort()
    return picked


def prefetch(params: SystemParams, seed: PlacementSeed | int) -> CacheContents:
    """Fill every provisioned user's cache with m*f/n_files symbols of each coded file."""
    require_valid(params)
    if isinstance(seed, int):
        seed = PlacementSeed(seed)
    n = params.coded_len
    m_sym = params.cached_per_file
    indices = {
        (u, fl): sample_without_replacement(seed.stream(u, fl), n, m_sym)
        for u in range(params.k_prime)
        for fl in range(params.n_files)
    }
    return CacheContents(params.k_prime, params.n_files, n, indices)


def partition_subfiles(cache: CacheContents, active, file: int,
                       params: SystemParams) -> SubfilePartition:
    """Split one coded file's indices by the exact active-user subset caching them."""
    active = list(active)
    if len(active) > 63:
        raise ValueError("subset bitmask keys support at most 63 active users")
    n = params.coded_len
    keys = np.zeros(n, dtype=np.uint64)
    for bit, user in enumerate(active):
        keys[cache.indices(user, file)] |= np.uint64(1 << bit)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
    blocks: dict[int, np.ndarray] = {}
    start = 0
    for stop in list(boundaries) + [n]:
        blocks[int(sorted_keys[start])] = np.sort(order[start:stop]).astype(np.int64)
        start = stop
    return SubfilePartition(file=file, coded_len=n, blocks=blocks)


def expected_subfile_size(params: SystemParams, subset_size: int, k: int | None = None) -> Fraction:
    """Expected symbols cached by exactly a given size-t subset: r*f * q^t * (1-q)^(k-t)."""
    k = params.k if k is None else k
    if not 0 <= subset_size <= k:
        raise ValueError(f"subset size {subset_size} outside [0, {k}]")
    q = params.q
    return params.r * params.f * q**subset_size * (1 - q) ** (k - subset_size)
