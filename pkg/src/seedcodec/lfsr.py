"""Maximal-length Fibonacci LFSRs and the pseudo-random matrices drawn from them.

A k-bit state holds the newest bit at the most significant position and the
oldest bit at position 0. Tap indices count from the oldest bit, so the
feedback bit is the parity of ``state & tap_mask`` and enters at bit k-1
while everything else shifts right by one.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from seedcodec import _kernels
from seedcodec.errors import NonMaximalLengthError

# Feedback tap indices for each register length, hard-wired as in hardware.
TAPS = {
    2: (0, 1),
    3: (0, 1),
    4: (0, 1),
    5: (0, 2),
    6: (0, 1),
    7: (0, 1),
    8: (0, 2, 3, 4),
    9: (0, 4),
    10: (0, 3),
    11: (0, 2),
    12: (0, 1, 2, 8),
    13: (0, 1, 2, 5),
    14: (0, 1, 2, 12),
    15: (0, 1),
    16: (0, 1, 3, 12),
    17: (0, 3),
    18: (0, 7),
    19: (0, 1, 2, 5),
    20: (0, 3),
    21: (0, 2),
    22: (0, 1),
    23: (0, 5),
    24: (0, 1, 2, 7),
}

MIN_K = min(TAPS)
MAX_K = max(TAPS)


@dataclass(frozen=True)
class LfsrSpec:
    """Register length plus feedback taps; taps default to the standard table."""

    k: int
    taps: tuple = None

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"register length must be a positive integer, got {self.k!r}")
        taps = self.taps
        if taps is None:
            if self.k not in TAPS:
                raise ValueError(f"no standard taps for k={self.k}; supported {MIN_K}..{MAX_K}")
            taps = TAPS[self.k]
        taps = tuple(sorted(set(int(j) for j in taps)))
        if not taps or any(j < 0 or j >= self.k for j in taps):
            raise ValueError(f"tap indices must lie in [0, {self.k - 1}], got {taps}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "taps", taps)

    @property
    def tap_mask(self) -> int:
        return sum(1 << j for j in self.taps)

    @property
    def period(self) -> int:
        return (1 << self.k) - 1


def next_state(spec: LfsrSpec, state: int) -> int:
    """One shift: parity of the tapped bits enters at the top, the rest move right."""
    if not 0 <= state < (1 << spec.k):
        raise ValueError(f"state {state} does not fit in {spec.k} bits")
    bit = (state & spec.tap_mask).bit_count() & 1
    return (state >> 1) | (bit << (spec.k - 1))


@dataclass(frozen=True, eq=False)
class CycleCache:
    """Every nonzero state of a maximal-length LFSR, in cycle order.

    ``order[i]`` is the state reached after ``i + 1`` steps from state 1, so
    ``order[-1] == 1``. ``position[s]`` is the index of ``s`` in ``order``.
    """

    spec: LfsrSpec
    order: np.ndarray = field(repr=False)
    position: np.ndarray = field(repr=False)

    def __len__(self):
        return self.order.shape[0]

    def successor(self, state):
        """Next state for one state or an array of nonzero states."""
        pos = self.position[state].astype(np.int64)
        return self.order[(pos + 1) % len(self)]

    def cycle_from(self, seed: int, steps: int | None = None) -> np.ndarray:
        """States visited from ``seed`` onwards, seed first."""
        _check_seed(self.spec, seed)
        steps = len(self) if steps is None else steps
        start = int(self.position[seed])
        return self.order[(start + np.arange(steps)) % len(self)]

    @property
    def nbytes(self) -> int:
        return self.order.nbytes


def _state_dtype(k):
    return np.uint16 if k <= 16 else np.uint32


def build_cycle_cache(spec: LfsrSpec) -> CycleCache:
    """Walk the full cycle from state 1 and index it.

    Raises NonMaximalLengthError unless the walk returns to 1 after exactly
    2**k - 1 steps, which also proves every nonzero state was visited.
    """
    n = spec.period
    walk = np.empty(n, dtype=np.int64)
    steps = _kernels.walk_cycle(spec.k, spec.tap_mask, 1, walk)
    if steps != n:
        detail = f"closed after {steps} steps" if steps > 0 else "never returned to state 1"
        raise NonMaximalLengthError(
            f"taps {spec.taps} for k={spec.k} are not maximal-length: {detail}, expected {n}"
        )
    dtype = _state_dtype(spec.k)
    order = walk.astype(dtype)
    position = np.zeros(1 << spec.k, dtype=np.uint32)
    position[walk] = np.arange(n, dtype=np.uint32)
    order.setflags(write=False)
    position.setflags(write=False)
    return CycleCache(spec, order, position)


@lru_cache(maxsize=8)
def standard_cache(k: int) -> CycleCache:
    """Shared cycle cache for the standard taps of length ``k``."""
    return build_cycle_cache(LfsrSpec(k))


def _check_seed(spec, seed):
    if not 1 <= seed <= spec.period:
        raise ValueError(f"seed must be in [1, {spec.period}] for k={spec.k}, got {seed}")


def _state_indices(cache, seeds, count):
    # entries start one step after the seed and wrap around the cycle
    start = cache.position[seeds].astype(np.int64)
    return (start[..., None] + 1 + np.arange(count)) % len(cache)


def raw_matrix(cache: CycleCache, seed: int, rows: int, cols: int) -> np.ndarray:
    """Integer matrix of the ``rows * cols`` states after ``seed``, row-major."""
    _check_seed(cache.spec, seed)
    idx = _state_indices(cache, np.int64(seed), rows * cols)
    return cache.order[idx].astype(np.int64).reshape(rows, cols)


def normalize_states(states, k: int) -> np.ndarray:
    """Map states in [1, 2**k - 1] affinely onto [-1, 1]."""
    half = float(1 << (k - 1))
    return (np.asarray(states, dtype=np.float64) - half) / (half - 1.0)


def normalized_matrix(cache: CycleCache, seed: int, rows: int, cols: int) -> np.ndarray:
    return normalize_states(raw_matrix(cache, seed, rows, cols), cache.spec.k)


def basis_stack(cache: CycleCache, seeds, rows: int, cols: int) -> np.ndarray:
    """Normalized matrices for many seeds at once, shape (len(seeds), rows, cols)."""
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.size and (seeds.min() < 1 or seeds.max() > cache.spec.period):
        raise ValueError(f"seeds must be in [1, {cache.spec.period}]")
    states = cache.order[_state_indices(cache, seeds, rows * cols)]
    return normalize_states(states, cache.spec.k).reshape(seeds.shape + (rows, cols))
