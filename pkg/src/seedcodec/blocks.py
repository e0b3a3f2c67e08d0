"""Value types for compressed blocks and tensors."""

import math
from dataclasses import dataclass, field

import numpy as np

from seedcodec._kernels import EXP_MAX, EXP_MIN
from seedcodec.config import BlockConfig

Q_MIN, Q_MAX = -8, 7


@dataclass(frozen=True, eq=False)
class QuantizedCoefficients:
    """Signed 4-bit mantissas sharing one power-of-two exponent."""

    q: np.ndarray
    e: int

    def __post_init__(self):
        q = np.asarray(self.q)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("q must be a non-empty vector")
        if q.min() < Q_MIN or q.max() > Q_MAX:
            raise ValueError(f"mantissas must lie in [{Q_MIN}, {Q_MAX}], got {q.tolist()}")
        if not EXP_MIN <= int(self.e) <= EXP_MAX:
            raise ValueError(f"exponent must lie in [{EXP_MIN}, {EXP_MAX}], got {self.e}")
        q = q.astype(np.int8)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "e", int(self.e))

    def __eq__(self, other):
        if not isinstance(other, QuantizedCoefficients):
            return NotImplemented
        return self.e == other.e and np.array_equal(self.q, other.q)

    def __repr__(self):
        return f"QuantizedCoefficients(q={self.q.tolist()}, e={self.e})"


@dataclass(frozen=True)
class CompressedBlock:
    seed: int
    coeffs: QuantizedCoefficients

    def __post_init__(self):
        if self.seed < 1:
            raise ValueError(f"seed must be nonzero, got {self.seed}")


@dataclass(eq=False)
class CompressedTensor:
    """Shape plus per-block seeds, exponents and mantissas in flat block order.

    The last block covers ``tail_length`` real elements; the rest of it was
    zero padding at compression time.
    """

    config: BlockConfig
    shape: tuple
    seeds: np.ndarray = field(repr=False)
    exponents: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.shape = tuple(int(d) for d in self.shape)
        if not self.shape or any(d < 1 for d in self.shape):
            raise ValueError(f"shape must be a non-empty list of positive integers, got {self.shape}")
        cfg = self.config
        n_blocks = cfg.num_blocks(self.element_count)
        self.seeds = np.asarray(self.seeds, dtype=np.uint32).reshape(-1)
        self.exponents = np.asarray(self.exponents, dtype=np.int8).reshape(-1)
        self.coefficients = np.asarray(self.coefficients, dtype=np.int8).reshape(-1, cfg.p)
        if not (len(self.seeds) == len(self.exponents) == len(self.coefficients) == n_blocks):
            raise ValueError(
                f"{self.element_count} elements at C={cfg.c} need {n_blocks} blocks, got "
                f"{len(self.seeds)} seeds, {len(self.exponents)} exponents, "
                f"{len(self.coefficients)} coefficient rows"
            )
        bad = np.flatnonzero((self.seeds < 1) | (self.seeds > cfg.num_seeds))
        if bad.size:
            raise ValueError(f"block {bad[0]} has seed {self.seeds[bad[0]]} outside [1, {cfg.num_seeds}]")
        if self.exponents.size and (self.exponents.min() < EXP_MIN or self.exponents.max() > EXP_MAX):
            raise ValueError("exponent out of range")
        if self.coefficients.size and (self.coefficients.min() < Q_MIN or self.coefficients.max() > Q_MAX):
            raise ValueError("coefficient out of range")

    @property
    def element_count(self) -> int:
        return math.prod(self.shape)

    @property
    def num_blocks(self) -> int:
        return len(self.seeds)

    @property
    def tail_length(self) -> int:
        return self.element_count - self.config.c * (self.num_blocks - 1)

    @property
    def payload_bits(self) -> int:
        return self.config.payload_bits(self.num_blocks)

    def block(self, i: int) -> CompressedBlock:
        return CompressedBlock(
            int(self.seeds[i]), QuantizedCoefficients(self.coefficients[i], int(self.exponents[i]))
        )

    @property
    def blocks(self) -> list:
        return [self.block(i) for i in range(self.num_blocks)]

    @classmethod
    def from_blocks(cls, config, shape, blocks):
        blocks = list(blocks)
        return cls(
            config,
            shape,
            [b.seed for b in blocks],
            [b.coeffs.e for b in blocks],
            np.array([b.coeffs.q for b in blocks], dtype=np.int8).reshape(-1, config.p),
        )

    def __eq__(self, other):
        if not isinstance(other, CompressedTensor):
            return NotImplemented
        return (
            self.config == other.config
            and self.shape == other.shape
            and np.array_equal(self.seeds, other.seeds)
            and np.array_equal(self.exponents, other.exponents)
            and np.array_equal(self.coefficients, other.coefficients)
        )
