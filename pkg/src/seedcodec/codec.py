"""Seed search and reconstruction.

Each block ``w`` of ``C`` weights is approximated by ``U(s) @ t`` where
``U(s)`` is the normalized ``C x P`` LFSR matrix for seed ``s`` and ``t`` is
quantized to 4-bit mantissas with a shared exponent. The search projects
``w`` with every candidate's cached pseudo-inverse, quantizes, and keeps the
seed with the smallest squared reconstruction error.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from seedcodec import _kernels
from seedcodec.blocks import CompressedBlock, CompressedTensor, QuantizedCoefficients
from seedcodec.config import BlockConfig
from seedcodec.errors import ConfigError, CorruptBlockError, NonFiniteInputError
from seedcodec.lfsr import CycleCache, basis_stack, normalized_matrix, standard_cache

logger = logging.getLogger(__name__)

EXPONENT_RULES = ("search", "floor-log2")
PINV_RTOL = 1e-10
CHUNK_BLOCKS = 256
_PINV_CHUNK = 16384


@dataclass(frozen=True, eq=False)
class PseudoInverseCache:
    """Normalized bases ``U(s)`` and their pseudo-inverses for a set of seeds.

    ``seeds`` is sorted ascending; row ``i`` of ``bases`` (C x P) and
    ``operators`` (P x C) belongs to ``seeds[i]``.
    """

    config: BlockConfig
    seeds: np.ndarray = field(repr=False)
    bases: np.ndarray = field(repr=False)
    operators: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.seeds)

    @property
    def nbytes(self) -> int:
        return self.operators.nbytes

    def positions(self, seeds) -> np.ndarray:
        """Row indices for ``seeds``; every seed must be cached."""
        seeds = np.asarray(seeds, dtype=np.int64).reshape(-1)
        pos = np.searchsorted(self.seeds, seeds)
        pos = np.minimum(pos, len(self.seeds) - 1)
        missing = self.seeds[pos] != seeds
        if missing.any():
            raise ValueError(f"seed {seeds[missing][0]} is not in the pseudo-inverse cache")
        return pos


def candidate_seeds(k: int, stride: int = 1) -> np.ndarray:
    """Seeds 1, 1 + stride, 1 + 2*stride, ... up to 2**k - 1."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return np.arange(1, 1 << k, stride, dtype=np.int64)


def build_pinv_cache(config: BlockConfig, cache: CycleCache | None = None, seeds=None) -> PseudoInverseCache:
    """Precompute ``U(s)`` and its minimum-norm least-squares operator for each seed.

    Singular values below ``1e-10`` times the largest are treated as zero, so
    rank-deficient bases still get a valid operator.
    """
    cache = cache if cache is not None else standard_cache(config.k)
    if cache.spec.k != config.k:
        raise ConfigError(f"cycle cache has k={cache.spec.k}, config needs k={config.k}")
    seeds = candidate_seeds(config.k) if seeds is None else np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("no seeds to cache")
    bases = basis_stack(cache, seeds, config.c, config.p)
    operators = np.empty((len(seeds), config.p, config.c))
    for start in range(0, len(seeds), _PINV_CHUNK):
        chunk = slice(start, start + _PINV_CHUNK)
        operators[chunk] = np.linalg.pinv(bases[chunk], rtol=PINV_RTOL)
    for arr in (seeds, bases, operators):
        arr.setflags(write=False)
    return PseudoInverseCache(config, seeds, bases, operators)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(np.asarray(values).reshape(-1)))
        raise NonFiniteInputError(f"input has {bad.size} non-finite values, first at flat index {bad[0]}")


def _literal(rule):
    if rule not in EXPONENT_RULES:
        raise ValueError(f"unknown exponent rule {rule!r}; choose from {EXPONENT_RULES}")
    return rule == "floor-log2"


def quantize_coefficients(t, rule: str = "search") -> QuantizedCoefficients:
    """Quantize ``t`` to 4-bit two's-complement mantissas with one shared exponent.

    ``rule="search"`` picks the exponent in [-8, 7] with the smallest
    round-trip error (smallest exponent on ties); ``"floor-log2"`` uses
    ``max_i floor(log2 |t_i|)`` clamped to the same range. Mantissas are
    rounded half-to-even and saturate at -8 and 7.
    """
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    _check_finite(t)
    q, e = _kernels.quantize_rows(t[None, :], _literal(rule))
    return QuantizedCoefficients(q[0], int(e[0]))


def dequantize(coeffs: QuantizedCoefficients) -> np.ndarray:
    return np.ldexp(coeffs.q.astype(np.float64), coeffs.e)


def compress_blocks(blocks, pinv: PseudoInverseCache, candidates=None, exponent_rule: str = "search"):
    """Seed search for every row of ``blocks`` (shape [n, C]).

    Returns ``(seeds, exponents, mantissas, errors)`` arrays. All-zero rows
    skip the search and take the smallest candidate seed with zero
    coefficients and exponent -8.
    """
    w = np.ascontiguousarray(blocks, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != pinv.config.c:
        raise ValueError(f"blocks must have shape (n, {pinv.config.c}), got {w.shape}")
    _check_finite(w)
    literal = _literal(exponent_rule)
    pos = np.arange(len(pinv), dtype=np.int64) if candidates is None else pinv.positions(candidates)
    if pos.size == 0:
        raise ValueError("empty candidate set")
    pos = np.unique(pos)

    n = w.shape[0]
    seeds = np.full(n, pinv.seeds[pos[0]], dtype=np.int64)
    exps = np.full(n, _kernels.EXP_MIN, dtype=np.int8)
    mant = np.zeros((n, pinv.config.p), dtype=np.int8)
    errs = np.zeros(n)
    live = np.flatnonzero(np.any(w != 0.0, axis=1))
    if live.size:
        best, e, q, err = _kernels.search_blocks(w[live], pinv.bases, pinv.operators, pos, literal)
        seeds[live] = pinv.seeds[pos[best]]
        exps[live] = e
        mant[live] = q
        errs[live] = err
    return seeds, exps, mant, errs


def compress_block(w, pinv: PseudoInverseCache, cache: CycleCache | None = None, candidates=None,
                   exponent_rule: str = "search"):
    """Best ``(CompressedBlock, error)`` for one block over the candidate seeds.

    ``error`` is the squared Euclidean distance between ``w`` and the
    block's reconstruction. Ties go to the smallest seed.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (pinv.config.c,):
        raise ValueError(f"block must have length {pinv.config.c}, got shape {w.shape}")
    if cache is not None and cache.spec.k != pinv.config.k:
        raise ConfigError(f"cycle cache has k={cache.spec.k}, config needs k={pinv.config.k}")
    seeds, exps, mant, errs = compress_blocks(w[None, :], pinv, candidates, exponent_rule)
    block = CompressedBlock(int(seeds[0]), QuantizedCoefficients(mant[0], int(exps[0])))
    return block, float(errs[0])


def reconstruct_block(block: CompressedBlock, config: BlockConfig, cache: CycleCache | None = None) -> np.ndarray:
    cache = cache if cache is not None else standard_cache(config.k)
    if not 1 <= block.seed <= config.num_seeds:
        raise ValueError(f"seed {block.seed} outside [1, {config.num_seeds}]")
    basis = normalized_matrix(cache, block.seed, config.c, config.p)
    out = _kernels.reconstruct_blocks(
        basis[None], block.coeffs.q[None].astype(np.int8), np.array([block.coeffs.e], dtype=np.int8)
    )
    return out[0]


def _reconstruct_flat(config, cache, seeds, exponents, coefficients):
    out = np.empty((len(seeds), config.c))
    for start in range(0, len(seeds), 4096):
        sl = slice(start, start + 4096)
        bases = basis_stack(cache, seeds[sl].astype(np.int64), config.c, config.p)
        out[sl] = _kernels.reconstruct_blocks(bases, coefficients[sl], exponents[sl])
    return out.reshape(-1)


@dataclass
class ReconstructionStats:
    block_errors: np.ndarray = field(repr=False)
    mse: float
    relative_error: float
    max_abs_error: float
    seed_histogram: Counter = field(repr=False)

    @classmethod
    def from_arrays(cls, original, approx, block_errors=None, seeds=()):
        x = np.asarray(original, dtype=np.float64).reshape(-1)
        d = np.asarray(approx, dtype=np.float64).reshape(-1) - x
        sq = float(np.dot(d, d))
        energy = float(np.dot(x, x))
        return cls(
            block_errors=np.asarray(block_errors if block_errors is not None else []),
            mse=sq / x.size,
            relative_error=sq / energy if energy > 0 else 0.0,
            max_abs_error=float(np.abs(d).max()) if d.size else 0.0,
            seed_histogram=Counter(int(s) for s in seeds),
        )


def _split_blocks(flat, c):
    n_blocks = -(-flat.size // c)
    padded = np.zeros(n_blocks * c)
    padded[: flat.size] = flat
    return padded.reshape(n_blocks, c)


def compress_tensor(data, pinv: PseudoInverseCache, shape=None, cache: CycleCache | None = None,
                    threads: int = 1, candidates=None, exponent_rule: str = "search"):
    """Compress a tensor block by block in flat row-major order.

    The last block is zero-padded to ``C`` elements. Output does not depend
    on ``threads``. Returns ``(CompressedTensor, ReconstructionStats)``.
    """
    config = pinv.config
    arr = np.asarray(data)
    shape = tuple(arr.shape if shape is None else shape)
    flat = arr.astype(np.float32, copy=False).reshape(-1)
    if flat.size == 0:
        raise ValueError("cannot compress an empty tensor")
    if int(np.prod(shape)) != flat.size:
        raise ValueError(f"shape {shape} does not match {flat.size} elements")
    _check_finite(flat)
    cache = cache if cache is not None else standard_cache(config.k)

    w = _split_blocks(flat.astype(np.float64), config.c)
    chunks = [w[i:i + CHUNK_BLOCKS] for i in range(0, len(w), CHUNK_BLOCKS)]
    logger.debug("compressing %d blocks in %d chunks on %d threads", len(w), len(chunks), threads)

    def run(chunk):
        return compress_blocks(chunk, pinv, candidates, exponent_rule)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]
    seeds, exps, mant, errs = (np.concatenate(cols) for cols in zip(*parts))

    ct = CompressedTensor(config, shape, seeds, exps, mant)
    approx = _reconstruct_flat(config, cache, ct.seeds, ct.exponents, ct.coefficients)[: flat.size]
    stats = ReconstructionStats.from_arrays(flat, approx.astype(np.float32), errs, ct.seeds)
    return ct, stats


def decompress_tensor(ct: CompressedTensor, cache: CycleCache | None = None) -> np.ndarray:
    """Rebuild a float32 array of ``ct.shape``; tail padding is dropped."""
    config = ct.config
    cache = cache if cache is not None else standard_cache(config.k)
    bad = np.flatnonzero((ct.seeds == 0) | (ct.seeds > config.num_seeds))
    if bad.size:
        raise CorruptBlockError(f"invalid seed {int(ct.seeds[bad[0]])}", block=int(bad[0]))
    flat = _reconstruct_flat(config, cache, ct.seeds, ct.exponents, ct.coefficients)
    return flat[: ct.element_count].astype(np.float32).reshape(ct.shape)
