"""Grid search over (C, P, K) for a fixed bit budget.

Each feasible configuration is scored by the expected relative reconstruction
error on standard-Gaussian blocks, estimated by Monte Carlo.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from seedcodec.codec import build_pinv_cache, candidate_seeds, compress_blocks
from seedcodec.config import COEFF_BITS, EXPONENT_BITS, BlockConfig
from seedcodec.lfsr import MAX_K, MIN_K, standard_cache

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 1000
EXHAUSTIVE_MAX_K = 16
CSV_FIELDS = ("C", "P", "K", "M", "trials", "mean_rel_err", "std_err")


@dataclass(frozen=True)
class DesignPoint:
    config: BlockConfig
    trials: int
    mean_relative_error: float
    std_error: float

    def row(self):
        cfg = self.config
        return (cfg.c, cfg.p, cfg.k, str(cfg.m), self.trials,
                f"{self.mean_relative_error:.10g}", f"{self.std_error:.10g}")


def enumerate_configs(m, max_c: int, max_k: int = EXHAUSTIVE_MAX_K, min_k: int = MIN_K) -> list:
    """All (C, P, K) with K + 4 + 4P = M*C, 1 <= P < C, min_k <= K <= max_k, C <= max_c."""
    m = Fraction(m)
    if m <= 0:
        raise ValueError(f"bit budget must be positive, got {m}")
    if max_k > MAX_K:
        raise ValueError(f"max_k={max_k} exceeds the largest supported register length {MAX_K}")
    configs = []
    for c in range(2, max_c + 1):
        budget = m * c
        if budget.denominator != 1:
            continue
        for p in range(1, c):
            k = int(budget) - EXPONENT_BITS - COEFF_BITS * p
            if max(min_k, MIN_K) <= k <= max_k:
                configs.append(BlockConfig(c, p, k, m))
    return configs


def default_stride(k: int) -> int:
    """Seed stride keeping the search at no more than 2**16 candidates."""
    return 1 << max(0, k - EXHAUSTIVE_MAX_K)


def gaussian_blocks(c: int, trials: int, rng_seed: int) -> np.ndarray:
    """Standard-Gaussian draws shared by every config with block size ``c``."""
    rng = np.random.default_rng([rng_seed, c])
    return rng.standard_normal((trials, c))


def relative_error_estimate(errors, energies):
    """Ratio estimate sum(err)/sum(energy) and its delta-method standard error."""
    errors = np.asarray(errors, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    n = errors.size
    total = energies.sum()
    if total == 0.0:
        return 0.0, 0.0
    ratio = errors.sum() / total
    if n < 2:
        return float(ratio), 0.0
    resid = errors - ratio * energies
    se = math.sqrt(resid.var(ddof=1) / n) / energies.mean()
    return float(ratio), float(se)


def evaluate_config(config: BlockConfig, trials: int = DEFAULT_TRIALS, rng_seed: int = 0,
                    stride: int | None = None, samples=None, threads: int = 1) -> DesignPoint:
    """Estimate E[err_min] / E[||w||^2] for ``config``.

    ``samples`` overrides the Gaussian draws (shape [trials, C]). Seeds are
    searched exhaustively up to K=16 and with a fixed stride above that.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w = gaussian_blocks(config.c, trials, rng_seed) if samples is None else np.asarray(samples, dtype=np.float64)
    if w.shape != (trials, config.c):
        raise ValueError(f"samples must have shape ({trials}, {config.c}), got {w.shape}")
    stride = default_stride(config.k) if stride is None else stride
    seeds = candidate_seeds(config.k, stride)
    pinv = build_pinv_cache(config, standard_cache(config.k), seeds)
    errors = _search_errors(w, pinv, threads)
    mean, se = relative_error_estimate(errors, np.einsum("ij,ij->i", w, w))
    logger.info("%s: %d trials, stride %d, rel err %.6g +- %.2g", config, trials, stride, mean, se)
    return DesignPoint(config, trials, mean, se)


def _search_errors(w, pinv, threads):
    if threads <= 1 or len(w) < 2:
        return compress_blocks(w, pinv)[3]
    parts = np.array_split(w, min(threads, len(w)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate([r[3] for r in pool.map(lambda part: compress_blocks(part, pinv), parts)])


def search(m, max_c: int, max_k: int = EXHAUSTIVE_MAX_K, trials: int = DEFAULT_TRIALS, rng_seed: int = 0,
           threads: int = 1, min_k: int = MIN_K) -> list:
    """Evaluate every feasible config and rank by ascending mean relative error."""
    points = [evaluate_config(cfg, trials, rng_seed, threads=threads)
              for cfg in enumerate_configs(m, max_c, max_k, min_k)]
    return sorted(points, key=lambda pt: (pt.mean_relative_error, pt.config.c, pt.config.p, pt.config.k))


def write_csv(points, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for pt in points:
        writer.writerow(pt.row())


def format_ranking(points) -> str:
    lines = [f"{'rank':>4}  {'C':>3} {'P':>3} {'K':>3}  {'rel.err':>12}  {'std.err':>10}"]
    for i, pt in enumerate(points, 1):
        cfg = pt.config
        lines.append(f"{i:>4}  {cfg.c:>3} {cfg.p:>3} {cfg.k:>3}  {pt.mean_relative_error:>12.6g}  {pt.std_error:>10.3g}")
    return "\n".join(lines)
