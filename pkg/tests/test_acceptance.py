"""Exit criteria for the codec, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary.
"""

import math
import time

import numpy as np
import pytest

from oracles import brute_force_block, lfsr_step
from seedcodec import BlockConfig, CompressedTensor, build_cycle_cache, build_pinv_cache, decode, encode
from seedcodec.cli import main
from seedcodec.codec import compress_blocks
from seedcodec.container import container_size, encode_payload
from seedcodec.explorer import relative_error_estimate
from seedcodec.lfsr import TAPS, LfsrSpec, raw_matrix

RESULTS = []

# First verified run: 1000 blocks from default_rng(7), (C, P, K) = (8, 3, 16),
# exhaustive search.
BASELINE_REL_ERR = 0.014599106894690825
BASELINE_STD_ERR = 0.0001871460804953237


def record(number, ok, detail):
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def test_1_fig2_golden():
    build_cycle_cache(LfsrSpec(3))  # compile outside the timed region
    timings = []
    for _ in range(5):
        t0 = time.perf_counter()
        cache = build_cycle_cache(LfsrSpec(3))
        cycle = cache.cycle_from(4).tolist() + [int(cache.successor(1))]
        v4 = raw_matrix(cache, 4, 4, 2).tolist()
        timings.append(time.perf_counter() - t0)
    ok = cycle == [4, 2, 5, 6, 7, 3, 1, 4] and v4 == [[2, 5], [6, 7], [3, 1], [4, 2]] and min(timings) < 1e-3
    record(1, ok, f"cycle {cycle}, V(4) {v4}, {min(timings) * 1e3:.3f} ms")


def test_2_maximal_length_all_k():
    t0 = time.perf_counter()
    failures = []
    for k in sorted(TAPS):
        cache = build_cycle_cache(LfsrSpec(k))
        period = (1 << k) - 1
        seen = np.zeros(1 << k, dtype=bool)
        seen[cache.order] = True
        if len(cache) != period or seen[0] or not seen[1:].all():
            failures.append(k)
    # independent scalar walk for the smaller registers
    for k in range(2, 17):
        state, steps = lfsr_step(1, k, TAPS[k]), 1
        while state != 1:
            state = lfsr_step(state, k, TAPS[k])
            steps += 1
        if steps != (1 << k) - 1:
            failures.append(k)
    elapsed = time.perf_counter() - t0
    record(2, not failures and elapsed < 60, f"K=2..24 maximal-length, failures {failures}, {elapsed:.1f} s")


def test_3_budget_conformance():
    m3, m4 = BlockConfig(12, 4, 16, 3), BlockConfig(8, 3, 16, 4)
    rng = np.random.default_rng(0)
    ok = True
    for cfg, bits in ((m3, 36), (m4, 32)):
        for n_blocks in (1, 2, 7, 100):
            ct = CompressedTensor(cfg, (n_blocks * cfg.c,), rng.integers(1, 65536, n_blocks),
                                  rng.integers(-8, 8, n_blocks), rng.integers(-8, 8, (n_blocks, cfg.p)))
            ok &= ct.payload_bits == n_blocks * bits
            ok &= len(encode_payload(ct)) == math.ceil(n_blocks * bits / 8)
    ok &= m3.m == 3 and m4.m == 4 and m3.block_bits == 36 and m4.block_bits == 32
    record(3, ok, "(12,4,16) -> 36 bits/block at M=3, (8,3,16) -> 32 bits/block at M=4")


def test_4_round_trip_bijection():
    rng = np.random.default_rng(2024)
    cpks = [(8, 3, 16), (12, 4, 16), (4, 2, 3), (7, 2, 11), (10, 3, 20), (9, 1, 24)]
    mismatches = 0
    for i in range(1000):
        cfg = BlockConfig(*cpks[i % len(cpks)])
        shape = tuple(int(d) for d in rng.integers(1, 30, rng.integers(1, 4)))
        n_blocks = cfg.num_blocks(math.prod(shape))
        ct = CompressedTensor(cfg, shape, rng.integers(1, cfg.num_seeds + 1, n_blocks),
                              rng.integers(-8, 8, n_blocks), rng.integers(-8, 8, (n_blocks, cfg.p)))
        data = encode({f"t{i}": ct})
        back = decode(data)[f"t{i}"]
        if back != ct or back.tail_length != ct.tail_length or encode({f"t{i}": back}) != data:
            mismatches += 1
    record(4, mismatches == 0, f"1000 random tensors, {mismatches} mismatches")


def test_5_argmin_against_brute_force():
    cfg = BlockConfig(4, 2, 3)
    pinv = build_pinv_cache(cfg)
    rng = np.random.default_rng(5)
    w = rng.standard_normal((100, 4))
    seeds, _, _, errs = compress_blocks(w, pinv)
    seed_mismatch = 0
    worst_rel = 0.0
    for row, seed, err in zip(w, seeds, errs):
        table, best = brute_force_block(row.tolist(), 3, TAPS[3], 2)
        seed_mismatch += int(seed) != best
        oracle = table[best][0]
        worst_rel = max(worst_rel, abs(err - oracle) / max(oracle, 1e-300))
    record(5, seed_mismatch == 0 and worst_rel <= 1e-6,
           f"100 blocks, {seed_mismatch} seed mismatches, worst relative error gap {worst_rel:.2e}")


def test_6_unquantized_residual_bound():
    pinv = build_pinv_cache(BlockConfig.preset(4))
    rng = np.random.default_rng(6)
    idx = rng.integers(0, len(pinv), 10_000)
    w = rng.standard_normal((10_000, 8)) * rng.lognormal(0, 2, (10_000, 1))
    t = np.einsum("npc,nc->np", pinv.operators[idx], w)
    resid = w - np.einsum("ncp,np->nc", pinv.bases[idx], t)
    ratio = np.linalg.norm(resid, axis=1) / np.linalg.norm(w, axis=1)
    record(6, bool(np.all(ratio <= 1 + 1e-9)), f"10000 pairs, max ||r||/||w|| = {ratio.max():.12f}")


def test_7_quality_regression():
    pinv = build_pinv_cache(BlockConfig.preset(4))
    w = np.random.default_rng(7).standard_normal((1000, 8))
    energy = np.einsum("ij,ij->i", w, w)
    t0 = time.perf_counter()
    full, se = relative_error_estimate(compress_blocks(w, pinv)[3], energy)
    elapsed = time.perf_counter() - t0
    single, _ = relative_error_estimate(compress_blocks(w, pinv, candidates=[1])[3], energy)
    ok = full < single and abs(full - BASELINE_REL_ERR) <= 2 * BASELINE_STD_ERR
    record(7, ok, f"exhaustive {full:.6f} (+-{se:.1e}) vs single seed {single:.4f}, "
                  f"baseline {BASELINE_REL_ERR:.6f}, search {elapsed:.1f} s")


def test_8_compression_ratio(tmp_path, capsys):
    n = (1 << 20) // 4
    x = np.random.default_rng(8).standard_normal(n).astype("<f4")
    (tmp_path / "w.f32").write_bytes(x.tobytes())
    # fields are fixed-width, so the file size does not depend on search breadth
    code = main(["compress", str(tmp_path / "w.f32"), "--shape", str(n), "--bits", "4",
                 "--seed-stride", "256", "-o", str(tmp_path / "w.sdlm")])
    capsys.readouterr()
    size = (tmp_path / "w.sdlm").stat().st_size
    header = container_size([(n,)], BlockConfig.preset(4), ["w"]) - 131072
    ok = code == 0 and abs(size - (131072 + header)) <= 0.01 * 131072 and header < 64
    record(8, ok, f"{size} bytes for 1 MiB of float32 ({header} bytes header, ratio {size / (4 * n):.5f})")


def test_9_out_of_scope():
    RESULTS.append("[N/A ] criterion 9: perplexity, zero-shot and FPGA results are not reproduced")
    pytest.skip("LLM evaluation and FPGA measurements are outside this package")
