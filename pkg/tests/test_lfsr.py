import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lfsr_step
from seedcodec.errors import NonMaximalLengthError
from seedcodec.lfsr import (
    TAPS,
    LfsrSpec,
    basis_stack,
    build_cycle_cache,
    next_state,
    normalized_matrix,
    raw_matrix,
    standard_cache,
)

K3 = LfsrSpec(3)


@pytest.mark.parametrize("state, expected", [(4, 2), (1, 4), (0, 0), (7, 3)])
def test_next_state_fig2(state, expected):
    assert next_state(K3, state) == expected


def test_spec_defaults_to_table():
    assert LfsrSpec(3).taps == (0, 1)
    assert LfsrSpec(16).taps == (0, 1, 3, 12)
    assert LfsrSpec(24).taps == (0, 1, 2, 7)


@pytest.mark.parametrize("taps", [(3,), (-1, 0), ()])
def test_spec_rejects_bad_taps(taps):
    with pytest.raises(ValueError):
        LfsrSpec(3, taps)


def test_next_state_rejects_wide_state():
    with pytest.raises(ValueError):
        next_state(K3, 8)


@pytest.mark.parametrize("k", sorted(TAPS))
def test_zero_is_absorbing(k):
    assert next_state(LfsrSpec(k), 0) == 0


def test_cycle_k3(cache3):
    assert cache3.cycle_from(4).tolist() == [4, 2, 5, 6, 7, 3, 1]
    assert len(cache3) == 7


def test_cycle_k2_by_hand():
    # 1 -> 2 -> 3 -> 1 with taps (0, 1) on 2-bit states
    cache = build_cycle_cache(LfsrSpec(2))
    assert cache.cycle_from(1).tolist() == [1, 2, 3]


def test_k16_cache_size(cache16):
    assert len(cache16) == 65535
    assert cache16.nbytes == 2 * 65535
    assert sorted(cache16.order.tolist()) == list(range(1, 65536))


def test_non_maximal_taps_rejected():
    # x^4 + x^2 + 1 is not primitive: period 6, not 15
    with pytest.raises(NonMaximalLengthError):
        build_cycle_cache(LfsrSpec(4, (0, 2)))


def test_non_invertible_taps_rejected():
    # without tap 0 the map is not a permutation and never returns to 1
    with pytest.raises(NonMaximalLengthError):
        build_cycle_cache(LfsrSpec(4, (1, 2)))


@pytest.mark.parametrize("k", [2, 3, 4, 5, 8, 12, 16])
def test_cache_matches_next_state(k):
    spec = LfsrSpec(k)
    cache = standard_cache(k)
    states = np.arange(1, 1 << k)
    expected = [next_state(spec, int(s)) for s in states]
    assert cache.successor(states).tolist() == expected


@given(st.integers(min_value=1, max_value=2**16 - 1))
def test_successor_agrees_with_scalar_oracle(seed):
    assert int(standard_cache(16).successor(seed)) == lfsr_step(seed, 16, (0, 1, 3, 12))


def test_raw_matrix_fig2(cache3):
    assert raw_matrix(cache3, 4, 4, 2).tolist() == [[2, 5], [6, 7], [3, 1], [4, 2]]
    assert raw_matrix(cache3, 1, 1, 1).tolist() == [[4]]


def test_raw_matrix_wraps(cache3):
    m = raw_matrix(cache3, 4, 7, 2).reshape(-1).tolist()
    walk, s = [], 4
    for _ in range(14):
        s = lfsr_step(s, 3, (0, 1))
        walk.append(s)
    assert m == walk
    assert m[7] == m[0]


def test_raw_matrix_rejects_zero_seed(cache3):
    with pytest.raises(ValueError):
        raw_matrix(cache3, 0, 2, 2)
    with pytest.raises(ValueError):
        normalized_matrix(cache3, 8, 2, 2)


def test_normalized_matrix_fig2(cache3):
    expected = np.array([[-2, 1], [2, 3], [-1, -3], [0, -2]]) / 3
    np.testing.assert_allclose(normalized_matrix(cache3, 4, 4, 2), expected, rtol=0, atol=1e-15)


def test_normalization_endpoints(cache3):
    u = normalized_matrix(cache3, 1, 1, 7)[0]
    v = raw_matrix(cache3, 1, 1, 7)[0]
    assert dict(zip(v.tolist(), u.tolist()))[4] == 0.0
    assert dict(zip(v.tolist(), u.tolist()))[7] == 1.0
    assert dict(zip(v.tolist(), u.tolist()))[1] == -1.0


@settings(max_examples=50)
@given(st.integers(1, 65535), st.integers(1, 20), st.integers(1, 6))
def test_normalized_range_and_zero(seed, rows, cols):
    cache = standard_cache(16)
    u = normalized_matrix(cache, seed, rows, cols)
    v = raw_matrix(cache, seed, rows, cols)
    assert np.all(np.abs(u) <= 1.0)
    assert np.array_equal(u == 0.0, v == 2**15)


def test_raw_matrix_deterministic(cache16):
    a = raw_matrix(cache16, 12345, 8, 3)
    b = raw_matrix(cache16, 12345, 8, 3)
    assert np.array_equal(a, b)


def test_basis_stack_matches_single(cache16):
    seeds = [1, 77, 65535]
    stack = basis_stack(cache16, seeds, 8, 3)
    for s, u in zip(seeds, stack):
        assert np.array_equal(u, normalized_matrix(cache16, s, 8, 3))
