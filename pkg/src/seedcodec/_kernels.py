"""Compiled inner loops.

Every reduction runs in a fixed sequential order so results are bit-identical
no matter how blocks are split across calls or threads.
"""

import math

import numba
import numpy as np

EXP_MIN = -8
EXP_MAX = 7
Q_MIN = -8.0
Q_MAX = 7.0

# 2**e and 2**-e for e in [EXP_MIN, EXP_MAX]; both exact in float64.
_SCALE = np.array([2.0**e for e in range(EXP_MIN, EXP_MAX + 1)])
_INV_SCALE = 1.0 / _SCALE


@numba.njit(cache=True, nogil=True)
def walk_cycle(k, tap_mask, start, out):
    """Fill ``out`` with the states following ``start``.

    Returns the number of steps taken before the walk got back to ``start``
    (``len(out)`` when it never did early), or -1 when the last state written
    is not ``start``.
    """
    top = k - 1
    state = start
    n = out.shape[0]
    for i in range(n):
        x = state & tap_mask
        bit = 0
        while x:
            bit ^= 1
            x &= x - 1
        state = (state >> 1) | (bit << top)
        out[i] = state
        if state == start and i != n - 1:
            return i + 1
    if state != start:
        return -1
    return n


@numba.njit(cache=True, nogil=True, inline="always")
def _quantization_error(t, idx):
    s = _SCALE[idx]
    inv = _INV_SCALE[idx]
    err = 0.0
    for p in range(t.shape[0]):
        q = min(max(np.rint(t[p] * inv), Q_MIN), Q_MAX)
        d = t[p] - q * s
        err += d * d
    return err


@numba.njit(cache=True, nogil=True)
def search_exponent(t):
    """Exponent in [-8, 7] minimising ||t - q * 2**e||**2; smallest e on ties.

    Equivalent to trying all 16 exponents. With 2**E <= max|t| < 2**(E+1):
    every e >= E+2 rounds all of t to zero, which e = E+1 never does worse
    than, and e <= E-3 saturates the largest entry, giving the lower bound
    (max|t| - 8 * 2**e)**2 that grows as e falls.
    """
    m = 0.0
    for p in range(t.shape[0]):
        a = abs(t[p])
        if a > m:
            m = a
    if m == 0.0:
        return EXP_MIN
    top = math.frexp(m)[1] - 1
    lo = min(max(top - 2, EXP_MIN), EXP_MAX)
    hi = min(max(top + 1, EXP_MIN), EXP_MAX)
    best = np.inf
    best_e = lo
    for e in range(lo, hi + 1):
        err = _quantization_error(t, e - EXP_MIN)
        if err < best:
            best = err
            best_e = e
    for e in range(lo - 1, EXP_MIN - 1, -1):
        gap = m - 8.0 * _SCALE[e - EXP_MIN]
        if gap > 0.0 and gap * gap > best:
            break
        err = _quantization_error(t, e - EXP_MIN)
        if err <= best:
            best = err
            best_e = e
    return best_e


@numba.njit(cache=True, nogil=True)
def floor_log2_exponent(t):
    """Shared exponent max_i floor(log2|t_i|), clamped to [-8, 7]."""
    m = 0.0
    for p in range(t.shape[0]):
        a = abs(t[p])
        if a > m:
            m = a
    if m == 0.0:
        return EXP_MIN
    return min(max(math.frexp(m)[1] - 1, EXP_MIN), EXP_MAX)


@numba.njit(cache=True, nogil=True)
def quantize_into(t, e, q_out):
    inv = _INV_SCALE[e - EXP_MIN]
    for p in range(t.shape[0]):
        q_out[p] = min(max(np.rint(t[p] * inv), Q_MIN), Q_MAX)


@numba.njit(cache=True, nogil=True)
def quantize_rows(t, literal):
    """Quantize each row of ``t``; returns (q int8 [n, P], e int8 [n])."""
    n, p_dim = t.shape
    q = np.empty((n, p_dim), dtype=np.int8)
    e_out = np.empty(n, dtype=np.int8)
    buf = np.empty(p_dim)
    for i in range(n):
        if literal:
            e = floor_log2_exponent(t[i])
        else:
            e = search_exponent(t[i])
        quantize_into(t[i], e, buf)
        for p in range(p_dim):
            q[i, p] = np.int8(buf[p])
        e_out[i] = e
    return q, e_out


@numba.njit(cache=True, nogil=True, inline="always")
def _combine(basis, coeffs, c, p_dim):
    y = 0.0
    for p in range(p_dim):
        y += basis[c, p] * coeffs[p]
    return y


@numba.njit(cache=True, nogil=True)
def search_blocks(w, bases, operators, candidates, literal):
    """Exhaustive seed search for each row of ``w``.

    ``candidates`` indexes rows of ``bases``/``operators``; the first
    candidate reaching the minimum error wins.
    Returns (best candidate position, exponent, q, error) per block.
    """
    n_blocks, c_dim = w.shape
    p_dim = bases.shape[2]
    best_pos = np.empty(n_blocks, dtype=np.int64)
    best_exp = np.empty(n_blocks, dtype=np.int8)
    best_q = np.empty((n_blocks, p_dim), dtype=np.int8)
    best_err = np.empty(n_blocks)
    t = np.empty(p_dim)
    q = np.empty(p_dim)
    tq = np.empty(p_dim)
    for b in range(n_blocks):
        lowest = np.inf
        pos = 0
        exp = EXP_MIN
        for j in range(candidates.shape[0]):
            n = candidates[j]
            op = operators[n]
            basis = bases[n]
            for p in range(p_dim):
                acc = 0.0
                for c in range(c_dim):
                    acc += op[p, c] * w[b, c]
                t[p] = acc
            if literal:
                e = floor_log2_exponent(t)
            else:
                e = search_exponent(t)
            quantize_into(t, e, q)
            s = _SCALE[e - EXP_MIN]
            for p in range(p_dim):
                tq[p] = q[p] * s
            err = 0.0
            for c in range(c_dim):
                r = w[b, c] - _combine(basis, tq, c, p_dim)
                err += r * r
            if err < lowest:
                lowest = err
                pos = j
                exp = e
                for p in range(p_dim):
                    best_q[b, p] = np.int8(q[p])
        best_pos[b] = pos
        best_exp[b] = exp
        best_err[b] = lowest
    return best_pos, best_exp, best_q, best_err


@numba.njit(cache=True, nogil=True)
def reconstruct_blocks(bases, q, e):
    """Rows ``bases[i] @ (q[i] * 2**e[i])`` with the search's summation order."""
    n_blocks, c_dim, p_dim = bases.shape
    out = np.empty((n_blocks, c_dim))
    tq = np.empty(p_dim)
    for b in range(n_blocks):
        s = _SCALE[e[b] - EXP_MIN]
        for p in range(p_dim):
            tq[p] = q[b, p] * s
        for c in range(c_dim):
            out[b, c] = _combine(bases[b], tq, c, p_dim)
    return out
