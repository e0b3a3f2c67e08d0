"""Independent scalar reference implementations used as test oracles.

Nothing here imports the package; everything is plain Python floats and ints.
"""

import math

TAPS_BY_K = {3: (0, 1), 2: (0, 1), 16: (0, 1, 3, 12)}


def lfsr_step(state, k, taps):
    bit = 0
    for j in taps:
        bit ^= (state >> j) & 1
    return (state >> 1) | (bit << (k - 1))


def lfsr_matrix(seed, k, taps, rows, cols):
    """Normalized rows x cols matrix filled row-major with the states after ``seed``."""
    half = 2 ** (k - 1)
    out = []
    state = seed
    for _ in range(rows):
        row = []
        for _ in range(cols):
            state = lfsr_step(state, k, taps)
            row.append((state - half) / (half - 1))
        out.append(row)
    return out


def transpose(a):
    return [list(col) for col in zip(*a)]


def matmul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def solve(a, b):
    """Solve a x = b for square ``a`` by Gauss-Jordan with partial pivoting."""
    n = len(a)
    m = [list(a[i]) + list(b[i]) for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        d = m[col][col]
        m[col] = [v / d for v in m[col]]
        for r in range(n):
            if r != col:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
    return [row[n:] for row in m]


def least_squares(u, w):
    """Coefficients minimising ||w - u t|| through the normal equations."""
    ut = transpose(u)
    g = matmul(ut, u)
    rhs = matmul(ut, [[x] for x in w])
    return [row[0] for row in solve(g, rhs)]


def quantize_exhaustive(t):
    """Try all 16 exponents; smallest squared error wins, smallest exponent on ties."""
    best = None
    for e in range(-8, 8):
        s = 2.0**e
        q = [min(max(round(x / s), -8), 7) for x in t]
        err = sum((x - qi * s) ** 2 for x, qi in zip(t, q))
        if best is None or err < best[0]:
            best = (err, q, e)
    return best[1], best[2]


def block_error(w, u, q, e):
    s = 2.0**e
    err = 0.0
    for i, row in enumerate(u):
        y = sum(row[j] * q[j] * s for j in range(len(q)))
        err += (w[i] - y) ** 2
    return err


def brute_force_block(w, k, taps, p):
    """(errors per seed, best seed) with every seed tried in order."""
    errors = {}
    for seed in range(1, 2**k):
        u = lfsr_matrix(seed, k, taps, len(w), p)
        t = least_squares(u, w)
        q, e = quantize_exhaustive(t)
        errors[seed] = (block_error(w, u, q, e), q, e)
    best = min(errors, key=lambda s: (errors[s][0], s))
    return errors, best


def norm(v):
    return math.sqrt(sum(x * x for x in v))
