"""Small exact linear-algebra helpers mod primes and prime powers.

Pure Python ints everywhere; matrices are lists of lists (or anything
row-iterable).  Sizes here are tiny (rank <= ~20), so clarity beats
vectorization; the hot batched paths live with their callers.
"""
from __future__ import annotations


def rank_det_mod(rows, p: int):
    """(rank, det) of a matrix mod p; det is None for nonsquare matrices."""
    m = [[int(x) % p for x in r] for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    det = 1
    rank = 0
    row = 0
    for col in range(nc):
        if row == nr:
            break
        piv = next((i for i in range(row, nr) if m[i][col]), None)
        if piv is None:
            det = 0
            continue
        if piv != row:
            m[row], m[piv] = m[piv], m[row]
            det = -det
        a = m[row][col]
        det = det * a % p
        inv = pow(a, -1, p)
        for i in range(row + 1, nr):
            f = m[i][col]
            if f:
                fi = f * inv % p
                m[i] = [(x - fi * y) % p for x, y in zip(m[i], m[row])]
        rank += 1
        row += 1
    if nr != nc:
        return rank, None
    return rank, (det % p if rank == nr else 0)


def rref_mod(rows, p: int):
    """(reduced rows, pivot column indices) of the row space mod p."""
    m = [[int(x) % p for x in r] for r in rows]
    nc = len(m[0]) if m else 0
    out = []
    pivots = []
    for r in m:
        r = list(r)
        for prow, pcol in zip(out, pivots):
            f = r[pcol]
            if f:
                r = [(x - f * y) % p for x, y in zip(r, prow)]
        col = next((j for j in range(nc) if r[j]), None)
        if col is None:
            continue
        inv = pow(r[col], -1, p)
        r = [x * inv % p for x in r]
        out.append(r)
        pivots.append(col)
    # back-substitute for the reduced form
    for i in range(len(out)):
        for k in range(i + 1, len(out)):
            f = out[i][pivots[k]]
            if f:
                out[i] = [(x - f * y) % p for x, y in zip(out[i], out[k])]
    order = sorted(range(len(pivots)), key=lambda i: pivots[i])
    return [out[i] for i in order], [pivots[i] for i in order]


def nullspace_mod(rows, p: int):
    """Basis of {x : Mx = 0 mod p}, one vector per free column."""
    nc = len(rows[0]) if rows else 0
    red, pivots = rref_mod(rows, p)
    free = [j for j in range(nc) if j not in pivots]
    basis = []
    for j in free:
        v = [0] * nc
        v[j] = 1
        for prow, pcol in zip(red, pivots):
            v[pcol] = (-prow[j]) % p
        basis.append(v)
    return basis


def solve_mod(rows, rhs, p: int):
    """One solution of Mx = b mod p, or None if inconsistent."""
    nc = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref_mod(aug, p)
    x = [0] * nc
    for prow, pcol in zip(red, pivots):
        if pcol == nc:
            return None
        x[pcol] = prow[nc]
    return x


def inv_mod_prime_power(rows, ell: int, a: int):
    """Matrix inverse mod l^a; requires unit determinant mod l."""
    mod = ell**a
    n = len(rows)
    m = [[int(x) % mod for x in r] + [1 if i == j else 0 for j in range(n)]
         for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] % ell), None)
        if piv is None:
            raise ValueError("matrix is not invertible mod prime power")
        m[col], m[piv] = m[piv], m[col]
        inv = pow(m[col][col], -1, mod)
        m[col] = [x * inv % mod for x in m[col]]
        for i in range(n):
            if i != col and m[i][col]:
                f = m[i][col]
                m[i] = [(x - f * y) % mod for x, y in zip(m[i], m[col])]
    return [r[n:] for r in m]


def crt_coefficients(prime_powers):
    """c_i with c_i = 1 mod q_i and 0 mod q_j (j != i); x = sum x_i c_i mod prod."""
    total = 1
    for q in prime_powers:
        total *= q
    out = []
    for q in prime_powers:
        rest = total // q
        out.append(rest * pow(rest, -1, q) % total)
    return out, total
