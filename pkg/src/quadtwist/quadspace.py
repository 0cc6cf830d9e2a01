"""Orthogonal groups of nondegenerate quadratic spaces over Z/nu (nu odd).

Conventions: the Gram matrix G stores the symmetric bilinear form B, and
Q(v) = B(v, v) = v^T G v.  Dickson invariants and minus-spinor norms are
computed on the mod-l reduction at each prime l | nu; the kernel of
O(Z/l^a) -> O(F_l) is an l-group, so both Z/2-valued invariants factor
through the reduction.

Enumeration and exact uniform sampling share one structure: the group over
F_l is walked column by column (Witt extension makes the number of
completions of a partial isometry independent of the choices, so uniform
choices at each column give the uniform distribution), and each further
power of l is a Hensel rung whose fiber is an equal-size torsor under
antisymmetric matrices mod l.  Composite nu is assembled by CRT.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._linalg import (
    crt_coefficients,
    inv_mod_prime_power,
    nullspace_mod,
    rank_det_mod,
    rref_mod,
)
from .errors import BudgetError, InvariantError
from .modmath import Modulus, factorize

DEFAULT_ENUM_BUDGET = 2_000_000

_COSET_LABELS = {(0, 0): "Omega", (0, 1): "A", (1, 0): "B", (1, 1): "C"}


def is_square_mod(x: int, ell: int) -> bool:
    """Euler's criterion; x must be a unit mod the odd prime l."""
    x %= ell
    if x == 0:
        raise ValueError("square class of 0 is undefined")
    return pow(x, (ell - 1) // 2, ell) == 1


@dataclass(frozen=True)
class QuadSpace:
    """Free module (Z/nu)^s with nondegenerate symmetric Gram matrix."""

    nu: int
    gram: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(nu: int, gram) -> "QuadSpace":
        mod = Modulus.of(nu)
        g = [[int(x) % nu for x in row] for row in gram]
        s = len(g)
        if any(len(row) != s for row in g):
            raise ValueError("gram matrix must be square")
        if any(g[i][j] != g[j][i] for i in range(s) for j in range(s)):
            raise ValueError("gram matrix must be symmetric")
        for p in mod.primes:
            rank, det = rank_det_mod(g, p)
            if rank < s or det == 0:
                raise ValueError(f"gram matrix is degenerate mod {p}")
        return QuadSpace(nu, tuple(tuple(row) for row in g))

    @staticmethod
    def diagonal(nu: int, entries) -> "QuadSpace":
        s = len(entries)
        return QuadSpace.of(
            nu, [[entries[i] if i == j else 0 for j in range(s)] for i in range(s)]
        )

    @staticmethod
    def standard_split(nu: int, n: int) -> "QuadSpace":
        """Rank 2n with Q(x) = sum_i x_i x_{n+i} (hyperbolic sum)."""
        half = (nu + 1) // 2  # 1/2 mod nu
        g = [[0] * (2 * n) for _ in range(2 * n)]
        for i in range(n):
            g[i][n + i] = g[n + i][i] = half
        return QuadSpace.of(nu, g)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def modulus(self) -> Modulus:
        return Modulus.of(self.nu)

    def gram_array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    def bilinear(self, u, v) -> int:
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        return int(u @ self.gram_array() @ v % self.nu)

    def quad(self, v) -> int:
        return self.bilinear(v, v)

    def to_json(self) -> dict:
        return {"modulus": self.nu, "gram": [list(r) for r in self.gram]}

    @staticmethod
    def from_json(d: dict) -> "QuadSpace":
        return QuadSpace.of(d["modulus"], d["gram"])

    def __str__(self) -> str:
        return f"QuadSpace(Z/{self.nu}, rank {self.rank})"


@dataclass(frozen=True)
class CosetSignature:
    """Per-prime (dickson, spinor) bits; all-zero is Omega."""

    bits: tuple[tuple[int, tuple[int, int]], ...]

    @staticmethod
    def of(d: dict) -> "CosetSignature":
        return CosetSignature(
            tuple((int(p), (int(b[0]) & 1, int(b[1]) & 1)) for p, b in sorted(d.items()))
        )

    def bit(self, p: int) -> tuple[int, int]:
        for q, b in self.bits:
            if q == p:
                return b
        raise KeyError(p)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.bits)

    def is_omega(self) -> bool:
        return all(b == (0, 0) for _, b in self.bits)

    def label(self) -> str:
        """Omega/A/B/C for a single-prime signature."""
        if len(self.bits) != 1:
            raise ValueError("coset labels are defined for prime moduli only")
        return _COSET_LABELS[self.bits[0][1]]

    @staticmethod
    def from_label(nu: int, label: str) -> "CosetSignature":
        mod = Modulus.of(nu)
        if label == "Omega":
            return CosetSignature.of({p: (0, 0) for p in mod.primes})
        if mod.omega() != 1:
            raise ValueError(f"label {label!r} needs a prime modulus, got {nu}")
        rev = {v: k for k, v in _COSET_LABELS.items()}
        if label not in rev:
            raise ValueError(f"unknown coset label {label!r}")
        return CosetSignature.of({mod.primes[0]: rev[label]})


@dataclass(frozen=True)
class OrthoElement:
    """Group element; signature is filled by the classify paths."""

    mat: tuple[tuple[int, ...], ...]
    signature: CosetSignature | None = field(default=None, compare=False)

    @staticmethod
    def of(mat, signature=None) -> "OrthoElement":
        arr = np.asarray(mat)
        return OrthoElement(tuple(tuple(int(x) for x in r) for r in arr), signature)

    def as_array(self) -> np.ndarray:
        return np.array(self.mat, dtype=np.int64)


def is_orthogonal(space: QuadSpace, mat) -> bool:
    m = np.asarray(mat, dtype=np.int64) % space.nu
    g = space.gram_array()
    return bool(((m.T @ g @ m - g) % space.nu == 0).all())


def reflection(space: QuadSpace, v) -> np.ndarray:
    """r_v(x) = x - (2 B(x,v) / Q(v)) v; Q(v) must be a unit mod nu."""
    nu = space.nu
    v = np.asarray(v, dtype=np.int64) % nu
    q = space.quad(v)
    for p in space.modulus.primes:
        if q % p == 0:
            raise ValueError(f"Q(v) = {q} is not a unit mod {p}")
    coeff = 2 * pow(int(q), -1, nu) % nu
    gv = space.gram_array() @ v % nu
    r = (np.eye(space.rank, dtype=np.int64) - coeff * np.outer(v, gv)) % nu
    return r


def dickson(space: QuadSpace, mat) -> dict[int, int]:
    """Per-prime Dickson bit: 0 if det = 1 mod l, 1 if det = -1."""
    out = {}
    for p in space.modulus.primes:
        _, det = rank_det_mod(np.asarray(mat) % p, p)
        if det == 1 % p:
            out[p] = 0
        elif det == (p - 1) % p:
            out[p] = 1
        else:
            raise InvariantError(f"det {det} mod {p} is not +-1; not orthogonal?")
    return out


@lru_cache(maxsize=32)
def _all_vectors(ell: int, s: int) -> np.ndarray:
    """All of F_l^s in lexicographic order, as an (l^s, s) array."""
    return np.array(list(itertools.product(range(ell), repeat=s)), dtype=np.int64)


_GREEDY_SCAN_LIMIT = 4096  # full-vector scans up to this many candidates


def _reflection_mat_l(gl, w, ell: int) -> np.ndarray:
    coeff = 2 * pow(int(w @ gl @ w % ell), -1, ell) % ell
    return (np.eye(len(w), dtype=np.int64) - coeff * np.outer(w, gl @ w % ell)) % ell


def _decompose_cls(gl, g, ell: int, order_seed) -> tuple[int, int]:
    """(product of -Q(w_i) mod l, reflection count) for one reflection
    decomposition of g, by the classical recursion: secure an anisotropic
    fixed vector (at most two reflections), then restrict to its orthogonal
    complement and recurse on the smaller space."""
    s = g.shape[0]
    eye = np.eye(s, dtype=np.int64)
    if not ((g - eye) % ell).any():
        return 1, 0
    vecs = _all_vectors(ell, s)
    if order_seed is not None:
        vecs = vecs[np.random.default_rng((order_seed, ell, s)).permutation(len(vecs))]
    qv = (vecs @ gl * vecs).sum(axis=1) % ell
    imgs = (vecs @ g.T - vecs) % ell
    qw = (imgs @ gl * imgs).sum(axis=1) % ell
    moved = imgs.any(axis=1)
    # anisotropic fixed vector: restrict to its complement (dimension drops)
    idx = np.flatnonzero(~moved & (qv != 0))
    if idx.size:
        v = vecs[idx[0]]
        gv = gl @ v % ell
        nmat = np.array(
            nullspace_mod([[int(x) for x in gv]], ell), dtype=np.int64
        )  # rows span the complement of v
        gres = nmat @ gl @ nmat.T % ell
        ginv = np.array(inv_mod_prime_power(gres.tolist(), ell, 1), dtype=np.int64)
        proj = ginv @ nmat @ gl % ell  # coords on the complement
        return _decompose_cls(gres, proj @ g @ nmat.T % ell, ell, order_seed)
    # anisotropic v with w = gv - v anisotropic: r_w g fixes v
    idx = np.flatnonzero((qv != 0) & (qw != 0))
    if idx.size:
        w = imgs[idx[0]]
        cls, n = _decompose_cls(gl, _reflection_mat_l(gl, w, ell) @ g % ell, ell, order_seed)
        return cls * (-(int(w @ gl @ w)) % ell) % ell, n + 1
    # exceptional case (image of g-1 totally isotropic on anisotropic
    # vectors): two reflections r_{w2} r_u arrange an anisotropic fixed v
    aniso = np.flatnonzero(qv)
    for vi in np.flatnonzero((qv != 0) & moved):
        v = vecs[vi]
        gv = g @ v % ell
        for ui in aniso:
            u = vecs[ui]
            w2 = (_reflection_mat_l(gl, u, ell) @ gv - v) % ell
            if int(w2 @ gl @ w2 % ell) == 0:
                continue
            h = _reflection_mat_l(gl, w2, ell) @ _reflection_mat_l(gl, u, ell) @ g % ell
            cls, n = _decompose_cls(gl, h, ell, order_seed)
            cls = cls * (-(int(u @ gl @ u)) % ell) % ell
            cls = cls * (-(int(w2 @ gl @ w2)) % ell) % ell
            return cls, n + 2
    raise InvariantError("reflection decomposition found no admissible vector")


def _spinor_bit_greedy(gram_l, mat_l, ell: int, order_seed=None) -> int:
    g0 = np.asarray(mat_l, dtype=np.int64) % ell
    gl = np.asarray(gram_l, dtype=np.int64) % ell
    cls, nrefl = _decompose_cls(gl, g0.copy(), ell, order_seed)
    # parity of the reflection count must reproduce the determinant
    _, det = rank_det_mod(g0, ell)
    if det != pow(ell - 1, nrefl, ell):
        raise InvariantError("reflection count parity disagrees with det")
    return 0 if is_square_mod(cls, ell) else 1


def _spinor_bit_wall(gram_l, mat_l, ell: int) -> int:
    """Closed form: sp- = square class of 2^r det(P) with P the pairing
    P[i][j] = B(x_i, (g-1)x_j) on preimages x_i of a basis of im(g-1);
    equals the reflection-product class for every decomposition."""
    g = np.asarray(mat_l, dtype=np.int64) % ell
    gl = np.asarray(gram_l, dtype=np.int64) % ell
    s = g.shape[0]
    i_mat = (g - np.eye(s, dtype=np.int64)) % ell
    _, piv = rref_mod([[int(x) for x in row] for row in i_mat], ell)
    r = len(piv)
    if r == 0:
        return 0
    m = gl @ i_mat % ell  # m[i, j] = B(e_i, (g-1) e_j)
    w = m[np.ix_(piv, piv)]
    rk, det = rank_det_mod([[int(x) for x in row] for row in w], ell)
    if rk < r or det == 0:
        raise InvariantError("pairing on im(g-1) is degenerate; not orthogonal?")
    return 0 if is_square_mod(pow(2, r, ell) * det % ell, ell) else 1


def _spinor_bit_mod_ell(gram_l, mat_l, ell: int, method="auto", order_seed=None) -> int:
    if method == "auto":
        method = "greedy" if ell ** len(gram_l) <= _GREEDY_SCAN_LIMIT else "wall"
    if method == "greedy":
        return _spinor_bit_greedy(gram_l, mat_l, ell, order_seed)
    if method == "wall":
        return _spinor_bit_wall(gram_l, mat_l, ell)
    raise ValueError(f"unknown spinor method {method!r}")


def spinor_minus(space: QuadSpace, mat, method="auto", order_seed=None) -> dict[int, int]:
    """Per-prime minus-spinor bit: the square class of prod -Q(w_i) over any
    reflection decomposition of g mod l.  Small reductions decompose into
    reflections explicitly (order_seed permutes the candidate scan; the
    result is decomposition-independent); large ones use the closed form on
    im(g-1)."""
    m = np.asarray(mat, dtype=np.int64)
    out = {}
    for p in space.modulus.primes:
        out[p] = _spinor_bit_mod_ell(
            space.gram_array() % p, m % p, p, method=method, order_seed=order_seed
        )
    return out


def coset_signature(space: QuadSpace, mat) -> CosetSignature:
    d = dickson(space, mat)
    s = spinor_minus(space, mat)
    return CosetSignature.of({p: (d[p], s[p]) for p in space.modulus.primes})


def omega_member(space: QuadSpace, mat) -> bool:
    return coset_signature(space, mat).is_omega()


def group_order(space: QuadSpace) -> int:
    """#O(Q)(Z/nu) by the classical field formulas and smooth lifting."""
    out = 1
    for p, a in space.modulus.factors:
        out *= _field_order(space.gram, p) * p ** ((a - 1) * space.rank * (space.rank - 1) // 2)
    return out


def _field_order(gram, ell: int) -> int:
    s = len(gram)
    _, det = rank_det_mod(gram, ell)
    if s % 2:
        m = (s - 1) // 2
        o = 2 * ell ** (m * m)
        for i in range(1, m + 1):
            o *= ell ** (2 * i) - 1
        return o
    m = s // 2
    disc = (-1) ** m * det % ell
    eps = 1 if is_square_mod(disc, ell) else -1
    o = 2 * ell ** (m * (m - 1)) * (ell**m - eps)
    for i in range(1, m):
        o *= ell ** (2 * i) - 1
    return o


# ------------------------------------------------------------- enumeration


def _enumerate_field(gram, ell: int) -> list[np.ndarray]:
    """All of O(Q)(F_l), deterministic (columns lexicographic)."""
    s = len(gram)
    g = np.array(gram, dtype=np.int64) % ell
    cands = _all_vectors(ell, s)
    cg = cands @ g % ell
    qv = (cg * cands).sum(axis=1) % ell
    out = []

    def rec(cols, red):
        k = len(cols)
        mask = qv == int(g[k, k])
        for j, c in enumerate(cols):
            mask &= cg @ c % ell == int(g[j, k])
        for t in np.flatnonzero(mask):
            v = cands[t]
            r = v.copy()
            for piv, row in red:
                f = int(r[piv])
                if f:
                    r = (r - f * row) % ell
            nz = np.flatnonzero(r)
            if nz.size == 0:
                continue  # dependent on chosen columns
            if k + 1 == s:
                out.append(np.column_stack(cols + [v]))
                continue
            piv = int(nz[0])
            row = r * pow(int(r[piv]), -1, ell) % ell
            red2 = [(p0, (r0 - r0[piv] * row) % ell) for p0, r0 in red]
            rec(cols + [v], red2 + [(piv, row)])

    rec([], [])
    return out


def _antisymmetric_mats(ell: int, s: int) -> list[np.ndarray]:
    pairs = [(i, j) for i in range(s) for j in range(i + 1, s)]
    out = []
    for vals in itertools.product(range(ell), repeat=len(pairs)):
        a = np.zeros((s, s), dtype=np.int64)
        for (i, j), x in zip(pairs, vals):
            a[i, j] = x
            a[j, i] = (-x) % ell
        out.append(a)
    return out


def _lift_once(mats, gram_q, ginv_l, ell: int, a: int, k: int, antis) -> list[np.ndarray]:
    """All Hensel lifts from validity mod l^k to mod l^{k+1}."""
    q = ell**a
    lk = ell**k
    inv2 = pow(2, -1, ell)
    out = []
    for m in mats:
        t = (gram_q - m.T @ gram_q @ m) % q
        if (t % lk).any():
            raise InvariantError("lift rung received an invalid matrix")
        e = (t // lk) % ell
        s0 = e * inv2 % ell
        for aa in antis:
            z = ginv_l @ ((s0 + aa) % ell) % ell
            out.append((m + lk * (m @ z)) % q)
    return out


def _enumerate_prime_power(gram, ell: int, a: int) -> list[np.ndarray]:
    q = ell**a
    base = _enumerate_field(gram, ell)
    if a == 1:
        return base
    gram_q = np.array(gram, dtype=np.int64) % q
    ginv_l = np.array(inv_mod_prime_power(gram, ell, 1), dtype=np.int64)
    antis = _antisymmetric_mats(ell, len(gram))
    mats = [m % q for m in base]
    for k in range(1, a):
        mats = _lift_once(mats, gram_q, ginv_l, ell, a, k, antis)
    return mats


def enumerate_orthogonal(space: QuadSpace, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
    """All of O(Q)(Z/nu) as an (N, s, s) array, deterministic order.

    Refuses (BudgetError) when the closed-form order exceeds the budget.
    """
    est = group_order(space)
    if est > budget:
        raise BudgetError(
            f"group order {est} exceeds enumeration budget {budget}", estimate=est
        )
    per = []
    for p, a in space.modulus.factors:
        gram_p = [[x % p**a for x in row] for row in space.gram]
        per.append(_enumerate_prime_power(gram_p, p, a))
    coeffs, total = crt_coefficients([p**a for p, a in space.modulus.factors])
    if total != space.nu:
        raise InvariantError("CRT total mismatch")
    out = np.empty((est, space.rank, space.rank), dtype=np.int64)
    for idx, combo in enumerate(itertools.product(*per)):
        m = sum(c * mm for c, mm in zip(coeffs, combo)) % space.nu
        out[idx] = m
    if idx + 1 != est:
        raise InvariantError(
            f"enumeration found {idx + 1} elements, closed form says {est}"
        )
    return out


# ---------------------------------------------------------------- sampling


class _FrameSampler:
    """Exact uniform sampler over O(Q)(F_l) via uniform column extensions.

    Maintains, incrementally: the chosen columns, an rref of their span
    (independence tests), a dual basis y_j with B(c_i, y_j) = delta_ij
    (particular solutions), and a basis of the joint kernel of the
    constraint rows (the solution space direction)."""

    def __init__(self, gram, ell: int, rng):
        self.g = np.array(gram, dtype=np.int64) % ell
        self.ell = ell
        self.rng = rng
        self.s = self.g.shape[0]

    def sample(self, ncols: int | None = None) -> np.ndarray:
        """Uniform frame; with ncols < rank, a uniform partial frame (the
        first-columns marginal, by transitivity of frame extensions)."""
        ell, s, g = self.ell, self.s, self.g
        cols = []
        red = []  # (pivot, normalized row) rref of span(cols)
        duals = []  # y_j: B(c_i, y_j) = delta_ij
        null = [np.eye(s, dtype=np.int64)[i] for i in range(s)]
        for k in range(s if ncols is None else ncols):
            x0 = np.zeros(s, dtype=np.int64)
            for j in range(k):
                x0 = (x0 + int(g[j, k]) * duals[j]) % ell
            target = int(g[k, k])
            v = None
            nb = np.array(null, dtype=np.int64) if null else np.zeros((0, s), np.int64)
            for _ in range(64):
                u = self.rng.integers(0, ell, size=(16, len(null)))
                vv = (x0 + u @ nb) % ell if len(null) else np.tile(x0, (1, 1))
                qs = (vv @ g * vv).sum(axis=1) % ell
                for t in np.flatnonzero(qs == target):
                    cand = vv[t]
                    r = cand.copy()
                    for piv, row in red:
                        f = int(r[piv])
                        if f:
                            r = (r - f * row) % ell
                    nz = np.flatnonzero(r)
                    if nz.size:
                        v = cand
                        piv = int(nz[0])
                        row = r * pow(int(r[piv]), -1, ell) % ell
                        red = [(p0, (r0 - r0[piv] * row) % ell) for p0, r0 in red]
                        red.append((piv, row))
                        break
                if v is not None:
                    break
            if v is None:
                raise InvariantError("column sampler failed to extend a frame")
            cols.append(v)
            # fold the new constraint row w = G c_k into duals and nullspace
            w = g @ v % ell
            dots = [int(w @ n % ell) for n in null]
            j = next((i for i, d in enumerate(dots) if d), None)
            if j is None:
                raise InvariantError("new constraint row is dependent")
            y = null[j] * pow(dots[j], -1, ell) % ell
            null = [
                (n - d * y) % ell for i, (n, d) in enumerate(zip(null, dots)) if i != j
            ]
            duals = [(dj - int(w @ dj % ell) * y) % ell for dj in duals]
            duals.append(y)
        return np.column_stack(cols)


def _sample_prime_power(gram, ell: int, a: int, rng) -> np.ndarray:
    base = _FrameSampler(gram, ell, rng).sample()
    if a == 1:
        return base
    q = ell**a
    s = len(gram)
    gram_q = np.array(gram, dtype=np.int64) % q
    ginv_l = np.array(inv_mod_prime_power(gram, ell, 1), dtype=np.int64)
    inv2 = pow(2, -1, ell)
    m = base % q
    for k in range(1, a):
        lk = ell**k
        t = (gram_q - m.T @ gram_q @ m) % q
        if (t % lk).any():
            raise InvariantError("sampling rung received an invalid matrix")
        e = (t // lk) % ell
        aa = np.zeros((s, s), dtype=np.int64)
        for i in range(s):
            for j in range(i + 1, s):
                x = int(rng.integers(0, ell))
                aa[i, j] = x
                aa[j, i] = (-x) % ell
        z = ginv_l @ ((e * inv2 + aa) % ell) % ell
        m = (m + lk * (m @ z)) % q
    return m


def sample_uniform(
    space: QuadSpace,
    rng,
    count: int = 1,
    coset: CosetSignature | None = None,
    stats: dict | None = None,
) -> list[np.ndarray]:
    """Exact uniform samples from O(Q)(Z/nu), optionally conditioned on a
    coset signature (by rejection; acceptance rate 4^-omega(nu))."""
    factors = space.modulus.factors
    coeffs, _ = crt_coefficients([p**a for p, a in factors])
    grams = [[[x % p**a for x in row] for row in space.gram] for p, a in factors]
    out = []
    rejected = 0
    while len(out) < count:
        m = np.zeros((space.rank, space.rank), dtype=np.int64)
        for c, (p, a), gram_p in zip(coeffs, factors, grams):
            m = (m + c * _sample_prime_power(gram_p, p, a, rng)) % space.nu
        if coset is not None and coset_signature(space, m) != coset:
            rejected += 1
            if rejected > 4096 * max(1, count):
                raise InvariantError("coset rejection is not terminating")
            continue
        out.append(m)
    if stats is not None:
        stats["rejected"] = stats.get("rejected", 0) + rejected
    return out


def np_rank_mod(mat, p: int) -> int:
    """Rank mod p with numpy row ops; fast enough for rank ~16 batches."""
    m = np.array(mat, dtype=np.int64) % p
    nr, nc = m.shape
    r = 0
    for c in range(nc):
        piv = np.flatnonzero(m[r:, c])
        if piv.size == 0:
            continue
        i = r + int(piv[0])
        if i != r:
            m[[r, i]] = m[[i, r]]
        inv = pow(int(m[r, c]), -1, p)
        m[r] = m[r] * inv % p
        rest = np.flatnonzero(m[r + 1 :, c]) + r + 1
        if rest.size:
            m[rest] = (m[rest] - np.outer(m[rest, c], m[r])) % p
        r += 1
        if r == nr:
            break
    return r
