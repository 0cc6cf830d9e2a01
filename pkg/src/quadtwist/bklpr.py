"""Random maximal-isotropic intersections and the alternating-cokernel model.

Two samplers for the same conjectural Selmer-group law over Z/nu:

* Grassmannian model (primary): draw independent uniform maximal isotropics
  Z, W in the split rank-2n quadratic module over Z/l^j and take the module
  Z cap W.  Exact at finite parameters; components are paired by the parity
  of the intersection rank, and conditioning on that parity realizes the
  even/odd halves of the law.
* Alternating-matrix model (cross-check): torsion of the cokernel of a
  uniform alternating matrix over Z/l^K, with the free part identified at a
  precision ceiling and the rest capped at l^j.

Composite moduli combine independent per-prime draws conditioned on one
shared rank-parity bit: the even half is a plain product, the odd half
carries one full-order cyclic factor per prime, which assembles to a single
Z/nu summand.  Exact finite-n expected injection counts are provided in
closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import quadspace
from ._linalg import inv_mod_prime_power
from .eigendist import ModuleDistribution
from .errors import BudgetError, InvariantError
from .modmath import (
    FiniteModule,
    Modulus,
    conjugate_partition,
    count_inj,
    smith_valuations,
    kernel_module,
    sym2_order,
)

DEFAULT_ISOTROPIC_BUDGET = 200_000
ALT_PRECISION_MARGIN = 16


def isotropic_count(n: int, ell: int, j: int) -> int:
    """#OGr_n(Z/l^j) = 2 prod_{i=1}^{n-1}(l^i + 1) * l^{(j-1) n(n-1)/2}."""
    out = 2
    for i in range(1, n):
        out *= ell**i + 1
    return out * ell ** ((j - 1) * n * (n - 1) // 2)


@dataclass(frozen=True)
class SplitSpace:
    """Split quadratic module of rank 2n over Z/l^j, Q(x) = sum x_i x_{n+i}."""

    n: int
    ell: int
    j: int

    @staticmethod
    def of(n: int, ell: int, j: int = 1) -> "SplitSpace":
        if n < 1 or j < 1:
            raise ValueError("need n >= 1 and j >= 1")
        if Modulus.of(ell).factors != ((ell, 1),):
            raise ValueError(f"{ell} is not an odd prime")
        return SplitSpace(n, ell, j)

    @property
    def q(self) -> int:
        return self.ell**self.j

    def ambient(self) -> quadspace.QuadSpace:
        return quadspace.QuadSpace.standard_split(self.q, self.n)

    def gram(self) -> np.ndarray:
        return self.ambient().gram_array()


def _canonical_basis(mat: np.ndarray, ell: int, q: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced column-echelon form of a direct-summand basis over Z/q;
    pivot rows are the first rows carrying unit entries, pivots normalized
    to 1 and cleared across, which is a canonical form for the span."""
    m = mat.copy() % q
    rows, ncols = m.shape
    piv = []
    c = 0
    for r in range(rows):
        k = next((cc for cc in range(c, ncols) if m[r, cc] % ell), None)
        if k is None:
            continue
        if k != c:
            m[:, [c, k]] = m[:, [k, c]]
        m[:, c] = m[:, c] * pow(int(m[r, c]), -1, q) % q
        for cc in range(ncols):
            if cc != c and m[r, cc]:
                m[:, cc] = (m[:, cc] - int(m[r, cc]) * m[:, c]) % q
        piv.append(r)
        c += 1
        if c == ncols:
            break
    if c < ncols:
        raise ValueError("columns do not span a direct summand")
    return m, tuple(piv)


@dataclass(frozen=True)
class Isotropic:
    """Maximal isotropic summand, held as a canonical echelon basis."""

    space: SplitSpace
    basis: tuple[tuple[int, ...], ...]  # 2n rows of n entries
    pivots: tuple[int, ...]

    @staticmethod
    def of(space: SplitSpace, columns) -> "Isotropic":
        mat = np.asarray(columns, dtype=np.int64)
        if mat.shape != (2 * space.n, space.n):
            raise ValueError(f"basis must be {2 * space.n} x {space.n} (columns)")
        canon, piv = _canonical_basis(mat, space.ell, space.q)
        g = space.gram()
        if ((canon.T @ g @ canon) % space.q).any():
            raise ValueError("form does not vanish on the span")
        return Isotropic(space, tuple(tuple(int(x) for x in r) for r in canon), piv)

    @staticmethod
    def standard(space: SplitSpace) -> "Isotropic":
        cols = np.eye(2 * space.n, space.n, dtype=np.int64)
        return Isotropic.of(space, cols)

    def as_array(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64)


def _reflection_generators(space: SplitSpace, count: int) -> list[np.ndarray]:
    """Reflections in `count` anisotropic vectors from a fixed-seed stream
    (deterministic, and extendable when a closure comes up short)."""
    q, g, ell = space.q, space.gram(), space.ell
    amb = space.ambient()
    rng = np.random.default_rng(0x150_70B1C)
    gens = []
    while len(gens) < count:
        v = rng.integers(0, q, size=2 * space.n, dtype=np.int64)
        if int(v @ g @ v) % ell:
            gens.append(quadspace.reflection(amb, v))
    return gens


def enumerate_isotropics(
    space: SplitSpace, budget: int = DEFAULT_ISOTROPIC_BUDGET
) -> list[Isotropic]:
    """All maximal isotropics, each exactly once (deterministic order).

    Orbit closure of the standard isotropic under reflection generators:
    the action is transitive, so the closure either equals the full set or
    the generators were insufficient, and the closed-form count tells the
    two apart.  Cost scales with the answer, not the ambient Grassmannian.
    """
    want = isotropic_count(space.n, space.ell, space.j)
    if want > budget:
        raise BudgetError(
            f"isotropic count {want} exceeds budget {budget}", estimate=want
        )
    q = space.q
    n_gens = 2 * space.n + 4
    while True:
        gens = _reflection_generators(space, n_gens)
        std = Isotropic.standard(space)
        seen: dict[tuple, Isotropic] = {std.basis: std}
        frontier = [std]
        while frontier:
            nxt = []
            for iso in frontier:
                arr = iso.as_array()
                for r in gens:
                    cand = Isotropic.of(space, r @ arr % q)
                    if cand.basis not in seen:
                        seen[cand.basis] = cand
                        nxt.append(cand)
            frontier = nxt
        if len(seen) == want:
            return list(seen.values())
        if len(seen) > want:
            raise InvariantError(
                f"orbit closure found {len(seen)} isotropics, expected {want}"
            )
        if n_gens >= 64 * space.n:
            raise InvariantError(
                f"reflection generators stalled at {len(seen)}/{want} isotropics"
            )
        n_gens *= 2


def random_isotropic(space: SplitSpace, rng) -> Isotropic:
    """Exactly uniform over maximal isotropics.

    Mod l: the span of a uniform partial frame with the zero Gram profile
    (the action is transitive on such frames and every summand carries the
    same number of them).  Each rung to l^{k+1}: a uniform point of the
    fiber, which the antisymmetric parameter hits bijectively."""
    n, ell, q = space.n, space.ell, space.q
    g = space.gram()
    cols = quadspace._FrameSampler(g % ell, ell, rng).sample(ncols=n)
    m0, piv = _canonical_basis(cols, ell, q)
    if space.j > 1:
        ginv = np.array(
            inv_mod_prime_power([[int(x) for x in row] for row in g], ell, space.j),
            dtype=np.int64,
        )
        inv2 = pow(2, -1, ell)
        for k in range(1, space.j):
            lk = ell**k
            t = (m0.T @ g @ m0) % q
            if (t % lk).any():
                raise InvariantError("isotropic sampler rung received invalid span")
            t = (t // lk) % ell
            a = np.zeros((n, n), dtype=np.int64)
            iu, ju = np.triu_indices(n, 1)
            vals = rng.integers(0, ell, size=len(iu), dtype=np.int64)
            a[iu, ju] = vals
            a[ju, iu] = (-vals) % ell
            x = ((-t * inv2) % ell + a) % ell
            m0, piv = _canonical_basis((m0 + lk * (ginv[:, list(piv)] @ x)) % q, ell, q)
    return Isotropic.of(space, m0)


def sample_intersection(
    space: SplitSpace, rng, parity: int | None = None, stats: dict | None = None
) -> FiniteModule:
    """One draw of Z cap W for independent uniform maximal isotropics,
    optionally conditioned on the rank parity.  Uses transitivity to pin Z
    to the standard isotropic, so each draw costs one group sample."""
    std = Isotropic.standard(space)
    while True:
        mod = intersection_module(std, random_isotropic(space, rng))
        if parity is None or mod.mod_rank(space.ell) % 2 == parity:
            return mod
        if stats is not None:
            stats["rejected"] = stats.get("rejected", 0) + 1


def intersection_module(z: Isotropic, w: Isotropic) -> FiniteModule:
    """Isomorphism class of Z cap W: (a, b) -> Za is an isomorphism from
    ker[Z | -W] onto the intersection because both bases are summands."""
    if z.space != w.space:
        raise ValueError("isotropics live in different spaces")
    q = z.space.q
    mat = np.hstack([z.as_array(), -w.as_array() % q]) % q
    if z.space.j == 1:  # elementary over a field: corank alone decides
        k = 2 * z.space.n - quadspace.np_rank_mod(mat, q)
        return FiniteModule.from_dict({q: [1] * k}) if k else FiniteModule.zero()
    return kernel_module([[int(x) for x in row] for row in mat], q)


# ------------------------------------------------------------ moment formula


def finite_n_moment(ell: int, j: int, n: int, h: FiniteModule) -> Fraction:
    """E[#Inj(H -> Z cap W)] for independent uniform maximal isotropics in
    the split rank-2n space over Z/l^j, in closed form:

        l^{sum_i (c_i^2 + c_i)/2} * prod_{i=0}^{m-1} (1 - l^{i-n})
                                  / prod_{i=n-m}^{n-1} (1 + l^{-i})

    with c the conjugate partition of H at l and m its number of parts
    (zero when m > n; the limit n -> infinity is #Sym^2 H)."""
    if h.order() == 1:
        return Fraction(1)
    if h.primes != (ell,):
        raise ValueError("H must be an l-primary module")
    lam = h.partition(ell)
    if lam and lam[0] > j:
        raise ValueError(f"H has exponent {ell}^{lam[0]}, ambient only {ell}^{j}")
    m = len(lam)
    if m > n:
        return Fraction(0)
    conj = conjugate_partition(lam)
    val = Fraction(ell ** sum((c * c + c) // 2 for c in conj))
    for i in range(m):
        val *= 1 - Fraction(1, ell ** (n - i))
    for i in range(n - m, n):
        val /= 1 + Fraction(1, ell**i)
    return val


def exhaustive_moment(ell: int, j: int, n: int, h: FiniteModule,
                      budget: int = DEFAULT_ISOTROPIC_BUDGET) -> Fraction:
    """E[#Inj(H -> Z cap W)] by enumeration; the action is transitive, so Z
    can be pinned to the standard isotropic."""
    space = SplitSpace.of(n, ell, j)
    std = Isotropic.standard(space)
    isos = enumerate_isotropics(space, budget=budget)
    total = sum(count_inj(h, intersection_module(std, w)) for w in isos)
    return Fraction(total, len(isos))


# ------------------------------------------------------- alternating model


def alternating_cokernel_sample(
    m: int, ell: int, j: int, rng, margin: int = ALT_PRECISION_MARGIN,
    stats: dict | None = None,
) -> FiniteModule:
    """Torsion of coker(A) capped at l^j, for A a uniform alternating m x m
    matrix over Z/l^K, K = j + margin.  The m mod 2 top elementary divisors
    at the precision ceiling are the free part; samples with extra ceiling
    divisors (probability <= l^-margin) are rejected and redrawn."""
    k_prec = j + margin
    q = ell**k_prec
    if q >= 2**62:
        raise ValueError("precision ceiling exceeds exact int64 range")
    r_free = m % 2
    rejections = 0
    iu, ju = np.triu_indices(m, 1)
    weights = np.array([ell**i for i in range(k_prec)], dtype=np.int64)
    while True:
        digits = rng.integers(0, ell, size=(k_prec, len(iu)), dtype=np.int64)
        upper = (digits * weights[:, None]).sum(axis=0) % q
        a = np.zeros((m, m), dtype=np.int64)
        a[iu, ju] = upper
        a[ju, iu] = (-upper) % q
        vals = smith_valuations([[int(x) for x in row] for row in a], ell, cap=k_prec)
        ceil_count = sum(1 for v in vals if v >= k_prec)
        if ceil_count < r_free:
            raise InvariantError("alternating matrix has too few null divisors")
        if ceil_count > r_free:
            rejections += 1
            continue
        tors = [min(v, j) for v in vals if 0 < v < k_prec]
        mod = FiniteModule.from_dict({ell: tors})
        if not mod.is_square():
            raise InvariantError(f"alternating cokernel torsion {mod} is not square")
        if stats is not None:
            stats["rejected"] = stats.get("rejected", 0) + rejections
        return mod


# ------------------------------------------------------------- distributions


@dataclass(frozen=True)
class BklprRef:
    """A realization of the Selmer law over Z/nu (or one parity half)."""

    nu: int
    n: int
    variant: int | None  # None = full mixture, 0/1 = conditioned parity
    dist: ModuleDistribution

    def to_json(self) -> dict:
        return {
            "nu": self.nu,
            "n": self.n,
            "variant": "full" if self.variant is None else f"parity{self.variant}",
            "distribution": self.dist.to_json(),
        }


def _check_variant(variant) -> int | None:
    if variant in (None, "full"):
        return None
    if variant in (0, 1):
        return variant
    if variant in ("parity0", "parity1"):
        return int(variant[-1])
    raise ValueError(f"unknown variant {variant!r}")


def _parity_split_exhaustive(
    ell: int, a: int, n: int, budget: int
) -> dict[int, dict[FiniteModule, Fraction]]:
    """Exact conditional laws of Z cap W given intersection-rank parity."""
    space = SplitSpace.of(n, ell, a)
    std = Isotropic.standard(space)
    buckets: dict[int, dict[FiniteModule, int]] = {0: {}, 1: {}}
    for w in enumerate_isotropics(space, budget=budget):
        mod = intersection_module(std, w)
        b = mod.mod_rank(ell) % 2
        buckets[b][mod] = buckets[b].get(mod, 0) + 1
    out = {}
    for b in (0, 1):
        tot = sum(buckets[b].values())
        if tot == 0:
            raise InvariantError(f"no isotropics with parity {b}")
        out[b] = {m: Fraction(c, tot) for m, c in buckets[b].items()}
    return out


def _product_law(laws: list[dict[FiniteModule, Fraction]]) -> dict[FiniteModule, Fraction]:
    acc = {FiniteModule.zero(): Fraction(1)}
    for law in laws:
        nxt: dict[FiniteModule, Fraction] = {}
        for m1, p1 in acc.items():
            for m2, p2 in law.items():
                mm = m1.direct_sum(m2)
                nxt[mm] = nxt.get(mm, Fraction(0)) + p1 * p2
        acc = nxt
    return acc


def _assert_square_structure(mod: FiniteModule, nu: int, parity: int) -> None:
    """Even draws are squares; odd draws are squares plus one full Z/nu."""
    if parity == 0:
        if not mod.is_square():
            raise InvariantError(f"even-parity sample {mod} is not a square")
        return
    stripped = mod
    for p, a in Modulus.of(nu).factors:
        stripped = stripped.strip_cyclic(p, a) if stripped is not None else None
    if stripped is None or not stripped.is_square():
        raise InvariantError(f"odd-parity sample {mod} lacks square + Z/{nu} shape")


def bklpr_distribution(
    nu: int,
    n: int,
    variant=None,
    mode: str = "exhaustive",
    n_samples: int | None = None,
    seed=None,
    budget: int = DEFAULT_ISOTROPIC_BUDGET,
) -> BklprRef:
    """The intersection law over Z/nu at isotropic rank n.

    Per prime power l^a | nu the sample is Z cap W for independent uniform
    maximal isotropics mod l^a; the primes share one parity bit (a fair coin
    for the full law, fixed for the parity variants), and the draws are
    otherwise independent.
    """
    var = _check_variant(variant)
    mod_nu = Modulus.of(nu)
    if mode == "exhaustive":
        splits = [
            _parity_split_exhaustive(p, a, n, budget) for p, a in mod_nu.factors
        ]
        halves = {b: _product_law([s[b] for s in splits]) for b in (0, 1)}
        if var is None:
            mix: dict[FiniteModule, Fraction] = {}
            for b in (0, 1):
                for m, p in halves[b].items():
                    mix[m] = mix.get(m, Fraction(0)) + p / 2
            dist = ModuleDistribution.exact(mix)
        else:
            dist = ModuleDistribution.exact(halves[var])
        return BklprRef(nu, n, var, dist)
    if mode == "montecarlo":
        if not n_samples:
            raise ValueError("montecarlo mode needs n_samples")
        rng = np.random.default_rng(seed)
        spaces = [SplitSpace.of(n, p, a) for p, a in mod_nu.factors]
        counts: dict[FiniteModule, int] = {}
        for _ in range(n_samples):
            b = var if var is not None else int(rng.integers(0, 2))
            total = FiniteModule.zero()
            for sp in spaces:
                total = total.direct_sum(sample_intersection(sp, rng, parity=b))
            _assert_square_structure(total, nu, b)
            counts[total] = counts.get(total, 0) + 1
        return BklprRef(nu, n, var, ModuleDistribution.empirical(counts, n_samples, seed))
    raise ValueError(f"unknown mode {mode!r}")


def alternating_distribution(
    m: int, ell: int, j: int, n_samples: int, seed=None,
    margin: int = ALT_PRECISION_MARGIN,
) -> ModuleDistribution:
    """Empirical law of the alternating-cokernel torsion at matrix size m."""
    rng = np.random.default_rng(seed)
    counts: dict[FiniteModule, int] = {}
    stats: dict = {}
    for _ in range(n_samples):
        mod = alternating_cokernel_sample(m, ell, j, rng, margin=margin, stats=stats)
        counts[mod] = counts.get(mod, 0) + 1
    return ModuleDistribution.empirical(counts, n_samples, seed)


def expected_surj_reference(h: FiniteModule) -> int:
    """The limiting expected surjection count onto H: #Sym^2 H."""
    return sym2_order(h)
