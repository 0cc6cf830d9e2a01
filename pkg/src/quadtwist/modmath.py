"""Finite abelian modules, partitions, and exact Smith forms over Z/l^K.

Everything here is exact: Python ints throughout, no floats.  A finite
abelian group is stored per prime as a partition (exponents of the cyclic
factors, descending), which is the canonical form used as a dictionary key
by all the distribution code.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import BudgetError

Partition = tuple[int, ...]


def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization ((p, exponent), ...) ascending, by trial division."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


@dataclass(frozen=True)
class Modulus:
    """An odd modulus nu >= 3 with its factorization prod l^a."""

    n: int
    factors: tuple[tuple[int, int], ...]

    @staticmethod
    def of(n: int) -> "Modulus":
        if n < 3 or n % 2 == 0:
            raise ValueError(f"modulus must be odd and >= 3, got {n}")
        return Modulus(n, factorize(n))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def prime_powers(self) -> tuple[int, ...]:
        return tuple(p**a for p, a in self.factors)

    def omega(self) -> int:
        """Number of distinct prime divisors."""
        return len(self.factors)

    def __str__(self) -> str:
        return str(self.n)


def as_partition(parts) -> Partition:
    lam = tuple(sorted((int(x) for x in parts), reverse=True))
    if any(x <= 0 for x in lam):
        raise ValueError(f"partition parts must be positive: {parts}")
    return lam


def conjugate_partition(lam: Partition) -> Partition:
    """Transpose of the Young diagram: lam'_i = #{j : lam_j >= i}."""
    lam = as_partition(lam)
    if not lam:
        return ()
    return tuple(sum(1 for x in lam if x >= i) for i in range(1, lam[0] + 1))


@dataclass(frozen=True)
class FiniteModule:
    """Finite abelian group as per-prime partitions, canonical and hashable.

    parts = ((prime, partition), ...) sorted by prime, no empty partitions.
    """

    parts: tuple[tuple[int, Partition], ...]

    @staticmethod
    def from_dict(d: dict) -> "FiniteModule":
        items = []
        for p, lam in sorted(d.items()):
            p = int(p)
            if factorize(p) != ((p, 1),):
                raise ValueError(f"{p} is not prime")
            lam = as_partition(lam)
            if lam:
                items.append((p, lam))
        return FiniteModule(tuple(items))

    @staticmethod
    def zero() -> "FiniteModule":
        return FiniteModule(())

    @staticmethod
    def cyclic(n: int) -> "FiniteModule":
        """Z/n."""
        if n < 1:
            raise ValueError(f"bad cyclic order {n}")
        return FiniteModule(tuple((p, (a,)) for p, a in factorize(n)))

    def partition(self, p: int) -> Partition:
        for q, lam in self.parts:
            if q == p:
                return lam
        return ()

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.parts)

    def order(self) -> int:
        out = 1
        for p, lam in self.parts:
            out *= p ** sum(lam)
        return out

    def exponent(self) -> int:
        out = 1
        for p, lam in self.parts:
            out *= p ** lam[0]
        return out

    def rank(self) -> int:
        """Minimal number of generators."""
        return max((len(lam) for _, lam in self.parts), default=0)

    def mod_rank(self, p: int) -> int:
        """dim of G tensor F_p = number of parts at p."""
        return len(self.partition(p))

    def direct_sum(self, other: "FiniteModule") -> "FiniteModule":
        d = {p: list(lam) for p, lam in self.parts}
        for p, lam in other.parts:
            d.setdefault(p, []).extend(lam)
        return FiniteModule.from_dict(d)

    def torsion_cap(self, nu: int) -> "FiniteModule":
        """G[nu]: per-prime parts min(lam_i, a) for l^a || nu; other primes drop."""
        caps = dict(factorize(nu)) if nu > 1 else {}
        d = {}
        for p, lam in self.parts:
            a = caps.get(p, 0)
            if a:
                d[p] = [min(x, a) for x in lam]
        return FiniteModule.from_dict(d)

    def is_square(self) -> bool:
        """Whether G is K + K for some K: every cyclic factor occurs evenly."""
        for _, lam in self.parts:
            if len(lam) % 2:
                return False
            if any(lam[i] != lam[i + 1] for i in range(0, len(lam), 2)):
                return False
        return True

    def strip_cyclic(self, p: int, a: int) -> "FiniteModule | None":
        """Remove one Z/p^a factor, or None if there is none."""
        lam = self.partition(p)
        if a not in lam:
            return None
        rest = list(lam)
        rest.remove(a)
        d = {q: mu for q, mu in self.parts if q != p}
        if rest:
            d[p] = rest
        return FiniteModule.from_dict(d)

    def to_json(self) -> dict:
        return {str(p): list(lam) for p, lam in self.parts}

    @staticmethod
    def from_json(d: dict) -> "FiniteModule":
        return FiniteModule.from_dict(d)

    def __str__(self) -> str:
        if not self.parts:
            return "0"
        terms = []
        for p, lam in self.parts:
            terms.extend(f"Z/{p**a}" for a in lam)
        return "+".join(terms)


def sym2_module(mod: FiniteModule) -> FiniteModule:
    """Symmetric square, by its cyclic decomposition (+)_{i<=j} Z/p^{min(lam_i,lam_j)}."""
    d = {}
    for p, lam in mod.parts:
        parts = [
            min(lam[i], lam[j]) for i in range(len(lam)) for j in range(i, len(lam))
        ]
        d[p] = parts
    return FiniteModule.from_dict(d)


def sym2_order(mod: FiniteModule) -> int:
    """#Sym^2(G) = prod_p p^{sum_i (lam'_i^2 + lam'_i)/2}."""
    out = 1
    for p, lam in mod.parts:
        lamc = conjugate_partition(lam)
        out *= p ** sum((c * c + c) // 2 for c in lamc)
    return out


def count_hom(a: FiniteModule, h: FiniteModule) -> int:
    """#Hom(A, H) = prod_p p^{sum_{i,j} min(lam_i(A), mu_j(H))}."""
    out = 1
    for p in sorted(set(a.primes) | set(h.primes)):
        lam, mu = a.partition(p), h.partition(p)
        out *= p ** sum(min(x, y) for x in lam for y in mu)
    return out


def _padded_dominates(lam: Partition, mu: Partition) -> bool:
    """mu_i <= lam_i part-wise (zero-padded): H is a quotient of A at this prime."""
    if len(mu) > len(lam):
        return False
    return all(mu[i] <= lam[i] for i in range(len(mu)))


_SUBGROUP_TABLE_BUDGET = 4096


@lru_cache(maxsize=None)
def _subgroup_class_table(p: int, lam: Partition) -> tuple[tuple[Partition, int], ...]:
    """All subgroups of (+) Z/p^{lam_i} grouped by isomorphism class.

    Explicit enumeration: join-closure of cyclic subgroups.  Memoized; guarded
    by a budget since the subgroup lattice grows fast with rank.
    """
    order = p ** sum(lam)
    if order > _SUBGROUP_TABLE_BUDGET:
        raise BudgetError(
            f"subgroup table for group of order {order} exceeds budget "
            f"{_SUBGROUP_TABLE_BUDGET}",
            estimate=order,
        )
    mods = tuple(p**x for x in lam)
    elements = list(itertools.product(*(range(m) for m in mods)))

    def join(sub: frozenset, g: tuple) -> frozenset:
        # ord(g) powers of g added onto an existing subgroup
        k, acc, shifts = 1, g, []
        while acc != tuple([0] * len(mods)):
            shifts.append(acc)
            acc = tuple((x + y) % m for x, y, m in zip(acc, g, mods))
            k += 1
        out = set(sub)
        for s in shifts:
            out.update(tuple((x + y) % m for x, y, m in zip(e, s, mods)) for e in sub)
        return frozenset(out)

    trivial = frozenset({tuple([0] * len(mods))})
    seen = {trivial}
    work = [trivial]
    while work:
        sub = work.pop()
        for g in elements:
            if g in sub:
                continue
            bigger = join(sub, g)
            if bigger not in seen:
                seen.add(bigger)
                work.append(bigger)

    classes: dict[Partition, int] = {}
    for sub in seen:
        cls = _class_of_elements(sub, mods, p)
        classes[cls] = classes.get(cls, 0) + 1
    return tuple(sorted(classes.items()))


def _class_of_elements(elems, mods, p: int) -> Partition:
    """Partition of an explicit abelian p-group given as a set of tuples."""
    # lamc[i-1] = log_p(#p^i-torsion / #p^{i-1}-torsion) = number of parts >= i
    counts = [1]
    i = 1
    while counts[-1] < len(elems):
        pi = p**i
        counts.append(
            sum(1 for e in elems if all(x * pi % m == 0 for x, m in zip(e, mods)))
        )
        i += 1
    lamc = [_ilog(counts[i] // counts[i - 1], p) for i in range(1, len(counts))]
    out = []
    for i in range(len(lamc)):
        mult = lamc[i] - (lamc[i + 1] if i + 1 < len(lamc) else 0)
        out.extend([i + 1] * mult)
    return as_partition(out) if out else ()


def _ilog(n: int, p: int) -> int:
    e = 0
    while n > 1:
        if n % p:
            raise ValueError(f"{n} is not a power of {p}")
        n //= p
        e += 1
    return e


@lru_cache(maxsize=None)
def _count_surj_prime(p: int, lam: Partition, mu: Partition) -> int:
    """#Surj((+) Z/p^lam -> (+) Z/p^mu) by subgroup inclusion-exclusion."""
    if not mu:
        return 1
    if not _padded_dominates(lam, mu):
        return 0
    a = FiniteModule.from_dict({p: lam})
    total = count_hom(a, FiniteModule.from_dict({p: mu}))
    for cls, n_sub in _subgroup_class_table(p, mu):
        if cls == mu:
            continue
        total -= n_sub * _count_surj_prime(p, lam, cls)
    return total


def count_surj(a: FiniteModule, h: FiniteModule) -> int:
    out = 1
    for p in set(a.primes) | set(h.primes):
        out *= _count_surj_prime(p, a.partition(p), h.partition(p))
    return out


def count_inj(a: FiniteModule, h: FiniteModule) -> int:
    # embeddings A -> H biject with surjections H -> A under Pontryagin duality
    return count_surj(h, a)


def count_maps(a: FiniteModule, h: FiniteModule, kind: str = "hom") -> int:
    """#Hom / #Surj / #Inj from A to H."""
    if kind == "hom":
        return count_hom(a, h)
    if kind == "surj":
        return count_surj(a, h)
    if kind == "inj":
        return count_inj(a, h)
    raise ValueError(f"unknown map kind {kind!r}")


def _valuation(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return min(v, cap)


def smith_valuations(rows, ell: int, cap: int) -> tuple[int, ...]:
    """Elementary-divisor valuations of a matrix over Z/l^cap, ascending.

    Full pivoting on a minimal-valuation entry (row-major tie break); exact
    Python-int arithmetic.  Zero rows/columns report valuation = cap.  The
    result has min(rows, cols) entries.
    """
    if ell < 2 or factorize(ell) != ((ell, 1),):
        raise ValueError(f"{ell} is not prime")
    mod = ell**cap
    m = [[int(x) % mod for x in r] for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    if any(len(r) != nc for r in m):
        raise ValueError("ragged matrix")
    vals = []
    for k in range(min(nr, nc)):
        best = None
        for i in range(k, nr):
            for j in range(k, nc):
                v = _valuation(m[i][j], ell, cap)
                if best is None or v < best[0]:
                    best = (v, i, j)
                    if v == 0:
                        break
            if best and best[0] == 0:
                break
        v, bi, bj = best
        if v >= cap:
            vals.extend([cap] * (min(nr, nc) - k))
            break
        m[k], m[bi] = m[bi], m[k]
        for r in m:
            r[k], r[bj] = r[bj], r[k]
        pivot = m[k][k]
        unit = pivot // ell**v
        inv_unit = pow(unit, -1, mod)
        for i in range(k + 1, nr):
            e = m[i][k]
            if e:
                mult = (e // ell**v) * inv_unit % mod
                m[i] = [(x - mult * y) % mod for x, y in zip(m[i], m[k])]
        for j in range(k + 1, nc):
            e = m[k][j]
            if e:
                mult = (e // ell**v) * inv_unit % mod
                for i in range(k, nr):
                    m[i][j] = (m[i][j] - mult * m[i][k]) % mod
        vals.append(v)
    return tuple(sorted(vals))


def kernel_module(rows, nu: int) -> FiniteModule:
    """ker of a square matrix acting on (Z/nu)^s, as a FiniteModule.

    Per prime power l^a || nu: an elementary divisor of valuation v
    contributes Z/l^{min(v, a)}.
    """
    rows = [list(r) for r in rows]
    s = len(rows)
    if any(len(r) != s for r in rows):
        raise ValueError("kernel_module expects a square matrix")
    d = {}
    for p, a in factorize(nu):
        vals = smith_valuations(rows, p, a)
        parts = [v for v in vals if v > 0]
        if parts:
            d[p] = parts
    return FiniteModule.from_dict(d)


def kernel_size(rows, nu: int) -> int:
    """#ker of a (possibly rectangular) matrix (Z/nu)^cols -> (Z/nu)^rows."""
    rows = [list(r) for r in rows]
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    out = 1
    for p, a in factorize(nu):
        vals = smith_valuations(rows, p, a) if min(nr, nc) else ()
        free = nc - len(vals)
        out *= p ** (sum(vals) + a * free)
    return out
