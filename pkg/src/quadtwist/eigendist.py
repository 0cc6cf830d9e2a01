"""Distributions of fixed-space modules over orthogonal-group populations.

The central object: pick g from a subgroup/coset of O(Q)(Z/nu) and record
ker(g - 1) as a finite module.  Exhaustive mode enumerates the group and
produces exact rational weights; Monte-Carlo mode samples uniformly and
records counts with seed and sample size.  Dimension generating functions,
m-weighted total-variation distance, and expected hom/surj counts against a
fixed module are derived views.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import quadspace
from ._linalg import rank_det_mod
from .errors import InvariantError
from .modmath import FiniteModule, count_maps, kernel_module

_POPULATIONS = ("O", "SO", "Omega", "A", "B", "C")


def legendre_sign(x: int, ell: int) -> int:
    """+1 if x is a square mod the odd prime l, else -1 (x a unit)."""
    return 1 if quadspace.is_square_mod(x, ell) else -1


def sgn_minus_one(ell: int) -> int:
    """+1 if -1 is a square mod the odd prime l, else -1."""
    return legendre_sign(-1, ell)


# ------------------------------------------------------------ distributions


@dataclass(frozen=True)
class ModuleDistribution:
    """Weights over canonical FiniteModules.

    exact mode: weights are positive Fractions summing to 1.
    empirical mode: weights are positive integer counts; n_samples and seed
    are recorded.
    """

    mode: str
    entries: tuple[tuple[FiniteModule, object], ...]
    n_samples: int | None = None
    seed: object = None

    @staticmethod
    def exact(weights: dict) -> "ModuleDistribution":
        items = []
        total = Fraction(0)
        for mod_, w in sorted(weights.items(), key=lambda kv: str(kv[0])):
            w = Fraction(w)
            if w < 0:
                raise ValueError("negative weight")
            if w == 0:
                continue
            total += w
            items.append((mod_, w))
        if total != 1:
            raise ValueError(f"exact weights sum to {total}, not 1")
        return ModuleDistribution("exact", tuple(items))

    @staticmethod
    def empirical(counts: dict, n_samples: int, seed=None) -> "ModuleDistribution":
        items = []
        total = 0
        for mod_, c in sorted(counts.items(), key=lambda kv: str(kv[0])):
            c = int(c)
            if c < 0:
                raise ValueError("negative count")
            if c == 0:
                continue
            total += c
            items.append((mod_, c))
        if total != n_samples:
            raise ValueError(f"counts sum to {total}, n_samples says {n_samples}")
        return ModuleDistribution("empirical", tuple(items), n_samples, seed)

    @staticmethod
    def point_mass(module: FiniteModule) -> "ModuleDistribution":
        return ModuleDistribution.exact({module: Fraction(1)})

    def support(self) -> tuple[FiniteModule, ...]:
        return tuple(m for m, _ in self.entries)

    def probability(self, module: FiniteModule) -> Fraction:
        for m, w in self.entries:
            if m == module:
                return Fraction(w) if self.mode == "exact" else Fraction(w, self.n_samples)
        return Fraction(0)

    def probabilities(self) -> dict:
        if self.mode == "exact":
            return {m: Fraction(w) for m, w in self.entries}
        return {m: Fraction(w, self.n_samples) for m, w in self.entries}

    def to_json(self) -> dict:
        ent = []
        for m, w in self.entries:
            wj = f"{w.numerator}/{w.denominator}" if self.mode == "exact" else int(w)
            ent.append({"module": m.to_json(), "weight": wj})
        out = {"mode": self.mode, "entries": ent}
        if self.mode == "empirical":
            out["n_samples"] = self.n_samples
            out["seed"] = self.seed
        return out

    @staticmethod
    def from_json(d: dict) -> "ModuleDistribution":
        if d["mode"] == "exact":
            return ModuleDistribution.exact(
                {FiniteModule.from_json(e["module"]): Fraction(e["weight"]) for e in d["entries"]}
            )
        return ModuleDistribution.empirical(
            {FiniteModule.from_json(e["module"]): e["weight"] for e in d["entries"]},
            d["n_samples"],
            d.get("seed"),
        )


@dataclass(frozen=True)
class DimGenFun:
    """Probability generating polynomial sum_i P(dim = i) t^i."""

    coeffs: tuple[Fraction, ...]

    @staticmethod
    def of(coeffs) -> "DimGenFun":
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        return DimGenFun(tuple(cs))

    def coefficient(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return DimGenFun.of(
            [self.coefficient(i) + other.coefficient(i) for i in range(n)]
        )

    def __sub__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return DimGenFun.of(
            [self.coefficient(i) - other.coefficient(i) for i in range(n)]
        )

    def scale(self, c) -> "DimGenFun":
        c = Fraction(c)
        return DimGenFun.of([w * c for w in self.coeffs])

    def __call__(self, t):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def is_zero(self) -> bool:
        return not self.coeffs


def poly_from_roots_of_t2(ell: int, exponents) -> DimGenFun:
    """prod_i (t^2 - ell^{2i}) for i in exponents, as a DimGenFun-shaped
    polynomial (coefficients need not be a probability vector)."""
    coeffs = [Fraction(1)]
    for i in exponents:
        c = ell ** (2 * i)
        new = [Fraction(0)] * (len(coeffs) + 2)
        for j, w in enumerate(coeffs):
            new[j + 2] += w
            new[j] -= c * w
        coeffs = new
    return DimGenFun.of(coeffs)


def generating_function(dist: ModuleDistribution, prime: int) -> DimGenFun:
    """G(t) = sum_H P(H) t^{dim of H tensor F_p}."""
    probs = dist.probabilities()
    top = max((m.mod_rank(prime) for m in probs), default=0)
    coeffs = [Fraction(0)] * (top + 1)
    for m, p in probs.items():
        coeffs[m.mod_rank(prime)] += p
    return DimGenFun.of(coeffs)


# ------------------------------------------------------- kernel populations


def _signature_predicate(space: quadspace.QuadSpace, population: str):
    name = population if population in _POPULATIONS else population.capitalize()
    if name == "O":
        return None
    if name == "SO":
        return lambda sig: all(b[0] == 0 for _, b in sig.bits)
    if name == "Omega":
        return lambda sig: sig.is_omega()
    if name in ("A", "B", "C"):
        target = quadspace.CosetSignature.from_label(space.nu, name)
        return lambda sig: sig == target
    raise ValueError(f"unknown population {population!r}")


def _kernel_of(space: quadspace.QuadSpace, mat: np.ndarray) -> FiniteModule:
    nu, s = space.nu, space.rank
    d = (mat - np.eye(s, dtype=np.int64)) % nu
    if space.modulus.omega() == 1 and space.modulus.factors[0][1] == 1:
        # prime field: the kernel is an F_l vector space
        ell = space.modulus.primes[0]
        k = s - quadspace.np_rank_mod(d, ell)
        return FiniteModule.from_dict({ell: [1] * k})
    return kernel_module([[int(x) for x in row] for row in d], nu)


def kernel_distribution(
    space: quadspace.QuadSpace,
    population="O",
    mode: str = "exhaustive",
    n_samples: int | None = None,
    seed=None,
    budget: int = quadspace.DEFAULT_ENUM_BUDGET,
) -> ModuleDistribution:
    """Distribution of ker(g - 1) with g drawn from a population of O(Q).

    population: "O", "SO", "Omega", "A", "B", "C" (single-prime labels need
    a prime modulus) or an explicit iterable of matrices.
    mode "exhaustive": exact weights by full enumeration (budget applies).
    mode "montecarlo": n_samples uniform draws with the given seed.
    """
    if not isinstance(population, str):
        mats = [np.asarray(m, dtype=np.int64) % space.nu for m in population]
        if not mats:
            raise ValueError("empty explicit population")
        counts = Counter(_kernel_of(space, m) for m in mats)
        total = len(mats)
        return ModuleDistribution.exact(
            {m: Fraction(c, total) for m, c in counts.items()}
        )
    pred = _signature_predicate(space, population)
    if mode == "exhaustive":
        counts = Counter()
        total = 0
        for m in quadspace.enumerate_orthogonal(space, budget=budget):
            if pred is not None and not pred(quadspace.coset_signature(space, m)):
                continue
            counts[_kernel_of(space, m)] += 1
            total += 1
        if total == 0:
            raise InvariantError(f"population {population} is empty")
        return ModuleDistribution.exact(
            {m: Fraction(c, total) for m, c in counts.items()}
        )
    if mode == "montecarlo":
        if not n_samples:
            raise ValueError("montecarlo mode needs n_samples")
        rng = np.random.default_rng(seed)
        counts = Counter()
        got = 0
        while got < n_samples:
            batch = quadspace.sample_uniform(space, rng, count=min(256, n_samples - got))
            for m in batch:
                if pred is not None and not pred(quadspace.coset_signature(space, m)):
                    continue
                counts[_kernel_of(space, m)] += 1
                got += 1
                if got == n_samples:
                    break
        return ModuleDistribution.empirical(counts, n_samples, seed)
    raise ValueError(f"unknown mode {mode!r}")


def kernel_distributions_by_coset(
    space: quadspace.QuadSpace, budget: int = quadspace.DEFAULT_ENUM_BUDGET
) -> dict[str, ModuleDistribution]:
    """One enumeration pass -> exact kernel distribution per coset label.

    Prime modulus only (labels Omega/A/B/C)."""
    if space.modulus.omega() != 1 or space.modulus.factors[0][1] != 1:
        raise ValueError("coset labels need a prime modulus")
    counts = {lab: Counter() for lab in ("Omega", "A", "B", "C")}
    sizes = Counter()
    for m in quadspace.enumerate_orthogonal(space, budget=budget):
        lab = quadspace.coset_signature(space, m).label()
        counts[lab][_kernel_of(space, m)] += 1
        sizes[lab] += 1
    if len(set(sizes.values())) != 1:
        raise InvariantError(f"cosets have unequal sizes {dict(sizes)}")
    return {
        lab: ModuleDistribution.exact(
            {m: Fraction(c, sizes[lab]) for m, c in cnt.items()}
        )
        for lab, cnt in counts.items()
    }


# ---------------------------------------------------------- coset identities


@dataclass(frozen=True)
class IdentityReport:
    name: str
    residual: DimGenFun  # lhs - rhs; zero when the identity holds

    @property
    def ok(self) -> bool:
        return self.residual.is_zero()

    def worst_coefficient(self):
        for i, c in enumerate(self.residual.coeffs):
            if c != 0:
                return i, c
        return None


def coset_identity_check(
    space: quadspace.QuadSpace, budget: int = quadspace.DEFAULT_ENUM_BUDGET
) -> dict:
    """Exact check of the coset generating-function identities.

    Even rank 2s:  G_B = G_C  and
                   G_Omega = G_A + (1/#Omega) prod_{i<s}(t^2 - l^{2i}).
    Odd rank 2s+1: G_B = G_C + sgn((-1)^{s+1} det G) (l^s/#Omega)
                                 prod_{i<s}(t^2 - l^{2i})  and
                   G_Omega = G_A + (t/#Omega) prod_{i<s}(t^2 - l^{2i}).

    The B/C scalar follows from the reflection census in rank 2s+1: the
    number of reflections r_v with Q(v) in a fixed square class is
    (l^{2s} +- l^s)/2, the sign set by sgn((-1)^s det G); both differences
    vanish at t = +-l^i for i < s because generating functions of
    probability distributions agree there across cosets, which forces the
    (t^2 - 1) factor as well.
    """
    ell = space.nu
    if space.modulus.omega() != 1 or space.modulus.factors[0][1] != 1:
        raise ValueError("coset identities are stated for prime moduli")
    dists = kernel_distributions_by_coset(space, budget=budget)
    g = {lab: generating_function(d, ell) for lab, d in dists.items()}
    omega_size = quadspace.group_order(space) // 4
    rank = space.rank
    reports = []
    if rank % 2 == 0:
        s = rank // 2
        reports.append(IdentityReport("B=C", g["B"] - g["C"]))
        corr = poly_from_roots_of_t2(ell, range(s)).scale(Fraction(1, omega_size))
        reports.append(IdentityReport("Omega=A+corr", g["Omega"] - g["A"] - corr))
    else:
        s = (rank - 1) // 2
        _, det = rank_det_mod([list(r) for r in space.gram], ell)
        sgn = legendre_sign((-1) ** (s + 1) * det % ell, ell)
        corr_bc = poly_from_roots_of_t2(ell, range(s)).scale(
            Fraction(sgn * ell**s, omega_size)
        )
        reports.append(IdentityReport("B=C+corr", g["B"] - g["C"] - corr_bc))
        base = poly_from_roots_of_t2(ell, range(s))
        corr_oa = DimGenFun.of([Fraction(0)] + list(base.coeffs)).scale(
            Fraction(1, omega_size)
        )  # multiply by t
        reports.append(IdentityReport("Omega=A+corr", g["Omega"] - g["A"] - corr_oa))
    return {
        "space": space.to_json(),
        "prime": ell,
        "rank": rank,
        "omega_size": omega_size,
        "generating_functions": {lab: [str(c) for c in gg.coeffs] for lab, gg in g.items()},
        "identities": reports,
        "ok": all(r.ok for r in reports),
    }


# ------------------------------------------------------------------ metrics


def tv_distance(x: ModuleDistribution, y: ModuleDistribution, m: int = 0) -> Fraction:
    """d^m(X, Y) = sum_H (#H)^m |P(X=H) - P(Y=H)|, exact."""
    px, py = x.probabilities(), y.probabilities()
    out = Fraction(0)
    for h in set(px) | set(py):
        out += h.order() ** m * abs(px.get(h, Fraction(0)) - py.get(h, Fraction(0)))
    return out


def expected_count(dist: ModuleDistribution, target: FiniteModule, kind: str = "hom") -> Fraction:
    """E[#maps(K, target)] with K drawn from the distribution."""
    out = Fraction(0)
    for k, p in dist.probabilities().items():
        out += p * count_maps(k, target, kind)
    return out
