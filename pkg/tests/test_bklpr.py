"""Isotropic-intersection and alternating-cokernel model tests.

Oracles:
 * pattern-based subspace enumeration over F_l (reduced column echelon
   patterns, one candidate per subspace) — independent of the module's
   orbit-BFS enumeration;
 * module classification from order statistics of an explicit vector-set
   intersection — independent of Smith-form kernels;
 * hand-computable alternating laws at m = 2, 3.
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest

from quadtwist import bklpr, quadspace
from quadtwist.bklpr import Isotropic, SplitSpace
from quadtwist.eigendist import ModuleDistribution, tv_distance
from quadtwist.errors import BudgetError
from quadtwist.modmath import FiniteModule, count_inj, sym2_order

Z3 = FiniteModule.cyclic(3)
Z9 = FiniteModule.cyclic(9)
Z5 = FiniteModule.cyclic(5)
Z3SQ = FiniteModule.from_dict({3: [1, 1]})


# ------------------------------------------------------------------ oracles


def oracle_isotropics_field(n, ell):
    """Every n-dim isotropic subspace of the split F_l space, via reduced
    column-echelon patterns (one candidate basis per subspace)."""
    space = SplitSpace.of(n, ell, 1)
    g = space.gram() % ell
    found = []
    for rset in itertools.combinations(range(2 * n), n):
        free = [
            (r, c)
            for c in range(n)
            for r in range(2 * n)
            if r not in rset and r > rset[c]
        ]
        for vals in itertools.product(range(ell), repeat=len(free)):
            m = np.zeros((2 * n, n), dtype=np.int64)
            for c, r in enumerate(rset):
                m[r, c] = 1
            for (r, c), x in zip(free, vals):
                m[r, c] = x
            if not ((m.T @ g @ m) % ell).any():
                found.append(m)
    return [Isotropic.of(space, m) for m in found]


def span_set(iso):
    """All vectors in the span, as a frozenset of tuples."""
    q = iso.space.q
    arr = iso.as_array()
    vecs = set()
    for coeffs in itertools.product(range(q), repeat=iso.space.n):
        vecs.add(tuple(int(x) for x in (arr @ np.array(coeffs)) % q))
    return frozenset(vecs)


def oracle_module_of_vectors(vectors, ell, j):
    """Abelian-group type of a subgroup of (Z/l^j)^k given as a vector set,
    recovered from order statistics: #{v : l^m v = 0} = l^{sum min(lam_i, m)}."""
    q = ell**j
    sums = []
    for m in range(j + 1):
        n_m = sum(1 for v in vectors if all((ell**m * x) % q == 0 for x in v))
        e = 0
        while ell**e < n_m:
            e += 1
        assert ell**e == n_m, "subgroup size is not a power of l"
        sums.append(e)
    counts = [sums[m] - sums[m - 1] for m in range(1, j + 1)]  # parts >= m
    lam = []
    for i in range(counts[0]):
        lam.append(sum(1 for c in counts if c > i))
    return FiniteModule.from_dict({ell: lam}) if lam else FiniteModule.zero()


def oracle_intersection(z, w):
    common = span_set(z) & span_set(w)
    return oracle_module_of_vectors(common, z.space.ell, z.space.j)


# ------------------------------------------------------------- enumeration


@pytest.mark.parametrize(
    "n,ell,j,want",
    [(1, 3, 1, 2), (2, 3, 1, 8), (1, 5, 1, 2), (2, 5, 1, 12), (3, 3, 1, 80),
     (1, 3, 2, 2), (2, 3, 2, 24)],
)
def test_isotropic_counts(n, ell, j, want):
    assert bklpr.isotropic_count(n, ell, j) == want
    isos = bklpr.enumerate_isotropics(SplitSpace.of(n, ell, j))
    assert len(isos) == want
    assert len({iso.basis for iso in isos}) == want


@pytest.mark.parametrize("n,ell", [(1, 3), (2, 3), (1, 5), (2, 5), (3, 3)])
def test_enumeration_matches_pattern_oracle(n, ell):
    mine = {iso.basis for iso in bklpr.enumerate_isotropics(SplitSpace.of(n, ell, 1))}
    oracle = {iso.basis for iso in oracle_isotropics_field(n, ell)}
    assert mine == oracle


def test_enumeration_mod9_line_oracle():
    # rank-2 module over Z/9: scan all 81 vectors for primitive isotropic ones
    space = SplitSpace.of(1, 3, 2)
    g = space.gram()
    spans = set()
    for v in itertools.product(range(9), repeat=2):
        arr = np.array(v, dtype=np.int64)
        if any(x % 3 for x in v) and int(arr @ g @ arr) % 9 == 0:
            spans.add(Isotropic.of(space, arr.reshape(2, 1)).basis)
    assert spans == {iso.basis for iso in bklpr.enumerate_isotropics(space)}


def test_enumeration_orbit_closure_under_group():
    # pushing any member by a group element lands back in the enumerated set
    space = SplitSpace.of(2, 3, 2)
    isos = {iso.basis for iso in bklpr.enumerate_isotropics(space)}
    rng = np.random.default_rng(11)
    amb = space.ambient()
    for g in quadspace.sample_uniform(amb, rng, count=20):
        pushed = Isotropic.of(space, g @ Isotropic.standard(space).as_array() % 9)
        assert pushed.basis in isos


def test_enumeration_budget_refusal():
    with pytest.raises(BudgetError) as ei:
        bklpr.enumerate_isotropics(SplitSpace.of(6, 3, 1))
    assert ei.value.estimate == bklpr.isotropic_count(6, 3, 1)


def test_canonical_basis_independent_of_presentation():
    space = SplitSpace.of(2, 3, 2)
    rng = np.random.default_rng(5)
    for iso in bklpr.enumerate_isotropics(space):
        arr = iso.as_array()
        # re-present the same span through a random unimodular column mix
        while True:
            u = rng.integers(0, 9, size=(2, 2))
            if int(round(np.linalg.det(u))) % 3:
                break
        assert Isotropic.of(space, arr @ u % 9).basis == iso.basis


def test_isotropic_validation_errors():
    space = SplitSpace.of(1, 3, 1)
    with pytest.raises(ValueError):  # not isotropic
        Isotropic.of(space, [[1], [1]])
    with pytest.raises(ValueError):  # not a summand
        Isotropic.of(SplitSpace.of(1, 3, 2), [[3], [0]])
    with pytest.raises(ValueError):  # wrong shape
        Isotropic.of(space, [[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        SplitSpace.of(1, 9, 1)  # prime powers go through j


# ------------------------------------------------------------ intersections


def test_intersection_extremes():
    space = SplitSpace.of(2, 3, 2)
    std = Isotropic.standard(space)
    assert bklpr.intersection_module(std, std) == FiniteModule.from_dict({3: [2, 2]})
    opp = Isotropic.of(space, np.eye(4, dtype=np.int64)[:, [2, 3]])
    assert bklpr.intersection_module(std, opp).order() == 1


@pytest.mark.parametrize("n,ell,j", [(2, 3, 1), (1, 3, 2), (2, 3, 2), (1, 5, 1)])
def test_intersection_matches_set_oracle(n, ell, j):
    isos = bklpr.enumerate_isotropics(SplitSpace.of(n, ell, j))
    for z in isos:
        for w in isos:
            assert bklpr.intersection_module(z, w) == oracle_intersection(z, w)


def test_intersection_ambient_mismatch():
    a = Isotropic.standard(SplitSpace.of(1, 3, 1))
    b = Isotropic.standard(SplitSpace.of(1, 5, 1))
    with pytest.raises(ValueError):
        bklpr.intersection_module(a, b)


# ------------------------------------------------------------------ moments


@pytest.mark.parametrize(
    "ell,j,n,h,expect",
    [
        (3, 1, 1, Z3, Fraction(1)),
        (3, 1, 2, Z3, Fraction(2)),
        (5, 1, 1, Z5, Fraction(2)),
        (3, 1, 2, Z3SQ, Fraction(6)),
        (3, 2, 2, Z9, Fraction(6)),
        (3, 1, 1, Z3SQ, Fraction(0)),
    ],
)
def test_moment_formula_equals_enumeration(ell, j, n, h, expect):
    assert bklpr.finite_n_moment(ell, j, n, h) == expect
    assert bklpr.exhaustive_moment(ell, j, n, h) == expect


def test_moment_against_independent_oracle():
    # recompute E[#Inj] with the set-based intersection oracle, all pairs
    space = SplitSpace.of(2, 3, 1)
    isos = bklpr.enumerate_isotropics(space)
    for h in (Z3, Z3SQ):
        total = sum(
            count_inj(h, oracle_intersection(z, w)) for z in isos for w in isos
        )
        assert Fraction(total, len(isos) ** 2) == bklpr.finite_n_moment(3, 1, 2, h)


def test_moment_edges_and_limit():
    assert bklpr.finite_n_moment(3, 1, 5, FiniteModule.zero()) == 1
    with pytest.raises(ValueError):
        bklpr.finite_n_moment(3, 1, 2, Z5)  # wrong prime
    with pytest.raises(ValueError):
        bklpr.finite_n_moment(3, 1, 2, Z9)  # exponent above ambient
    # large n approaches the symmetric-square order from the correct side
    for h in (Z3, Z3SQ, Z9):
        j = max(h.partition(h.primes[0]))
        lim = sym2_order(h)
        val = bklpr.finite_n_moment(3, j, 30, h)
        assert abs(val - lim) < Fraction(lim, 1000)


# ------------------------------------------------------------ distributions


def test_line_law_nu3():
    ref = bklpr.bklpr_distribution(3, 1)
    assert ref.dist.probability(FiniteModule.zero()) == Fraction(1, 2)
    assert ref.dist.probability(Z3) == Fraction(1, 2)
    only_odd = bklpr.bklpr_distribution(3, 1, variant=1)
    assert only_odd.dist.probability(Z3) == 1
    only_even = bklpr.bklpr_distribution(3, 1, variant=0)
    assert only_even.dist.probability(FiniteModule.zero()) == 1


def test_crt_combination_exact():
    # nu = 15, n = 1: each prime contributes 0 or its full cyclic, in step
    ref = bklpr.bklpr_distribution(15, 1)
    assert ref.dist.probability(FiniteModule.zero()) == Fraction(1, 2)
    assert ref.dist.probability(FiniteModule.cyclic(15)) == Fraction(1, 2)
    ref45 = bklpr.bklpr_distribution(45, 1)
    assert ref45.dist.probability(FiniteModule.cyclic(45)) == Fraction(1, 2)


def test_parity_structure_exhaustive():
    for b in (0, 1):
        ref = bklpr.bklpr_distribution(15, 2, variant=b)
        for mod, p in ref.dist.probabilities().items():
            if p == 0:
                continue
            stripped = mod
            if b == 1:
                for prime in (3, 5):
                    stripped = stripped.strip_cyclic(prime, 1)
                    assert stripped is not None, mod
            assert stripped.is_square(), mod


def test_full_law_is_half_half_mixture():
    full = bklpr.bklpr_distribution(3, 2).dist
    even = bklpr.bklpr_distribution(3, 2, variant=0).dist
    odd = bklpr.bklpr_distribution(3, 2, variant=1).dist
    support = set(full.probabilities()) | set(even.probabilities()) | set(
        odd.probabilities()
    )
    for mod in support:
        assert full.probability(mod) == (
            even.probability(mod) + odd.probability(mod)
        ) / 2


def test_montecarlo_matches_exhaustive():
    exact = bklpr.bklpr_distribution(3, 2).dist
    mc = bklpr.bklpr_distribution(3, 2, mode="montecarlo", n_samples=4000, seed=9)
    assert tv_distance(exact, mc.dist) < Fraction(1, 10)
    again = bklpr.bklpr_distribution(3, 2, mode="montecarlo", n_samples=4000, seed=9)
    assert mc.dist == again.dist  # seeded determinism


def test_random_isotropic_uniform():
    space = SplitSpace.of(2, 3, 1)
    names = {iso.basis: 0 for iso in bklpr.enumerate_isotropics(space)}
    rng = np.random.default_rng(17)
    draws = 8000
    for _ in range(draws):
        names[bklpr.random_isotropic(space, rng).basis] += 1
    expect = draws / len(names)
    sigma = (draws * (1 / len(names)) * (1 - 1 / len(names))) ** 0.5
    for c in names.values():
        assert abs(c - expect) < 5 * sigma


def test_sample_intersection_parity_contract():
    space = SplitSpace.of(3, 3, 1)
    rng = np.random.default_rng(23)
    for b in (0, 1):
        for _ in range(40):
            assert bklpr.sample_intersection(space, rng, parity=b).mod_rank(3) % 2 == b


def test_variant_parsing_and_json():
    assert bklpr.bklpr_distribution(3, 1, variant="parity1").dist.probability(Z3) == 1
    with pytest.raises(ValueError):
        bklpr.bklpr_distribution(3, 1, variant="odd")
    blob = bklpr.bklpr_distribution(3, 1).to_json()
    assert blob["nu"] == 3 and blob["variant"] == "full"
    assert ModuleDistribution.from_json(blob["distribution"]).probability(Z3) == Fraction(1, 2)


# ------------------------------------------------------- alternating model


def test_alternating_m2_law():
    # coker [[0,a],[-a,0]] has torsion (Z/3^v)^2, v = val(a): P(trivial) = 2/3
    law = bklpr.alternating_distribution(2, 3, 1, 6000, seed=31)
    p0 = float(law.probability(FiniteModule.zero()))
    sigma = (2 / 3 * 1 / 3 / 6000) ** 0.5
    assert abs(p0 - 2 / 3) < 4 * sigma
    assert abs(float(law.probability(Z3SQ)) - 1 / 3) < 4 * sigma
    assert set(law.probabilities()) <= {FiniteModule.zero(), Z3SQ}


def test_alternating_m3_law():
    # 3x3: divisors (g, g, 0) with g = gcd of the three entries
    law = bklpr.alternating_distribution(3, 3, 1, 6000, seed=37)
    p0 = float(law.probability(FiniteModule.zero()))
    want = 26 / 27
    sigma = (want * (1 - want) / 6000) ** 0.5
    assert abs(p0 - want) < 4 * sigma
    assert set(law.probabilities()) <= {FiniteModule.zero(), Z3SQ}


def test_alternating_mod9_cap():
    law = bklpr.alternating_distribution(2, 3, 2, 4000, seed=41)
    # v = 1 keeps (Z/3)^2 under the cap 2; v >= 2 caps at (Z/9)^2
    p_z3 = float(law.probability(Z3SQ))
    sigma = (2 / 9 / 4000) ** 0.5 + 1e-9
    assert abs(p_z3 - 2 / 9) < 5 * sigma
    p_z9 = float(law.probability(FiniteModule.from_dict({3: [2, 2]})))
    assert abs(p_z9 - 1 / 9) < 5 * ((1 / 9) * (8 / 9) / 4000) ** 0.5


def test_alternating_sample_contracts():
    rng = np.random.default_rng(43)
    stats = {}
    for m in (1, 2, 3, 4, 5):
        mod = bklpr.alternating_cokernel_sample(m, 3, 1, rng, stats=stats)
        assert mod.is_square()
    assert stats["rejected"] >= 0
    with pytest.raises(ValueError):
        bklpr.alternating_cokernel_sample(2, 3, 1, rng, margin=80)


def test_alternating_close_to_grassmannian():
    # matched parity at m = 2n: the two models converge to the same law
    grass = bklpr.bklpr_distribution(3, 4, variant=0).dist
    alt = bklpr.alternating_distribution(8, 3, 1, 20000, seed=47)
    assert float(tv_distance(grass, alt)) < 0.06


def test_surjection_moment_small_n():
    # E[#Surj(X, Z/3)] under the full nu=3 law at n = 2, exactly
    full = bklpr.bklpr_distribution(3, 2).dist
    # elementary X: #Surj(X, Z/3) = 3^rank - 1
    total = sum(
        p * (3 ** mod.mod_rank(3) - 1) for mod, p in full.probabilities().items()
    )
    from quadtwist.eigendist import expected_count

    assert expected_count(full, Z3, "surj") == total


def test_expected_surj_reference():
    assert bklpr.expected_surj_reference(Z3) == 3
    assert bklpr.expected_surj_reference(Z3SQ) == 27
    assert bklpr.expected_surj_reference(Z9) == 9
