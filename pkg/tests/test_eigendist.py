"""Fixed-space distribution tests.

Oracles: direct Counter accumulation over the (already brute-force-verified)
group enumeration, Burnside vector-orbit counts, and hand-built rational
distributions.
"""
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from quadtwist import eigendist as ed
from quadtwist import quadspace as qs
from quadtwist.modmath import FiniteModule, kernel_module

DIAG3 = qs.QuadSpace.diagonal(3, [1, 1, 1])
V3 = FiniteModule.from_dict({3: [1, 1, 1]})
Z3 = FiniteModule.cyclic(3)
ZERO = FiniteModule.zero()


def oracle_kernel_counter(space, mats):
    c = Counter()
    for m in mats:
        d = (np.asarray(m) - np.eye(space.rank, dtype=np.int64)) % space.nu
        c[kernel_module([[int(x) for x in row] for row in d], space.nu)] += 1
    return c


# ----------------------------------------------------------- distributions


def test_exact_distribution_validation():
    with pytest.raises(ValueError):
        ed.ModuleDistribution.exact({ZERO: Fraction(1, 2)})  # sums to 1/2
    with pytest.raises(ValueError):
        ed.ModuleDistribution.exact({ZERO: Fraction(3, 2), Z3: Fraction(-1, 2)})
    d = ed.ModuleDistribution.exact({ZERO: Fraction(1, 2), Z3: Fraction(1, 2)})
    assert d.probability(Z3) == Fraction(1, 2)
    assert d.probability(V3) == 0


def test_empirical_distribution_validation():
    with pytest.raises(ValueError):
        ed.ModuleDistribution.empirical({Z3: 5}, n_samples=6)
    d = ed.ModuleDistribution.empirical({Z3: 5, ZERO: 15}, n_samples=20, seed=1)
    assert d.probability(Z3) == Fraction(1, 4)
    assert d.n_samples == 20


def test_distribution_json_roundtrip():
    exact = ed.ModuleDistribution.exact({ZERO: Fraction(1, 3), Z3: Fraction(2, 3)})
    emp = ed.ModuleDistribution.empirical({V3: 7, ZERO: 3}, n_samples=10, seed=9)
    for d in (exact, emp):
        assert ed.ModuleDistribution.from_json(d.to_json()) == d


# ------------------------------------------------------ generating functions


def test_genfun_basics():
    g = ed.DimGenFun.of([Fraction(1)])
    assert g.degree == 0 and g(7) == 1
    u = ed.DimGenFun.of([Fraction(1, 2), Fraction(1, 2)])  # (1 + t)/2
    assert u(1) == 1 and u(3) == 2
    assert (u - u).is_zero()
    assert (u + u).coefficient(1) == 1
    assert u.scale(2).coefficient(0) == 1


def test_genfun_from_distribution():
    d = ed.ModuleDistribution.exact({ZERO: Fraction(1, 2), Z3: Fraction(1, 2)})
    g = ed.generating_function(d, 3)
    assert g.coeffs == (Fraction(1, 2), Fraction(1, 2))
    point = ed.ModuleDistribution.point_mass(ZERO)
    assert ed.generating_function(point, 3).coeffs == (Fraction(1),)


def test_poly_from_roots():
    p = ed.poly_from_roots_of_t2(3, range(1))  # t^2 - 1
    assert p.coeffs == (Fraction(-1), Fraction(0), Fraction(1))
    p = ed.poly_from_roots_of_t2(3, range(2))  # (t^2-1)(t^2-9)
    assert p(3) == 0 and p(1) == 0 and p(0) == 9


# ------------------------------------------------------- kernel distributions


def test_kernel_point_masses():
    d = ed.kernel_distribution(DIAG3, population=[np.eye(3, dtype=int)])
    assert d.probability(V3) == 1
    d = ed.kernel_distribution(DIAG3, population=[(-np.eye(3, dtype=int)) % 3])
    assert d.probability(ZERO) == 1


def test_kernel_distribution_full_group():
    d = ed.kernel_distribution(DIAG3, population="O")
    assert d.mode == "exact"
    assert d.probability(V3) == Fraction(1, 48)  # only the identity
    assert sum(d.probabilities().values()) == 1
    # against the direct oracle
    oc = oracle_kernel_counter(DIAG3, qs.enumerate_orthogonal(DIAG3))
    assert d.probabilities() == {m: Fraction(c, 48) for m, c in oc.items()}


def test_kernel_distribution_prime_power_path():
    sp = qs.QuadSpace.diagonal(9, [1, 1])
    d = ed.kernel_distribution(sp, population="O")
    oc = oracle_kernel_counter(sp, qs.enumerate_orthogonal(sp))
    total = sum(oc.values())
    assert d.probabilities() == {m: Fraction(c, total) for m, c in oc.items()}
    assert any(m.exponent() == 9 for m in d.support())  # genuine Z/9 kernels


def test_kernel_distribution_coset_populations():
    omega = ed.kernel_distribution(DIAG3, population="Omega")
    assert omega.probability(V3) == Fraction(1, 12)  # id is in Omega, #Omega=12
    so = ed.kernel_distribution(DIAG3, population="SO")
    assert so.probability(V3) == Fraction(1, 24)
    with pytest.raises(ValueError):
        ed.kernel_distribution(qs.QuadSpace.diagonal(15, [1, 1, 1]), population="A")


def test_kernel_distribution_montecarlo():
    exact = ed.kernel_distribution(DIAG3, population="O")
    mc = ed.kernel_distribution(
        DIAG3, population="O", mode="montecarlo", n_samples=3000, seed=5
    )
    assert mc.mode == "empirical" and mc.n_samples == 3000 and mc.seed == 5
    assert set(mc.support()) <= set(exact.support())
    assert ed.tv_distance(exact, mc, 0) < Fraction(1, 10)
    # conditioned population agrees with its exhaustive counterpart
    mco = ed.kernel_distribution(
        DIAG3, population="Omega", mode="montecarlo", n_samples=1500, seed=6
    )
    assert ed.tv_distance(ed.kernel_distribution(DIAG3, "Omega"), mco, 0) < Fraction(15, 100)


def test_kernel_distributions_by_coset_consistency():
    split = ed.kernel_distributions_by_coset(DIAG3)
    assert set(split) == {"Omega", "A", "B", "C"}
    # mixture of the four cosets with equal weight reproduces the full group
    full = ed.kernel_distribution(DIAG3, population="O")
    mix = {}
    for d in split.values():
        for m, p in d.probabilities().items():
            mix[m] = mix.get(m, Fraction(0)) + p / 4
    assert mix == full.probabilities()


# ------------------------------------------------------------ coset identities


def test_coset_identities_dim3():
    for gram in ([1, 1, 1], [1, 1, 2]):  # both discriminant classes
        rep = ed.coset_identity_check(qs.QuadSpace.diagonal(3, gram))
        assert rep["ok"], rep["identities"]
    rep = ed.coset_identity_check(qs.QuadSpace.diagonal(5, [1, 1, 1]))
    assert rep["ok"]


def test_coset_identities_even_rank():
    for sp in (
        qs.QuadSpace.diagonal(3, [1, 1]),        # nonsplit plane
        qs.QuadSpace.of(3, [[0, 2], [2, 0]]),    # split plane
        qs.QuadSpace.standard_split(3, 2),       # split rank 4
        qs.QuadSpace.diagonal(3, [1, 1, 1, 1]),  # nonsplit rank 4
    ):
        rep = ed.coset_identity_check(sp)
        assert rep["ok"], (sp, [r.name for r in rep["identities"] if not r.ok])


def test_coset_identity_report_shape():
    rep = ed.coset_identity_check(DIAG3)
    assert rep["prime"] == 3 and rep["rank"] == 3 and rep["omega_size"] == 12
    assert all(r.residual.is_zero() and r.worst_coefficient() is None
               for r in rep["identities"])
    assert set(rep["generating_functions"]) == {"Omega", "A", "B", "C"}


def test_identity_report_flags_violation():
    bad = ed.IdentityReport("demo", ed.DimGenFun.of([Fraction(0), Fraction(1, 3)]))
    assert not bad.ok
    assert bad.worst_coefficient() == (1, Fraction(1, 3))


def test_sign_helpers():
    assert ed.sgn_minus_one(3) == -1
    assert ed.sgn_minus_one(5) == 1
    assert ed.sgn_minus_one(7) == -1
    assert ed.legendre_sign(2, 3) == -1
    assert ed.legendre_sign(4, 5) == 1


# ------------------------------------------------------------------- metrics


def test_tv_distance_examples():
    x = ed.ModuleDistribution.point_mass(Z3)
    y = ed.ModuleDistribution.point_mass(ZERO)
    assert ed.tv_distance(x, x, 0) == 0
    assert ed.tv_distance(x, y, 1) == 4  # 3 + 1
    assert ed.tv_distance(x, y, 0) == 2


def test_tv_distance_symmetry_triangle():
    rng = np.random.default_rng(8)
    mods = [ZERO, Z3, V3, FiniteModule.cyclic(9)]
    def random_dist():
        w = rng.integers(1, 6, size=len(mods))
        tot = int(w.sum())
        return ed.ModuleDistribution.exact(
            {m: Fraction(int(c), tot) for m, c in zip(mods, w)}
        )
    for _ in range(25):
        a, b, c = random_dist(), random_dist(), random_dist()
        for m in (0, 1, 2):
            assert ed.tv_distance(a, b, m) == ed.tv_distance(b, a, m)
            assert ed.tv_distance(a, c, m) <= ed.tv_distance(a, b, m) + ed.tv_distance(b, c, m)
    # d0 separates exact distributions
    assert ed.tv_distance(random_dist(), ed.ModuleDistribution.point_mass(ZERO), 0) > 0


def test_expected_count():
    d = ed.ModuleDistribution.exact({ZERO: Fraction(1, 2), Z3: Fraction(1, 2)})
    assert ed.expected_count(d, ZERO, "hom") == 1
    assert ed.expected_count(d, Z3, "hom") == 2  # (1 + 3)/2
    assert ed.expected_count(d, Z3, "surj") == 1  # (0 + 2)/2


def test_expected_hom_is_burnside_orbit_count():
    # E[#Hom(ker(g-1), Z/3)] over all of O = #orbits of O on F_3^3 = 4
    full = ed.kernel_distribution(DIAG3, population="O")
    assert ed.expected_count(full, Z3, "hom") == 4


def test_composite_marginals():
    sp = qs.QuadSpace.diagonal(15, [1])
    d = ed.kernel_distribution(sp, population="O")  # {+-1}
    g3 = ed.generating_function(d, 3)
    g5 = ed.generating_function(d, 5)
    assert g3.coeffs == (Fraction(1, 2), Fraction(1, 2))
    assert g5.coeffs == (Fraction(1, 2), Fraction(1, 2))
