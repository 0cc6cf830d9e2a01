"""Orthogonal-group engine tests.

Oracles are independent of the implementation: brute-force enumeration over
all matrices for tiny spaces, literal reflection products for spinor bits,
and closed-form order values frozen from the classical formulas.
"""
import itertools

import numpy as np
import pytest
from scipy.stats import chisquare

from quadtwist import quadspace as qs
from quadtwist.errors import BudgetError


# ------------------------------------------------------------------ oracles


def oracle_enumerate(space):
    """Every matrix over Z/nu preserving the form; brute force."""
    nu, s = space.nu, space.rank
    g = space.gram_array()
    out = []
    for entries in itertools.product(range(nu), repeat=s * s):
        m = np.array(entries, dtype=np.int64).reshape(s, s)
        if ((m.T @ g @ m - g) % nu == 0).all():
            out.append(m)
    return out


def oracle_spinor_product(space, vectors):
    """Square-class bit of prod -Q(v) over explicit reflection vectors."""
    ell = space.nu
    cls = 1
    for v in vectors:
        cls = cls * (-space.quad(v)) % ell
    return 0 if qs.is_square_mod(cls, ell) else 1


DIAG3 = qs.QuadSpace.diagonal(3, [1, 1, 1])
DIAG3_5 = qs.QuadSpace.diagonal(5, [1, 1, 1])
SPLIT4 = qs.QuadSpace.standard_split(3, 2)


# --------------------------------------------------------------- validation


def test_space_validation():
    with pytest.raises(ValueError):
        qs.QuadSpace.of(4, [[1]])  # even modulus
    with pytest.raises(ValueError):
        qs.QuadSpace.of(1, [[1]])
    with pytest.raises(ValueError):
        qs.QuadSpace.of(3, [[1, 1], [0, 1]])  # not symmetric
    with pytest.raises(ValueError):
        qs.QuadSpace.of(9, [[3]])  # degenerate mod 3
    with pytest.raises(ValueError):
        qs.QuadSpace.of(15, [[1, 0], [0, 5]])  # degenerate mod 5
    sp = qs.QuadSpace.of(15, [[1, 0], [0, 2]])
    assert sp.rank == 2 and sp.nu == 15


def test_space_json_roundtrip():
    sp = qs.QuadSpace.standard_split(9, 2)
    assert qs.QuadSpace.from_json(sp.to_json()) == sp


def test_quad_and_bilinear():
    assert DIAG3.quad([1, 1, 0]) == 2
    assert DIAG3.bilinear([1, 0, 0], [0, 1, 0]) == 0
    # split form: Q(x1..xn, y1..yn) = sum x_i y_i
    sp = qs.QuadSpace.standard_split(9, 2)
    assert sp.quad([1, 2, 3, 4]) == (1 * 3 + 2 * 4) % 9


# -------------------------------------------------------------- reflections


def test_reflection_basic():
    r = qs.reflection(DIAG3, [1, 0, 0])
    assert (r == np.diag([2, 1, 1])).all()  # diag(-1, 1, 1) mod 3
    v = np.array([1, 1, 0])
    r = qs.reflection(DIAG3, v)
    assert (r @ v % 3 == (-v) % 3).all()
    assert (r @ r % 3 == np.eye(3)).all()
    assert qs.is_orthogonal(DIAG3, r)


def test_reflection_rejects_isotropic():
    # Q((1,1,1)) = 3 = 0 mod 3
    with pytest.raises(ValueError):
        qs.reflection(DIAG3, [1, 1, 1])


def test_reflection_fixes_complement():
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.integers(0, 5, size=3)
        if DIAG3_5.quad(v) % 5 == 0:
            continue
        r = qs.reflection(DIAG3_5, v)
        for _ in range(5):
            x = rng.integers(0, 5, size=3)
            b = DIAG3_5.bilinear(x, v)
            if b == 0:
                assert (r @ x % 5 == x % 5).all()


# ------------------------------------------------------------- enumeration


def test_enumeration_matches_brute_force():
    for sp in (
        qs.QuadSpace.diagonal(3, [1, 1]),
        qs.QuadSpace.of(3, [[0, 2], [2, 0]]),
        DIAG3,
    ):
        got = {m.tobytes() for m in qs.enumerate_orthogonal(sp)}
        want = {m.tobytes() for m in oracle_enumerate(sp)}
        assert got == want


def test_group_orders_frozen():
    assert qs.group_order(qs.QuadSpace.diagonal(3, [1, 1])) == 8
    assert qs.group_order(qs.QuadSpace.of(3, [[0, 2], [2, 0]])) == 4
    assert qs.group_order(DIAG3) == 48
    assert qs.group_order(qs.QuadSpace.diagonal(3, [1] * 5)) == 103680
    assert qs.group_order(qs.QuadSpace.diagonal(9, [1, 1])) == 24
    assert qs.group_order(qs.QuadSpace.diagonal(9, [1, 1, 1])) == 1296
    assert qs.group_order(qs.QuadSpace.diagonal(15, [1, 1, 1])) == 11520
    assert qs.group_order(DIAG3_5) == 240


def test_enumeration_count_matches_order_on_lifts():
    for sp in (
        qs.QuadSpace.diagonal(9, [1, 1]),
        qs.QuadSpace.diagonal(9, [1, 1, 1]),
        qs.QuadSpace.diagonal(15, [1, 1, 1]),
    ):
        els = qs.enumerate_orthogonal(sp)
        assert len(els) == qs.group_order(sp)
        assert len({m.tobytes() for m in els}) == len(els)
        assert all(qs.is_orthogonal(sp, m) for m in els[:: max(1, len(els) // 50)])


def test_enumeration_budget_refusal():
    with pytest.raises(BudgetError) as exc:
        qs.enumerate_orthogonal(qs.QuadSpace.diagonal(3, [1] * 6), budget=1000)
    assert exc.value.estimate == qs.group_order(qs.QuadSpace.diagonal(3, [1] * 6))


def test_enumeration_deterministic():
    a = qs.enumerate_orthogonal(DIAG3)
    b = qs.enumerate_orthogonal(DIAG3)
    assert (a == b).all()


# ---------------------------------------------------------------- invariants


def test_dickson_values():
    assert qs.dickson(DIAG3, np.eye(3, dtype=np.int64)) == {3: 0}
    r = qs.reflection(DIAG3, [1, 0, 0])
    assert qs.dickson(DIAG3, r) == {3: 1}


def test_spinor_on_reflections():
    # -Q(e1) = -1 is a nonsquare mod 3
    r = qs.reflection(DIAG3, [1, 0, 0])
    assert qs.spinor_minus(DIAG3, r) == {3: 1}
    # two reflections with equal class cancel
    r2 = qs.reflection(DIAG3, [0, 1, 0])
    assert qs.spinor_minus(DIAG3, r @ r2 % 3) == {3: 0}
    assert qs.spinor_minus(DIAG3, np.eye(3, dtype=np.int64)) == {3: 0}


def test_spinor_mixed_classes_mod5():
    # Q(v) = 1, Q(w) = 2 over F5: [-1][-2] = [4][3] is the nonsquare class
    v, w = [1, 0, 0], [0, 1, 1]
    assert DIAG3_5.quad(v) == 1 and DIAG3_5.quad(w) == 2
    g = qs.reflection(DIAG3_5, v) @ qs.reflection(DIAG3_5, w) % 5
    assert oracle_spinor_product(DIAG3_5, [v, w]) == 1
    assert qs.spinor_minus(DIAG3_5, g) == {5: 1}
    sig = qs.coset_signature(DIAG3_5, g)
    assert sig.bit(5) == (0, 1) and not qs.omega_member(DIAG3_5, g)


def test_spinor_matches_reflection_products():
    # random reflection words: the engine must reproduce the literal product
    rng = np.random.default_rng(1)
    for sp in (DIAG3, DIAG3_5, SPLIT4):
        nu, s = sp.nu, sp.rank
        for _ in range(25):
            word = []
            while len(word) < rng.integers(1, 5):
                v = rng.integers(0, nu, size=s)
                if all(sp.quad(v) % p for p in sp.modulus.primes):
                    word.append(v)
            g = np.eye(s, dtype=np.int64)
            for v in word:
                g = g @ qs.reflection(sp, v) % nu
            assert qs.spinor_minus(sp, g)[nu] == oracle_spinor_product(sp, word)
            assert qs.dickson(sp, g)[nu] == len(word) % 2


def test_spinor_decomposition_independent():
    # permuted candidate scans and the closed form all agree, including on
    # the split space whose unipotents have totally isotropic image
    gl = SPLIT4.gram_array() % 3
    for m in qs.enumerate_orthogonal(SPLIT4):
        ref = qs._spinor_bit_wall(gl, m, 3)
        for seed in (None, 1, 2):
            assert qs._spinor_bit_greedy(gl, m, 3, order_seed=seed) == ref


def test_signature_homomorphism_enumerated():
    els = qs.enumerate_orthogonal(DIAG3)
    sigs = [qs.coset_signature(DIAG3, m).bit(3) for m in els]
    rng = np.random.default_rng(2)
    idx = rng.integers(0, len(els), size=(10_000, 2))
    for i, j in idx:
        prod = els[i] @ els[j] % 3
        got = qs.coset_signature(DIAG3, prod).bit(3)
        want = (sigs[i][0] ^ sigs[j][0], sigs[i][1] ^ sigs[j][1])
        assert got == want


def test_signature_homomorphism_composite():
    sp = qs.QuadSpace.diagonal(15, [1, 1, 1])
    rng = np.random.default_rng(3)
    mats = qs.sample_uniform(sp, rng, count=60)
    for a, b in zip(mats[:30], mats[30:]):
        sa, sb = qs.coset_signature(sp, a), qs.coset_signature(sp, b)
        sab = qs.coset_signature(sp, a @ b % 15)
        for p in (3, 5):
            assert sab.bit(p) == (sa.bit(p)[0] ^ sb.bit(p)[0], sa.bit(p)[1] ^ sb.bit(p)[1])


def test_parity_law_exhaustive_small():
    # dim ker(g - 1) = rank - dickson (mod 2), no exceptions
    for sp in (DIAG3, SPLIT4, DIAG3_5):
        nu, s = sp.nu, sp.rank
        eye = np.eye(s, dtype=np.int64)
        for m in qs.enumerate_orthogonal(sp):
            k = s - qs.np_rank_mod((m - eye) % nu, nu)
            assert k % 2 == (s - qs.dickson(sp, m)[nu]) % 2


def test_omega_index_law():
    for sp, idx in ((DIAG3, 4), (qs.QuadSpace.diagonal(15, [1, 1, 1]), 16)):
        els = qs.enumerate_orthogonal(sp)
        inside = sum(qs.omega_member(sp, m) for m in els)
        assert len(els) == idx * inside


def test_coset_signature_labels():
    sig = qs.CosetSignature.from_label(3, "B")
    assert sig.bit(3) == (1, 0) and sig.label() == "B"
    omega = qs.CosetSignature.from_label(15, "Omega")
    assert omega.is_omega() and omega.primes == (3, 5)
    with pytest.raises(ValueError):
        qs.CosetSignature.from_label(15, "A")
    with pytest.raises(ValueError):
        qs.CosetSignature.from_label(3, "D")


def test_invariants_factor_through_mod_ell_reduction():
    # signatures over Z/9 agree with the mod-3 reduction's signature
    sp9 = qs.QuadSpace.diagonal(9, [1, 1, 1])
    rng = np.random.default_rng(4)
    for m in qs.sample_uniform(sp9, rng, count=40):
        assert qs.coset_signature(sp9, m) == qs.coset_signature(DIAG3, m % 3)


# ------------------------------------------------------------------ sampling


def test_sampler_exact_uniform_field():
    els = qs.enumerate_orthogonal(DIAG3)
    counts = {m.tobytes(): 0 for m in els}
    rng = np.random.default_rng(5)
    n = 100_000
    for m in qs.sample_uniform(DIAG3, rng, count=n):
        counts[m.tobytes()] += 1
    # each frequency within 5 sigma of 1/48
    p = 1 / len(els)
    sigma = np.sqrt(n * p * (1 - p))
    assert all(abs(c - n * p) < 5 * sigma for c in counts.values())
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_sampler_uniform_on_lift():
    sp = qs.QuadSpace.diagonal(9, [1, 1])
    counts = {m.tobytes(): 0 for m in qs.enumerate_orthogonal(sp)}
    rng = np.random.default_rng(6)
    for m in qs.sample_uniform(sp, rng, count=24_000):
        counts[m.tobytes()] += 1
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_sampler_uniform_composite():
    sp = qs.QuadSpace.diagonal(15, [1])  # order 4: {+-1} x {+-1}
    counts = {m.tobytes(): 0 for m in qs.enumerate_orthogonal(sp)}
    rng = np.random.default_rng(7)
    for m in qs.sample_uniform(sp, rng, count=4000):
        counts[m.tobytes()] += 1
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_sampler_deterministic():
    a = qs.sample_uniform(DIAG3, np.random.default_rng(42), count=10)
    b = qs.sample_uniform(DIAG3, np.random.default_rng(42), count=10)
    assert all((x == y).all() for x, y in zip(a, b))


def test_sampler_coset_filter():
    target = qs.CosetSignature.from_label(3, "C")
    rng = np.random.default_rng(8)
    stats = {}
    for m in qs.sample_uniform(DIAG3, rng, count=20, coset=target, stats=stats):
        assert qs.coset_signature(DIAG3, m) == target
    assert stats["rejected"] > 0  # 3/4 of draws rejected on average


def test_sampler_orthogonality_large_rank():
    sp = qs.QuadSpace.standard_split(3, 8)
    rng = np.random.default_rng(9)
    for m in qs.sample_uniform(sp, rng, count=25):
        assert qs.is_orthogonal(sp, m)


# --------------------------------------------------------------- misc pieces


def test_ortho_element_wrapper():
    m = qs.reflection(DIAG3, [1, 0, 0])
    el = qs.OrthoElement.of(m, qs.coset_signature(DIAG3, m))
    assert (el.as_array() == m).all()
    assert el.signature.label() == "C"  # dickson 1, spinor [-1] nontrivial mod 3
    assert el == qs.OrthoElement.of(m)  # signature not part of identity


def test_np_rank_matches_exact():
    from quadtwist._linalg import rank_det_mod

    rng = np.random.default_rng(10)
    for _ in range(50):
        m = rng.integers(0, 5, size=(4, 4))
        assert qs.np_rank_mod(m, 5) == rank_det_mod(m.tolist(), 5)[0]
