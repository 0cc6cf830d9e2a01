"""Named verification suites, shared by the command line and the test bed.

Each suite bundles the checks for one verified claim area (exact law,
closed form, or sampling agreement) into a list of pass/fail results with
human-readable details.  Suites are deterministic for a fixed seed.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bklpr, eigendist, hurwitz, modmath, quadspace, topology
from .modmath import FiniteModule


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    checks: tuple[Check, ...]
    wall_time: float

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "ok": self.ok,
            "wall_time_s": round(self.wall_time, 3),
            "checks": [
                {"name": c.name, "ok": c.ok, "detail": c.detail}
                for c in self.checks
            ],
        }


_REGISTRY: dict[str, tuple] = {}


def _suite(name: str, description: str):
    def deco(fn):
        _REGISTRY[name] = (fn, description)
        return fn
    return deco


def suite_names() -> list[tuple[str, str]]:
    return [(name, desc) for name, (_, desc) in _REGISTRY.items()]


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown suite {name!r}; known suites: {known}")
    fn, _ = _REGISTRY[name]
    t0 = time.perf_counter()
    checks = fn(seed)
    return SuiteResult(name, tuple(checks), time.perf_counter() - t0)


def _check_eq(name: str, got, want) -> Check:
    return Check(name, got == want, f"got {got}, want {want}")


def _check_runtime(t0: float, limit: float) -> Check:
    dt = time.perf_counter() - t0
    return Check("runtime", dt < limit, f"{dt:.1f}s against a {limit:.0f}s cap")


# ------------------------------------------------------------- parity law


@_suite("parity-law", "kernel dimension parity matches the Dickson bit, "
        "exhaustively over small orthogonal groups")
def _parity_law(seed: int) -> list[Check]:
    t0 = time.perf_counter()
    cases = [
        (3, (1, 1, 1)),
        (3, (1, 1, 1, 1)),   # plus type: (-1)^2 * disc is a square
        (3, (1, 1, 1, 2)),   # minus type
        (3, (1, 1, 1, 1, 1)),
        (5, (1, 1, 1)),
    ]
    checks = []
    for ell, diag in cases:
        space = quadspace.QuadSpace.diagonal(ell, diag)
        mats = quadspace.enumerate_orthogonal(space, budget=200_000)
        eye = np.eye(space.rank, dtype=np.int64)
        bad = 0
        for m in mats:
            kdim = space.rank - quadspace.np_rank_mod((m - eye) % ell, ell)
            d = quadspace.dickson(space, m)[ell]
            if (kdim - (space.rank - d)) % 2:
                bad += 1
        name = "diag(" + ",".join(map(str, diag)) + f")@{ell}"
        checks.append(Check(name, bad == 0,
                            f"{len(mats)} elements, {bad} violations"))
    checks.append(_check_runtime(t0, 120))
    return checks


# -------------------------------------------------------------- index law


@_suite("index-law", "the joint Dickson/spinor kernel has index 4 per prime, "
        "by exact counts and by sampled membership rates")
def _index_law(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for nu in (3, 5, 9, 15):
        space = quadspace.QuadSpace.diagonal(nu, (1, 1, 1))
        expected = 4 ** space.modulus.omega()
        # exact: per-prime-power enumeration (lifting counts), CRT product
        total, omega = 1, 1
        for p, a in space.modulus.factors:
            fac = quadspace.QuadSpace.diagonal(p**a, (1, 1, 1))
            mats = quadspace.enumerate_orthogonal(fac, budget=200_000)
            total *= len(mats)
            omega *= sum(quadspace.omega_member(fac, m) for m in mats)
        checks.append(_check_eq(f"index@{nu}", total // omega, expected))
        checks.append(_check_eq(f"order@{nu}", quadspace.group_order(space),
                                total))
        # sampled membership rate within 3 sigma of 1/index
        n = 4000
        hits = sum(
            quadspace.omega_member(space, m)
            for m in quadspace.sample_uniform(space, rng, count=n)
        )
        p0 = 1.0 / expected
        sigma = math.sqrt(p0 * (1 - p0) / n)
        checks.append(Check(
            f"sampled-rate@{nu}", abs(hits / n - p0) <= 3 * sigma,
            f"{hits}/{n} members, target {p0:.4f} +- {3 * sigma:.4f}"))
    return checks


# ------------------------------------------------- coset identity checks


@_suite("coset-identities", "exact generating-function identities between "
        "the four coset kernel distributions")
def _coset_identities(seed: int) -> list[Check]:
    t0 = time.perf_counter()
    cases = [(3, 3), (3, 4), (3, 5), (5, 3)]
    checks = []
    for ell, dim in cases:
        space = quadspace.QuadSpace.diagonal(ell, (1,) * dim)
        report = eigendist.coset_identity_check(space, budget=200_000)
        worst = [
            f"{r.name}: offending coefficient {r.worst_coefficient()}"
            for r in report["identities"] if not r.ok
        ]
        checks.append(Check(f"dim{dim}@{ell}", report["ok"],
                            "; ".join(worst) or "all identities exact"))
    checks.append(_check_runtime(t0, 300))
    return checks


# ----------------------------------------------------------------- moments


def _abelian_groups_of_order_upto(bound: int):
    """All finite abelian groups with order <= bound, as FiniteModules."""
    for size in range(1, bound + 1):
        per_prime = []
        for p, a in modmath.factorize(size):
            per_prime.append([
                (p, lam) for lam in _partitions(a)
            ])
        for combo in itertools.product(*per_prime):
            yield FiniteModule.from_dict({p: list(lam) for p, lam in combo})


def _partitions(n: int, cap: int | None = None):
    if n == 0:
        yield ()
        return
    for first in range(min(n, cap or n), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _sym2_order_oracle(h: FiniteModule) -> int:
    """|Sym^2 H| from the cyclic decomposition: prod_{i<=j} gcd(d_i, d_j)."""
    d = [p**a for p, lam in h.parts for a in lam]
    out = 1
    for i in range(len(d)):
        for j in range(i, len(d)):
            out *= math.gcd(d[i], d[j])
    return out


def _mc_h_list(nu: int) -> list[FiniteModule]:
    # per-prime rank <= 2 (higher ranks have a zero-inflated estimator),
    # order <= 81, exponents dividing nu
    out = []
    factors = modmath.factorize(nu)
    per_prime = []
    for p, a in factors:
        opts = [()]
        opts += [(e,) for e in range(1, a + 1)]
        opts += [(e1, e2) for e1 in range(1, a + 1) for e2 in range(1, e1 + 1)]
        per_prime.append([(p, lam) for lam in opts])
    for combo in itertools.product(*per_prime):
        h = FiniteModule.from_dict({p: list(lam) for p, lam in combo if lam})
        if 1 < h.order() <= 81:
            out.append(h)
    return out


def _surj_moment_stats(dist, h: FiniteModule) -> tuple[float, float]:
    """(mean, stderr) of #Surj(sample, h) from an empirical distribution."""
    mean = var = 0.0
    n = dist.n_samples
    for mod, p in dist.probabilities().items():
        x = modmath.count_surj(mod, h)
        mean += float(p) * x
        var += float(p) * x * x
    var = max(var - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


@_suite("moments", "symmetric-square orders, exact small-rank moments, and "
        "Monte-Carlo surjection moments of the intersection law")
def _moments(seed: int) -> list[Check]:
    checks = []
    bad = sum(
        modmath.sym2_order(h) != _sym2_order_oracle(h)
        for h in _abelian_groups_of_order_upto(3**6)
    )
    checks.append(Check("sym2-orders<=3^6", bad == 0, f"{bad} mismatches"))

    for ell, j, n in ((3, 1, 1), (3, 1, 2), (5, 1, 1)):
        for parts in range(1, n + 1):
            h = FiniteModule.from_dict({ell: [1] * parts})
            closed = bklpr.finite_n_moment(ell, j, n, h)
            enum = bklpr.exhaustive_moment(ell, j, n, h)
            checks.append(_check_eq(f"moment({ell},{j},{n})H={h}", closed,
                                    enum))

    n_samples = 10_000
    for nu in (3, 9, 15):
        dist = bklpr.bklpr_distribution(
            nu, 8, mode="montecarlo", n_samples=n_samples, seed=seed + nu
        ).dist
        for h in _mc_h_list(nu):
            mean, se = _surj_moment_stats(dist, h)
            want = modmath.sym2_order(h)
            ok = abs(mean - want) <= 3 * se + 1e-12
            checks.append(Check(f"mc-surj@{nu}H={h}", ok,
                                f"mean {mean:.3f}, target {want}, "
                                f"se {se:.3f}"))
    return checks


# ------------------------------------------------------ average-size limit


@_suite("average-size", "the expected number of maps to Z/3 from a sampled "
        "1-eigenspace kernel at rank 16 is 4, within Monte-Carlo error")
def _average_size(seed: int) -> list[Check]:
    space = quadspace.QuadSpace.standard_split(3, 8)
    n = 100_000
    dist = eigendist.kernel_distribution(
        space, "O", mode="montecarlo", n_samples=n, seed=seed
    )
    target = FiniteModule.from_dict({3: [1]})
    mean = var = 0.0
    for mod, p in dist.probabilities().items():
        x = modmath.count_hom(mod, target)
        mean += float(p) * x
        var += float(p) * x * x
    se = math.sqrt(max(var - mean * mean, 0.0) / n)
    ok = abs(mean - 4.0) <= 3 * se
    return [Check("hom-count-mean", ok,
                  f"mean {mean:.4f}, target 4, se {se:.4f}, N {n}")]


# ------------------------------------------------------------ torsor counts


_DROP_MATS = {
    0: np.eye(2, dtype=np.int64),
    1: np.array([[1, 1], [0, 1]], dtype=np.int64),   # unipotent
    2: np.array([[-1, 0], [0, -1]], dtype=np.int64) % 3,
}


def _image_vectors(mat: np.ndarray, nu: int) -> np.ndarray:
    dim = mat.shape[0]
    pts = np.indices((nu,) * dim).reshape(dim, -1)
    a = (np.eye(dim, dtype=np.int64) - mat) % nu
    return np.unique((a @ pts % nu).T, axis=0)


def _enumeration_count(genus, mats, n, nu, r, chunk=1 << 22) -> int:
    """Brute-force orbit count: scan every vector assignment (handles and
    branch slots free, puncture slots over im(1 - M)), test the vector part
    of the surface relation by simulating the product, and keep canonical
    representatives (first branch vector zero) of the translation action."""
    dim = 2 * r
    handle_mats = [np.eye(dim, dtype=np.int64)] * (2 * genus)
    letters = hurwitz._relation_letters(genus, handle_mats, n,
                                        list(mats), dim, nu)
    images = [_image_vectors(m, nu) for m in mats]
    coords = dim * (2 * genus + n)
    total = nu**coords
    for im in images:
        total *= len(im)

    def block(uid, idx):
        kind, i = uid
        if kind == "p":
            place = nu**coords
            for im in images[:i]:
                place *= len(im)
            return images[i][(idx // place) % len(images[i])].T
        c0 = dim * (i if kind == "h" else 2 * genus + i)
        return np.stack([(idx // nu ** (c0 + c)) % nu for c in range(dim)])

    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        w = np.zeros((dim, len(idx)), dtype=np.int64)
        prefix = np.eye(dim, dtype=np.int64)
        for mat, uid, sign in letters:
            if sign > 0:
                w = (w + prefix @ block(uid, idx)) % nu
                prefix = (prefix @ mat) % nu
            else:
                minv = hurwitz.modmath_inv(mat, nu)
                w = (w - (prefix @ minv) @ block(uid, idx)) % nu
                prefix = (prefix @ minv) % nu
        solved = np.all(w == 0, axis=0)
        canonical = np.all(block(("b", 0), idx) == 0, axis=0)
        count += int(np.count_nonzero(solved & canonical))
    return count


@_suite("torsor-counts", "component counts by linear algebra, closed form, "
        "and brute-force enumeration all agree")
def _torsor_counts(seed: int) -> list[Check]:
    t0 = time.perf_counter()
    checks = []
    # closed-form agreement over every drop combination
    bad = []
    for genus in (0, 1):
        for n in (2, 4):
            for drops in itertools.product((0, 1, 2), repeat=n):
                spec = hurwitz.InertiaSpec.of([_DROP_MATS[d] for d in drops], 3)
                if not hurwitz.torsor_count(genus, spec, n, 3, 1).ok:
                    bad.append((genus, n, drops))
    checks.append(Check("formula-all-combos", not bad,
                        f"{len(bad)} degenerate configurations {bad[:3]}"))
    # enumeration cross-check where the assignment space stays scannable
    grids = {
        2: [(0, 0), (1, 1), (2, 2), (0, 2), (1, 2)],
        4: [(0, 0, 0, 0), (2, 0, 0, 0), (1, 1, 0, 0), (0, 1, 2, 0)],
    }
    for genus in (0, 1):
        for n, drop_lists in grids.items():
            for drops in drop_lists:
                mats = [_DROP_MATS[d] for d in drops]
                spec = hurwitz.InertiaSpec.of(mats, 3)
                tc = hurwitz.torsor_count(genus, spec, n, 3, 1)
                enum = _enumeration_count(genus, mats, n, 3, 1)
                name = f"g{genus}n{n}drops{''.join(map(str, drops))}"
                checks.append(Check(name, tc.ok and tc.count == enum,
                                    f"count {tc.count}, formula {tc.formula}, "
                                    f"enumeration {enum}"))
    checks.append(_check_runtime(t0, 60))
    return checks


# ---------------------------------------------------------------- burnside


@_suite("burnside", "averaged fixed-point counts equal union-find orbit "
        "counts for component sets under orthogonal twists")
def _burnside(seed: int) -> list[Check]:
    space = quadspace.QuadSpace.diagonal(3, (1, 1, 1))
    mats = quadspace.enumerate_orthogonal(space, budget=10_000)
    groups = {
        "O": list(mats),
        "SO": [m for m in mats if quadspace.dickson(space, m)[3] == 0],
        "Omega": [m for m in mats if quadspace.omega_member(space, m)],
    }
    hs = [FiniteModule.from_dict({3: [1]}), FiniteModule.from_dict({3: [1, 1]})]
    checks = []
    for gname, elements in groups.items():
        for h in hs:
            avg = hurwitz.burnside_components(elements, h, 3)
            orbits = hurwitz.hom_orbit_count(elements, h, 3)
            ok = avg == orbits and avg.denominator == 1
            checks.append(Check(f"{gname}H={h}", ok,
                                f"burnside {avg}, union-find {orbits}"))
    return checks


# --------------------------------------------------------- braid invariance


@_suite("braid-invariance", "half-twists and point-pushes preserve the "
        "surface-datum constraints, exhaustively and on random data")
def _braid_invariance(seed: int) -> list[Check]:
    group = hurwitz.AffSymp.of(3, 1)
    cls = group.class_c()
    uni = np.array([[1, 1], [0, 1]], dtype=np.int64)
    uni_inv = hurwitz.modmath_inv(uni, 3)
    neg = (-np.eye(2, dtype=np.int64)) % 3

    # exhaustive at n = 2 with a puncture pair: scan all assignments,
    # keep the ones satisfying the constraints
    data = []
    for u1 in itertools.product(range(3), repeat=2):
        for u2 in itertools.product(range(3), repeat=2):
            for v1 in _image_vectors(uni, 3):
                for v2 in _image_vectors(uni_inv, 3):
                    datum = hurwitz.NielsenDatum(
                        group, 0, (),
                        (group.element(neg, [u1]), group.element(neg, [u2])),
                        (group.element(uni, [v1]), group.element(uni_inv, [v2])),
                    )
                    if datum.is_valid():
                        data.append(datum)
    closed = 0
    moved = 0
    for datum in data:
        for move in hurwitz.standard_moves(datum):
            moved += 1
            if not hurwitz.braid_act(move, datum).is_valid():
                closed += 1
    checks = [Check("exhaustive-n2", closed == 0 and len(data) == 81,
                    f"{len(data)} data, {moved} images, {closed} broken")]

    # random n = 4 branch-only data: the last element closes the relation
    rng = np.random.default_rng(seed)
    broken = 0
    n_data = 10_000
    for _ in range(n_data):
        picks = [cls[int(i)] for i in rng.integers(0, len(cls), size=3)]
        last = (picks[0] * picks[1] * picks[2]).inverse()
        datum = hurwitz.NielsenDatum.of(group, 0, (), (*picks, last), ())
        for move in hurwitz.standard_moves(datum):
            if not hurwitz.braid_act(move, datum).is_valid():
                broken += 1
    checks.append(Check("random-n4", broken == 0,
                        f"{n_data} data x 3 moves, {broken} broken images"))
    return checks


# ------------------------------------------------------------------- cells


@_suite("cells", "cell enumeration matches the binomial closed form and the "
        "exponential bound; top cells have twice the point count")
def _cells(seed: int) -> list[Check]:
    bad_count = bad_bound = bad_top = 0
    for g in range(3):
        for f in range(3):
            for n in range(9):
                cells = topology.enumerate_cells(g, f, n)
                if len(cells) != topology.cell_count(g, f, n):
                    bad_count += 1
                if len(cells) > 2 ** (2 * g + f + n):
                    bad_bound += 1
                if n and max(c.dimension for c in cells) != 2 * n:
                    bad_top += 1
    return [
        Check("closed-form", bad_count == 0, f"{bad_count} mismatches"),
        Check("bound", bad_bound == 0, f"{bad_bound} violations"),
        Check("top-dimension", bad_top == 0, f"{bad_top} violations"),
    ]


# --------------------------------------------------------------- stability


@_suite("stability", "graded-ring regression constants, differential "
        "squares to zero, homology concentration, and the central element's "
        "stable bijectivity")
def _stability(seed: int) -> list[Check]:
    cls = hurwitz.AffSymp.of(3, 1).class_c()
    ring6 = topology.build_ring(cls, 6)
    checks = [
        _check_eq("basis-sizes", ring6.basis_sizes(),
                  [1, 9, 33, 63, 71, 72, 72]),
    ]
    for n in range(2, 5):
        checks.append(Check(f"d-squared@{n}",
                            topology._compose_is_zero(ring6, 1, n)
                            and topology._compose_is_zero(ring6, 2, n),
                            "composite of consecutive differentials"))
    report = topology.k_complex(ring6, max_q=1)
    checks.append(_check_eq("h0-degrees", report.h0_degrees, (0,)))
    checks.append(_check_eq("h1-window", report.homology[1], (0,) * 7))
    u6 = topology.u_operator(ring6)
    scan6 = topology.stabilization_scan(ring6, u6)
    checks.append(_check_eq("u-ranks", [r.rank for r in scan6.rows],
                            [1, 9, 33, 63, 71]))
    checks.append(Check("u-injective", all(r.injective for r in scan6.rows),
                        "kernel-free in the scanned window"))

    ring7 = topology.build_ring(cls, 7, budget=10_000_000)
    scan7 = topology.stabilization_scan(ring7, topology.u_operator(ring7))
    checks.append(_check_eq("first-bijective", scan7.first_bijective, 5))
    checks.append(Check("stable-after-first", scan7.stable_after_first,
                        "bijective on every scanned degree past the first"))

    h2 = topology.k_complex(ring6, max_degree=4, max_q=2)
    checks.append(_check_eq("h2-window", h2.homology[2], (0, 0, 33, 0, 0)))
    killed = all(
        topology.right_mult_vanishes_on_h1(ring6, gi, n)
        for gi in range(9) for n in range(1, 6)
    )
    checks.append(Check("right-mult-kills-h1", killed,
                        "all 9 degree-1 classes, degrees 1-5"))
    return checks


# ---------------------------------------------------------- model agreement


_ORDER_CAP = 81


def _capped_distance(x, y, weight: int, cap: int = _ORDER_CAP) -> tuple[float, float]:
    """(weighted distance, 3-sigma error bar) between two module laws.

    Modules with order > cap are lumped into one tail bucket weighted at
    cap^weight.  Empirical inputs contribute binomial error per bucket;
    exact inputs contribute none.
    """
    def buckets(dist):
        out: dict = {}
        for mod, p in dist.probabilities().items():
            key = mod if mod.order() <= cap else "tail"
            out[key] = out.get(key, Fraction(0)) + p
        return out

    bx, by = buckets(x), buckets(y)
    nx, ny = getattr(x, "n_samples", None), getattr(y, "n_samples", None)
    dist = err2 = 0.0
    for key in set(bx) | set(by):
        w = cap**weight if key == "tail" else key.order() ** weight
        px, py = float(bx.get(key, 0)), float(by.get(key, 0))
        dist += w * abs(px - py)
        if nx:
            err2 += (w**2) * px * (1 - px) / nx
        if ny:
            err2 += (w**2) * py * (1 - py) / ny
    return dist, 3 * math.sqrt(err2)


def _grassmannian_exact(n: int, parity: int):
    space = bklpr.SplitSpace.of(n, 3, 1)
    std = bklpr.Isotropic.standard(space)
    counts = Counter(
        bklpr.intersection_module(std, w)
        for w in bklpr.enumerate_isotropics(space, budget=10_000)
    )
    keep = {m: c for m, c in counts.items() if m.mod_rank(3) % 2 == parity}
    total = sum(keep.values())
    return eigendist.ModuleDistribution.exact(
        {m: Fraction(c, total) for m, c in keep.items()}
    )


def _grassmannian_mc(n: int, parity: int, n_samples: int, seed):
    space = bklpr.SplitSpace.of(n, 3, 1)
    rng = np.random.default_rng(seed)
    counts: Counter = Counter()
    for _ in range(n_samples):
        counts[bklpr.sample_intersection(space, rng, parity=parity)] += 1
    return eigendist.ModuleDistribution.empirical(counts, n_samples, seed)


@_suite("model-agreement", "the alternating-cokernel law at matrix size 8 "
        "sits close to the rank-4 intersection law, and intersection laws "
        "contract as the rank grows")
def _model_agreement(seed: int) -> list[Check]:
    alt = bklpr.alternating_distribution(8, 3, 1, 100_000, seed=seed)
    grass4 = _grassmannian_exact(4, parity=0)
    d0, bar = _capped_distance(alt, grass4, weight=0)
    checks = [Check("alt-vs-grassmannian", d0 <= 0.05,
                    f"d0 {d0:.4f} (3-sigma {bar:.4f}), threshold 0.05")]

    laws = {n: _grassmannian_exact(n, parity=0) for n in (2, 3, 4)}
    laws[5] = _grassmannian_mc(5, 0, 30_000, seed + 5)
    laws[6] = _grassmannian_mc(6, 0, 30_000, seed + 6)
    for weight in (0, 1):
        deltas = [
            _capped_distance(laws[n], laws[n + 1], weight)
            for n in (2, 3, 4, 5)
        ]
        ok = all(
            deltas[i + 1][0] <= deltas[i][0] + deltas[i][1] + deltas[i + 1][1]
            for i in range(len(deltas) - 1)
        )
        seq = ", ".join(f"{d:.4f}+-{e:.4f}" for d, e in deltas)
        checks.append(Check(f"contraction-d{weight}", ok, seq))
    return checks
