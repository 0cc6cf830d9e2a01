"""Affine symplectic groups and twist-datum combinatorics.

The affine symplectic group over Z/nu is the set of pairs (M, v) with M a
2r x 2r symplectic matrix and v a translation vector, multiplying like the
block matrices [[M, v], [0, 1]].  Variants reduce the vector part modulo a
list of divisors of nu (one vector per divisor, acted on componentwise).

On top of the group sit the combinatorial objects attached to a genus-g
surface with n moving branch points and a list of fixed punctures: Nielsen
data (tuples of group elements satisfying one product relation plus local
membership constraints), braid moves acting on them, exact torsor counts by
linear algebra over Z/nu, and Burnside-style component counts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import modmath, quadspace
from .errors import BudgetError, InvariantError
from .modmath import FiniteModule, Modulus

DEFAULT_ORBIT_BUDGET = 2_000_000


def symplectic_gram(r: int) -> np.ndarray:
    """The standard alternating Gram [[0, I], [-I, 0]] of size 2r."""
    j = np.zeros((2 * r, 2 * r), dtype=np.int64)
    j[:r, r:] = np.eye(r, dtype=np.int64)
    j[r:, :r] = -np.eye(r, dtype=np.int64)
    return j


def is_symplectic(mat, nu: int) -> bool:
    m = np.asarray(mat, dtype=np.int64) % nu
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        return False
    j = symplectic_gram(m.shape[0] // 2)
    return bool(np.array_equal((m.T @ j @ m) % nu, j % nu))


@dataclass(frozen=True)
class AffSymp:
    """Parameters of an affine symplectic group with reduced vector parts.

    ``vector_moduli`` lists one modulus per vector component; the plain
    group has vector_moduli == (nu,).  Elements are ``AspElement``s.
    """

    nu: int
    r: int
    vector_moduli: tuple[int, ...]

    @staticmethod
    def of(nu: int, r: int, vector_moduli=None) -> "AffSymp":
        nu = int(nu)
        r = int(r)
        if nu < 2 or r < 1:
            raise ValueError("need nu >= 2 and r >= 1")
        mods = (nu,) if vector_moduli is None else tuple(int(m) for m in vector_moduli)
        if not mods or any(m < 1 or nu % m for m in mods):
            raise ValueError("vector moduli must divide nu")
        return AffSymp(nu, r, mods)

    @property
    def dim(self) -> int:
        return 2 * self.r

    def element(self, mat, vecs) -> "AspElement":
        m = np.asarray(mat, dtype=np.int64) % self.nu
        if m.shape != (self.dim, self.dim):
            raise ValueError("matrix part has the wrong shape")
        if not is_symplectic(m, self.nu):
            raise ValueError("matrix part is not symplectic")
        if len(self.vector_moduli) == 1 and np.ndim(vecs) == 1:
            vecs = (vecs,)
        if len(vecs) != len(self.vector_moduli):
            raise ValueError("one vector per modulus required")
        vv = []
        for v, q in zip(vecs, self.vector_moduli):
            v = np.asarray(v, dtype=np.int64)
            if v.shape != (self.dim,):
                raise ValueError("vector part has the wrong shape")
            vv.append(tuple(int(x) % q for x in v))
        return AspElement(self, tuple(map(tuple, m.tolist())), tuple(vv))

    def identity(self) -> "AspElement":
        return self.element(np.eye(self.dim, dtype=np.int64),
                            [np.zeros(self.dim, dtype=np.int64)] * len(self.vector_moduli))

    def minus_identity(self) -> "AspElement":
        return self.element(-np.eye(self.dim, dtype=np.int64),
                            [np.zeros(self.dim, dtype=np.int64)] * len(self.vector_moduli))

    def translation(self, vecs) -> "AspElement":
        return self.element(np.eye(self.dim, dtype=np.int64), vecs)

    def class_c_size(self) -> int:
        """#(fiber over -id) = prod nu_i^{2r}."""
        out = 1
        for q in self.vector_moduli:
            out *= q ** self.dim
        return out

    def class_c(self, budget: int = DEFAULT_ORBIT_BUDGET) -> list["AspElement"]:
        """All elements with matrix part -id."""
        size = self.class_c_size()
        if size > budget:
            raise BudgetError("fiber over -id too large", estimate=size)
        mat = -np.eye(self.dim, dtype=np.int64)
        ranges = [range(q) for q in self.vector_moduli for _ in range(self.dim)]
        out = []
        for flat in itertools.product(*ranges):
            vecs = [flat[k * self.dim:(k + 1) * self.dim]
                    for k in range(len(self.vector_moduli))]
            out.append(self.element(mat, vecs))
        return out


@dataclass(frozen=True)
class AspElement:
    """Group element (M, v): matrix rows plus one vector per modulus."""

    group: AffSymp
    mat: tuple[tuple[int, ...], ...]
    vecs: tuple[tuple[int, ...], ...]

    def mat_array(self) -> np.ndarray:
        return np.array(self.mat, dtype=np.int64)

    def __mul__(self, other: "AspElement") -> "AspElement":
        if self.group != other.group:
            raise ValueError("mismatched groups")
        g = self.group
        m = self.mat_array()
        new_mat = (m @ other.mat_array()) % g.nu
        new_vecs = []
        for q, u, w in zip(g.vector_moduli, self.vecs, other.vecs):
            # (M,u)(N,w) = (MN, Mw + u)
            nv = (m @ np.array(w, dtype=np.int64) + np.array(u, dtype=np.int64)) % q
            new_vecs.append(nv)
        return g.element(new_mat, new_vecs)

    def inverse(self) -> "AspElement":
        g = self.group
        minv = modmath_inv(self.mat_array(), g.nu)
        new_vecs = [(-minv @ np.array(u, dtype=np.int64)) % q
                    for q, u in zip(g.vector_moduli, self.vecs)]
        return g.element(minv, new_vecs)

    def conjugate_by(self, h: "AspElement") -> "AspElement":
        return h * self * h.inverse()

    def is_identity(self) -> bool:
        return self == self.group.identity()

    def order(self, cap: int = 10**6) -> int:
        acc = self
        for k in range(1, cap + 1):
            if acc.is_identity():
                return k
            acc = acc * self
        raise BudgetError("element order exceeds cap", estimate=cap)

    def pi_part(self) -> np.ndarray:
        """Projection to the symplectic quotient."""
        return self.mat_array()

    def in_class_c(self) -> bool:
        return bool(np.array_equal(self.mat_array() % self.group.nu,
                                   (-np.eye(self.group.dim, dtype=np.int64)) % self.group.nu))


def modmath_inv(mat: np.ndarray, nu: int) -> np.ndarray:
    """Inverse of an integer matrix mod nu, via CRT over prime powers."""
    from ._linalg import crt_coefficients, inv_mod_prime_power
    facs = Modulus.of(nu).factors
    if len(facs) == 1:
        ell, a = facs[0]
        inv = inv_mod_prime_power([list(map(int, r)) for r in mat], ell, a)
        return np.array(inv, dtype=np.int64) % nu
    coeffs, _ = crt_coefficients([p**a for p, a in facs])
    out = np.zeros_like(np.asarray(mat, dtype=np.int64))
    for (ell, a), c in zip(facs, coeffs):
        inv = np.array(inv_mod_prime_power([list(map(int, r)) for r in mat], ell, a),
                       dtype=np.int64)
        out = (out + c * inv) % nu
    return out


def extension_condition(mat, vec, nu: int) -> bool:
    """True iff vec lies in the column span of (1 - M) over Z/nu.

    Membership is decided exactly: v is in im(A) mod nu iff appending v as
    an extra column multiplies the kernel size by exactly nu.
    """
    m = np.asarray(mat, dtype=np.int64) % nu
    s = m.shape[0]
    a = (np.eye(s, dtype=np.int64) - m) % nu
    v = np.asarray(vec, dtype=np.int64).reshape(s, 1) % nu
    base = modmath.kernel_size([list(map(int, r)) for r in a], nu)
    aug = modmath.kernel_size([list(map(int, r)) for r in np.hstack([a, v])], nu)
    return aug == base * nu


def drop_of(mat, nu: int) -> int:
    """Codimension of the mod-l fixed space, required equal at each prime."""
    from ._linalg import rank_det_mod
    m = np.asarray(mat, dtype=np.int64)
    s = m.shape[0]
    drops = set()
    for ell in Modulus.of(nu).primes:
        a = (m - np.eye(s, dtype=np.int64)) % ell
        rank, _ = rank_det_mod([list(map(int, r)) for r in a], ell)
        drops.add(rank)
    if len(drops) != 1:
        raise ValueError("fixed-space codimension differs between primes")
    return drops.pop()


@dataclass(frozen=True)
class InertiaSpec:
    """Fixed punctures: symplectic matrices with their declared drops."""

    mats: tuple[tuple[tuple[int, ...], ...], ...]
    drops: tuple[int, ...]

    @staticmethod
    def of(mats, nu: int) -> "InertiaSpec":
        out, drops = [], []
        for m in mats:
            arr = np.asarray(m, dtype=np.int64) % nu
            if not is_symplectic(arr, nu):
                raise ValueError("puncture matrix is not symplectic")
            out.append(tuple(map(tuple, arr.tolist())))
            drops.append(drop_of(arr, nu))
        return InertiaSpec(tuple(out), tuple(drops))


# ---------------------------------------------------------------------------
# Torsor counting.


@dataclass(frozen=True)
class TorsorCount:
    count: int
    formula: int
    degenerate: bool
    free_action: bool

    @property
    def ok(self) -> bool:
        return not self.degenerate


def _relation_letters(genus, handle_mats, branch_n, puncture_mats, dim, nu):
    """The relation word as (matrix, unknown-id, sign) letters.

    Unknown ids: ("h", i) handle vectors, ("b", k) branch vectors,
    ("p", i) fixed-puncture substitution variables.
    """
    letters = []
    for i in range(genus):
        ma, mb = handle_mats[2 * i], handle_mats[2 * i + 1]
        # [a, b] = a b a^-1 b^-1
        letters += [(ma, ("h", 2 * i), +1), (mb, ("h", 2 * i + 1), +1),
                    (ma, ("h", 2 * i), -1), (mb, ("h", 2 * i + 1), -1)]
    neg = (-np.eye(dim, dtype=np.int64)) % nu
    for k in range(branch_n):
        letters.append((neg, ("b", k), +1))
    for i, m in enumerate(puncture_mats):
        letters.append((np.asarray(m, dtype=np.int64) % nu, ("p", i), +1))
    return letters


def torsor_count(genus: int, inertia: InertiaSpec, n: int, nu: int, r: int,
                 handle_mats=None) -> TorsorCount:
    """Count twist data with the given local shape, up to translation.

    Vector parts are counted exactly: handle and branch vectors are free,
    each fixed-puncture vector ranges over im(1 - M_i), one product relation
    (its vector component) is imposed, and the result is divided by nu^{2r}
    for conjugation by translations.  The reference value is
    nu^{(2g-2+n)*2r + sum(drops)}; a mismatch or a non-free translation
    action marks the configuration degenerate rather than raising.
    """
    if n <= 0 or n % 2:
        raise ValueError("need a positive even number of branch points")
    dim = 2 * r
    if handle_mats is None:
        handle_mats = [np.eye(dim, dtype=np.int64)] * (2 * genus)
    handle_mats = [np.asarray(m, dtype=np.int64) % nu for m in handle_mats]
    if len(handle_mats) != 2 * genus:
        raise ValueError("need 2g handle matrices")
    for m in handle_mats:
        if not is_symplectic(m, nu):
            raise ValueError("handle matrix is not symplectic")
    punct = [np.array(m, dtype=np.int64) for m in inertia.mats]

    letters = _relation_letters(genus, handle_mats, n, punct, dim, nu)
    unknowns = []
    for _, uid, _ in letters:
        if uid not in unknowns:
            unknowns.append(uid)
    col = {uid: k * dim for k, uid in enumerate(unknowns)}
    coeff = np.zeros((dim, dim * len(unknowns)), dtype=np.int64)
    prefix = np.eye(dim, dtype=np.int64)
    for mat, uid, sign in letters:
        if sign > 0:
            # (P, w)(M, u) = (PM, Pu + w)
            coeff[:, col[uid]:col[uid] + dim] += prefix
            prefix = (prefix @ mat) % nu
        else:
            minv = modmath_inv(mat, nu)
            coeff[:, col[uid]:col[uid] + dim] -= (prefix @ minv) % nu
            prefix = (prefix @ minv) % nu
    coeff %= nu

    # Substitute v_i = (1 - M_i) s_i at the punctures; correct by #ker.
    ker_corr = 1
    for i, m in enumerate(punct):
        one_minus = (np.eye(dim, dtype=np.int64) - m) % nu
        c0 = col[("p", i)]
        coeff[:, c0:c0 + dim] = (coeff[:, c0:c0 + dim] @ one_minus) % nu
        ker_corr *= modmath.kernel_size([list(map(int, row)) for row in one_minus], nu)

    raw = modmath.kernel_size([list(map(int, row)) for row in coeff], nu)

    # Translation conjugation moves each loop vector by (1 - M_loop) v; the
    # action on solutions is free iff no nonzero v is fixed by every loop.
    stacked = []
    for mat, _, _ in letters:
        one_minus = (np.eye(dim, dtype=np.int64) - mat) % nu
        stacked.extend([list(map(int, row)) for row in one_minus])
    joint = modmath.kernel_size(stacked, nu)
    free = joint == 1

    quotient = nu ** dim
    exact = raw % (ker_corr * quotient) == 0
    count = raw // (ker_corr * quotient) if exact else 0
    formula = nu ** ((2 * genus - 2 + n) * dim + sum(inertia.drops))
    degenerate = (not free) or (not exact) or count != formula
    return TorsorCount(count=count, formula=formula,
                       degenerate=degenerate, free_action=free)


# ---------------------------------------------------------------------------
# Nielsen data and braid moves.


@dataclass(frozen=True)
class NielsenDatum:
    """Surface datum: handle, branch, and fixed-puncture group elements.

    Constraints: the surface relation prod [a_i, b_i] * prod gamma *
    prod delta = identity; every branch element lies over -id; every
    fixed-puncture vector lies in im(1 - M_i) componentwise.
    """

    group: AffSymp
    genus: int
    handles: tuple[AspElement, ...]
    branch: tuple[AspElement, ...]
    fixed: tuple[AspElement, ...]

    @staticmethod
    def of(group: AffSymp, genus: int, handles, branch, fixed) -> "NielsenDatum":
        datum = NielsenDatum(group, int(genus), tuple(handles), tuple(branch),
                             tuple(fixed))
        datum.validate()
        return datum

    def total_product(self) -> AspElement:
        acc = self.group.identity()
        for i in range(self.genus):
            a, b = self.handles[2 * i], self.handles[2 * i + 1]
            acc = acc * a * b * a.inverse() * b.inverse()
        for g in self.branch:
            acc = acc * g
        for d in self.fixed:
            acc = acc * d
        return acc

    def validate(self) -> None:
        if len(self.handles) != 2 * self.genus:
            raise InvariantError("need 2g handle elements")
        for g in self.branch:
            if not g.in_class_c():
                raise InvariantError("branch element is not over -id")
        for d in self.fixed:
            for q, v in zip(self.group.vector_moduli, d.vecs):
                if not extension_condition(d.mat_array() % q, v, q):
                    raise InvariantError("puncture vector outside im(1 - M)")
        if not self.total_product().is_identity():
            raise InvariantError("surface relation violated")

    def is_valid(self) -> bool:
        try:
            self.validate()
        except InvariantError:
            return False
        return True

    def to_json(self) -> str:
        return json.dumps({
            "nu": self.group.nu,
            "r": self.group.r,
            "vector_moduli": list(self.group.vector_moduli),
            "genus": self.genus,
            "handles": [_elt_payload(g) for g in self.handles],
            "branch": [_elt_payload(g) for g in self.branch],
            "fixed": [_elt_payload(g) for g in self.fixed],
        })

    @staticmethod
    def from_json(text: str) -> "NielsenDatum":
        d = json.loads(text)
        grp = AffSymp.of(d["nu"], d["r"], d["vector_moduli"])
        mk = lambda e: grp.element(e["mat"], e["vecs"])
        return NielsenDatum.of(grp, d["genus"], [mk(e) for e in d["handles"]],
                               [mk(e) for e in d["branch"]],
                               [mk(e) for e in d["fixed"]])


def _elt_payload(g: AspElement) -> dict:
    return {"mat": [list(r) for r in g.mat], "vecs": [list(v) for v in g.vecs]}


def braid_act(move, datum: NielsenDatum) -> NielsenDatum:
    """Apply one move; the constraint set is preserved.

    ``("sigma", i)`` is the half-twist on adjacent branch entries
    (g_i, g_{i+1}) -> (g_i g_{i+1} g_i^{-1}, g_i).  ``("slide", i)`` pushes
    the last branch point around fixed puncture i (genus 0 only): with
    u = (d_1 ... d_{i-1}) d_i (d_1 ... d_{i-1})^{-1} the based inertia and
    c = g_n u, both g_n and d_i are conjugated (g_n by c, d_i by the
    w-transport of c), which keeps the total product fixed.
    """
    kind, i = move
    branch = list(datum.branch)
    fixed = list(datum.fixed)
    if kind == "sigma":
        if not 0 <= i < len(branch) - 1:
            raise ValueError("half-twist index out of range")
        a, b = branch[i], branch[i + 1]
        branch[i], branch[i + 1] = a * b * a.inverse(), a
    elif kind == "slide":
        if datum.genus != 0:
            raise ValueError("puncture slides are genus-0 moves")
        if not 0 <= i < len(fixed):
            raise ValueError("slide index out of range")
        if not branch:
            raise ValueError("no branch points to slide")
        w = datum.group.identity()
        for d in fixed[:i]:
            w = w * d
        u = w * fixed[i] * w.inverse()
        c = branch[-1] * u
        branch[-1] = c * branch[-1] * c.inverse()
        t = w.inverse() * c * w
        fixed[i] = t * fixed[i] * t.inverse()
    else:
        raise ValueError(f"unknown move kind {kind!r}")
    return NielsenDatum.of(datum.group, datum.genus, datum.handles,
                           tuple(branch), tuple(fixed))


def standard_moves(datum: NielsenDatum) -> list:
    """All half-twists, plus every slide when the genus is 0."""
    moves = [("sigma", i) for i in range(len(datum.branch) - 1)]
    if datum.genus == 0:
        moves += [("slide", i) for i in range(len(datum.fixed))]
    return moves


def orbit_partition(data, moves, budget: int = DEFAULT_ORBIT_BUDGET):
    """Orbits of the generated move group on an explicit datum set.

    ``moves`` contains move labels understood by ``braid_act`` (or callables
    datum -> datum).  Union-find; every move image must land back in the
    set.  Returns a list of orbits, each a list whose first entry is the
    representative.
    """
    data = list(data)
    if len(data) > budget:
        raise BudgetError("datum set exceeds budget", estimate=len(data))
    index = {d: k for k, d in enumerate(data)}
    if len(index) != len(data):
        raise ValueError("duplicate data")
    parent = list(range(len(data)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, d in enumerate(data):
        for mv in moves:
            out = mv(d) if callable(mv) else braid_act(mv, d)
            j = index.get(out)
            if j is None:
                raise InvariantError("move left the datum set")
            ra, rb = find(k), find(j)
            if ra != rb:
                parent[ra] = rb
    groups = {}
    for k, d in enumerate(data):
        groups.setdefault(find(k), []).append(d)
    return sorted(groups.values(), key=lambda orb: -len(orb))


def orbit_count(data, moves, budget: int = DEFAULT_ORBIT_BUDGET) -> int:
    return len(orbit_partition(data, moves, budget))


def orbit_report(data, moves, budget: int = DEFAULT_ORBIT_BUDGET) -> list[dict]:
    """Orbit sizes with one representative each, largest first."""
    out = []
    for orb in orbit_partition(data, moves, budget):
        rep = orb[0]
        out.append({
            "size": len(orb),
            "representative": rep.to_json() if hasattr(rep, "to_json") else repr(rep),
        })
    return out


# ---------------------------------------------------------------------------
# Component counts by averaging fixed points.


def burnside_components(elements, h: FiniteModule, nu: int) -> Fraction:
    """Average number of H-valued points fixed per group element.

    For G acting on V = (Z/nu)^s by the given matrices, the number of
    G-orbits on Hom(H, V) is (1/|G|) sum_g #Hom(H, ker(g - 1)); returned
    exactly (an integer Fraction whenever G is really a group).
    """
    mats = [np.asarray(g, dtype=np.int64) % nu for g in elements]
    if not mats:
        raise ValueError("empty element list")
    s = mats[0].shape[0]
    total = 0
    for m in mats:
        a = (m - np.eye(s, dtype=np.int64)) % nu
        ker = modmath.kernel_module([list(map(int, row)) for row in a], nu)
        total += modmath.count_maps(ker, h, "hom")
    return Fraction(total, len(mats))


def hom_orbit_count(elements, h: FiniteModule, nu: int,
                    budget: int = DEFAULT_ORBIT_BUDGET) -> int:
    """Orbits of the diagonal action on Hom(H, (Z/nu)^s), by union-find.

    Hom(H, V) is the set of tuples (x_1..x_m) in V^m with n_j x_j = 0 for
    the cyclic factors Z/n_j of H.
    """
    mats = [np.asarray(g, dtype=np.int64) % nu for g in elements]
    s = mats[0].shape[0]
    orders = []
    for p in h.primes:
        orders.extend(p**e for e in h.partition(p))
    if not orders:
        return 1
    per = []
    for n_j in orders:
        g = math.gcd(nu, n_j)
        step = nu // g
        per.append([tuple(step * np.array(t) % nu)
                    for t in itertools.product(range(g), repeat=s)])
    size = 1
    for opts in per:
        size *= len(opts)
    if size > budget:
        raise BudgetError("Hom set exceeds budget", estimate=size)
    points = list(itertools.product(*per))
    index = {pt: k for k, pt in enumerate(points)}
    parent = list(range(len(points)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, pt in enumerate(points):
        for m in mats:
            img = tuple(tuple((m @ np.array(x, dtype=np.int64)) % nu) for x in pt)
            j = index[img]
            ra, rb = find(k), find(j)
            if ra != rb:
                parent[ra] = rb
    return len({find(k) for k in range(len(points))})


def invariant_image(space: quadspace.QuadSpace, generators) -> frozenset:
    """F2-span of the generators' per-prime (Dickson, spinor) signatures.

    Returned as a frozenset of flat bit tuples (Dickson bits for each prime
    in order, then spinor bits), a subgroup of (Z/2)^{2 omega(nu)}.
    """
    primes = Modulus.of(space.nu).primes
    vecs = []
    for g in generators:
        mat = g.mat if hasattr(g, "mat") else g
        sig = quadspace.coset_signature(space, np.asarray(mat, dtype=np.int64))
        bits = [sig.bit(p)[0] for p in primes] + [sig.bit(p)[1] for p in primes]
        vecs.append(tuple(b & 1 for b in bits))
    width = 2 * len(primes)
    span = {tuple([0] * width)}
    frontier = list(span)
    while frontier:
        base = frontier.pop()
        for v in vecs:
            new = tuple((a + b) & 1 for a, b in zip(base, v))
            if new not in span:
                span.add(new)
                frontier.append(new)
    return frozenset(span)
