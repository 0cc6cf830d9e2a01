"""Configuration-cell combinatorics and the braid-orbit graded ring.

Three desk-scale pieces of the stability machinery:

* cell tuples indexing the combinatorial cells of a configuration space of
  n points on a genus-g surface with f punctures, with their closed-form
  count and dimensions;
* the graded ring whose degree-n basis is the set of braid orbits of
  n-tuples from a fixed conjugation-closed class, together with the central
  stabilization operator U and a per-degree bijectivity scan;
* the bar-type complex with the twisted differential, with exact homology
  dimensions over the rationals in homological degrees 0..2.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, InvariantError

DEFAULT_RING_BUDGET = 5_000_000


# ---------------------------------------------------------------------------
# Cells of configuration spaces.


@dataclass(frozen=True)
class CellTuple:
    """One combinatorial cell: b blocks of moving points plus weights.

    ``parts`` lists the b positive block sizes; ``handle_weights`` (length
    2g) and ``puncture_weights`` (length f) are nonnegative.  The total
    number of points is the sum of all entries, and the cell dimension is
    that total plus b.
    """

    parts: tuple[int, ...]
    handle_weights: tuple[int, ...]
    puncture_weights: tuple[int, ...]

    def __post_init__(self):
        if any(p < 1 for p in self.parts):
            raise ValueError("block sizes must be positive")
        if any(x < 0 for x in self.handle_weights + self.puncture_weights):
            raise ValueError("weights must be nonnegative")

    @property
    def blocks(self) -> int:
        return len(self.parts)

    @property
    def points(self) -> int:
        return (sum(self.parts) + sum(self.handle_weights)
                + sum(self.puncture_weights))

    @property
    def dimension(self) -> int:
        return self.blocks + self.points


def _compositions(total: int, slots: int):
    """All tuples of `slots` nonnegative integers summing to `total`."""
    if slots == 0:
        if total == 0:
            yield ()
        return
    for cuts in itertools.combinations(range(total + slots - 1), slots - 1):
        prev, out = -1, []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + slots - 2 - prev)
        yield tuple(out)


def enumerate_cells(g: int, f: int, n: int) -> list[CellTuple]:
    """Every cell tuple for n points on the (g, f) surface."""
    if g < 0 or f < 0 or n < 0:
        raise ValueError("g, f, n must be nonnegative")
    out = []
    for b in range(n + 1):
        for comp in _compositions(n - b, b + 2 * g + f):
            parts = tuple(c + 1 for c in comp[:b])
            out.append(CellTuple(parts, comp[b:b + 2 * g], comp[b + 2 * g:]))
    return out


def cell_count(g: int, f: int, n: int) -> int:
    """Closed form: sum over b of C(n-b + b+2g+f-1, b+2g+f-1)."""
    total = 0
    for b in range(n + 1):
        slots = b + 2 * g + f
        if slots == 0:
            total += 1 if n == b else 0
        else:
            total += math.comb(n - b + slots - 1, slots - 1)
    return total


# ---------------------------------------------------------------------------
# The braid-orbit graded ring.


@dataclass(frozen=True)
class GradedOrbitRing:
    """Braid orbits of tuples from a conjugation-closed class, by degree.

    Tuples (t_0, .., t_{n-1}) of class-element indices are encoded as
    little-endian base-k integers.  ``orbit_index[n]`` maps each code to
    its orbit id; ``reps[n]`` holds the minimal code of each orbit.
    Multiplication is concatenation followed by orbit lookup.
    """

    elements: tuple
    depth: int
    conj: tuple[tuple[int, ...], ...]
    orbit_index: tuple[np.ndarray, ...]
    reps: tuple[np.ndarray, ...]

    @property
    def class_size(self) -> int:
        return len(self.elements)

    def basis_size(self, n: int) -> int:
        self._check_degree(n)
        return len(self.reps[n])

    def basis_sizes(self) -> list[int]:
        return [len(r) for r in self.reps]

    def _check_degree(self, n: int) -> None:
        if not 0 <= n <= self.depth:
            raise ValueError(f"degree {n} outside built range 0..{self.depth}")

    def encode(self, word) -> int:
        code = 0
        for k, t in enumerate(word):
            code += int(t) * self.class_size**k
        return code

    def decode(self, n: int, code: int) -> tuple[int, ...]:
        out = []
        for _ in range(n):
            code, d = divmod(code, self.class_size)
            out.append(d)
        return tuple(out)

    def orbit_of_word(self, word) -> int:
        n = len(word)
        self._check_degree(n)
        return int(self.orbit_index[n][self.encode(word)])

    def rep_word(self, n: int, orbit: int) -> tuple[int, ...]:
        self._check_degree(n)
        return self.decode(n, int(self.reps[n][orbit]))

    def product(self, n1: int, orbit1: int, n2: int, orbit2: int) -> int:
        """Orbit index of the concatenation, in degree n1 + n2."""
        n = n1 + n2
        self._check_degree(n)
        code = int(self.reps[n1][orbit1]) + int(self.reps[n2][orbit2]) * self.class_size**n1
        return int(self.orbit_index[n][code])

    def to_json(self) -> str:
        return json.dumps({"class_size": self.class_size, "depth": self.depth,
                           "basis_sizes": self.basis_sizes()})


def _conjugation_table(elements) -> tuple[tuple[int, ...], ...]:
    index = {}
    for k, g in enumerate(elements):
        if g in index:
            raise ValueError("class elements must be distinct")
        index[g] = k
    table = []
    for a in elements:
        row = []
        for b in elements:
            c = a * b * a.inverse()
            if c not in index:
                raise ValueError("class is not closed under conjugation")
            row.append(index[c])
        table.append(tuple(row))
    return tuple(table)


def _orbit_labels(size: int, n: int, conj: np.ndarray, inv: np.ndarray,
                  k: int) -> np.ndarray:
    """Orbit labels of the half-twist action on codes 0..size-1.

    Label propagation: each code repeatedly takes the minimum label over
    itself and its sigma_i / sigma_i^{-1} neighbors, with pointer jumping,
    until stable.  Exact orbit detection (the move graph is symmetric once
    inverses are included).
    """
    labels = np.arange(size, dtype=np.int64)
    codes = np.arange(size, dtype=np.int64)
    digits = [(codes // k**i) % k for i in range(n)]
    while True:
        before = labels.copy()
        for i in range(n - 1):
            a, b = digits[i], digits[i + 1]
            # sigma: (a, b) -> (a b a^-1, a)
            fwd = codes + (conj[a, b] - a) * k**i + (a - b) * k**(i + 1)
            # sigma^-1: (a, b) -> (b, b^-1 a b)
            bwd = codes + (b - a) * k**i + (conj[inv[b], a] - b) * k**(i + 1)
            np.minimum(labels, labels[fwd], out=labels)
            np.minimum(labels, labels[bwd], out=labels)
        for _ in range(4):
            labels = labels[labels]
        if np.array_equal(labels, before):
            return labels


def build_ring(elements, depth: int, budget: int = DEFAULT_RING_BUDGET) -> GradedOrbitRing:
    """Orbit bases and multiplication data through the given degree.

    ``elements`` is the class c (group elements with * and .inverse(),
    e.g. the fiber over -id from the affine symplectic group); it must be
    conjugation-closed.  Budget bounds |c|^depth.
    """
    elements = tuple(elements)
    k = len(elements)
    if k < 1 or depth < 0:
        raise ValueError("need a nonempty class and depth >= 0")
    if k**depth > budget:
        raise BudgetError("|c|^depth exceeds budget", estimate=k**depth)
    conj_t = _conjugation_table(elements)
    conj = np.array(conj_t, dtype=np.int64)
    index = {g: i for i, g in enumerate(elements)}
    inv = np.array([index[g.inverse()] for g in elements], dtype=np.int64)
    orbit_index, reps = [], []
    for n in range(depth + 1):
        size = k**n
        if n < 2:
            labels = np.arange(size, dtype=np.int64)
        else:
            labels = _orbit_labels(size, n, conj, inv, k)
        rep_codes, idx = np.unique(labels, return_inverse=True)
        orbit_index.append(idx.astype(np.int64))
        reps.append(rep_codes)
    ring = GradedOrbitRing(elements, depth, conj_t,
                           tuple(orbit_index), tuple(reps))
    _check_product_well_defined(ring)
    return ring


def _check_product_well_defined(ring: GradedOrbitRing) -> None:
    """Concatenating any orbit members must land in one orbit."""
    rng = np.random.default_rng(0xC0FFEE)
    k = ring.class_size
    for n1, n2 in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        if n1 + n2 > ring.depth:
            continue
        for _ in range(10):
            c1 = int(rng.integers(0, k**n1))
            c2 = int(rng.integers(0, k**n2))
            o1 = int(ring.orbit_index[n1][c1])
            o2 = int(ring.orbit_index[n2][c2])
            got = int(ring.orbit_index[n1 + n2][c1 + c2 * k**n1])
            if got != ring.product(n1, o1, n2, o2):
                raise InvariantError("orbit product is not well defined")


# ---------------------------------------------------------------------------
# The stabilization operator U.


@dataclass(frozen=True)
class UOperator:
    """Central element sum_g r_g^{D * ord(g)}, stored per degree-2 orbit.

    ``terms`` maps orbit index (in ring degree ``degree``) to an integer
    coefficient.
    """

    ring: GradedOrbitRing
    degree: int
    terms: tuple[tuple[int, int], ...]


def u_operator(ring: GradedOrbitRing, d_exp: int = 1) -> UOperator:
    orders = {g.order() for g in ring.elements}
    if len(orders) != 1:
        raise ValueError("class elements must share one order")
    deg = d_exp * orders.pop()
    if deg < 1 or deg > ring.depth:
        raise ValueError("operator degree outside the built range")
    counts: dict[int, int] = {}
    for gi in range(ring.class_size):
        orb = ring.orbit_of_word((gi,) * deg)
        counts[orb] = counts.get(orb, 0) + 1
    return UOperator(ring, deg, tuple(sorted(counts.items())))


def left_mult_matrix(u: UOperator, n: int) -> np.ndarray:
    """Matrix of x -> U*x from ring degree n to degree n + deg(U)."""
    ring = u.ring
    rows = ring.basis_size(n + u.degree)
    cols = ring.basis_size(n)
    mat = np.zeros((rows, cols), dtype=np.int64)
    for j in range(cols):
        for orb, coeff in u.terms:
            mat[ring.product(u.degree, orb, n, j), j] += coeff
    return mat


def rank_exact(mat) -> int:
    """Rank over the rationals, by fraction-free integer elimination."""
    rows = [[int(x) for x in r] for r in np.asarray(mat)]
    rank, ncols = 0, len(rows[0]) if rows else 0
    col = 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        for i in range(rank + 1, len(rows)):
            if rows[i][col]:
                g = math.gcd(pr[col], rows[i][col])
                a, b = pr[col] // g, rows[i][col] // g
                rows[i] = [a * x - b * y for x, y in zip(rows[i], pr)]
        rank += 1
        col += 1
    return rank


@dataclass(frozen=True)
class ScanRow:
    degree: int
    domain_dim: int
    codomain_dim: int
    rank: int

    @property
    def injective(self) -> bool:
        return self.rank == self.domain_dim

    @property
    def surjective(self) -> bool:
        return self.rank == self.codomain_dim

    @property
    def bijective(self) -> bool:
        return self.injective and self.surjective


@dataclass(frozen=True)
class StabilizationReport:
    rows: tuple[ScanRow, ...]
    first_bijective: int | None

    @property
    def stable_after_first(self) -> bool:
        """Bijective at every scanned degree past the first bijective one."""
        if self.first_bijective is None:
            return False
        return all(r.bijective for r in self.rows
                   if r.degree >= self.first_bijective)

    def to_json(self) -> str:
        return json.dumps({
            "rows": [{"degree": r.degree, "domain": r.domain_dim,
                      "codomain": r.codomain_dim, "rank": r.rank,
                      "bijective": r.bijective} for r in self.rows],
            "first_bijective": self.first_bijective,
        })


def stabilization_scan(ring: GradedOrbitRing, u: UOperator) -> StabilizationReport:
    """Rank of U-multiplication per degree, with bijectivity flags."""
    rows = []
    for n in range(ring.depth - u.degree + 1):
        mat = left_mult_matrix(u, n)
        rows.append(ScanRow(n, mat.shape[1], mat.shape[0], rank_exact(mat)))
    first = next((r.degree for r in rows if r.bijective), None)
    return StabilizationReport(tuple(rows), first)


# ---------------------------------------------------------------------------
# The twisted bar-type complex.


def _differential_terms(ring: GradedOrbitRing, word, m_orbit: int, m_deg: int):
    """Signed targets of d((w_0..w_{q-1}) (x) m) in the (q-1)-th term.

    Moving w_i past w_{i+1..q-1} conjugates each passed factor by w_i and
    multiplies w_i into m on the left: the i-th summand has sign (-1)^i,
    word (w_0,..,w_{i-1}, w_i w_{i+1} w_i^{-1},.., w_i w_{q-1} w_i^{-1}),
    and module part the orbit of (w_i, rep(m)).
    """
    q = len(word)
    k = ring.class_size
    out = []
    for i in range(q):
        new_word = list(word[:i]) + [ring.conj[word[i]][word[j]]
                                     for j in range(i + 1, q)]
        code = word[i] + int(ring.reps[m_deg][m_orbit]) * k
        new_m = int(ring.orbit_index[m_deg + 1][code])
        out.append(((-1)**i, tuple(new_word), new_m))
    return out


def _k_basis(ring: GradedOrbitRing, q: int, n: int):
    """Basis of the q-th complex term in total degree n: (word, orbit)."""
    if n - q < 0:
        return []
    k = ring.class_size
    words = itertools.product(range(k), repeat=q)
    return [(w, j) for w in words for j in range(ring.basis_size(n - q))]


def _differential_matrix(ring: GradedOrbitRing, q: int, n: int):
    """Sparse columns of d: K_q -> K_{q-1} in total degree n.

    Returns (rows basis, cols basis, columns) where columns[j] is a list of
    (row index, coefficient).
    """
    dom = _k_basis(ring, q, n)
    cod = _k_basis(ring, q - 1, n)
    row_of = {b: i for i, b in enumerate(cod)}
    cols = []
    for word, m_orbit in dom:
        entries: dict[int, int] = {}
        for sign, new_word, new_m in _differential_terms(ring, word, m_orbit,
                                                         n - q):
            r = row_of[(new_word, new_m)]
            entries[r] = entries.get(r, 0) + sign
        cols.append([(r, c) for r, c in sorted(entries.items()) if c])
    return cod, dom, cols


def _sparse_rank_exact(cols) -> int:
    """Exact rank over Q of a column-sparse integer matrix."""
    row_data: list[dict[int, Fraction] | None] = []
    pivot_of_row: dict[int, int] = {}  # leading col -> row index
    rank = 0
    for entries in cols:
        vec = {r: Fraction(c) for r, c in entries}
        while vec:
            lead = min(vec)
            if lead in pivot_of_row:
                other = row_data[pivot_of_row[lead]]
                scale = vec[lead] / other[lead]
                for r, val in other.items():
                    new = vec.get(r, Fraction(0)) - scale * val
                    if new:
                        vec[r] = new
                    else:
                        vec.pop(r, None)
            else:
                pivot_of_row[lead] = len(row_data)
                row_data.append(vec)
                rank += 1
                break
    return rank


def _compose_is_zero(ring: GradedOrbitRing, q: int, n: int) -> bool:
    """Check d_{q} after d_{q+1} vanishes at total degree n."""
    dom = _k_basis(ring, q + 1, n)
    if not dom or n - q < 0:
        return True
    mid_index = {b: i for i, b in enumerate(_k_basis(ring, q, n))}
    cod_index = {b: i for i, b in enumerate(_k_basis(ring, q - 1, n))}
    for word, m_orbit in dom:
        acc: dict[int, int] = {}
        for s1, w1, m1 in _differential_terms(ring, word, m_orbit, n - q - 1):
            assert (w1, m1) in mid_index
            for s2, w2, m2 in _differential_terms(ring, w1, m1, n - q):
                r = cod_index[(w2, m2)]
                acc[r] = acc.get(r, 0) + s1 * s2
        if any(acc.values()):
            return False
    return True


@dataclass(frozen=True)
class KComplexReport:
    max_degree: int
    max_q: int
    homology: tuple[tuple[int, ...], ...]  # homology[q][n]

    def h(self, q: int, n: int) -> int:
        return self.homology[q][n]

    @property
    def h0_degrees(self) -> tuple[int, ...]:
        return tuple(n for n, d in enumerate(self.homology[0]) if d)

    def h_degree(self, q: int) -> int | None:
        """Largest degree with nonzero H_q in the window, if any."""
        degs = [n for n, d in enumerate(self.homology[q]) if d]
        return max(degs) if degs else None

    def to_json(self) -> str:
        return json.dumps({"max_degree": self.max_degree, "max_q": self.max_q,
                           "homology": [list(row) for row in self.homology]})


def k_complex(ring: GradedOrbitRing, max_degree: int | None = None,
              max_q: int = 1) -> KComplexReport:
    """Homology dimensions H_q per total degree, q <= max_q <= 2.

    Builds the twisted differential, asserts that consecutive differentials
    compose to zero, and computes exact ranks over the rationals.
    """
    if not 0 <= max_q <= 2:
        raise ValueError("homological index capped at 2")
    top = ring.depth if max_degree is None else max_degree
    if top > ring.depth:
        raise ValueError("max_degree exceeds the built ring depth")
    ranks: dict[tuple[int, int], int] = {}
    dims: dict[tuple[int, int], int] = {}
    for n in range(top + 1):
        for q in range(max_q + 2):
            dims[(q, n)] = len(_k_basis(ring, q, n))
        for q in range(1, max_q + 2):
            _, dom, cols = _differential_matrix(ring, q, n)
            ranks[(q, n)] = _sparse_rank_exact(cols)
        for q in range(1, max_q + 1):
            if not _compose_is_zero(ring, q, n):
                raise InvariantError("differential does not square to zero")
    homology = []
    for q in range(max_q + 1):
        row = []
        for n in range(top + 1):
            kernel = dims[(q, n)] - ranks.get((q, n), 0)
            row.append(kernel - ranks.get((q + 1, n), 0))
        homology.append(tuple(row))
    return KComplexReport(top, max_q, tuple(homology))


def right_mult_vanishes_on_h1(ring: GradedOrbitRing, g_index: int, n: int) -> bool:
    """Whether right multiplication by a degree-1 class kills H_1 at degree n.

    Kernel generators of the single-entry differential K_1 -> K_0 are
    differences of basis elements with equal image; their right-multiplied
    images must differ by boundary, i.e. lie in one connected component of
    the K_2 -> K_1 incidence graph one degree up.
    """
    k = ring.class_size
    if n < 1 or n + 1 > ring.depth:
        raise ValueError("degree outside the built range")

    def d1_target(word, m_orbit, m_deg):
        ((_, _, new_m),) = _differential_terms(ring, word, m_orbit, m_deg)
        return new_m

    # connected components of the degree-(n+1) incidence graph
    _, dom, cols = _differential_matrix(ring, 2, n + 1)
    mid = _k_basis(ring, 1, n + 1)
    mid_index = {b: i for i, b in enumerate(mid)}
    parent = list(range(len(mid)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for entries in cols:
        if len(entries) == 2:
            ra, rb = find(entries[0][0]), find(entries[1][0])
            if ra != rb:
                parent[ra] = rb

    # kernel generators at degree n: group K_1 basis by d_1 image
    by_target: dict[int, list[tuple]] = {}
    for w, j in _k_basis(ring, 1, n):
        by_target.setdefault(d1_target(w, j, n - 1), []).append((w, j))
    for members in by_target.values():
        base = members[0]
        for other in members[1:]:
            imgs = []
            for w, j in (base, other):
                code = g_index * k**(n - 1) + int(ring.reps[n - 1][j])
                imgs.append((w, int(ring.orbit_index[n][code])))
            a, b = (mid_index[i] for i in imgs)
            if a != b and find(a) != find(b):
                return False
    return True
