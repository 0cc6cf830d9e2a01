"""Two random models for Selmer-type module laws, and their agreement.

Model one intersects random maximal isotropics in a split quadratic space;
model two takes cokernels of random alternating integer matrices.  Both
laws have exact finite-size moment formulas, and the two models converge
to the same limit from different directions.
"""

import numpy as np

from quadtwist import bklpr, eigendist
from quadtwist.modmath import FiniteModule, sym2_order

# Exact intersection law over Z/3 at rank n = 2 (enumerated, rational).
ref = bklpr.bklpr_distribution(3, 2)
print("intersection law, nu = 3, n = 2:")
for mod, p in sorted(ref.dist.probabilities().items(),
                     key=lambda kv: kv[0].order()):
    print(f"  P[{mod}] = {p}")

# Surjection moments: exact at finite n, with a clean n -> infinity limit
# given by the symmetric-square order of the target.
print("\nsurjection moments E[#Surj(X, H)]:")
for h in [FiniteModule.cyclic(3), FiniteModule.from_dict({3: (1, 1)})]:
    for n in (1, 2, 3, 4):
        m = bklpr.finite_n_moment(3, 1, n, h)
        print(f"  H = {h}, n = {n}: {m}", end="")
    print(f"   -> limit sym2 = {sym2_order(h)}")

# Composite moduli assemble by CRT; parity conditioning splits each prime
# factor's law into even/odd fixed-rank halves.
mixed = bklpr.bklpr_distribution(15, 2, variant=0)
support = sorted(mixed.dist.support(), key=lambda m: m.order())
print(f"\nnu = 15, even variant: {len(support)} modules in support, "
      f"largest {support[-1]}")

# The alternating-cokernel model: antisymmetric matrices over Z/3^K with
# torsion capped at 3.  Even sizes land on the even-parity half.
rng = np.random.default_rng(5)
counts: dict = {}
stats: dict = {}
n_samples = 4000
for _ in range(n_samples):
    mod = bklpr.alternating_cokernel_sample(8, 3, 1, rng, stats=stats)
    counts[mod] = counts.get(mod, 0) + 1
alt = eigendist.ModuleDistribution.empirical(counts, n_samples, seed=5)
print(f"\nalternating model, size 8: {stats['rejected']} rejected draws")
for mod, p in sorted(alt.probabilities().items(), key=lambda kv: kv[0].order()):
    print(f"  P[{mod}] ~ {float(p):.4f}")

# Distance to the exact even-parity intersection law at n = 4.
exact4 = bklpr.bklpr_distribution(3, 4, variant=0)
d0 = eigendist.tv_distance(alt, exact4.dist, m=0)
print(f"d^0(alternating size 8, intersection n = 4) = {float(d0):.4f}")
