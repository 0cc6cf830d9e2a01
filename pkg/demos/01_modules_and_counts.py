"""Finite abelian modules: canonical forms, map counting, Smith forms.

Everything here is exact integer arithmetic; no floats appear.
"""

import numpy as np

from quadtwist.modmath import (
    FiniteModule, count_maps, kernel_module, smith_valuations, sym2_module,
)

# A finite abelian p-group is a partition per prime: Z/9 + Z/3 + Z/5 is
# {3: (2, 1), 5: (1,)}.  Construction normalizes order and hashing.
a = FiniteModule.from_dict({3: (2, 1), 5: (1,)})
b = FiniteModule.cyclic(3).direct_sum(FiniteModule.cyclic(15))
print(f"a = {a}   order {a.order()}  exponent {a.exponent()}  rank {a.rank()}")
print(f"b = {b}   order {b.order()}")

# Map counting is multiplicative over primes; each factor is a partition
# formula (homs) or a Moebius sum over the submodule lattice (surjections).
for h in [FiniteModule.cyclic(3), FiniteModule.cyclic(9),
          FiniteModule.from_dict({3: (1, 1)})]:
    hom = count_maps(a, h, "hom")
    surj = count_maps(a, h, "surj")
    inj = count_maps(h, a, "inj")
    print(f"  Hom(a, {h}) = {hom:4d}   Surj(a, {h}) = {surj:4d}"
          f"   Inj({h}, a) = {inj}")

# The symmetric square drives the moment formulas later on.
print(f"sym2({a}) = {sym2_module(a)}  of order {sym2_module(a).order()}")

# Smith normal form over Z/3^6: scale the rows of a random matrix by
# 1, 3, 9, 27 and read the elementary divisors back off exactly.  The
# kernel orders match: sum of valuations = log_3 of the kernel order.
rng = np.random.default_rng(7)
mat = rng.integers(0, 3**6, size=(4, 4))
for i, scale in enumerate((1, 3, 9, 27)):
    mat[i] = mat[i] * scale % 3**6
vals = smith_valuations([[int(x) for x in row] for row in mat], 3, cap=6)
print(f"\nrow-scaled 4x4 matrix mod 3^6: divisor valuations {vals}")
ker = kernel_module([[int(x) for x in row] for row in mat], 3**6)
print(f"kernel as a module over Z/3^6: {ker} (order 3^{sum(vals)})")
