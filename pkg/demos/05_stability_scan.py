"""Cells, the braid-orbit ring, and the stabilization scan.

Builds the graded ring of braid orbits over the order-2 class in the
affine symplectic group mod 3, multiplies by the central element, and
watches multiplication become an isomorphism degree by degree.  Finishes
with the low rows of the twisted complex whose homology controls the
stable range.
"""

from quadtwist import hurwitz, topology

# --- cell counts -------------------------------------------------------------
print("cells of the configuration space are indexed by block tuples:")
print("g f  n  cells  bound")
for g in (0, 1):
    for f in (0, 1):
        for n in (1, 2, 3, 4):
            print(f"{g} {f} {n:2d}  {topology.cell_count(g, f, n):5d}"
                  f"  {2 ** (2 * g + f + n):5d}")

top = [c for c in topology.enumerate_cells(1, 1, 3) if c.dimension == 6]
print(f"top cells at (g, f, n) = (1, 1, 3): {len(top)}, dimension 6 = 2n")

# --- the graded orbit ring ---------------------------------------------------
cls = hurwitz.AffSymp.of(3, 1).class_c()
ring = topology.build_ring(cls, depth=6)
print(f"\nbraid-orbit ring over a class of size {ring.class_size}:")
print(f"basis sizes by degree: {ring.basis_sizes()}")

# the central element: sum of squares of the class generators (order 2)
u = topology.u_operator(ring)
print(f"central element lives in degree {u.degree}, {len(u.terms)} terms")

scan = topology.stabilization_scan(ring, u)
for row in scan.rows:
    print(f"  degree {row.degree}: {row.domain_dim:3d} -> {row.codomain_dim:3d}"
          f"  rank {row.rank:3d}  injective={row.injective}"
          f"  bijective={row.bijective}")
print(f"first bijective degree in this window: {scan.first_bijective}")

# --- the twisted complex -----------------------------------------------------
report = topology.k_complex(ring, max_q=1)
print(f"\nH_0 nonzero only in degrees {report.h0_degrees}")
print(f"H_1 per degree: {report.homology[1]}")
