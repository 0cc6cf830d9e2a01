"""quadtwist: exact finite-group and random-model statistics for
quadratic twist Selmer heuristics.

Subpackage map:

- modmath: partitions, finite abelian modules, Smith forms over Z/l^K
- quadspace: orthogonal groups over Z/nu, Dickson / spinor invariants
- eigendist: 1-eigenspace distributions, generating functions, TV metrics
- bklpr: maximal-isotropic and alternating-cokernel Selmer models, moments
- hurwitz: affine symplectic groups, Nielsen tuples, torsor counts
- topology: cell counts, braid-orbit rings, stabilization and K-complex scans
- suites: the named verification suites the CLI and test suite share
- cli: experiment runner (run / verify / list-suites / export-csv)
"""

__version__ = "0.1.0"
