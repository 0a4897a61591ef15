"""
Torsion of based complexes and cut manifolds
============================================
"""

import math
import numpy as np
from cusp_torsion import chain_torsion as ct
from cusp_torsion import simplicial as sx

# the acyclic complex R --3--> R has torsion 3
C = ct.BasedComplex([1, 1], [np.array([[3.0]])])
print("log torsion of [3]:", ct.log_torsion(C).log_torsion, "log 3 =", math.log(3))

# multiplicativity over random short exact sequences
res = ct.milnor_suite(seed=0, n=50)
print("Milnor residuals: max %.2e over %d sequences" % (max(res), len(res)))

# S^1 x S^2 cut along a sphere, with trivial and with -1 holonomy
for name in ("s1xs2", "s1xs2-minus"):
    cut = sx.cut_case(sx.builtin_case(name))
    print(name, "gluing residual %.2e" % sx.rt3_verify(cut)["residual"])
    r = sx.rt10_verify(cut)
    # the raw residual is exactly the sqrt 2 term; dropping it closes the identity
    print("   cone residual %.4f, sqrt 2 term %.4f, without it %.2e"
          % (r.residual, r.parts["sqrt2_term"], r.parts["residual_scaled"]))

# torsion is unchanged under barycentric subdivision
case = sx.builtin_case("torus")
a, b = sx.subdivision_torsion_pair(case.K, case.F)
print("torus: before %.12f after %.12f" % (a, b))
