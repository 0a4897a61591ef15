"""
The one-dimensional model operator
==================================

Closed forms next to finite-difference numerics for the weighted operator
on the line.
"""

import math
import numpy as np
from cusp_torsion import model_formulas as mf
from cusp_torsion import spectral_sim as ss

# closed-form log determinants at a few weights
for a in (-1.0, 0.0, 0.5, 1.0, 2.0):
    print("a = %4.1f  log det = %.12f" % (a, mf.logdet_model(a)))

# the relative heat trace against erf(a sqrt t)
a = 1.0
for t in (0.5, 1.0, 4.0):
    num = ss.relative_heat_trace(a, t)
    print("t = %3.1f  numeric %.6f  closed %.6f" % (t, num, math.erf(a * math.sqrt(t))))

# a = 1 has a bound state at zero; it shows up as the lowest eigenvalue
op = ss.discretize(1.0, ss.Grid1D(40.0, 4000))
print("lowest eigenvalues at a = 1:", np.round(op.eigenvalues()[:3], 6))

# relative determinant through the Mellin transform
for a in (0.5, 1.0, 1.5):
    print("a = %3.1f  numeric %.5f  target %.5f" % (a, ss.relative_logdet(a), mf.relative_logdet_target(a)))

# finite part of the collar volume
fit = ss.renorm_volume_fit()
print("renormalized volume %.10f, slope %.6f, 2 log 2 = %.10f" % (fit.value, fit.slope, 2 * math.log(2)))
