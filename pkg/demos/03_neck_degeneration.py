"""
Pinching a neck
===============

Surfaces of revolution whose neck shrinks with eps.
"""

import math
import numpy as np
from cusp_torsion import spectral_sim as ss

sym = ss.builtin_surface("symmetric")
handle = ss.builtin_surface("handle")

# the spectrum separates: one eigenvalue goes to zero for the dumbbell
for eps in (1.0, 1e-2, 1e-3):
    spec = ss.neck_spectrum(sym, eps, n_eig=6)
    print("eps = %g  dumbbell:" % eps, np.round(spec.eigenvalues[:4], 5))
spec = ss.neck_spectrum(handle, 1e-3, n_eig=6)
print("eps = 1e-3  handle:  ", np.round(spec.eigenvalues[:4], 5))

# lambda_1 / eps tends to (V1 + V2) / (pi V1 V2)
fit = ss.small_eig_fit(sym, [4e-3, 2e-3, 1e-3])
print("ratios", np.round(fit.ratios, 5), "extrapolated %.5f target %.5f" % (fit.extrapolated, fit.target))

# sphere check for the determinant pipeline
# exact value 1/2 - 4 zeta'(-1), with zeta'(-1) = -0.16542114370045092
exact = 0.5 + 4 * 0.16542114370045092
print("sphere log det' %.5f exact %.5f" % (ss.surface_logdet(ss.builtin_surface("sphere"), 1.0).logdet, exact))

# log det over a decade of eps; the 1/eps coefficient is dominated by the collar
ld = ss.logdet_surface_fit(sym, np.geomspace(0.02, 0.2, 7))
print("log det", np.round(ld.logdets, 4))
print("c1 fitted %.4f  collar -pi/6 = %.4f  reference %.5f" % (ld.c1, -math.pi / 6, ld.target))
