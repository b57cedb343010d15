"""Incomplete geodesics on compact Lorentzian tori.

On the torus with metric dx dy + dy dx - 2x dy^2 (universal cover chart)
the lightlike geodesic through the origin with velocity (0, -1) satisfies
y' = -1/(1-s) and blows up at s = 1. The integrator detects the blow-up
and extrapolates the maximal parameter from 1/|v| along the tail.
"""

import numpy as np

from lorentz_geodesy import catalog
from lorentz_geodesy.integrator import integrate_geodesic, lightlike_reparam, period_crossings

torus = catalog.torus_tau()
sol = integrate_geodesic(torus, [0.0, 0.0], [0.0, -1.0], span=(0.0, 2.0))
print("termination :", sol.termination.value)
print("b_hat       :", sol.b_hat, "(exact 1)")
print("windings    :", sol.winding)

# conserved charge of the Killing field d_y along the trajectory
k = sol.charges["d_y"]
print("charge drift:", np.max(np.abs(k - k[0])))

# Misner's cylinder: the geodesic returns to x = 0 at parameters that
# accumulate at s = 1
misner = catalog.misner_cylinder("xy")
sol = integrate_geodesic(misner, [0.0, 0.0], [0.0, -1.0], span=(0.0, 2.0))
print("Misner returns:", np.round(period_crossings(sol, 0, k_max=6), 6))

# A conformal factor keeps lightlike geodesics as pregeodesics; only the
# parametrization changes.
flat = catalog.minkowski(2, 1)
sol = integrate_geodesic(flat, [0.0, 0.0], [1.0, 1.0], span=(0.0, 3.0))
rep = lightlike_reparam(sol, "exp(2*sin(t+x))")
print("reparametrized end parameter:", rep.s[-1], "residual", rep.extra["residual"])
