"""Reduced geodesic equation of a stationary spacetime.

In -beta dt^2 + 2 <delta, dx> dt + g_R the Killing charge
C = -beta t' + <delta, x'> is constant, so the spatial motion obeys a
second order equation in x alone and t is recovered by a quadrature.
The reduced motion is compared with the full four-dimensional geodesic.
"""

import numpy as np

from lorentz_geodesy import catalog
from lorentz_geodesy.integrator import integrate_geodesic
from lorentz_geodesy.variational import charges, integrate_reduced

spec = catalog.StationarySpec(catalog.euclidean(2), "1+0.2*x1^2", ("-0.3*x2", "0.3*x1"))
m = catalog.stationary(spec)

p = np.array([0.0, 0.1, 0.2])
v = np.array([1.0, 0.3, -0.4])
C, q = charges(spec, v[0], p[1:], v[1:])
print(f"C = {C:.6f}, g(v, v) = {q:.6f}")

s = np.linspace(0, 2, 9)
full = integrate_geodesic(m, p, v, span=(0.0, 2.0), rtol=1e-12)
red = integrate_reduced(spec, C, p[1:], v[1:], t0=p[0], span=2.0, samples=s)
ref = full.dense(s)[:, :3]
print("max |x_reduced - x_full| :", np.max(np.abs(red.x - ref[:, 1:])))
print("max |t_reduced - t_full| :", np.max(np.abs(red.t - ref[:, 0])))
print("charge residual          :", red.charge_residual(spec))
