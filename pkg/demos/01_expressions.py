"""Metric coefficients as expressions.

Every coefficient a user supplies (tau, f, beta, delta, Omega, ...) is a
string in a small infix language. This script parses one, differentiates
it symbolically and checks the derivative against finite differences.
"""

import numpy as np

from lorentz_geodesy import exprlang as el

# a tau function for the incomplete torus family
tau = el.parse("-sin(2*pi*x)/pi")
print("tau        =", el.to_source(tau))
dtau = el.diff(tau, "x")
print("d tau / dx =", el.to_source(dtau))

# symbolic vs central difference at a few points
h = 1e-5
for x in (0.0, 0.1, 0.37):
    exact = el.evaluate(dtau, x=x)
    fd = (el.evaluate(tau, x=x + h) - el.evaluate(tau, x=x - h)) / (2 * h)
    print(f"x={x:4.2f}  symbolic {exact: .10f}  fd {fd: .10f}")

# compiled evaluation over a grid, as used by the integrator
f = el.compile_vector([tau, dtau], ["x"])
grid = np.linspace(0, 1, 5)
print(f(grid))

# domain errors are reported, not silently turned into nan
try:
    el.evaluate("ln(x)", x=-1.0)
except el.ExprDomainError as exc:
    print("domain error:", exc)
