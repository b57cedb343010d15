"""Integral completeness criteria.

For a generalized Robertson-Walker spacetime -dt^2 + f(t)^2 g_F the causal
completeness of each time direction reduces to improper integrals of f.
Warped products over a Riemannian base reduce to integrals of the radial
profile of f. Killing fields give certificates on compact manifolds.
"""

from lorentz_geodesy import catalog
from lorentz_geodesy.completeness import (classify_grw, classify_warped_radial,
                                          improper_integral_verdict, killing_certificate)

for f in ("1", "cosh(t)", "exp(t)"):
    v = classify_grw(f)
    print(f"GRW f={f:8s} timelike={v.timelike.value:12s} lightlike={v.lightlike.value:12s} "
          f"spacelike={v.spacelike.value}")

v = classify_grw("exp(t)")
for ev in v.evidence:
    print("   ", ev["criterion"], ev["values"].get("classification"), ev["values"].get("value"))

# the basic verdict on its own
print(improper_integral_verdict("1/r^2", float("inf"), start=1.0).message)

for f in ("1+x^2", "exp(-x^2)"):
    v = classify_warped_radial(catalog.euclidean(1), f)
    print(f"warped f={f:10s} ->", v.timelike.value, v.lightlike.value, v.spacelike.value)

print("flat torus:", killing_certificate(catalog.flat_torus((1.0, 2.0), index=1)).status)
print("tau torus :", killing_certificate(catalog.torus_tau()).reason)
