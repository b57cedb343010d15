"""Which pairs of de Sitter points are joined by a geodesic?

On S^2_1 = {-x0^2 + x1^2 + x2^2 = 1} the answer is closed form: q is
reachable from p exactly when <p, q>_1 > -1. The acceptance tests compare
this against a sweep of explicit geodesics.
"""

import numpy as np

from lorentz_geodesy import catalog

rng = np.random.default_rng(0)
hits = 0
for _ in range(10):
    t, th = rng.uniform(-1.5, 1.5), rng.uniform(0, 2 * np.pi)
    p = catalog.pseudosphere_chart_to_ambient(0.0, 0.0)
    q = catalog.pseudosphere_chart_to_ambient(t, th)
    ok = catalog.pseudosphere_connectable(p, q)
    hits += ok
    print(f"<p,q> = {catalog.pseudosphere_inner(p, q): .4f}  connectable: {ok}")
print(hits, "of 10 reachable")
