"""Joining two events in static spacetimes.

The time coordinate is eliminated in closed form, leaving a Riemannian
functional on spatial curves. Its minimizer is refined by shooting and
verified against the geodesic equation. On a spatial circle each winding
class has its own geodesic. On the anti-de Sitter strip the minimizing
sequence runs into the boundary and no geodesic is reported.
"""

from lorentz_geodesy import catalog
from lorentz_geodesy.variational import (VariationalOptions, growth_check, minimize_connect_static,
                                         multistart_windings)

m = catalog.build("static", beta="1+x^2")
res = minimize_connect_static(m, [0.0, 0.0], [1.0, 1.0])
rec = res.best
print(res.status.value, "action", rec.action, "residual", rec.residual)
print("growth hypotheses:", growth_check(m).hypotheses_hold)

cyl = catalog.build("static", beta="1", period="1")
res = multistart_windings(cyl, [0.0, 0.3], [0.5, 0.3], K_max=2, opts=VariationalOptions(N=32))
for r in res.records:
    print(f"winding {r.winding[0]:+d}  action {r.action: .12f}")

ads = catalog.anti_de_sitter_strip()
res = minimize_connect_static(ads, [0.0, 0.0], [10.0, 1.2])
print(res.status.value, "-", res.diagnostic)
print("growth hypotheses on the strip:", growth_check(ads).hypotheses_hold)
