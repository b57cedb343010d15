"""Penalized saddle search for an orthogonal splitting metric.

With -beta(t, x) dt^2 + alpha(t, x) dx^2 the action is neither bounded
above nor below. The time component is expanded in sine modes and a
penalty cuts off large |t'|. A critical point is located, and afterwards
the penalty is checked to be inactive so it is also critical for the
original action.
"""

from lorentz_geodesy import catalog
from lorentz_geodesy.variational import VariationalOptions, solve_splitting_saddle

spec = catalog.SplittingSpec(catalog.euclidean(1), "1", "1+0.1*sin(t)", nu=1.0, N=1.0, lam=0.9)
res = solve_splitting_saddle(spec, [0.0, 0.0], [0.5, 1.0], opts=VariationalOptions(N=64, modes=8))
rec = res.best
print("status        :", res.status.value)
print("|t'|^2        :", rec.extra["tprime_norm2"], "<= 1/eps =", 1 / rec.extra["eps"])
print("action        :", rec.action)
print("energy spread :", rec.extra["energy_spread"])
print("residual      :", rec.residual)
