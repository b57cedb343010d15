"""Single shooting on the full geodesic equation.

Discrete critical points are only O(h^2) accurate. They are used as
initial guesses for a root solve in the initial velocity, after which the
geodesic is re-integrated independently to measure its residual.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from ..exceptions import DomainViolation, ExprDomainError, IntegrationError
from ..geometry import SpacetimeModel
from ..integrator import GeodesicSolution, integrate_geodesic

__all__ = ["velocity_guess", "shoot", "refine_by_shooting", "geodesic_residual"]


class _Leave(Exception):
    pass


def _rhs(m: SpacetimeModel):
    n = m.dim

    def f(s, y):
        x, w = y[:n], y[n:]
        if not m.in_domain(x):
            raise _Leave(x)
        try:
            G = m.gamma(x)
        except (ExprDomainError, np.linalg.LinAlgError) as exc:
            raise _Leave(x) from exc
        return np.concatenate([w, -np.einsum("kij,i,j->k", G, w, w)])

    return f


def shoot(m: SpacetimeModel, p, v, rtol=1e-12, dense=False, span=1.0):
    """Integrate ``(p, v)`` over ``[0, span]`` with DOP853; ``None`` if the curve leaves the chart."""
    y0 = np.concatenate([np.asarray(p, float), np.asarray(v, float)])
    try:
        sol = solve_ivp(_rhs(m), (0.0, span), y0, method="DOP853", rtol=rtol,
                        atol=rtol * 1e-2, dense_output=dense)
    except _Leave:
        return None
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        return None
    return sol


def velocity_guess(nodes: np.ndarray) -> np.ndarray:
    """One-sided second-order derivative at ``s = 0`` of nodes on ``s_i = i/N``."""
    N = nodes.shape[0] - 1
    return N * (-1.5 * nodes[0] + 2.0 * nodes[1] - 0.5 * nodes[2])


def refine_by_shooting(m: SpacetimeModel, p, q, v_guess, rtol=1e-12, xtol=1e-13):
    """Solve ``exp_p(v) = q`` for ``v`` near ``v_guess``.

    Returns ``(v, endpoint_error)``; raises :class:`IntegrationError` when
    the root solve fails.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    n = m.dim
    penalty = 1e3 * (1.0 + np.abs(q))

    def F(v):
        sol = shoot(m, p, v, rtol)
        if sol is None:
            return penalty
        return sol.y[:n, -1] - q

    res = root(F, np.asarray(v_guess, float), method="hybr", options={"xtol": xtol})
    v = res.x
    err = float(np.max(np.abs(F(v))))
    if not np.isfinite(err) or err > 1e-6 * (1.0 + float(np.max(np.abs(q)))):
        raise IntegrationError(f"shooting did not converge (endpoint error {err:.3g}): {res.message}")
    return v, err


def geodesic_residual(m: SpacetimeModel, p, v, q=None, rtol=1e-11):
    """Integrate ``(p, v)`` over ``[0, 1]`` and measure how well it solves the geodesic equation.

    The reported trajectory is the library integrator at ``rtol``; the
    residual is its sup-norm distance (positions and velocities, scaled by
    ``1 + |.|``) from an independent DOP853 solution at a much tighter
    tolerance. Returns ``(solution, residual, endpoint_error)``.
    """
    sol: GeodesicSolution = integrate_geodesic(m, p, v, span=(0.0, 1.0), rtol=rtol, atol=rtol * 1e-2)
    if sol.termination.value != "ReachedSpan":
        raise IntegrationError(f"verification integration ended with {sol.termination.value}: {sol.message}")
    ref = shoot(m, p, v, rtol=min(rtol * 1e-2, 1e-13), dense=True)
    if ref is None:
        raise IntegrationError("reference integration left the chart")
    n = m.dim
    yref = ref.sol(sol.s).T
    y = np.hstack([sol.x, sol.v])
    scale = 1.0 + np.max(np.abs(yref), axis=0)
    residual = float(np.max(np.abs(y - yref) / scale))
    err = None if q is None else float(np.max(np.abs(sol.x[-1] - np.asarray(q, float))))
    if err is not None:
        residual = max(residual, err / (1.0 + float(np.max(np.abs(q)))))
    return sol, residual, err
