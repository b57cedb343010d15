"""Reduced geodesic equation of a stationary spacetime and a shooting solver built on it.

With ``d_t`` Killing, the charge ``C = <gamma', d_t>`` is constant and the
time derivative is determined by the spatial motion,
``t' = (<delta, x'>_R - C)/beta``. The spatial part then solves a second
order equation on ``M0`` alone.

Conventions (the symbols are used without definition in the literature
this follows): with ``<nabla_X delta, Y> = Y^T M X``,
``rot delta(X, Y) = <nabla_X delta, Y> - <nabla_Y delta, X>`` and
``Sym nabla delta(X, Y) = (<nabla_X delta, Y> + <nabla_Y delta, X>)/2``.
The halving of the symmetric part is what makes the reduced equation agree
with the full geodesic equation; see the equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from ..catalog import StationarySpec
from ..exceptions import DegenerateMetricError, DomainViolation, ExprDomainError, IntegrationError
from .functionals import _fields, stationary_time_constant
from .results import ConnectednessResult, ConnectionRecord, ConnectStatus, VariationalOptions
from .shooting import geodesic_residual, velocity_guess
from .static import _endpoints, as_stationary_spec, minimize_reduced, stationary_model

__all__ = ["StationaryReducedState", "reduction_terms", "stationary_reduced_rhs",
           "integrate_reduced", "stationary_connect_shooting", "charges"]

CITE_STATIONARY = ("stationary reduction: conserved Killing charge C = <gamma', d_t> and "
                   "reduced spatial equation; connectedness under quadratic beta and at most linear delta")

_LAMBDA_FLOOR = 1e-12


@dataclass
class StationaryReducedState:
    """Reduced motion ``x(s)`` with its charge and reconstructed time."""

    C_gamma: float
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    t: np.ndarray

    def charge_residual(self, spec):
        """Max deviation of ``-beta t' + <delta, x'>`` from ``C`` along the samples."""
        F = _fields(as_stationary_spec(spec))
        b = F.beta_at(self.x)
        w = np.einsum("pi,pi->p", F.flat_at(self.x), self.v)
        tp = (w - self.C_gamma) / b
        return float(np.max(np.abs(-b * tp + w - self.C_gamma)))


def reduction_terms(spec: StationarySpec, x, xp):
    """``(Lambda, R0, R1(x'), R2(x', x'))`` at ``x`` for velocity ``xp``."""
    spec = as_stationary_spec(spec)
    F = _fields(spec)
    sp = spec.spatial
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    n = sp.dim
    g = sp.g(x)
    ginv = np.linalg.inv(g)
    Gam = sp.gamma(x)
    beta = float(F.beta(*x)[0])
    dbeta = F.dbeta(*x).reshape(n)
    delta = F.delta(*x).reshape(n)
    # ddelta[k, i] = d delta^i / d x^k ; (nabla delta)^i_j = d_j delta^i + Gamma^i_jk delta^k
    dd = F.ddelta(*x).reshape(n, n)
    nab = dd.T + np.einsum("ijk,k->ij", Gam, delta)
    M = g @ nab
    den = beta + float(delta @ g @ delta)
    if abs(den) < _LAMBDA_FLOOR:
        raise DegenerateMetricError("beta + |delta|^2 vanishes; the reduction is singular")
    lam = -1.0 / den
    grad_beta = ginv @ dbeta
    R0 = -0.5 * (lam * float(delta @ dbeta) * delta + grad_beta)
    rot_xp_delta = float(delta @ M @ xp - xp @ M @ delta)
    rot_sharp = ginv @ ((M.T - M) @ xp)
    R1 = -lam * (float(dbeta @ xp) + rot_xp_delta) * delta + rot_sharp
    sym = float(xp @ M @ xp)      # halved symmetric part evaluated on (x', x')
    R2 = lam * sym * delta
    return lam, R0, R1, R2


def stationary_reduced_rhs(spec, C_gamma: float, x, xp) -> np.ndarray:
    """Spatial acceleration ``x''`` of the geodesic with Killing charge ``C_gamma``."""
    spec = as_stationary_spec(spec)
    F = _fields(spec)
    sp = spec.spatial
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    _, R0, R1, R2 = reduction_terms(spec, x, xp)
    beta = float(F.beta(*x)[0])
    if not beta > 0:
        raise DomainViolation(f"beta is not positive at {x}")
    w = float(F.flat(*x).reshape(-1) @ xp)
    C = float(C_gamma)
    Rbar0 = (C / beta) ** 2 * R0
    Rbar1 = -(C / beta) * (2.0 * w / beta * R0 + R1)
    Rbar2 = (w / beta) ** 2 * R0 + (w / beta) * R1 + R2
    Gam = sp.gamma(x)
    return -np.einsum("kij,i,j->k", Gam, xp, xp) + Rbar0 + Rbar1 + Rbar2


class _Leave(Exception):
    pass


def _reduced_system(spec, C):
    F = _fields(spec)
    sp = spec.spatial
    n = sp.dim

    def f(s, y):
        x, xp = y[:n], y[n:2 * n]
        if not sp.in_domain(x):
            raise _Leave(x)
        try:
            acc = stationary_reduced_rhs(spec, C, x, xp)
            beta = float(F.beta(*x)[0])
            w = float(F.flat(*x).reshape(-1) @ xp)
        except (ExprDomainError, DomainViolation, DegenerateMetricError, np.linalg.LinAlgError) as exc:
            raise _Leave(x) from exc
        return np.concatenate([xp, acc, [(w - C) / beta]])

    return f


def integrate_reduced(spec, C_gamma, x0, v0, t0=0.0, span=1.0, rtol=1e-12, dense=False, samples=None):
    """Integrate the reduced equation together with ``t' = (<delta, x'> - C)/beta``.

    Returns a :class:`StationaryReducedState` (or ``(state, ode_solution)``
    when ``dense``); raises :class:`IntegrationError` if the motion leaves
    the spatial domain.
    """
    spec = as_stationary_spec(spec)
    n = spec.spatial.dim
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float), [float(t0)]])
    try:
        sol = solve_ivp(_reduced_system(spec, float(C_gamma)), (0.0, span), y0, method="DOP853",
                        rtol=rtol, atol=rtol * 1e-2, dense_output=dense or samples is not None)
    except _Leave as exc:
        raise IntegrationError(f"reduced motion leaves the spatial domain near {exc.args[0]}") from None
    if sol.status != 0:
        raise IntegrationError(f"reduced integration failed: {sol.message}")
    if samples is not None:
        s = np.asarray(samples, float)
        Y = sol.sol(s).T
    else:
        s, Y = sol.t, sol.y.T
    state = StationaryReducedState(float(C_gamma), s, Y[:, :n], Y[:, n:2 * n], Y[:, 2 * n])
    return (state, sol) if dense else state


def charges(spec, t_prime, x, xp):
    """``(C, q)`` of the spacetime velocity ``(t', x')`` at spatial point ``x``."""
    spec = as_stationary_spec(spec)
    F = _fields(spec)
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    beta = float(F.beta(*x)[0])
    w = float(F.flat(*x).reshape(-1) @ xp)
    qv = -beta * t_prime ** 2 + 2.0 * w * t_prime + float(xp @ spec.spatial.g(x) @ xp)
    return -beta * t_prime + w, qv


def _initial_guesses(spec, p, q, opts):
    """Unknowns ``(C, x'(0))``: from the reduced minimizer when it converges, plus straight starts."""
    F = _fields(spec)
    n = spec.spatial.dim
    guesses = []
    dt = float(q[0] - p[0])
    try:
        xpath, out = minimize_reduced(spec, p, q, opts)
        if out.status.value == "converged":
            C = stationary_time_constant(spec, xpath, dt)
            guesses.append(np.concatenate([[C], velocity_guess(xpath.spatial_nodes())]))
    except DomainViolation:
        pass
    dx = q[1:] - p[1:]
    beta = float(F.beta(*p[1:])[0])
    w = float(F.flat(*p[1:]).reshape(-1) @ dx)
    base = np.concatenate([[-beta * dt + w], dx])
    guesses.append(base)
    rng = np.random.default_rng(opts.seed)
    for _ in range(3):
        guesses.append(base + rng.normal(scale=0.25, size=n + 1) * (1.0 + np.abs(base)))
    return guesses


def stationary_connect_shooting(spec, p, q, opts: VariationalOptions = None) -> ConnectednessResult:
    """Join events by Newton shooting on ``(C, x'(0))`` for the reduced equation.

    The endpoint map integrates the reduced spatial equation together with
    the time reconstruction and is matched to ``(t_q, x_q)``. Each root is
    re-verified on the full spacetime geodesic equation, and conserved
    quantities are reported along the verified geodesic.
    """
    opts = opts or VariationalOptions()
    spec = as_stationary_spec(spec)
    p, q = _endpoints(spec, p, q)
    n = spec.spatial.dim
    big = 1e3 * (1.0 + np.abs(q))

    def endpoint_map(u):
        try:
            st = integrate_reduced(spec, u[0], p[1:], u[1:], t0=p[0], rtol=opts.shoot_rtol)
        except IntegrationError:
            return big
        return np.concatenate([[st.t[-1]], st.x[-1]]) - q

    m = stationary_model(spec)
    F = _fields(spec)
    records, notes = [], []
    best = np.inf
    for u0 in _initial_guesses(spec, p, q, opts):
        sol = root(endpoint_map, u0, method="hybr", options={"xtol": 1e-13})
        res = endpoint_map(sol.x)
        err = float(np.max(np.abs(res)))
        best = min(best, err)
        if not err <= 1e-6 * (1.0 + float(np.max(np.abs(q)))):
            notes.append(f"start {np.round(u0, 4).tolist()}: endpoint error {err:.3g}")
            continue
        C, xp0 = float(sol.x[0]), sol.x[1:]
        beta0 = float(F.beta(*p[1:])[0])
        tp0 = (float(F.flat(*p[1:]).reshape(-1) @ xp0) - C) / beta0
        v = np.concatenate([[tp0], xp0])
        try:
            gsol, residual, eerr = geodesic_residual(m, p, v, q)
        except (IntegrationError, DomainViolation) as exc:
            notes.append(f"verification failed: {exc}")
            continue
        rec = ConnectionRecord(path=None, action=float(v @ m.g(p) @ v), grad_norm=float(np.max(np.abs(res))),
                               residual=residual, endpoint_error=eerr, C_gamma=C, q=float(gsol.g_vv[0]),
                               initial_velocity=v, geodesic=gsol)
        rec.extra["C_drift"] = float(np.max(np.abs(gsol.charges["d_t"] - C)))
        rec.extra["q_drift"] = float(np.max(np.abs(gsol.g_vv - gsol.g_vv[0])))
        if residual <= opts.residual_tol and not any(
                abs(r.action - rec.action) <= opts.dedup_action
                and np.max(np.abs(r.initial_velocity - v)) <= opts.dedup_velocity for r in records):
            records.append(rec)
    records.sort(key=lambda r: r.action)
    if records:
        return ConnectednessResult(ConnectStatus.FOUND, records, "", CITE_STATIONARY, "stationary-shooting")
    return ConnectednessResult(ConnectStatus.NOT_FOUND, [],
                               f"shooting did not converge (best endpoint error {best:.3g}); " + "; ".join(notes),
                               CITE_STATIONARY, "stationary-shooting", extra={"best_residual": float(best)})
