"""Saddle search for the penalized functional of an orthogonal-splitting spacetime.

The action is strongly indefinite (unbounded above in the time direction and
below in the spatial one), so critical points are located as roots of the
gradient rather than by descent. The time coordinate uses a sine basis on
top of the affine interpolant, the spatial coordinate piecewise linear
nodes. Every root is post-checked (penalty inert, conserved penalized
energy, Galerkin convergence) and then re-verified as a true geodesic.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares

from ..catalog import SplittingSpec
from ..exceptions import DomainViolation, IntegrationError, ModelError
from .functionals import (discrete_energy, penalty_psi, splitting_model,
                          splitting_penalized_value_grad)
from .optimize import OptimizeStatus, laplacian_preconditioner, lbfgs
from .paths import PathDiscretization, sine_basis
from .results import ConnectednessResult, ConnectionRecord, ConnectStatus, VariationalOptions
from .shooting import geodesic_residual, refine_by_shooting, velocity_guess

__all__ = ["default_eps", "time_frozen_minimizer", "saddle_point", "solve_splitting_saddle"]

CITE_SPLITTING = ("orthogonal splitting connectedness via the penalized action, Galerkin time basis "
                  "sin(l pi s) and saddle geometry over the affine time interpolant")

_MAX_EPS_RETRIES = 3


def default_eps(dt: float) -> float:
    """``1/(4 (dt^2 + 1))``: the straight initializer is then penalty free."""
    return 1.0 / (4.0 * (dt * dt + 1.0))


def time_frozen_minimizer(spec, path: PathDiscretization, eps, opts):
    """Minimize over the spatial nodes with the time coefficients frozen."""
    a = path.time.coeffs.copy()
    k = path.nodes.shape[1]
    nt = len(a)

    def fun(nodes):
        val, g = splitting_penalized_value_grad(spec, path.with_free(np.concatenate([a, nodes])), eps)
        return val, g[nt:]

    out = lbfgs(fun, path.nodes.ravel(), gtol=opts.gtol_per_node * path.N, max_iter=opts.max_iter,
                memory=opts.memory, precond=laplacian_preconditioner(path.N - 1, k, path.h),
                escape_bound=opts.escape_bound * (1.0 + float(np.max(np.abs(path.q)))))
    return path.with_free(np.concatenate([a, out.x])), out


def _fd_jacobian(grad, z):
    n = len(z)
    J = np.empty((n, n))
    for i in range(n):
        hstep = 1e-6 * (1.0 + abs(z[i]))
        e = np.zeros(n)
        e[i] = hstep
        J[:, i] = (grad(z + e) - grad(z - e)) / (2.0 * hstep)
    return 0.5 * (J + J.T)


def saddle_point(spec, path: PathDiscretization, eps, opts):
    """Root of the gradient from ``path``; returns ``(path, grad_norm, message)``."""

    def grad(z):
        return splitting_penalized_value_grad(spec, path.with_free(z), eps)[1]

    def resid(z):
        try:
            return grad(z)
        except DomainViolation:
            return np.full(len(z), 1e6)

    res = least_squares(resid, path.free_vector(), jac=lambda z: _fd_jacobian(grad, z),
                        method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    z = res.x
    # a final Newton step polishes the root to the accuracy of the FD Hessian
    try:
        g = grad(z)
        step = np.linalg.lstsq(_fd_jacobian(grad, z), -g, rcond=None)[0]
        g2 = grad(z + step)
        if np.linalg.norm(g2) < np.linalg.norm(g):
            z = z + step
    except (DomainViolation, np.linalg.LinAlgError):
        pass
    out = path.with_free(z)
    return out, float(np.linalg.norm(grad(z))), res.message


def _energy_spread(spec, path, eps):
    m = splitting_model(spec)
    n2 = path.tprime_norm2()
    _, dpsi = penalty_psi(eps, n2)
    N = path.N
    sm = (np.arange(N) + 0.5) / N
    _, dB = sine_basis(path.time.modes, sm)
    tp = path.dt + path.time.coeffs @ dB
    E = discrete_energy(m, path) - dpsi * tp ** 2
    return float(np.mean(E)), float(np.max(E) - np.min(E))


def _solve_modes(spec, p, q, modes, eps, opts):
    path = PathDiscretization.straight(p, q, N=opts.N, time="galerkin", modes=modes)
    path, out = time_frozen_minimizer(spec, path, eps, opts)
    if out.status is OptimizeStatus.ESCAPE:
        return None, np.inf, "time-frozen minimization escapes: " + out.diagnostic
    prev = None
    m = modes
    last = None
    while True:
        path, gnorm, msg = saddle_point(spec, path, eps, opts)
        val = splitting_penalized_value_grad(spec, path, eps, grad=False)
        last = (path, gnorm, val)
        if prev is not None and abs(val - prev) < opts.mode_tol:
            break
        if 2 * m >= opts.N or (m // modes) >= 2 ** opts.max_mode_doublings:
            break
        prev = val
        m *= 2
        path = path.refine_modes(m)
    path, gnorm, val = last
    return path, gnorm, f"modes={path.time.modes}, value={val:.12g}"


def solve_splitting_saddle(spec: SplittingSpec, p, q, modes: int = None, eps: float = None,
                           opts: VariationalOptions = None) -> ConnectednessResult:
    """Critical point of the penalized action joining ``p = (t_p, x_p)`` and ``q``."""
    opts = opts or VariationalOptions()
    if not isinstance(spec, SplittingSpec):
        spec = getattr(spec, "params", {}).get("spec")
        if not isinstance(spec, SplittingSpec):
            raise ModelError("expected a SplittingSpec or a splitting catalog model")
    p = np.asarray(p, float).reshape(-1)
    q = np.asarray(q, float).reshape(-1)
    n = spec.spatial.dim
    if p.shape != (n + 1,) or q.shape != (n + 1,):
        raise ValueError(f"events must have {n + 1} coordinates (t, x)")
    modes = modes or opts.modes
    dt = float(q[0] - p[0])
    eps = eps or opts.eps or default_eps(dt)
    diag = []
    for _ in range(_MAX_EPS_RETRIES + 1):
        path, gnorm, msg = _solve_modes(spec, p, q, modes, eps, opts)
        if path is None:
            return ConnectednessResult(ConnectStatus.NOT_FOUND, [], msg, CITE_SPLITTING, "splitting-saddle")
        n2 = path.tprime_norm2()
        inert = n2 <= 1.0 / eps
        if inert:
            break
        diag.append(f"penalty active (|t'|^2={n2:.4g} > 1/eps={1 / eps:.4g})")
        eps *= 0.25
    else:
        return ConnectednessResult(ConnectStatus.NOT_FOUND, [], "; ".join(diag) + "; giving up",
                                   CITE_SPLITTING, "splitting-saddle")
    value = splitting_penalized_value_grad(spec, path, eps, grad=False)
    E_mean, E_spread = _energy_spread(spec, path, eps)
    rec = ConnectionRecord(path=path, action=value, grad_norm=gnorm, discrete_action=value)
    rec.extra.update({"eps": eps, "tprime_norm2": n2, "penalty_inert": bool(inert),
                      "modes": path.time.modes, "energy": E_mean, "energy_spread": E_spread})
    if gnorm > opts.saddle_gtol:
        return ConnectednessResult(ConnectStatus.NOT_FOUND, [rec],
                                   f"gradient residual stagnates at {gnorm:.3g} ({msg})",
                                   CITE_SPLITTING, "splitting-saddle")
    if not opts.shoot:
        return ConnectednessResult(ConnectStatus.FOUND, [rec], msg, CITE_SPLITTING, "splitting-saddle")
    m = splitting_model(spec)
    try:
        v, _ = refine_by_shooting(m, p, q, velocity_guess(path.full_nodes()), rtol=opts.shoot_rtol)
        sol, residual, err = geodesic_residual(m, p, v, q)
    except (IntegrationError, DomainViolation) as exc:
        return ConnectednessResult(ConnectStatus.NOT_FOUND, [rec],
                                   f"critical point did not refine to a geodesic: {exc}",
                                   CITE_SPLITTING, "splitting-saddle")
    rec.geodesic = sol
    rec.initial_velocity = v
    rec.residual = residual
    rec.endpoint_error = err
    rec.action = float(v @ m.g(p) @ v)
    rec.q = float(sol.g_vv[0])
    rec.extra["q_drift"] = float(np.max(np.abs(sol.g_vv - sol.g_vv[0])))
    status = ConnectStatus.FOUND if residual <= opts.residual_tol else ConnectStatus.NOT_FOUND
    return ConnectednessResult(status, [rec], msg, CITE_SPLITTING, "splitting-saddle")
