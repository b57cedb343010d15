"""Connection of two events in a static spacetime by minimizing the reduced functional."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

from ..catalog import StationarySpec, stationary
from ..exceptions import DomainViolation, IntegrationError, ModelError
from ..geometry import SpacetimeModel
from .functionals import (action_gradient, reconstruct_time, static_J_value_grad,
                          stationary_J1_value_grad)
from .optimize import OptimizeStatus, laplacian_preconditioner, lbfgs
from .paths import NodalTime, PathDiscretization
from .results import ConnectednessResult, ConnectionRecord, ConnectStatus, VariationalOptions
from .shooting import geodesic_residual, refine_by_shooting, velocity_guess

__all__ = ["as_stationary_spec", "stationary_model", "minimize_reduced", "minimize_connect_static",
           "multistart_windings", "verify_connection"]

CITE_STATIC = ("static connectedness via the reduced Riemannian functional "
               "(quadratic growth of beta, complete spatial factor)")
CITE_WINDINGS = "infinitely many spacelike geodesics with diverging lengths on non-simply-connected factors"


def as_stationary_spec(obj) -> StationarySpec:
    if isinstance(obj, StationarySpec):
        return obj
    if isinstance(obj, SpacetimeModel) and isinstance(obj.params.get("spec"), StationarySpec):
        return obj.params["spec"]
    raise ModelError("expected a StationarySpec or a static/stationary catalog model")


@lru_cache(maxsize=64)
def stationary_model(spec: StationarySpec) -> SpacetimeModel:
    return stationary(spec)


def _endpoints(spec, p, q):
    p = np.asarray(p, float).reshape(-1)
    q = np.asarray(q, float).reshape(-1)
    n = spec.spatial.dim
    if p.shape != (n + 1,) or q.shape != (n + 1,):
        raise ValueError(f"events must have {n + 1} coordinates (t, x)")
    for z in (p, q):
        if not spec.spatial.in_domain(z[1:]):
            raise DomainViolation(f"event {z} lies outside the domain")
    return p, q


def minimize_reduced(spec: StationarySpec, p, q, opts: VariationalOptions, lift=None, init=None):
    """Minimize the static (or stationary) reduced functional over spatial nodes.

    Returns ``(spatial_path, outcome)``.
    """
    dt = float(q[0] - p[0])
    xq = q[1:] if lift is None else np.asarray(lift, float)
    path = PathDiscretization.straight(p[1:], xq, N=opts.N)
    if init is not None:
        path = path.with_nodes(init)
    k = path.nodes.shape[1]
    reduced = static_J_value_grad if spec.is_static else stationary_J1_value_grad

    def fun(vec):
        val, g = reduced(spec, path.with_free(vec), dt)
        return val, g.ravel()

    v0, _ = fun(path.free_vector())
    scale = 1.0 + max(float(np.max(np.abs(p))), float(np.max(np.abs(xq))))
    out = lbfgs(fun, path.free_vector(), gtol=opts.gtol_per_node * opts.N, max_iter=opts.max_iter,
                memory=opts.memory,
                precond=laplacian_preconditioner(opts.N - 1, k, path.h),
                escape_bound=opts.escape_bound * scale,
                value_floor=-opts.escape_value * (1.0 + abs(v0) + dt * dt))
    return path.with_free(out.x), out


def verify_connection(m: SpacetimeModel, p, q, full_nodes, opts: VariationalOptions):
    """Shoot from the discrete critical point and re-integrate. Returns a dict of findings."""
    v0 = velocity_guess(full_nodes)
    v, _ = refine_by_shooting(m, p, q, v0, rtol=opts.shoot_rtol)
    sol, residual, err = geodesic_residual(m, p, v, q)
    found = {"velocity": v, "solution": sol, "residual": residual, "endpoint_error": err,
             "q": float(sol.g_vv[0]), "action": float(v @ m.g(p) @ v)}
    if "d_t" in sol.charges:
        found["C_gamma"] = float(sol.charges["d_t"][0])
        found["C_drift"] = float(np.max(np.abs(sol.charges["d_t"] - sol.charges["d_t"][0])))
    found["q_drift"] = float(np.max(np.abs(sol.g_vv - sol.g_vv[0])))
    return found


def _solve_one(spec, p, q, opts, lift=None, winding=None):
    """Minimize, reconstruct time, verify. Returns ``(status, record or None, diagnostic)``."""
    try:
        xpath, out = minimize_reduced(spec, p, q, opts, lift)
    except DomainViolation as exc:
        return ConnectStatus.NOT_FOUND, None, f"initial path is not admissible: {exc}"
    if out.status is OptimizeStatus.ESCAPE:
        return ConnectStatus.NOT_FOUND, None, out.diagnostic + f" after {out.iterations} iterations"
    t = reconstruct_time(spec, xpath, t_p=p[0], dt=q[0] - p[0])
    qq = np.concatenate([[q[0]], xpath.q])
    full = PathDiscretization(p, qq, xpath.nodes, NodalTime(t[1:-1]))
    m = stationary_model(spec)
    rec = ConnectionRecord(path=full, action=out.f, grad_norm=out.gnorm, winding=winding,
                           discrete_action=out.f)
    rec.extra["iterations"] = out.iterations
    try:
        rec.extra["full_grad_norm"] = float(np.linalg.norm(action_gradient(m, full)))
    except DomainViolation:
        pass
    if out.status is not OptimizeStatus.CONVERGED:
        status = ConnectStatus.MAX_ITERATIONS if out.status is OptimizeStatus.MAX_ITER else ConnectStatus.NOT_FOUND
        return status, rec, out.diagnostic or "optimizer stopped before convergence"
    if not opts.shoot:
        return ConnectStatus.FOUND, rec, "discrete critical point (shooting refinement disabled)"
    try:
        found = verify_connection(m, p, qq, full.full_nodes(), opts)
    except (IntegrationError, DomainViolation) as exc:
        return ConnectStatus.NOT_FOUND, rec, f"discrete minimizer did not refine to a geodesic: {exc}"
    rec.geodesic = found["solution"]
    rec.initial_velocity = found["velocity"]
    rec.residual = found["residual"]
    rec.endpoint_error = found["endpoint_error"]
    rec.action = found["action"]
    rec.q = found["q"]
    rec.C_gamma = found.get("C_gamma")
    rec.extra["q_drift"] = found["q_drift"]
    if "C_drift" in found:
        rec.extra["C_drift"] = found["C_drift"]
    if rec.residual > opts.residual_tol:
        return ConnectStatus.NOT_FOUND, rec, f"refined geodesic residual {rec.residual:.3g} above tolerance"
    return ConnectStatus.FOUND, rec, ""


def minimize_connect_static(spec, p, q, opts: VariationalOptions = None) -> ConnectednessResult:
    """Join events ``p = (t_p, x_p)`` and ``q`` in a static (or stationary) spacetime.

    The reduced functional is minimized over spatial curves by the
    limited-memory quasi-Newton method, time is reconstructed, and the
    result is refined and verified by shooting on the full geodesic
    equation. Escaping minimizing sequences yield ``NotFound``.
    """
    opts = opts or VariationalOptions()
    spec = as_stationary_spec(spec)
    p, q = _endpoints(spec, p, q)
    status, rec, diag = _solve_one(spec, p, q, opts)
    method = "static-reduction" if spec.is_static else "stationary-reduction"
    return ConnectednessResult(status, [rec] if rec is not None and status is not ConnectStatus.NOT_FOUND else [],
                               diag, CITE_STATIC, method,
                               extra={} if rec is None or status is not ConnectStatus.NOT_FOUND
                               else {"candidate_action": float(rec.discrete_action)})


def _windings(rank, K):
    ks = [k for k in itertools.product(range(-K, K + 1), repeat=rank) if max(map(abs, k), default=0) <= K]
    return sorted(ks, key=lambda k: (sum(a * a for a in k), k))


def _same(a: ConnectionRecord, b: ConnectionRecord, opts):
    if abs(a.action - b.action) > opts.dedup_action:
        return False
    if a.initial_velocity is None or b.initial_velocity is None:
        return a.winding == b.winding
    return float(np.max(np.abs(a.initial_velocity - b.initial_velocity))) <= opts.dedup_velocity


def multistart_windings(spec, p, q, K_max: int = 2, opts: VariationalOptions = None) -> ConnectednessResult:
    """One minimization per winding class ``|k| <= K_max`` of the spatial lattice.

    Starts are independent and may run on several threads
    (``LORENTZ_GEODESY_THREADS``); the result is sorted by action and then
    winding label, so it does not depend on completion order.
    """
    opts = opts or VariationalOptions()
    spec = as_stationary_spec(spec)
    quo = spec.spatial.quotient
    if quo is None or not quo.is_lattice:
        raise ModelError("winding multistart needs a spatial factor with a translation lattice")
    p, q = _endpoints(spec, p, q)
    periods = quo.periods
    classes = _windings(len(periods), int(K_max))

    def run(k):
        lift = q[1:] + np.asarray(k, float) @ periods
        return k, _solve_one(spec, p, q, opts, lift=lift, winding=tuple(k))

    workers = min(opts.worker_count(), len(classes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, classes))
    else:
        results = [run(k) for k in classes]
    records, failures = [], []
    for k, (status, rec, diag) in results:
        if status is ConnectStatus.FOUND:
            records.append(rec)
        else:
            failures.append(f"k={list(k)}: {diag or status.value}")
    records.sort(key=lambda r: (r.action, r.winding))
    unique = []
    for r in records:
        if not any(_same(r, u, opts) for u in unique):
            unique.append(r)
    status = ConnectStatus.FOUND if unique else ConnectStatus.NOT_FOUND
    return ConnectednessResult(status, unique, "; ".join(failures), CITE_WINDINGS, "winding-multistart",
                               extra={"classes": len(classes), "distinct": len(unique)})
