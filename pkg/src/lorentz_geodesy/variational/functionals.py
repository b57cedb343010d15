"""Discrete action functionals and their analytic gradients.

All integrals use the composite midpoint rule on the path grid. Spatial
coordinates are piecewise linear, so their derivative on a segment is the
exact difference quotient; a Galerkin time coordinate is evaluated at the
segment midpoints together with its exact derivative.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import exprlang as el
from ..catalog import SplittingSpec, StationarySpec, splitting
from ..exceptions import DomainViolation, ExprDomainError, ModelError
from ..geometry import SpacetimeModel
from .paths import GalerkinTime, NodalTime, PathDiscretization, sine_basis

__all__ = [
    "action_value", "action_gradient", "action_value_grad", "static_J_value_grad",
    "reconstruct_time", "stationary_J1_value", "stationary_J1_value_grad",
    "stationary_time_constant", "penalty_psi", "splitting_penalized_value_grad",
    "splitting_model", "discrete_energy",
]


# -- generic action -------------------------------------------------------------------

def _check_nodes(m: SpacetimeModel, pts, what="node"):
    if m.domain is None and np.all(np.isfinite(pts)):
        return
    for z in pts:
        if not m.in_domain(z):
            raise DomainViolation(f"path {what} {z} lies outside the domain of {m.name}")


def _segments(path: PathDiscretization):
    """Midpoints ``zm`` and derivatives ``d`` of the chart curve, shape (N, dim)."""
    N, h = path.N, path.h
    x = path.spatial_nodes()
    xm = 0.5 * (x[1:] + x[:-1])
    dx = np.diff(x, axis=0) / h
    if path.time is None:
        return xm, dx, None
    if isinstance(path.time, GalerkinTime):
        sm = (np.arange(N) + 0.5) / N
        B, dB = sine_basis(path.time.modes, sm)
        a = path.time.coeffs
        tm = path.p[0] + sm * path.dt + a @ B
        dtm = path.dt + a @ dB
        basis = (B, dB)
    else:
        t = path.time_nodes()
        tm = 0.5 * (t[1:] + t[:-1])
        dtm = np.diff(t) / h
        basis = None
    return np.column_stack([tm, xm]), np.column_stack([dtm, dx]), basis


def _node_gradient(Gm, Gd, h):
    """Chain segment sensitivities onto the interior nodes of a linear curve."""
    return 0.5 * (Gm[:-1] + Gm[1:]) + (Gd[:-1] - Gd[1:]) / h


def action_value_grad(m: SpacetimeModel, path: PathDiscretization, grad=True):
    """Discrete ``int g(z')[z', z'] ds`` and its gradient over ``path.free_vector()``."""
    zm, d, basis = _segments(path)
    if zm.shape[1] != m.dim:
        raise ValueError(f"path dimension {zm.shape[1]} does not match model dimension {m.dim}")
    _check_nodes(m, path.full_nodes())
    _check_nodes(m, zm, "midpoint")
    h = path.h
    try:
        G = m.g_batch(zm)
        val = h * float(np.einsum("pi,pij,pj->", d, G, d))
        if not grad:
            return val
        dG = m.dg_batch(zm)
    except ExprDomainError as exc:
        raise DomainViolation(f"metric cannot be evaluated along the path: {exc}") from exc
    Gm = h * np.einsum("pi,pkij,pj->pk", d, dG, d)
    Gd = 2.0 * h * np.einsum("pij,pj->pi", G, d)
    off = 0 if path.time is None else 1
    g_nodes = _node_gradient(Gm[:, off:], Gd[:, off:], h)
    parts = []
    if isinstance(path.time, NodalTime):
        parts.append(_node_gradient(Gm[:, 0], Gd[:, 0], h))
    elif isinstance(path.time, GalerkinTime):
        B, dB = basis
        parts.append(B @ Gm[:, 0] + dB @ Gd[:, 0])
    parts.append(g_nodes.ravel())
    return val, np.concatenate(parts)


def action_value(m: SpacetimeModel, path: PathDiscretization) -> float:
    """Discrete action of ``path`` in the model ``m``."""
    return action_value_grad(m, path, grad=False)


def action_gradient(m: SpacetimeModel, path: PathDiscretization) -> np.ndarray:
    """Gradient of :func:`action_value` over the free coordinates of ``path``."""
    return action_value_grad(m, path)[1]


def discrete_energy(m: SpacetimeModel, path: PathDiscretization) -> np.ndarray:
    """``g(z')[z', z']`` at each segment midpoint."""
    zm, d, _ = _segments(path)
    return np.einsum("pi,pij,pj->p", d, m.g_batch(zm), d)


# -- stationary fields ------------------------------------------------------------------

class _StationaryFields:
    """Compiled ``beta``, ``d beta``, ``delta``, lowered ``delta`` and its Jacobian."""

    def __init__(self, spec: StationarySpec):
        sp = spec.spatial
        c = sp.coords
        n = sp.dim
        self.spec = spec
        self.spatial = sp
        self.beta = el.compile_vector([spec.beta], c)
        self.dbeta = el.compile_vector([el.diff(spec.beta, v) for v in c], c)
        flat = spec.delta_flat()
        self.static = spec.is_static
        self.flat = el.compile_vector(list(flat), c)
        # dflat[k, i] = d (delta_flat)_i / d x^k
        self.dflat = el.compile_vector([el.diff(flat[i], v) for v in c for i in range(n)], c)
        self.delta = el.compile_vector(list(spec.delta), c)
        self.ddelta = el.compile_vector([el.diff(spec.delta[i], v) for v in c for i in range(n)], c)
        self.n = n

    def beta_at(self, pts):
        b = self.beta(*np.atleast_2d(pts).T)[0]
        if np.any(~(b > 0)):
            raise DomainViolation("beta must be positive along the path")
        return b

    def dbeta_at(self, pts):
        return self.dbeta(*np.atleast_2d(pts).T).T

    def flat_at(self, pts):
        return self.flat(*np.atleast_2d(pts).T).T

    def dflat_at(self, pts):
        P = np.atleast_2d(pts).shape[0]
        return self.dflat(*np.atleast_2d(pts).T).T.reshape(P, self.n, self.n)


@lru_cache(maxsize=64)
def _fields(spec: StationarySpec) -> _StationaryFields:
    return _StationaryFields(spec)


def _spatial_segments(spec, path, dt):
    if path.has_time:
        dt = path.dt if dt is None else dt
    elif dt is None:
        raise ValueError("a path without time coordinate needs dt")
    x = path.spatial_nodes()
    if x.shape[1] != spec.spatial.dim:
        raise ValueError("path dimension does not match the spatial factor")
    _check_nodes(spec.spatial, x)
    h = path.h
    xm = 0.5 * (x[1:] + x[:-1])
    _check_nodes(spec.spatial, xm, "midpoint")
    return xm, np.diff(x, axis=0) / h, h, float(dt)


def _riemannian_part(sp, xm, d, h):
    G = sp.g_batch(xm)
    A = h * float(np.einsum("pi,pij,pj->", d, G, d))
    Gm = h * np.einsum("pi,pkij,pj->pk", d, sp.dg_batch(xm), d)
    Gd = 2.0 * h * np.einsum("pij,pj->pi", G, d)
    return A, Gm, Gd


def static_J_value_grad(spec: StationarySpec, path: PathDiscretization, dt=None):
    """Reduced static functional ``int |x'|^2 - dt^2 / int 1/beta`` and its node gradient.

    The gradient has the shape of ``path.nodes``. ``dt`` defaults to the
    time extent of ``path`` when it carries a time coordinate.
    """
    F = _fields(spec)
    if not F.static:
        raise ModelError("static reduction needs delta = 0; use the stationary functional")
    xm, d, h, dt = _spatial_segments(spec, path, dt)
    try:
        A, Gm, Gd = _riemannian_part(spec.spatial, xm, d, h)
        b = F.beta_at(xm)
        db = F.dbeta_at(xm)
    except ExprDomainError as exc:
        raise DomainViolation(str(exc)) from exc
    D = h * float(np.sum(1.0 / b))
    val = A - dt ** 2 / D
    # d(-dt^2/D) = dt^2/D^2 dD,  dD/dm = -h dbeta / beta^2
    Gm = Gm - (dt ** 2 / D ** 2) * h * db / b[:, None] ** 2
    return val, _node_gradient(Gm, Gd, h)


def stationary_time_constant(spec: StationarySpec, path: PathDiscretization, dt=None) -> float:
    """Killing charge ``C`` for which the reconstructed time reaches ``t_p + dt``."""
    F = _fields(spec)
    xm, d, h, dt = _spatial_segments(spec, path, dt)
    b = F.beta_at(xm)
    w = np.einsum("pi,pi->p", F.flat_at(xm), d)
    D = h * np.sum(1.0 / b)
    Cc = h * np.sum(w / b)
    return float((Cc - dt) / D)


def reconstruct_time(spec: StationarySpec, path: PathDiscretization, t_p=None, dt=None, C=None):
    """Nodal time along the spatial nodes of ``path``.

    Static mode (``C`` omitted, ``delta = 0``) distributes ``dt`` in
    proportion to the cumulative integral of ``1/beta``. Otherwise the
    charge relation ``t' = (<delta, x'> - C)/beta`` is integrated with the
    midpoint rule; when ``C`` is omitted it is chosen so that the time
    reaches ``t_p + dt``. Returns ``N+1`` values.
    """
    F = _fields(spec)
    if t_p is None:
        if not path.has_time:
            raise ValueError("t_p is required for a path without time coordinate")
        t_p = path.p[0]
    if dt is None and C is None and not path.has_time:
        raise ValueError("either dt or C is required")
    xm, d, h, dt = _spatial_segments(spec, path, dt if dt is not None else (0.0 if C is not None else None))
    b = F.beta_at(xm)
    if C is None:
        if F.static:
            inv = 1.0 / b
            steps = dt * inv / np.sum(inv)
            return float(t_p) + np.concatenate([[0.0], np.cumsum(steps)])
        C = stationary_time_constant(spec, path, dt)
    w = np.einsum("pi,pi->p", F.flat_at(xm), d)
    return float(t_p) + np.concatenate([[0.0], np.cumsum(h * (w - C) / b)])


def stationary_J1_value_grad(spec: StationarySpec, path: PathDiscretization, dt=None, grad=True):
    """Reduced stationary functional and its node gradient.

    ``J1 = int |x'|^2 + int <delta, x'>^2/beta - (int <delta, x'>/beta - dt)^2 / int 1/beta``.
    """
    F = _fields(spec)
    xm, d, h, dt = _spatial_segments(spec, path, dt)
    try:
        A, Gm, Gd = _riemannian_part(spec.spatial, xm, d, h)
        b = F.beta_at(xm)
        fl = F.flat_at(xm)
        db = F.dbeta_at(xm)
        dfl = F.dflat_at(xm) if grad else None
    except ExprDomainError as exc:
        raise DomainViolation(str(exc)) from exc
    w = np.einsum("pi,pi->p", fl, d)
    B = h * np.sum(w ** 2 / b)
    Cc = h * np.sum(w / b)
    D = h * np.sum(1.0 / b)
    E = Cc - dt
    val = float(A + B - E ** 2 / D)
    if not grad:
        return val
    dw_m = np.einsum("pki,pi->pk", dfl, d)      # d w / d m
    dw_d = fl                                   # d w / d d
    bb = b[:, None]
    wb = w[:, None]
    dB_m = h * (2.0 * wb * dw_m / bb - wb ** 2 * db / bb ** 2)
    dB_d = h * 2.0 * wb * dw_d / bb
    dC_m = h * (dw_m / bb - wb * db / bb ** 2)
    dC_d = h * dw_d / bb
    dD_m = -h * db / bb ** 2
    Gm = Gm + dB_m - (2.0 * E / D) * dC_m + (E ** 2 / D ** 2) * dD_m
    Gd = Gd + dB_d - (2.0 * E / D) * dC_d
    return val, _node_gradient(Gm, Gd, h)


def stationary_J1_value(spec: StationarySpec, path: PathDiscretization, dt=None) -> float:
    return stationary_J1_value_grad(spec, path, dt, grad=False)


# -- penalty and splitting functional ------------------------------------------------------

_SERIES_CUTOFF = 0.5
_SERIES_TERMS = 24


def penalty_psi(eps: float, s):
    """Cut function ``psi_eps(s)`` and its derivative.

    ``psi_eps`` vanishes on ``[0, 1/eps]``; beyond, with ``u = s - 1/eps``,
    it is ``sum_{n>=3} u^n/n! = e^u - 1 - u - u^2/2``. Small ``u`` uses the
    series to avoid cancellation. Scalars in, scalars out.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(~np.isfinite(s_arr)):
        raise ValueError("penalty argument must be finite and non-negative")
    u = np.maximum(s_arr - 1.0 / eps, 0.0)
    small = u < _SERIES_CUTOFF
    psi = np.zeros_like(u)
    dpsi = np.zeros_like(u)
    if np.any(small):
        us = u[small]
        term = us * us / 2.0     # u^2/2!
        acc_d = term.copy()      # derivative series starts at n = 2
        acc = np.zeros_like(us)
        for n in range(3, _SERIES_TERMS):
            term = term * us / n
            acc += term
            acc_d += term
        psi[small] = acc
        dpsi[small] = acc_d
    big = ~small
    if np.any(big):
        ub = u[big]
        psi[big] = np.expm1(ub) - ub - 0.5 * ub * ub
        dpsi[big] = np.expm1(ub) - ub
    if np.ndim(s) == 0:
        return float(psi), float(dpsi)
    return psi, dpsi


@lru_cache(maxsize=64)
def splitting_model(spec: SplittingSpec) -> SpacetimeModel:
    """Chart model of a splitting spec (bounds are not re-sampled)."""
    return splitting(spec, check=False)


def splitting_penalized_value_grad(spec: SplittingSpec, path: PathDiscretization, eps: float,
                                   grad=True):
    """Penalized functional ``f - psi_eps(||t'||^2)`` and its gradient.

    The path must carry a :class:`GalerkinTime`; the gradient is ordered as
    ``path.free_vector()``, i.e. coefficients ``a_1..a_m`` then nodes.
    """
    if not isinstance(path.time, GalerkinTime):
        raise ValueError("the penalized functional needs a Galerkin time representation")
    m = splitting_model(spec)
    n2 = path.tprime_norm2()
    psi, dpsi = penalty_psi(eps, n2)
    if not grad:
        return action_value(m, path) - psi
    val, g = action_value_grad(m, path)
    lpi = np.pi * np.arange(1, path.time.modes + 1)
    g = g.copy()
    g[:path.time.modes] -= dpsi * path.time.coeffs * lpi ** 2
    return val - psi, g
