"""Semi-Riemannian substrate: metrics, Christoffel symbols, causal character.

A :class:`SpacetimeModel` is a chart (usually a global chart or a covering
space) carrying a metric given by a symmetric matrix of expressions in the
coordinate names. Quotients (tori, cylinders) are represented upstairs
together with the affine deck maps generating the group.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import exprlang as el
from .exceptions import DegenerateMetricError, DomainViolation, ModelError

__all__ = [
    "CausalCharacter", "KillingField", "QuotientStructure", "SpacetimeModel",
    "TangentVector", "metric_at", "christoffel_at", "christoffel_fd", "inner",
    "causal_character", "geodesic_rhs", "riemannian_norm",
    "conformal_killing_rate", "lie_derivative_residual", "fd_step",
]

EPS_NULL = 1e-9
EPS_DEGENERATE = 1e-12


class CausalCharacter(enum.Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    SPACELIKE = "spacelike"
    ZERO = "zero"


@dataclass(frozen=True)
class KillingField:
    """Candidate conformal Killing field ``K`` with ``L_K g = 2 sigma g``."""

    components: tuple
    sigma: el.Expr = el.Const(0.0)
    name: str = "K"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(el.as_expr(c) for c in self.components))
        object.__setattr__(self, "sigma", el.as_expr(self.sigma))


@dataclass(frozen=True)
class QuotientStructure:
    """Deck group generated by affine maps ``p -> A p + b``.

    Pure translations (``A`` the identity) form a lattice; their offsets are
    the *periods* used for winding numbers.
    """

    generators: tuple  # of (A, b) pairs

    @classmethod
    def translations(cls, periods):
        periods = np.atleast_2d(np.asarray(periods, dtype=float))
        n = periods.shape[1]
        return cls(tuple((np.eye(n), p.copy()) for p in periods))

    @classmethod
    def linear(cls, matrices):
        return cls(tuple((np.asarray(A, dtype=float), np.zeros(len(A))) for A in matrices))

    @property
    def is_lattice(self):
        return all(np.allclose(A, np.eye(len(A))) for A, _ in self.generators)

    @property
    def periods(self):
        if not self.is_lattice:
            raise ModelError("deck group is not a translation lattice")
        return np.array([b for _, b in self.generators])

    def apply(self, k, p, inverse=False):
        A, b = self.generators[k]
        p = np.asarray(p, dtype=float)
        if inverse:
            return np.linalg.solve(A, p - b)
        return A @ p + b


def _symmetric_exprs(rows, n):
    rows = [[el.as_expr(x) for x in row] for row in rows]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ModelError(f"metric must be a {n}x{n} matrix")
    # upper triangle is authoritative
    return tuple(tuple(rows[min(i, j)][max(i, j)] for j in range(n)) for i in range(n))


def fd_step(x):
    """Central-difference step ``eps**(1/3) * (1 + |x|)``."""
    return np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.abs(x))


@dataclass(frozen=True, eq=False)
class SpacetimeModel:
    """Immutable description of a semi-Riemannian chart.

    Parameters
    ----------
    name : str
        Catalog id or free label.
    coords : tuple of str
        Coordinate names; metric expressions are written in these.
    index : int
        Number of negative eigenvalues of the metric.
    metric : n x n nested sequence of expressions
    aux_metric : optional n x n expressions
        Complete auxiliary Riemannian metric ``g_R``; Euclidean in chart
        coordinates when omitted.
    domain : callable, optional
        Predicate ``coords -> bool`` for the open domain of the chart.
    christoffel : {'analytic', 'fd'}
    """

    name: str
    coords: tuple
    index: int
    metric: tuple
    aux_metric: Optional[tuple] = None
    domain: Optional[Callable] = None
    quotient: Optional[QuotientStructure] = None
    compact: bool = False
    complete: Optional[bool] = None
    killing: tuple = ()
    christoffel: str = "analytic"
    sample_box: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        coords = tuple(self.coords)
        n = len(coords)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "metric", _symmetric_exprs(self.metric, n))
        if self.aux_metric is not None:
            object.__setattr__(self, "aux_metric", _symmetric_exprs(self.aux_metric, n))
        object.__setattr__(self, "killing", tuple(self.killing))
        if not 0 <= self.index <= n:
            raise ModelError(f"index {self.index} invalid for dimension {n}")
        if self.christoffel not in ("analytic", "fd"):
            raise ModelError("christoffel provider must be 'analytic' or 'fd'")
        for K in self.killing:
            if len(K.components) != n:
                raise ModelError(f"Killing field {K.name} has wrong dimension")

    # -- compiled evaluators ---------------------------------------------------

    @property
    def dim(self):
        return len(self.coords)

    @cached_property
    def _upper(self):
        n = self.dim
        return [(i, j) for i in range(n) for j in range(i, n)]

    @cached_property
    def _metric_fn(self):
        return el.compile_scalar([self.metric[i][j] for i, j in self._upper], self.coords)

    @cached_property
    def _metric_grad_fn(self):
        exprs = [el.diff(self.metric[i][j], c) for c in self.coords for i, j in self._upper]
        return el.compile_scalar(exprs, self.coords)

    @cached_property
    def _metric_vec(self):
        return el.compile_vector([self.metric[i][j] for i, j in self._upper], self.coords)

    @cached_property
    def _metric_grad_vec(self):
        exprs = [el.diff(self.metric[i][j], c) for c in self.coords for i, j in self._upper]
        return el.compile_vector(exprs, self.coords)

    @cached_property
    def _aux_fn(self):
        if self.aux_metric is None:
            return None
        return el.compile_scalar([self.aux_metric[i][j] for i, j in self._upper], self.coords)

    def _unpack(self, vals, lead=()):
        n = self.dim
        g = np.empty(lead + (n, n))
        for k, (i, j) in enumerate(self._upper):
            g[..., i, j] = vals[k]
            g[..., j, i] = vals[k]
        return g

    def in_domain(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        return True if self.domain is None else bool(self.domain(p))

    def g(self, p):
        """Unchecked metric matrix at chart point ``p``."""
        return self._unpack(self._metric_fn(*p))

    def dg(self, p):
        """``dg[k, i, j] = d g_ij / d x^k`` (analytic)."""
        n = self.dim
        vals = self._metric_grad_fn(*p)
        m = len(self._upper)
        out = np.empty((n, n, n))
        for k in range(n):
            out[k] = self._unpack(vals[k * m:(k + 1) * m])
        return out

    def g_batch(self, pts):
        """Metric at an array of points ``(P, n) -> (P, n, n)``."""
        pts = np.asarray(pts, dtype=float)
        vals = self._metric_vec(*pts.T)
        return self._unpack(vals, (pts.shape[0],))

    def dg_batch(self, pts):
        """``(P, n) -> (P, n, n, n)`` with derivative index first after P."""
        pts = np.asarray(pts, dtype=float)
        n = self.dim
        m = len(self._upper)
        vals = self._metric_grad_vec(*pts.T)
        out = np.empty((pts.shape[0], n, n, n))
        for k in range(n):
            out[:, k] = self._unpack(vals[k * m:(k + 1) * m], (pts.shape[0],))
        return out

    def g_aux(self, p):
        if self._aux_fn is None:
            return np.eye(self.dim)
        return self._unpack(self._aux_fn(*p))

    def gamma(self, p):
        """Christoffel symbols ``Gamma[k, i, j]`` at ``p`` (unchecked)."""
        if self.christoffel == "fd":
            return christoffel_fd(self, p)
        return _christoffel_from(self.g(p), self.dg(p))

    def sample_points(self, rng, count):
        """Random points of the declared sample box that lie in the domain."""
        if self.sample_box is None:
            raise ModelError(f"model {self.name!r} declares no sample box")
        lo, hi = (np.asarray(b, dtype=float) for b in self.sample_box)
        out = []
        tries = 0
        while len(out) < count:
            tries += 1
            if tries > 100 * count + 1000:
                raise ModelError("sample box rarely intersects the domain")
            p = lo + (hi - lo) * rng.random(self.dim)
            if self.in_domain(p):
                out.append(p)
        return np.array(out)

    def with_changes(self, **changes):
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return SpacetimeModel(**data)


def _christoffel_from(g, dg):
    ginv = np.linalg.inv(g)
    # lowered[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    lowered = 0.5 * (np.transpose(dg, (2, 0, 1)) + np.transpose(dg, (2, 1, 0)) - dg)
    return np.einsum("kl,lij->kij", ginv, lowered)


def _metric_fd_derivative(m, p, step=None):
    p = np.asarray(p, dtype=float)
    n = m.dim
    dg = np.empty((n, n, n))
    for k in range(n):
        h = fd_step(p[k]) if step is None else step
        e = np.zeros(n)
        e[k] = h
        dg[k] = (m.g(p + e) - m.g(p - e)) / (2.0 * h)
    return dg


def christoffel_fd(m, p, step=None):
    """Christoffel symbols from central differences of the metric entries."""
    p = np.asarray(p, dtype=float)
    if step is not None or m.domain is not None:
        h = np.max(fd_step(p)) if step is None else step
        for k in range(m.dim):
            for sgn in (-1.0, 1.0):
                q = p.copy()
                q[k] += sgn * h
                if not m.in_domain(q):
                    raise DomainViolation(f"finite-difference stencil leaves the domain at {p}")
    return _christoffel_from(m.g(p), _metric_fd_derivative(m, p, step))


def _check_point(m, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (m.dim,):
        raise DomainViolation(f"point {p} has wrong dimension for {m.name}")
    if not m.in_domain(p):
        raise DomainViolation(f"point {p} lies outside the domain of {m.name}")
    return p


def metric_at(m: SpacetimeModel, p) -> np.ndarray:
    """Metric matrix at ``p`` after validating domain, nondegeneracy and signature."""
    p = _check_point(m, p)
    g = m.g(p)
    scale = max(1.0, np.max(np.abs(g))) ** m.dim
    det = np.linalg.det(g)
    if not abs(det) > EPS_DEGENERATE * scale:
        raise DegenerateMetricError(f"degenerate metric at {p} (det={det:g})")
    negatives = int(np.sum(np.linalg.eigvalsh(g) < 0.0))
    if negatives != m.index:
        raise DegenerateMetricError(
            f"metric at {p} has {negatives} negative eigenvalues, expected {m.index}")
    return g


def christoffel_at(m: SpacetimeModel, p, provider=None) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` (upper index first)."""
    p = _check_point(m, p)
    provider = provider or m.christoffel
    if provider == "fd":
        return christoffel_fd(m, p)
    return _christoffel_from(m.g(p), m.dg(p))


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        if not np.all(np.isfinite(self.components)):
            raise ValueError("tangent vector components must be finite")


def _components(v, base=None):
    if isinstance(v, TangentVector):
        if base is not None and not np.array_equal(v.base, base):
            raise ValueError("tangent vectors live at different base points")
        return v.base, v.components
    return base, np.asarray(v, dtype=float)


def inner(m: SpacetimeModel, v, w, p=None) -> float:
    """``g(v, w)`` for tangent vectors at a common base point."""
    base, vc = _components(v, p)
    base, wc = _components(w, base)
    if base is None:
        raise ValueError("base point required for bare component arrays")
    return float(vc @ m.g(base) @ wc)


def riemannian_norm(m: SpacetimeModel, v, p=None) -> float:
    base, vc = _components(v, p)
    if base is None:
        base = np.zeros(m.dim)
    q = float(vc @ m.g_aux(base) @ vc)
    return float(np.sqrt(max(q, 0.0)))


def causal_character(m: SpacetimeModel, v, eps_null=EPS_NULL, p=None) -> CausalCharacter:
    """Sign classification; ``|g(v,v)| <= eps_null * |v|_R^2`` counts as lightlike."""
    base, vc = _components(v, p)
    nr = riemannian_norm(m, vc, base)
    if nr <= eps_null:
        return CausalCharacter.ZERO
    q = float(vc @ m.g(base) @ vc)
    if abs(q) <= eps_null * nr * nr:
        return CausalCharacter.LIGHTLIKE
    return CausalCharacter.TIMELIKE if q < 0 else CausalCharacter.SPACELIKE


def geodesic_rhs(m: SpacetimeModel, x, v):
    """First-order geodesic system ``(x', v') = (v, -Gamma(v, v))``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    G = m.gamma(x)
    return v.copy(), -np.einsum("kij,i,j->k", G, v, v)


# -- conformal Killing fields ------------------------------------------------------

def _killing_eval(m, K):
    comps = el.compile_scalar(K.components, m.coords)
    sigma = el.compile_scalar([K.sigma], m.coords)
    jac = el.compile_scalar([el.diff(c, x) for c in K.components for x in m.coords], m.coords)
    return comps, sigma, jac


def conformal_killing_rate(m, K: KillingField, x, v, h=1e-3):
    """Residual ``d/ds g(gamma', K) - c * sigma(gamma)`` along a geodesic.

    The derivative is estimated by a central difference over a geodesic
    step of length ``h`` (fixed-step RK4 in each direction); the residual is
    ``O(h^4)`` for a true conformal Killing pair.
    """
    comps, sigma, _ = _killing_eval(m, K)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(v @ m.g(x) @ v)

    def charge(state):
        y, w = state
        return float(w @ m.g(y) @ np.asarray(comps(*y)))

    def rk4(state, dt):
        def f(s):
            a, b = geodesic_rhs(m, s[0], s[1])
            return (a, b)
        k1 = f(state)
        k2 = f((state[0] + 0.5 * dt * k1[0], state[1] + 0.5 * dt * k1[1]))
        k3 = f((state[0] + 0.5 * dt * k2[0], state[1] + 0.5 * dt * k2[1]))
        k4 = f((state[0] + dt * k3[0], state[1] + dt * k3[1]))
        return (state[0] + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                state[1] + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))

    fwd = charge(rk4((x, v), h))
    bwd = charge(rk4((x, v), -h))
    rate = (fwd - bwd) / (2.0 * h)
    return rate - c * sigma(*x)[0]


def lie_derivative_residual(m, K: KillingField, p, h=None):
    """Max-norm of ``L_K g - 2 sigma g`` at ``p``.

    ``L_K g`` is obtained by central differences of the pulled-back metric
    ``(phi_h^* g)(p) = (I + h DK)^T g(p + h K) (I + h DK)`` along the flow.
    """
    comps, sigma, jac = _killing_eval(m, K)
    p = np.asarray(p, dtype=float)
    n = m.dim
    Kp = np.asarray(comps(*p))
    DK = np.asarray(jac(*p)).reshape(n, n)  # DK[i, j] = d K^i / d x^j
    if h is None:
        h = float(np.max(fd_step(p))) / (1.0 + float(np.max(np.abs(Kp))))

    def pulled(t):
        J = np.eye(n) + t * DK
        return J.T @ m.g(p + t * Kp) @ J

    lie = (pulled(h) - pulled(-h)) / (2.0 * h)
    return float(np.max(np.abs(lie - 2.0 * sigma(*p)[0] * m.g(p))))
