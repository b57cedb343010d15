"""Named spacetimes and generic constructors.

Every builder returns a :class:`~lorentz_geodesy.geometry.SpacetimeModel`.
Quotients are represented on a covering chart with their deck maps; the
compact flag is declared here and never inferred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import exprlang as el
from .exceptions import ModelError
from .geometry import KillingField, QuotientStructure, SpacetimeModel

__all__ = [
    "WarpedSpec", "StationarySpec", "SplittingSpec",
    "minkowski", "euclidean", "flat_torus", "riemannian", "torus_tau", "torus_efg",
    "clifton_pohl", "misner_cylinder", "misner_xy_to_uv", "misner_uv_to_xy",
    "grw", "warped", "static", "stationary", "splitting", "anti_de_sitter_strip",
    "anti_de_sitter_static", "pseudosphere", "conformal_model",
    "gauss_curvature_torus_tau", "pseudosphere_inner", "pseudosphere_geodesic",
    "pseudosphere_connectable", "pseudosphere_chart_to_ambient",
    "check_deck_invariance", "build", "CATALOG",
]

_SAMPLE_COUNT = 64


def _sample_positive(m, expr, what, count=_SAMPLE_COUNT, seed=0):
    if m.sample_box is None:
        return
    fn = el.compile_scalar([expr], m.coords)
    for p in m.sample_points(np.random.default_rng(seed), count):
        val = fn(*p)[0]
        if not val > 0.0:
            raise ModelError(f"{what} must be positive; got {val:g} at {p}")


def _lift_quotient(q, offset, total):
    """Embed a deck group of a factor acting on coordinates offset.. into total dims."""
    if q is None:
        return []
    gens = []
    for A, b in q.generators:
        k = len(b)
        A2 = np.eye(total)
        A2[offset:offset + k, offset:offset + k] = A
        b2 = np.zeros(total)
        b2[offset:offset + k] = b
        gens.append((A2, b2))
    return gens


def _block_metric(blocks, total):
    rows = [[el.Const(0.0)] * total for _ in range(total)]
    for offset, block in blocks:
        k = len(block)
        for i in range(k):
            for j in range(k):
                rows[offset + i][offset + j] = el.as_expr(block[i][j])
    return rows


def _box_product(*boxes):
    if any(b is None for b in boxes):
        return None
    lo = np.concatenate([np.asarray(b[0], float) for b in boxes])
    hi = np.concatenate([np.asarray(b[1], float) for b in boxes])
    return (lo, hi)


# -- flat spaces ---------------------------------------------------------------------

def _flat_coords(n, s):
    if n == 2 and s == 1:
        return ("t", "x")
    if s == 0:
        return ("x",) if n == 1 else tuple(f"x{i + 1}" for i in range(n))
    if s == 1:
        return ("t",) + tuple(f"x{i + 1}" for i in range(n - 1))
    return tuple(f"t{i + 1}" for i in range(s)) + tuple(f"x{i + 1}" for i in range(n - s))


def minkowski(n: int = 2, s: int = 1) -> SpacetimeModel:
    """Flat ``R^n_s`` with ``s`` negative directions first."""
    n, s = int(n), int(s)
    if n < 1 or not 0 <= s <= n:
        raise ModelError(f"invalid flat signature n={n}, s={s}")
    coords = _flat_coords(n, s)
    metric = [[(-1.0 if i < s else 1.0) if i == j else 0.0 for j in range(n)] for i in range(n)]
    killing = tuple(KillingField(tuple(1.0 if k == i else 0.0 for k in range(n)), name=f"d_{c}")
                    for i, c in enumerate(coords))
    return SpacetimeModel(
        name="minkowski" if s == 1 else ("euclidean" if s == 0 else "flat"),
        coords=coords, index=s, metric=metric, complete=True, killing=killing,
        sample_box=(-5.0 * np.ones(n), 5.0 * np.ones(n)), params={"n": n, "s": s})


def euclidean(n: int = 1) -> SpacetimeModel:
    return minkowski(n, 0)


def riemannian(coords, metric, domain=None, quotient=None, compact=False,
               complete=None, sample_box=None, name="riemannian") -> SpacetimeModel:
    """Riemannian model from explicit metric expressions."""
    return SpacetimeModel(name=name, coords=tuple(coords), index=0, metric=metric,
                          domain=domain, quotient=quotient, compact=compact,
                          complete=complete, sample_box=sample_box)


def flat_torus(periods: Sequence[float] = (1.0, 1.0), index: int = 0) -> SpacetimeModel:
    """Flat ``R^n / (period lattice)``; ``index`` negative directions first."""
    periods = np.atleast_1d(np.asarray(periods, dtype=float))
    if np.any(periods <= 0):
        raise ModelError("torus periods must be positive")
    n = len(periods)
    base = minkowski(n, index)
    return base.with_changes(
        name="flat_torus" if n > 1 else "flat_circle",
        quotient=QuotientStructure.translations(np.diag(periods)),
        compact=True, sample_box=(np.zeros(n), periods.copy()),
        params={"periods": tuple(periods), "index": index})


# -- two-dimensional tori ----------------------------------------------------------

def _check_periodic(expr, var, period, what):
    fn = el.compile_scalar([expr], [var])
    for x in np.linspace(0.0, period, 17):
        a, b = fn(x)[0], fn(x + period)[0]
        if abs(a - b) > 1e-9 * (1.0 + abs(a)):
            raise ModelError(f"{what} is not {period}-periodic in {var}")


def _only_vars(expr, allowed, what):
    extra = el.variables(expr) - set(allowed) - set(el.CONSTANTS)
    if extra:
        raise ModelError(f"{what} depends on unexpected variables {sorted(extra)}")


def torus_tau(tau="-sin(2*pi*x)/pi", periods=(1.0, 1.0), check_periodic=True) -> SpacetimeModel:
    """Lorentzian torus ``dx dy + dy dx + tau(x) dy^2`` on its covering plane."""
    tau = el.as_expr(tau)
    _only_vars(tau, ("x",), "tau")
    periods = tuple(float(p) for p in periods)
    if check_periodic:
        _check_periodic(tau, "x", periods[0], "tau")
    return SpacetimeModel(
        name="torus_tau", coords=("x", "y"), index=1,
        metric=[[0.0, 1.0], [1.0, tau]],
        quotient=QuotientStructure.translations(np.diag(periods)), compact=True,
        killing=(KillingField((0.0, 1.0), name="d_y"),),
        sample_box=(np.zeros(2), np.array(periods)), params={"tau": tau})


def torus_efg(E="0", F="1", G="sin(2*pi*x)/pi", periods=(1.0, 1.0)) -> SpacetimeModel:
    """``E dx^2 + F (dx dy + dy dx) - G dy^2`` with 1-periodic ``E, F, G`` of ``x``."""
    E, F, G = (el.as_expr(v) for v in (E, F, G))
    periods = tuple(float(p) for p in periods)
    for name, v in (("E", E), ("F", F), ("G", G)):
        _only_vars(v, ("x",), name)
        _check_periodic(v, "x", periods[0], name)
    disc = el.add(el.mul(E, G), el.mul(F, F))
    fn = el.compile_scalar([disc], ["x"])
    for x in np.linspace(0.0, periods[0], 257):
        if not fn(x)[0] > 0.0:
            raise ModelError(f"EG+F^2 must be positive; fails at x={x:g}")
    return SpacetimeModel(
        name="torus_efg", coords=("x", "y"), index=1,
        metric=[[E, F], [F, el.neg(G)]],
        quotient=QuotientStructure.translations(np.diag(periods)), compact=True,
        killing=(KillingField((0.0, 1.0), name="d_y"),),
        sample_box=(np.zeros(2), np.array(periods)), params={"E": E, "F": F, "G": G})


def clifton_pohl() -> SpacetimeModel:
    """``(u^2+v^2)^-1 (du dv + dv du)`` on the punctured plane, modulo ``p -> 2p``."""
    w = el.parse("1/(u^2+v^2)")
    return SpacetimeModel(
        name="clifton_pohl", coords=("u", "v"), index=1,
        metric=[[0.0, w], [w, 0.0]],
        domain=lambda p: p[0] * p[0] + p[1] * p[1] > 0.0,
        quotient=QuotientStructure.linear([2.0 * np.eye(2)]), compact=True, complete=False,
        killing=(KillingField(("u", "v"), name="dilation"),),
        sample_box=(-np.array([2.0, 2.0]), np.array([2.0, 2.0])))


def misner_xy_to_uv(x, y):
    return np.exp(y), x * np.exp(-y)


def misner_uv_to_xy(u, v):
    return u * v, np.log(u)


def misner_cylinder(chart: str = "xy") -> SpacetimeModel:
    """Misner's cylinder.

    ``chart='xy'`` gives ``dx dy + dy dx - 2x dy^2`` on the plane with deck
    translation ``y -> y + ln 2``; ``chart='uv'`` gives ``du dv + dv du`` on
    ``u > 0`` with deck map ``(u, v) -> (2u, v/2)``. The two are related by
    ``u = e^y, v = x e^-y``. Reports use the fundamental domain ``1 <= u < 2``.
    """
    if chart == "xy":
        return SpacetimeModel(
            name="misner_cylinder", coords=("x", "y"), index=1,
            metric=[[0.0, 1.0], [1.0, el.parse("-2*x")]],
            quotient=QuotientStructure.translations([[0.0, math.log(2.0)]]),
            compact=False, complete=False,
            killing=(KillingField((0.0, 1.0), name="d_y"),),
            sample_box=(np.array([-2.0, 0.0]), np.array([2.0, math.log(2.0)])),
            params={"chart": "xy"})
    if chart == "uv":
        return SpacetimeModel(
            name="misner_cylinder", coords=("u", "v"), index=1,
            metric=[[0.0, 1.0], [1.0, 0.0]],
            domain=lambda p: p[0] > 0.0,
            quotient=QuotientStructure.linear([np.diag([2.0, 0.5])]),
            compact=False, complete=False,
            killing=(KillingField(("u", el.neg(el.Var("v"))), name="boost"),),
            sample_box=(np.array([1.0, -2.0]), np.array([2.0, 2.0])),
            params={"chart": "uv"})
    raise ModelError(f"unknown Misner chart {chart!r}")


def gauss_curvature_torus_tau(tau, x: float) -> float:
    """Gauss curvature ``tau''(x)/2`` of ``dx dy + dy dx + tau(x) dy^2``."""
    tau = el.as_expr(tau)
    return 0.5 * el.evaluate(el.diff(el.diff(tau, "x"), "x"), {"x": float(x)})


# -- warped products and splittings ------------------------------------------------

@dataclass(frozen=True, eq=False)
class WarpedSpec:
    base: SpacetimeModel
    f: el.Expr
    fiber: SpacetimeModel

    def __post_init__(self):
        object.__setattr__(self, "f", el.as_expr(self.f))
        _only_vars(self.f, self.base.coords, "warping function")
        clash = set(self.base.coords) & set(self.fiber.coords)
        if clash:
            raise ModelError(f"base and fiber share coordinate names {sorted(clash)}")


@dataclass(frozen=True, eq=False)
class StationarySpec:
    """``-beta dt^2 + 2 <delta, .>_R dt + <., .>_R`` over a Riemannian ``spatial``."""

    spatial: SpacetimeModel
    beta: el.Expr
    delta: tuple = ()
    time: str = "t"

    def __post_init__(self):
        if self.spatial.index != 0:
            raise ModelError("spatial factor must be Riemannian")
        if self.time in self.spatial.coords:
            raise ModelError(f"time coordinate {self.time!r} clashes with spatial coordinates")
        object.__setattr__(self, "beta", el.as_expr(self.beta))
        n = self.spatial.dim
        delta = tuple(el.as_expr(d) for d in self.delta) or tuple(el.Const(0.0) for _ in range(n))
        if len(delta) != n:
            raise ModelError("delta must have one component per spatial coordinate")
        object.__setattr__(self, "delta", delta)
        for e, what in [(self.beta, "beta")] + [(d, "delta") for d in delta]:
            _only_vars(e, self.spatial.coords, what)

    @property
    def is_static(self):
        return all(isinstance(d, el.Const) and d.value == 0.0 for d in self.delta)

    def delta_flat(self):
        """Lowered components ``(g_R delta)_i`` as expressions."""
        n = self.spatial.dim
        gR = self.spatial.metric
        out = []
        for i in range(n):
            acc = el.Const(0.0)
            for j in range(n):
                acc = el.add(acc, el.mul(gR[i][j], self.delta[j]))
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class SplittingSpec:
    """``-beta(t,x) dt^2 + <alpha(t,x) xi, xi>_R`` with declared bounds.

    ``nu <= beta <= N`` and ``alpha >= lam`` are sampled on construction.
    ``alpha`` is a matrix of expressions (a scalar means a multiple of the
    identity).
    """

    spatial: SpacetimeModel
    beta: el.Expr
    alpha: tuple
    nu: float = 1.0
    N: float = 1.0
    lam: float = 1.0
    time: str = "t"

    def __post_init__(self):
        if self.spatial.index != 0:
            raise ModelError("spatial factor must be Riemannian")
        n = self.spatial.dim
        object.__setattr__(self, "beta", el.as_expr(self.beta))
        alpha = self.alpha
        if isinstance(alpha, (str, int, float, el.Expr)):
            a = el.as_expr(alpha)
            alpha = [[a if i == j else el.Const(0.0) for j in range(n)] for i in range(n)]
        alpha = tuple(tuple(el.as_expr(x) for x in row) for row in alpha)
        if len(alpha) != n or any(len(r) != n for r in alpha):
            raise ModelError("alpha must be an n x n matrix")
        object.__setattr__(self, "alpha", alpha)
        allowed = (self.time,) + self.spatial.coords
        _only_vars(self.beta, allowed, "beta")
        for row in alpha:
            for a in row:
                _only_vars(a, allowed, "alpha")

    @property
    def coords(self):
        return (self.time,) + self.spatial.coords

    def spatial_block(self):
        """``g_R alpha`` symmetrized, as expressions in ``(t, x)``."""
        n = self.spatial.dim
        gR = self.spatial.metric
        prod = [[el.Const(0.0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = el.Const(0.0)
                for k in range(n):
                    acc = el.add(acc, el.mul(gR[i][k], self.alpha[k][j]))
                prod[i][j] = acc
        return [[el.mul(0.5, el.add(prod[i][j], prod[j][i])) if i != j else prod[i][i]
                 for j in range(n)] for i in range(n)]

    def check_bounds(self, t_range=(-10.0, 10.0), count=256, seed=0):
        """Sample ``nu <= beta <= N`` and ``alpha >= lam``; raise on violation."""
        rng = np.random.default_rng(seed)
        xs = self.spatial.sample_points(rng, count) if self.spatial.sample_box is not None \
            else rng.uniform(-5, 5, size=(count, self.spatial.dim))
        ts = rng.uniform(*t_range, size=count)
        bfn = el.compile_scalar([self.beta], self.coords)
        n = self.spatial.dim
        block = self.spatial_block()
        sfn = el.compile_scalar([block[i][j] for i in range(n) for j in range(n)], self.coords)
        for t, x in zip(ts, xs):
            b = bfn(t, *x)[0]
            if not self.nu - 1e-12 <= b <= self.N + 1e-12:
                raise ModelError(f"beta={b:g} outside [{self.nu}, {self.N}] at t={t:g}, x={x}")
            S = np.asarray(sfn(t, *x)).reshape(n, n)
            # <alpha xi, xi>_R >= lam <xi, xi>_R  <=>  generalized eigenvalues of (S, g_R) >= lam
            w = scipy.linalg.eigh(S, self.spatial.g(x), eigvals_only=True)
            if w[0] < self.lam - 1e-12:
                raise ModelError(f"alpha eigenvalue {w[0]:g} below {self.lam} at {x}")


def warped(spec: WarpedSpec, name="warped") -> SpacetimeModel:
    """``g_B + f^2 g_F`` on ``B x F``."""
    base, fiber = spec.base, spec.fiber
    nb, nf = base.dim, fiber.dim
    _sample_positive(base, spec.f, "warping function")
    f2 = el.mul(spec.f, spec.f)
    fib = [[el.mul(f2, fiber.metric[i][j]) for j in range(nf)] for i in range(nf)]
    metric = _block_metric([(0, base.metric), (nb, fib)], nb + nf)
    gens = _lift_quotient(base.quotient, 0, nb + nf) + _lift_quotient(fiber.quotient, nb, nb + nf)
    bdom, fdom = base.domain, fiber.domain

    def domain(p):
        return (bdom is None or bdom(p[:nb])) and (fdom is None or fdom(p[nb:]))

    killing = tuple(
        KillingField(tuple(el.Const(0.0) for _ in range(nb)) + K.components, name=K.name)
        for K in fiber.killing if all(isinstance(s, el.Const) and s.value == 0 for s in [K.sigma]))
    return SpacetimeModel(
        name=name, coords=base.coords + fiber.coords, index=base.index + fiber.index,
        metric=metric,
        domain=None if bdom is None and fdom is None else domain,
        quotient=QuotientStructure(tuple(gens)) if gens else None,
        compact=base.compact and fiber.compact, killing=killing,
        sample_box=_box_product(base.sample_box, fiber.sample_box),
        params={"spec": spec})


def _interval_base(interval, time="t"):
    a, b = (float(v) for v in interval)
    if not a < b:
        raise ModelError(f"empty interval ({a}, {b})")
    lo = max(a, -5.0) if math.isfinite(a) else -5.0
    hi = min(b, 5.0) if math.isfinite(b) else 5.0
    if math.isfinite(a) and math.isfinite(b):
        lo, hi = a + 0.01 * (b - a), b - 0.01 * (b - a)
    domain = None
    if math.isfinite(a) or math.isfinite(b):
        domain = lambda p: a < p[0] < b  # noqa: E731
    return SpacetimeModel(name="interval", coords=(time,), index=1, metric=[[-1.0]],
                          domain=domain, sample_box=(np.array([lo]), np.array([hi])),
                          params={"interval": (a, b)})


def grw(f="exp(t)", interval=(-math.inf, math.inf), fiber: Optional[SpacetimeModel] = None,
        fiber_dim: int = 1) -> SpacetimeModel:
    """Generalized Robertson-Walker ``-dt^2 + f(t)^2 g_F`` (flat fiber by default)."""
    if fiber is None:
        fiber = euclidean(fiber_dim)
    if fiber.index != 0:
        raise ModelError("GRW fiber must be Riemannian")
    base = _interval_base(interval)
    m = warped(WarpedSpec(base, f, fiber), name="grw")
    return m.with_changes(killing=m.killing, params={"spec": m.params["spec"],
                                                     "interval": base.params["interval"]})


def static(spatial: SpacetimeModel, beta, time="t") -> SpacetimeModel:
    """Standard static ``-beta(x) dt^2 + g_R``."""
    return stationary(StationarySpec(spatial, beta, (), time), name="static")


def stationary(spec: StationarySpec, name="stationary") -> SpacetimeModel:
    """Standard stationary metric over ``R x M0``; ``d_t`` is Killing."""
    sp = spec.spatial
    n = sp.dim
    _sample_positive(sp, spec.beta, "beta")
    dflat = spec.delta_flat()
    rows = [[el.Const(0.0)] * (n + 1) for _ in range(n + 1)]
    rows[0][0] = el.neg(spec.beta)
    for i in range(n):
        rows[0][i + 1] = rows[i + 1][0] = dflat[i]
        for j in range(n):
            rows[i + 1][j + 1] = sp.metric[i][j]
    gens = _lift_quotient(sp.quotient, 1, n + 1)
    sdom = sp.domain
    box = None
    if sp.sample_box is not None:
        box = (np.concatenate([[-5.0], sp.sample_box[0]]), np.concatenate([[5.0], sp.sample_box[1]]))
    return SpacetimeModel(
        name=name, coords=(spec.time,) + sp.coords, index=1, metric=rows,
        domain=None if sdom is None else (lambda p: sdom(p[1:])),
        quotient=QuotientStructure(tuple(gens)) if gens else None,
        compact=False,
        killing=(KillingField((1.0,) + (0.0,) * n, name="d_t"),),
        sample_box=box, params={"spec": spec})


def splitting(spec: SplittingSpec, check=True) -> SpacetimeModel:
    """Orthogonal splitting ``-beta(t,x) dt^2 + <alpha xi, xi>_R``."""
    sp = spec.spatial
    n = sp.dim
    if check:
        spec.check_bounds()
    block = spec.spatial_block()
    rows = [[el.Const(0.0)] * (n + 1) for _ in range(n + 1)]
    rows[0][0] = el.neg(spec.beta)
    for i in range(n):
        for j in range(n):
            rows[i + 1][j + 1] = block[i][j]
    sdom = sp.domain
    box = None
    if sp.sample_box is not None:
        box = (np.concatenate([[-5.0], sp.sample_box[0]]), np.concatenate([[5.0], sp.sample_box[1]]))
    gens = _lift_quotient(sp.quotient, 1, n + 1)
    return SpacetimeModel(
        name="splitting", coords=spec.coords, index=1, metric=rows,
        domain=None if sdom is None else (lambda p: sdom(p[1:])),
        quotient=QuotientStructure(tuple(gens)) if gens else None,
        sample_box=box, params={"spec": spec})


def _ads_domain(margin):
    lim = math.pi / 2.0 - margin
    return lambda p: abs(p[-1]) < lim


def anti_de_sitter_static(margin: float = 1e-9) -> StationarySpec:
    """Static form of the strip: ``beta = 1/cos^2 x`` over ``dx^2/cos^2 x``."""
    w = el.parse("1/cos(x)^2")
    lim = math.pi / 2.0 - margin
    spatial = riemannian(("x",), [[w]], domain=_ads_domain(margin), complete=True,
                         sample_box=(np.array([-0.9 * lim]), np.array([0.9 * lim])),
                         name="ads_space")
    return StationarySpec(spatial, w)


def anti_de_sitter_strip(margin: float = 1e-9) -> SpacetimeModel:
    """``(1/cos^2 x)(-dt^2 + dx^2)`` on ``R x (-pi/2, pi/2)``."""
    m = static(anti_de_sitter_static(margin).spatial, "1/cos(x)^2")
    return m.with_changes(name="anti_de_sitter_strip", complete=True,
                          params={"spec": m.params["spec"], "margin": margin})


# -- pseudosphere --------------------------------------------------------------------

def pseudosphere(n: int = 2) -> SpacetimeModel:
    """Chart ``-dt^2 + cosh^2 t d(theta)^2`` of the 2-dimensional de Sitter space.

    Only ``n = 2`` has a chart model here; the closed-form ambient functions
    below work for any ``n``.
    """
    if int(n) != 2:
        raise ModelError("only the 2-dimensional pseudosphere has a chart model")
    return SpacetimeModel(
        name="pseudosphere", coords=("t", "theta"), index=1,
        metric=[[-1.0, 0.0], [0.0, el.parse("cosh(t)^2")]],
        quotient=QuotientStructure.translations([[0.0, 2.0 * math.pi]]),
        compact=False, complete=True,
        killing=(KillingField((0.0, 1.0), name="d_theta"),),
        sample_box=(np.array([-2.0, 0.0]), np.array([2.0, 2.0 * math.pi])),
        params={"n": 2})


def pseudosphere_chart_to_ambient(t, theta):
    return np.array([np.sinh(t), np.cosh(t) * np.cos(theta), np.cosh(t) * np.sin(theta)])


def pseudosphere_inner(x, y):
    """``<x, y>_1 = -x_0 y_0 + sum x_i y_i``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(-x[0] * y[0] + x[1:] @ y[1:])


def _check_on_sphere(p, tol=1e-10):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) < 3:
        raise ModelError("pseudosphere points need at least three ambient coordinates")
    if abs(pseudosphere_inner(p, p) - 1.0) > tol:
        raise ModelError(f"point {p} is not on the unit pseudosphere")
    return p


def pseudosphere_geodesic(p, v, s):
    """Closed-form geodesic through ``p`` with velocity ``v``, evaluated at ``s``.

    ``s`` may be an array; the result then has shape ``s.shape + (n+1,)``.
    """
    p = _check_on_sphere(p)
    v = np.asarray(v, dtype=float)
    scale = 1.0 + float(np.abs(v).max()) if v.size else 1.0
    if abs(pseudosphere_inner(p, v)) > 1e-10 * scale:
        raise ModelError("velocity is not tangent to the pseudosphere at p")
    s = np.asarray(s, dtype=float)
    q = pseudosphere_inner(v, v)
    eps = 1e-14 * scale * scale
    ss = s[..., None]
    if q > eps:
        w = math.sqrt(q)
        out = np.cos(w * ss) * p + np.sin(w * ss) * (v / w)
    elif q < -eps:
        w = math.sqrt(-q)
        out = np.cosh(w * ss) * p + np.sinh(w * ss) * (v / w)
    else:
        out = p + ss * v
    return out[0] if out.shape[0] == 1 and s.ndim == 0 else (out if s.ndim else out.reshape(-1))


def pseudosphere_connectable(p, q) -> bool:
    """Connectability test ``<p, q>_1 > -1`` on ``S^n_1``.

    The strict inequality is applied literally, so the antipode ``-p`` (the
    single boundary point that closed spacelike geodesics do reach) is
    reported as not connectable.
    """
    p = _check_on_sphere(p, 1e-8)
    q = _check_on_sphere(q, 1e-8)
    return pseudosphere_inner(p, q) > -1.0


# -- conformal changes ------------------------------------------------------------------

def conformal_model(m: SpacetimeModel, omega, name=None) -> SpacetimeModel:
    """``Omega * g`` with ``Omega > 0`` (sampled on the model's box).

    Conformal Killing fields of ``g`` remain conformal Killing for the new
    metric, with ``sigma* = sigma + K(Omega) / (2 Omega)``.
    """
    omega = el.as_expr(omega)
    _only_vars(omega, m.coords, "conformal factor")
    _sample_positive(m, omega, "conformal factor")
    n = m.dim
    metric = [[el.mul(omega, m.metric[i][j]) for j in range(n)] for i in range(n)]
    killing = []
    for K in m.killing:
        k_omega = el.Const(0.0)
        for comp, c in zip(K.components, m.coords):
            k_omega = el.add(k_omega, el.mul(comp, el.diff(omega, c)))
        sigma = el.add(K.sigma, el.div(k_omega, el.mul(2.0, omega)))
        killing.append(KillingField(K.components, sigma, K.name))
    aux = m.aux_metric
    return m.with_changes(name=name or f"conformal({m.name})", metric=metric,
                          aux_metric=aux, killing=tuple(killing), complete=None,
                          params={"base": m, "omega": omega})


def check_deck_invariance(m: SpacetimeModel, count=100, seed=0) -> float:
    """Max entrywise gap ``|g(p) - A^T g(A p + b) A|`` over sampled points and generators."""
    if m.quotient is None:
        raise ModelError(f"model {m.name!r} has no quotient structure")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in m.sample_points(rng, count):
        g0 = m.g(p)
        for A, b in m.quotient.generators:
            g1 = A.T @ m.g(A @ p + b) @ A
            worst = max(worst, float(np.max(np.abs(g1 - g0))))
    return worst


# -- registry ----------------------------------------------------------------------------

def _parse_interval(value):
    if isinstance(value, str):
        a, b = value.split(":")
        return (float(a), float(b))
    return tuple(float(v) for v in value)


def _static_from_params(beta="1+x^2", spatial_dim=1, period=None, **_):
    if period is not None:
        periods = [float(v) for v in str(period).split(",")] if isinstance(period, str) else period
        return static(flat_torus(periods), beta)
    return static(euclidean(int(spatial_dim)), beta)


def _stationary_from_params(beta="1", delta="-0.3*x2,0.3*x1", spatial_dim=2, **_):
    parts = delta.split(",") if isinstance(delta, str) else list(delta)
    return stationary(StationarySpec(euclidean(int(spatial_dim)), beta, tuple(parts)))


def _splitting_from_params(beta="1", alpha="1+0.1*sin(t)", spatial_dim=1,
                           nu=1.0, N=1.0, lam=0.9, **_):
    return splitting(SplittingSpec(euclidean(int(spatial_dim)), beta, alpha,
                                   float(nu), float(N), float(lam)))


def _warped_from_params(f="1+x^2", base_dim=1, fiber_dim=1, fiber_index=1, **_):
    base = euclidean(int(base_dim))
    fiber = minkowski(int(fiber_dim), int(fiber_index))
    fiber = fiber.with_changes(coords=tuple(f"y{i + 1}" for i in range(fiber.dim)) if fiber.dim > 1
                               else ("y",), killing=())
    return warped(WarpedSpec(base, f, fiber))


CATALOG = {
    "minkowski": (lambda n=2, s=1, **_: minkowski(int(n), int(s)),
                  "flat R^n_s; params n (2), s (1)"),
    "flat_torus": (lambda periods="1,1", index=0, **_: flat_torus(
        [float(v) for v in str(periods).split(",")] if isinstance(periods, str) else periods,
        int(index)), "flat torus; params periods ('1,1'), index (0)"),
    "torus_tau": (lambda tau="-sin(2*pi*x)/pi", **_: torus_tau(tau),
                  "dx dy + dy dx + tau(x) dy^2 on T^2; param tau"),
    "torus_efg": (lambda E="0", F="1", G="sin(2*pi*x)/pi", **_: torus_efg(E, F, G),
                  "E dx^2 + F(dx dy + dy dx) - G dy^2 on T^2; params E, F, G"),
    "clifton_pohl": (lambda **_: clifton_pohl(), "Clifton-Pohl torus on its punctured-plane cover"),
    "misner_cylinder": (lambda chart="xy", **_: misner_cylinder(chart),
                        "Misner's cylinder; param chart (xy | uv)"),
    "grw": (lambda f="exp(t)", interval="-inf:inf", fiber_dim=1, **_: grw(
        f, _parse_interval(interval), fiber_dim=int(fiber_dim)),
        "-dt^2 + f(t)^2 dx^2; params f, interval (a:b), fiber_dim"),
    "warped": (_warped_from_params,
               "R^b x_f R^k_s; params f, base_dim, fiber_dim, fiber_index"),
    "static": (_static_from_params,
               "-beta dt^2 + dx^2; params beta, spatial_dim, period (flat circle/torus factor)"),
    "stationary": (_stationary_from_params,
                   "-beta dt^2 + 2<delta,.>dt + dx^2; params beta, delta (comma list), spatial_dim"),
    "splitting": (_splitting_from_params,
                  "-beta dt^2 + alpha dx^2; params beta, alpha, spatial_dim, nu, N, lam"),
    "anti_de_sitter_strip": (lambda margin=1e-9, **_: anti_de_sitter_strip(float(margin)),
                             "(1/cos^2 x)(-dt^2 + dx^2); param margin"),
    "pseudosphere": (lambda n=2, **_: pseudosphere(int(n)), "de Sitter S^2_1 chart; param n (2)"),
}


def build(name: str, **params) -> SpacetimeModel:
    """Construct a catalog model by id; expression parameters may be strings."""
    try:
        builder, _ = CATALOG[name]
    except KeyError:
        raise ModelError(f"unknown catalog id {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    return builder(**params)
