"""Adaptive geodesic integration with incompleteness detection.

The first-order system ``(x, v)' = (v, -Gamma(v, v))`` is advanced with
scipy's Dormand-Prince 5(4) pair, stepped manually so that every accepted
step can be inspected: domain exit, blow-up of ``|v|_R`` (the extendibility
criterion), step underflow. A blow-up is read as inextendibility; the
maximal parameter is extrapolated from ``1/|v|_R``.
"""

from __future__ import annotations

import collections
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import CubicHermiteSpline

from . import exprlang as el
from .catalog import conformal_model
from .exceptions import (DegenerateMetricError, DomainViolation, ExprDomainError,
                         IntegrationError, ModelError)
from .geometry import SpacetimeModel, causal_character, CausalCharacter

__all__ = [
    "Termination", "IntegratorOptions", "GeodesicSolution", "integrate_geodesic",
    "integrate_second_order", "estimate_max_parameter", "lightlike_reparam", "winding_of", "period_crossings",
]


_PRESSING_WINDOW = 24


class Termination(enum.Enum):
    REACHED_SPAN = "ReachedSpan"
    LEFT_DOMAIN = "LeftDomain"
    BLOW_UP = "BlowUp"
    STEP_UNDERFLOW = "StepUnderflow"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class IntegratorOptions:
    """Numerical options.

    ``blowup_threshold`` defaults to ``1e8 * (1 + |v0|_R)``; ``drift_tol``
    bounds the normalized drift of ``g(v, v)`` and of every Killing charge.
    """

    span: tuple = (0.0, 10.0)
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 200_000
    blowup_threshold: Optional[float] = None
    drift_tol: float = 1e-6
    fit_points: int = 20
    first_step: Optional[float] = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        a, b = self.span
        if not (math.isfinite(a) and math.isfinite(b)) or a == b:
            raise ValueError(f"invalid span {self.span}")
        if self.fit_points < 3:
            raise ValueError("fit_points must be at least 3")


@dataclass
class GeodesicSolution:
    """Sampled geodesic. Arrays are indexed by accepted step."""

    model: SpacetimeModel
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    g_vv: np.ndarray
    charges: dict
    termination: Termination
    boundary_point: Optional[np.ndarray] = None
    b_hat: Optional[float] = None
    confidence: Optional[float] = None
    winding: Optional[np.ndarray] = None
    max_drift: float = 0.0
    valid: bool = True
    message: str = ""
    accel: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def _spline(self):
        spline = self.extra.get("_spline")
        if spline is None:
            if self.accel is None:
                raise IntegrationError("solution carries no derivative data for dense output")
            s, y, dy = self.s, np.hstack([self.x, self.v]), np.hstack([self.v, self.accel])
            if s[-1] < s[0]:
                s, y, dy = s[::-1], y[::-1], dy[::-1]
            spline = CubicHermiteSpline(s, y, dy, axis=0)
            self.extra["_spline"] = spline
        return spline

    def dense(self, s, derivative=False):
        """Cubic Hermite interpolation of ``(x, v)`` (or its derivative) at ``s``."""
        sp = self._spline
        return sp.derivative()(s) if derivative else sp(s)

    def summary(self):
        return {
            "termination": self.termination.value,
            "b_hat": self.b_hat,
            "confidence": self.confidence,
            "winding": None if self.winding is None else [int(k) for k in self.winding],
            "steps": int(len(self.s) - 1),
            "s_final": float(self.s[-1]),
            "max_drift": float(self.max_drift),
            "valid": bool(self.valid),
            "coords": list(self.model.coords),
        }

    def table(self):
        """Rows ``s, x1..xn, v1..vn, g_vv, K1..Km`` and matching header."""
        names = list(self.charges)
        header = (["s"] + [f"x{i + 1}" for i in range(self.dim)]
                  + [f"v{i + 1}" for i in range(self.dim)] + ["g_vv"]
                  + [f"K{i + 1}" for i in range(len(names))])
        cols = [self.s[:, None], self.x, self.v, self.g_vv[:, None]]
        cols += [self.charges[k][:, None] for k in names]
        return header, np.hstack(cols)


def _killing_fns(m):
    out = []
    for K in m.killing:
        out.append((K.name, el.compile_scalar(K.components, m.coords),
                    isinstance(K.sigma, el.Const) and K.sigma.value == 0.0))
    return out


def _aux_norm(m, x, v):
    return math.sqrt(max(float(v @ m.g_aux(x) @ v), 0.0))


def integrate_geodesic(m: SpacetimeModel, p, v, opts: IntegratorOptions = None, **kw) -> GeodesicSolution:
    """Integrate the geodesic with ``gamma(span[0]) = p``, ``gamma'(span[0]) = v``.

    Keyword arguments override fields of ``opts``.
    """
    return integrate_second_order(m, p, v, opts, **kw)


def integrate_second_order(m: SpacetimeModel, p, v, opts: IntegratorOptions = None,
                           accel=None, energy=None, **kw) -> GeodesicSolution:
    """Shared driver for ``x'' = accel(x, x')`` on the chart of ``m``.

    ``accel`` defaults to the geodesic acceleration ``-Gamma(v, v)`` and
    ``energy`` (the conserved scalar logged in ``g_vv``) to ``g(v, v)``.
    Killing charges are only logged for true geodesics.
    """
    opts = opts or IntegratorOptions()
    if kw:
        opts = IntegratorOptions(**{**opts.__dict__, **kw})
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    n = m.dim
    if p.shape != (n,) or v.shape != (n,):
        raise ValueError("point and velocity must have the model dimension")
    if not np.all(np.isfinite(v)):
        raise ValueError("initial velocity must be finite")
    if not m.in_domain(p):
        raise DomainViolation(f"initial point {p} is outside the domain of {m.name}")

    s0, s1 = (float(a) for a in opts.span)
    span_len = abs(s1 - s0)
    nr0 = _aux_norm(m, p, v)
    theta = opts.blowup_threshold or 1e8 * (1.0 + nr0)
    if theta <= nr0:
        raise ValueError("blow-up threshold must exceed the initial Riemannian speed")

    hit = {"domain": False, "where": None}

    def rhs_state(y):
        x, w = y[:n], y[n:]
        if accel is not None:
            return np.asarray(accel(x, w), dtype=float)
        G = m.gamma(x)
        return -np.einsum("kij,i,j->k", G, w, w)

    def fun(s, y):
        x = y[:n]
        if not m.in_domain(x):
            hit["domain"] = True
            hit["where"] = x.copy()
            return np.full(2 * n, np.nan)
        try:
            a = rhs_state(y)
        except (ExprDomainError, np.linalg.LinAlgError, DegenerateMetricError):
            hit["domain"] = True
            hit["where"] = x.copy()
            return np.full(2 * n, np.nan)
        if not np.all(np.isfinite(a)):
            return np.full(2 * n, np.nan)
        return np.concatenate([y[n:], a])

    kfns = _killing_fns(m) if accel is None else []

    def log_point(x, w):
        g = m.g(x)
        gw = g @ w
        e = float(w @ gw) if energy is None else float(energy(x, w))
        return e, [float(gw @ np.asarray(fn(*x))) for _, fn, _ in kfns]

    y0 = np.concatenate([p, v])
    f0 = fun(s0, y0)
    if not np.all(np.isfinite(f0)):
        raise DomainViolation(f"geodesic equation cannot be evaluated at {p}")
    solver = RK45(fun, s0, y0, s1, rtol=opts.rtol, atol=opts.atol,
                  first_step=opts.first_step, vectorized=False)

    S, Y, F = [s0], [y0], [f0]
    gvv0, k0 = log_point(p, v)
    GV, KS = [gvv0], [k0]
    termination = None
    message = ""
    boundary = None
    steps = 0
    pressing = collections.deque(maxlen=_PRESSING_WINDOW)  # steps whose trial stages left the domain
    while termination is None:
        if steps >= opts.max_steps:
            termination = Termination.MAX_STEPS
            message = f"step budget {opts.max_steps} exhausted"
            break
        hit["domain"] = False
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            if hit["domain"]:
                termination = Termination.LEFT_DOMAIN
                boundary = Y[-1][:n].copy()
                message = f"trajectory reaches the domain boundary near {boundary}"
            else:
                termination = Termination.STEP_UNDERFLOW
                message = str(msg)
            break
        y = solver.y.copy()
        S.append(solver.t)
        Y.append(y)
        F.append(solver.f.copy() if hasattr(solver, "f") else fun(solver.t, y))
        gvv, kk = log_point(y[:n], y[n:])
        GV.append(gvv)
        KS.append(kk)
        pressing.append(hit["domain"])
        if _aux_norm(m, y[:n], y[n:]) > theta:
            termination = Termination.BLOW_UP
            message = f"|v|_R exceeded {theta:.3g}"
        elif solver.status == "finished":
            termination = Termination.REACHED_SPAN
        elif sum(pressing) >= _PRESSING_WINDOW // 2:
            termination = Termination.LEFT_DOMAIN
            boundary = y[:n].copy()
            message = f"trajectory presses against the domain boundary near {boundary}"
        elif solver.step_size < 1e-14 * span_len:
            if hit["domain"]:
                termination = Termination.LEFT_DOMAIN
                boundary = y[:n].copy()
                message = f"trajectory reaches the domain boundary near {boundary}"
            else:
                termination = Termination.STEP_UNDERFLOW
                message = f"step size {solver.step_size:.3g} below 1e-14 * span"

    Y = np.array(Y)
    F = np.array(F)
    sol = GeodesicSolution(
        model=m, s=np.array(S), x=Y[:, :n], v=Y[:, n:], g_vv=np.array(GV),
        charges={name: np.array([k[i] for k in KS]) for i, (name, _, _) in enumerate(kfns)},
        termination=termination, boundary_point=boundary, message=message, accel=F[:, n:])
    sol.extra["killing_flags"] = {name: exact for name, _, exact in kfns}
    _assess_drift(sol, opts.drift_tol)
    if termination in (Termination.BLOW_UP, Termination.STEP_UNDERFLOW):
        try:
            sol.b_hat, sol.confidence = estimate_max_parameter(sol, opts.fit_points)
        except IntegrationError as exc:
            sol.message += f"; no extrapolation ({exc})"
    if m.quotient is not None:
        try:
            sol.winding = winding_of(sol, m)
        except ModelError:
            sol.winding = None
    return sol


def _assess_drift(sol, tol):
    m = sol.model
    nr2 = np.array([float(w @ m.g_aux(x) @ w) for x, w in zip(sol.x, sol.v)])
    g0 = sol.g_vv[0]
    scale = np.maximum(1.0 + abs(g0), nr2)
    worst = float(np.max(np.abs(sol.g_vv - g0) / scale))
    flags = sol.extra.get("killing_flags", {})
    nr = np.sqrt(nr2)
    for name, vals in sol.charges.items():
        if not flags.get(name, False):
            continue
        # |g(v, K)| <= |v|_R |K|_R-ish; normalize by the speed so blow-up round-off is tolerated
        d = np.abs(vals - vals[0]) / np.maximum(1.0 + abs(vals[0]), nr)
        worst = max(worst, float(np.max(d)))
    sol.max_drift = worst
    if worst > tol:
        sol.valid = False
        sol.message = (sol.message + "; " if sol.message else "") + \
            f"conserved-quantity drift {worst:.2e} exceeds {tol:.0e}"


def estimate_max_parameter(sol: GeodesicSolution, points: int = 20):
    """Extrapolate the maximal parameter from a linear fit of ``1/|v|_R``.

    Uses the last ``points`` accepted steps. Returns ``(b_hat, confidence)``
    where confidence is the RMS fit residual relative to the fitted range.
    """
    if sol.termination not in (Termination.BLOW_UP, Termination.STEP_UNDERFLOW):
        raise IntegrationError(f"no blow-up to extrapolate ({sol.termination.value})")
    k = min(points, len(sol.s))
    if k < 3:
        raise IntegrationError("too few steps for extrapolation")
    m = sol.model
    s = sol.s[-k:]
    inv = np.array([1.0 / max(_aux_norm(m, x, w), 1e-300) for x, w in zip(sol.x[-k:], sol.v[-k:])])
    A = np.vstack([np.ones(k), s - s[-1]]).T
    coef, *_ = np.linalg.lstsq(A, inv, rcond=None)
    a, b = coef
    direction = 1.0 if s[-1] >= s[0] else -1.0
    if b == 0.0 or not np.isfinite(b) or direction * a / b > 0:
        raise IntegrationError("1/|v|_R is not decreasing toward zero")
    b_hat = float(s[-1] - a / b)
    resid = inv - A @ coef
    spread = max(float(np.ptp(inv)), 1e-300)
    confidence = float(np.sqrt(np.mean(resid ** 2)) / spread)
    return b_hat, confidence


# -- conformal reparametrization ---------------------------------------------------

def lightlike_reparam(sol: GeodesicSolution, omega, C: float = 1.0, eps_null: float = 1e-7,
                      model_star: SpacetimeModel = None, quad_order: int = 8,
                      samples_per_step: int = 4) -> GeodesicSolution:
    """Reparametrize a lightlike ``g``-geodesic as a geodesic of ``Omega g``.

    The new parameter satisfies ``d sigma / dt = C * Omega(gamma(t))``; it is
    obtained by Gauss-Legendre quadrature of the dense output on every step.
    The returned solution carries ``extra['residual']``: the max over dense
    sample points of ``|dv*/d sigma + Gamma*(v*, v*)|`` with ``Gamma*`` the
    Christoffel symbols of ``Omega g``.
    """
    m = sol.model
    omega = el.as_expr(omega)
    if C <= 0:
        raise ValueError("the scale C must be positive")
    for x, w in zip(sol.x, sol.v):
        if causal_character(m, w, eps_null, p=x) is not CausalCharacter.LIGHTLIKE:
            raise ValueError(f"input geodesic is not lightlike at {x}")
    mstar = model_star or conformal_model(m, omega)
    om = el.compile_scalar([omega], m.coords)
    dom = el.compile_scalar([el.diff(omega, c) for c in m.coords], m.coords)
    n = m.dim

    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    s = sol.s
    sigma = np.zeros(len(s))
    for k in range(len(s) - 1):
        a, b = s[k], s[k + 1]
        tq = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        xs = sol.dense(tq)[:, :n]
        vals = np.array([om(*x)[0] for x in xs])
        sigma[k + 1] = sigma[k] + C * 0.5 * (b - a) * float(weights @ vals)

    def transform(x, w, acc):
        O = om(*x)[0]
        dO = np.asarray(dom(*x)) @ w
        vs = w / (C * O)
        dvs = (acc / (C * O) - w * dO / (C * O * O)) / (C * O)
        return vs, dvs

    vstar = np.empty_like(sol.v)
    astar = np.empty_like(sol.v)
    for i, (x, w, acc) in enumerate(zip(sol.x, sol.v, sol.accel)):
        vstar[i], astar[i] = transform(x, w, acc)

    # residual on nodes and interior dense samples
    frac = np.arange(samples_per_step) / samples_per_step
    ts = (s[:-1, None] + np.diff(s)[:, None] * frac[None, :]).ravel()
    ts = np.append(ts, s[-1])
    Yd = sol.dense(ts)
    dYd = sol.dense(ts, derivative=True)
    worst = 0.0
    for y, dy in zip(Yd, dYd):
        x, w, acc = y[:n], y[n:], dy[n:]
        vs, dvs = transform(x, w, acc)
        Gs = mstar.gamma(x)
        r = dvs + np.einsum("kij,i,j->k", Gs, vs, vs)
        worst = max(worst, float(np.max(np.abs(r))))

    gstar = np.array([float(w @ mstar.g(x) @ w) for x, w in zip(sol.x, vstar)])
    out = GeodesicSolution(
        model=mstar, s=sigma if s[-1] >= s[0] else -sigma, x=sol.x.copy(), v=vstar,
        g_vv=gstar, charges={}, termination=sol.termination,
        boundary_point=sol.boundary_point, accel=astar,
        message=f"reparametrized with dsigma/dt = {C:g} * Omega")
    out.extra["residual"] = worst
    out.extra["source_parameter"] = s.copy()
    return out


# -- winding --------------------------------------------------------------------------

def winding_of(sol: GeodesicSolution, m: SpacetimeModel = None, tol: float = 1e-9):
    """Net deck periods traversed by the lifted curve, truncated toward zero.

    Translation lattices use the period basis; a single homothety ``p -> c p``
    (Clifton-Pohl) counts factors of ``c`` in the radial coordinate; a
    diagonal linear map counts factors along its first expanding axis.
    """
    m = m or sol.model
    q = m.quotient
    if q is None:
        raise ModelError(f"model {m.name!r} has no quotient structure")
    start, end = sol.x[0], sol.x[-1]
    if q.is_lattice:
        B = q.periods
        c, *_ = np.linalg.lstsq(B.T, end - start, rcond=None)
        return np.trunc(c + np.sign(c) * tol).astype(int)
    if len(q.generators) == 1:
        A, b = q.generators[0]
        if np.allclose(b, 0.0) and np.allclose(A, np.diag(np.diag(A))):
            d = np.diag(A)
            i = int(np.argmax(np.abs(np.log(np.abs(d)))))
            if np.allclose(A, d[0] * np.eye(len(d))):
                ratio = np.linalg.norm(end) / np.linalg.norm(start)
            else:
                ratio = end[i] / start[i]
            if ratio <= 0:
                raise ModelError("curve leaves the fundamental region of the deck map")
            c = math.log(ratio) / math.log(abs(d[i]))
            return np.array([int(np.trunc(c + math.copysign(tol, c)))])
    raise ModelError("winding numbers need a translation lattice or a single diagonal deck map")


def period_crossings(sol: GeodesicSolution, period_index: int = 0, k_max: int = 8):
    """Parameters at which the lifted curve has advanced ``k`` deck periods.

    Returns the list of ``s_k`` for ``k = 1..k_max`` (signed by direction of
    travel) at which the displacement projected on the period vector equals
    ``k`` periods, located by root finding on the dense output.
    """
    from scipy.optimize import brentq

    m = sol.model
    if m.quotient is None or not m.quotient.is_lattice:
        raise ModelError("period crossings need a translation lattice")
    b = m.quotient.periods[period_index]
    e = b / (b @ b)
    n = m.dim
    proj = (sol.x - sol.x[0]) @ e
    direction = 1.0 if proj[-1] >= 0 else -1.0
    out = []
    for k in range(1, k_max + 1):
        level = direction * k
        idx = np.nonzero(direction * (proj - level) >= 0)[0]
        if len(idx) == 0:
            break
        j = idx[0]
        if j == 0:
            out.append(float(sol.s[0]))
            continue
        g = lambda t: (sol.dense(t)[:n] - sol.x[0]) @ e - level  # noqa: E731
        lo, hi = sorted((sol.s[j - 1], sol.s[j]))
        out.append(float(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)))
    return out
