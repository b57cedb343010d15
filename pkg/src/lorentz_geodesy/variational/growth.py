"""Sampled diagnostics for the growth hypotheses of the connectedness results.

The static theorem asks ``beta`` to grow at most quadratically in the
distance from a base point; the stationary one also asks ``|delta|_R`` to
grow at most linearly. Both are checked by fitting power laws along rays.
This is a diagnostic, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .. import exprlang as el
from ..exceptions import ExprDomainError
from .static import as_stationary_spec

__all__ = ["GrowthReport", "growth_check"]

CITE_GROWTH = "growth hypotheses: beta at most quadratic and delta at most linear in the distance"


@dataclass
class GrowthReport:
    kind: str
    beta_exponent: float
    beta_lambda: float
    beta_ok: bool
    delta_exponent: float = None
    delta_slope: float = None
    delta_ok: bool = None
    max_distance: float = 0.0
    citation: str = CITE_GROWTH
    notes: list = field(default_factory=list)

    @property
    def hypotheses_hold(self):
        return self.beta_ok and (self.delta_ok in (None, True))

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in self.__dict__.items()}


def _rays(dim, count, rng):
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    d = rng.normal(size=(count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _fit_power(d, y):
    """Exponent of ``y ~ c d^a`` from the outer half of the samples."""
    mask = (y > 0) & (d > 0)
    d, y = d[mask], y[mask]
    if len(d) < 4:
        return np.nan, np.nan
    half = len(d) // 2
    a, b = np.polyfit(np.log(d[half:]), np.log(y[half:]), 1)
    return float(a), float(np.exp(b))


def _exit_radius(sp, x0, u, r_max):
    """Radius at which the ray leaves the domain (``None`` if it stays inside up to ``r_max``)."""
    if sp.in_domain(x0 + r_max * u):
        return None
    lo, hi = 0.0, r_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sp.in_domain(x0 + mid * u):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return lo


def growth_check(spec, kind: str = "static", x0=None, r_max: float = 1e3, samples: int = 160,
                 rays: int = 16, tol: float = 0.05, seed: int = 0) -> GrowthReport:
    """Fit ``beta`` against ``lambda d^2 + mu d^alpha + k`` (and ``|delta|_R`` against a power of ``d``).

    Distances are measured along chart rays from ``x0`` with the spatial
    metric (an upper bound for the Riemannian distance). Rays stop at the
    domain boundary. The reported exponent is the largest over rays;
    ``beta_lambda`` is the least-squares coefficient of ``d^2`` once
    ``beta(x0)`` is subtracted.
    """
    spec = as_stationary_spec(spec)
    if kind not in ("static", "stationary"):
        raise ValueError("kind must be 'static' or 'stationary'")
    sp = spec.spatial
    n = sp.dim
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, float)
    rng = np.random.default_rng(seed)
    bfn = el.compile_scalar([spec.beta], sp.coords)
    dfn = el.compile_scalar(list(spec.delta), sp.coords)
    b0 = bfn(*x0)[0]
    radii = np.concatenate([[0.0], np.geomspace(1e-3, r_max, samples)])
    worst_b, worst_d, lam, slope, dmax = -np.inf, -np.inf, np.nan, np.nan, 0.0
    notes = []
    for u in _rays(n, rays, rng):
        pts, speeds, betas, deltas = [], [], [], []
        rb = _exit_radius(sp, x0, u, r_max)
        ray_radii = radii if rb is None else rb * np.concatenate(
            [[0.0], 1.0 - np.geomspace(1.0, 1e-12, samples)[1:]])
        for r in ray_radii:
            x = x0 + r * u
            if not sp.in_domain(x):
                break
            try:
                g = sp.g(x)
                b = bfn(*x)[0]
                dv = np.asarray(dfn(*x), float)
            except ExprDomainError:
                break
            pts.append(r)
            speeds.append(np.sqrt(u @ g @ u))
            betas.append(b)
            deltas.append(np.sqrt(max(dv @ g @ dv, 0.0)))
        if len(pts) < 8:
            notes.append(f"ray {np.round(u, 3).tolist()} leaves the domain almost at once")
            continue
        d = cumulative_trapezoid(speeds, pts, initial=0.0)
        betas = np.array(betas)
        deltas = np.array(deltas)
        dmax = max(dmax, float(d[-1]))
        a_b, _ = _fit_power(d, np.abs(betas - b0))
        if np.isfinite(a_b):
            worst_b = max(worst_b, a_b)
        far = d > 0.5 * d[-1]
        lam_ray = float(np.linalg.lstsq(np.column_stack([d[far] ** 2, np.ones(far.sum())]),
                                        betas[far], rcond=None)[0][0])
        lam = lam_ray if not np.isfinite(lam) else max(lam, lam_ray)
        if kind == "stationary":
            a_d, _ = _fit_power(d, deltas)
            if np.isfinite(a_d):
                worst_d = max(worst_d, a_d)
            s_ray = float(np.polyfit(d[far], deltas[far], 1)[0])
            slope = s_ray if not np.isfinite(slope) else max(slope, s_ray)
    if not np.isfinite(worst_b):
        worst_b = 0.0  # beta constant along every ray
    rep = GrowthReport(kind, worst_b, lam, bool(worst_b <= 2.0 + tol), max_distance=dmax, notes=notes)
    if kind == "stationary":
        worst_d = 0.0 if not np.isfinite(worst_d) else worst_d
        rep.delta_exponent = worst_d
        rep.delta_slope = slope
        rep.delta_ok = bool(worst_d <= 1.0 + tol)
    return rep
