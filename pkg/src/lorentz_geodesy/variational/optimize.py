"""Limited-memory quasi-Newton minimizer with domain-aware line search.

scipy's L-BFGS-B treats every trial point as admissible; the reduced
functionals here are only defined on an open domain and may be unbounded
below, so the line search must reject trial points outside the domain and
the driver must recognise minimizing sequences that run away.
"""

from __future__ import annotations

import collections
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from ..exceptions import DomainViolation, ExprDomainError


class OptimizeStatus(enum.Enum):
    CONVERGED = "converged"
    ESCAPE = "escape"
    MAX_ITER = "max_iterations"
    STALLED = "stalled"


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    f: float
    grad: np.ndarray
    gnorm: float
    iterations: int
    evaluations: int
    status: OptimizeStatus
    diagnostic: str = ""
    history: list = field(default_factory=list)


def laplacian_preconditioner(n_nodes: int, width: int, h: float, lead: int = 0):
    """Inverse of ``(2/h) tridiag(-1, 2, -1)`` applied column-wise to node blocks.

    The energy part of every discrete functional has this Hessian in flat
    charts, so it is a good initial inverse Hessian. ``lead`` leading
    entries (e.g. time coefficients) are passed through unchanged.
    """
    ab = np.zeros((3, n_nodes))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[2, :-1] = -1.0
    ab *= 2.0 / h

    def apply(v):
        out = v.copy()
        block = v[lead:].reshape(n_nodes, width)
        out[lead:] = solve_banded((1, 1), ab, block).ravel()
        return out

    return apply


def _safe_eval(fun, x):
    try:
        f, g = fun(x)
    except (DomainViolation, ExprDomainError, FloatingPointError, ZeroDivisionError):
        return None
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        return None
    return float(f), np.asarray(g, dtype=float)


def lbfgs(fun: Callable, x0, *, gtol: float = 1e-8, max_iter: int = 2000, memory: int = 12,
          precond: Optional[Callable] = None, escape_bound: float = 1e6,
          value_floor: Optional[float] = None, c1: float = 1e-4,
          max_backtracks: int = 60, window: int = 50) -> OptimizeOutcome:
    """Minimize ``fun(x) -> (value, gradient)``.

    Parameters
    ----------
    gtol : float
        Stop when the Euclidean gradient norm is at most ``gtol``.
    precond : callable, optional
        Initial inverse-Hessian operator for the two-loop recursion.
    escape_bound : float
        Iterates with ``max|x|`` above this are declared escaping.
    value_floor : float, optional
        Values below this are declared an escape (functional unbounded
        below along the iterates).
    window : int
        Iterations over which progress is judged. If the value stagnates
        while the gradient stays large the run stops; when most of those
        iterations had trial points rejected by the domain the iterates are
        pressing against the boundary, which is reported as an escape.
    """
    x = np.asarray(x0, dtype=float).copy()
    first = _safe_eval(fun, x)
    if first is None:
        raise DomainViolation("initial iterate is outside the domain of the functional")
    f, g = first
    nev = 1
    S = collections.deque(maxlen=memory)
    Y = collections.deque(maxlen=memory)
    H0 = precond or (lambda v: v)
    history = [(0, f, float(np.linalg.norm(g)))]
    recent = collections.deque(maxlen=window)  # (decrease, blocked) per iteration

    def out(status, it, msg=""):
        return OptimizeOutcome(x, f, g, float(np.linalg.norm(g)), it, nev, status, msg, history)

    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gtol:
            return out(OptimizeStatus.CONVERGED, it - 1)
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        r = H0(q)
        if S:
            y, s = Y[-1], S[-1]
            r *= float(s @ y) / float(y @ H0(y))
        for a, rho, s, y in reversed(alphas):
            b = rho * float(y @ r)
            r += (a - b) * s
        p = -r
        slope = float(g @ p)
        if not slope < 0:
            S.clear()
            Y.clear()
            p = -H0(g)
            slope = float(g @ p)
        step = 1.0
        if not S and precond is None:
            step = min(1.0, 1.0 / max(gnorm, 1e-300))
        blocked = 0
        accepted = None
        for _ in range(max_backtracks):
            xt = x + step * p
            trial = _safe_eval(fun, xt)
            nev += 1
            if trial is None:
                blocked += 1
            elif trial[0] <= f + c1 * step * slope:
                accepted = (xt, *trial)
                break
            step *= 0.5
        if accepted is None:
            if blocked:
                return out(OptimizeStatus.ESCAPE, it,
                           "minimizing sequence escapes: descent is blocked by the domain boundary "
                           f"(gradient norm {gnorm:.3g})")
            return out(OptimizeStatus.STALLED, it, f"line search failed (gradient norm {gnorm:.3g})")
        xn, fn, gn = accepted
        s, y = xn - x, gn - g
        if float(s @ y) > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            S.append(s)
            Y.append(y)
        f_old = f
        x, f, g = xn, fn, gn
        history.append((it, f, float(np.linalg.norm(g))))
        recent.append((f_old - f, blocked > 0))
        if len(recent) == window:
            gain = sum(d for d, _ in recent)
            if gain <= 1e-10 * (1.0 + abs(f)):
                if sum(b for _, b in recent) >= window // 2:
                    return out(OptimizeStatus.ESCAPE, it,
                               "minimizing sequence escapes: iterates press against the domain boundary "
                               f"with gradient norm {np.linalg.norm(g):.3g}")
                return out(OptimizeStatus.STALLED, it,
                           f"no progress over {window} iterations (gradient norm {np.linalg.norm(g):.3g})")
        if float(np.max(np.abs(x))) > escape_bound:
            return out(OptimizeStatus.ESCAPE, it,
                       f"minimizing sequence escapes: iterate norm {np.max(np.abs(x)):.3g} exceeds {escape_bound:.3g}")
        if value_floor is not None and f < value_floor:
            return out(OptimizeStatus.ESCAPE, it,
                       f"minimizing sequence escapes: functional value {f:.6g} fell below {value_floor:.6g}")
    if float(np.linalg.norm(g)) <= gtol:
        return out(OptimizeStatus.CONVERGED, max_iter)
    return out(OptimizeStatus.MAX_ITER, max_iter, f"iteration budget {max_iter} exhausted")
