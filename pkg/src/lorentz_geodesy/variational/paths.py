"""Discretized curves with fixed endpoints.

A path lives on the uniform grid ``s_i = i/N``. Spatial coordinates are
piecewise linear through the nodes. An optional time coordinate (always
the first chart coordinate) is either nodal, i.e. also piecewise linear,
or spectral: the affine interpolant ``j*(s) = t_p + s*dt`` plus a sine
series that vanishes at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class NodalTime:
    """Time values at the interior nodes."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))


@dataclass(frozen=True)
class GalerkinTime:
    """Coefficients ``a_l`` of ``sin(l*pi*s)``, ``l = 1..m``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).reshape(-1))

    @property
    def modes(self):
        return len(self.coeffs)


TimeRep = Union[None, NodalTime, GalerkinTime]


def sine_basis(m: int, s):
    """``(B, dB)`` with ``B[l-1] = sin(l pi s)`` and ``dB`` its s-derivative."""
    s = np.asarray(s, dtype=float)
    lpi = np.pi * np.arange(1, m + 1)
    arg = np.multiply.outer(lpi, s)
    return np.sin(arg), lpi.reshape((-1,) + (1,) * s.ndim) * np.cos(arg)


@dataclass(frozen=True)
class PathDiscretization:
    """Candidate curve from ``p`` to ``q``.

    Parameters
    ----------
    p, q : array_like
        Endpoints in chart coordinates. With a time representation the
        first entry is the time coordinate.
    nodes : ndarray, shape (N-1, k)
        Interior spatial nodes; ``k`` excludes the time coordinate when one
        is represented separately.
    time : None, NodalTime or GalerkinTime
    """

    p: np.ndarray
    q: np.ndarray
    nodes: np.ndarray
    time: TimeRep = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if p.shape != q.shape:
            raise ValueError("endpoints must have equal dimension")
        k = len(p) - (0 if self.time is None else 1)
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, k)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "nodes", nodes)
        if isinstance(self.time, NodalTime) and len(self.time.values) != len(nodes):
            raise ValueError("nodal time needs one value per interior node")

    # -- construction ----------------------------------------------------------

    @classmethod
    def straight(cls, p, q, N=64, time="none", modes=16, lift=None):
        """Chart-straight interpolant.

        ``time`` is ``'none'``, ``'nodal'`` or ``'galerkin'``. ``lift``
        replaces the spatial part of ``q`` for the interpolation only
        (used for winding classes, where ``q`` itself is the lifted point).
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if N < 2:
            raise ValueError("need at least two segments")
        s = np.arange(1, N) / N
        off = 0 if time == "none" else 1
        xq = q[off:] if lift is None else np.asarray(lift, dtype=float)
        nodes = p[off:] + np.outer(s, xq - p[off:])
        if time == "none":
            rep = None
        elif time == "nodal":
            rep = NodalTime(p[0] + s * (q[0] - p[0]))
        elif time == "galerkin":
            rep = GalerkinTime(np.zeros(modes))
        else:
            raise ValueError(f"unknown time representation {time!r}")
        if lift is not None:
            q = np.concatenate([q[:off], xq])
        return cls(p, q, nodes, rep)

    @property
    def N(self):
        return self.nodes.shape[0] + 1

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def has_time(self):
        return self.time is not None

    @property
    def dt(self):
        return float(self.q[0] - self.p[0]) if self.has_time else 0.0

    def spatial_nodes(self):
        """All spatial nodes including the endpoints, shape ``(N+1, k)``."""
        off = 0 if self.time is None else 1
        return np.vstack([self.p[off:], self.nodes, self.q[off:]])

    def time_nodes(self):
        """Time at ``s_i = i/N`` including the endpoints."""
        s = np.arange(self.N + 1) / self.N
        if isinstance(self.time, NodalTime):
            return np.concatenate([[self.p[0]], self.time.values, [self.q[0]]])
        if isinstance(self.time, GalerkinTime):
            B, _ = sine_basis(self.time.modes, s)
            t = self.p[0] + s * self.dt + self.time.coeffs @ B
            t[0], t[-1] = self.p[0], self.q[0]
            return t
        raise ValueError("path has no time representation")

    def full_nodes(self):
        """Nodes of the whole chart curve, shape ``(N+1, dim)``."""
        x = self.spatial_nodes()
        if self.time is None:
            return x
        return np.hstack([self.time_nodes()[:, None], x])

    def tprime_norm2(self):
        """``int_0^1 t'^2 ds``, exact for both time representations."""
        if isinstance(self.time, GalerkinTime):
            lpi = np.pi * np.arange(1, self.time.modes + 1)
            return self.dt ** 2 + 0.5 * float(np.sum((self.time.coeffs * lpi) ** 2))
        t = self.time_nodes()
        return float(np.sum(np.diff(t) ** 2) * self.N)

    # -- flat parameter vector ---------------------------------------------------

    def free_vector(self):
        """Free coordinates: time part first (if any), then the nodes."""
        parts = []
        if isinstance(self.time, NodalTime):
            parts.append(self.time.values)
        elif isinstance(self.time, GalerkinTime):
            parts.append(self.time.coeffs)
        parts.append(self.nodes.ravel())
        return np.concatenate(parts)

    def with_free(self, vec):
        vec = np.asarray(vec, dtype=float)
        if isinstance(self.time, NodalTime):
            nt = len(self.time.values)
            rep = NodalTime(vec[:nt])
        elif isinstance(self.time, GalerkinTime):
            nt = self.time.modes
            rep = GalerkinTime(vec[:nt])
        else:
            nt, rep = 0, None
        return replace(self, nodes=vec[nt:].reshape(self.nodes.shape), time=rep)

    def with_nodes(self, nodes):
        return replace(self, nodes=np.asarray(nodes, dtype=float).reshape(self.nodes.shape))

    def with_time(self, time: Optional[TimeRep]):
        return replace(self, time=time)

    def refine_modes(self, m: int):
        """Galerkin time with ``m`` modes (truncating or zero-padding)."""
        if not isinstance(self.time, GalerkinTime):
            raise ValueError("path has no Galerkin time")
        a = np.zeros(m)
        k = min(m, self.time.modes)
        a[:k] = self.time.coeffs[:k]
        return replace(self, time=GalerkinTime(a))
