"""Result containers and solver options for the connection problem."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..integrator import GeodesicSolution
from .paths import PathDiscretization


class ConnectStatus(enum.Enum):
    FOUND = "Found"
    NOT_FOUND = "NotFound"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class VariationalOptions:
    """Numerical options shared by the connection solvers.

    ``gtol_per_node`` multiplies ``N`` to give the gradient tolerance of the
    reduced minimizations. ``eps`` is the penalty parameter of the
    splitting solver; ``None`` selects ``1/(4 (dt^2 + 1))``.
    """

    N: int = 64
    modes: int = 16
    max_iter: int = 3000
    gtol_per_node: float = 1e-8
    memory: int = 12
    escape_bound: float = 1e6
    escape_value: float = 1e8
    shoot: bool = True
    shoot_rtol: float = 1e-12
    residual_tol: float = 1e-6
    endpoint_tol: float = 1e-8
    eps: Optional[float] = None
    saddle_gtol: float = 1e-6
    max_mode_doublings: int = 3
    mode_tol: float = 1e-6
    dedup_action: float = 1e-6
    dedup_velocity: float = 1e-4
    seed: int = 0
    threads: Optional[int] = None

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("need at least 4 segments")
        if self.modes < 1 or self.modes >= self.N:
            raise ValueError("Galerkin modes must satisfy 1 <= m < N")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def worker_count(self):
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("LORENTZ_GEODESY_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                pass
        return 1


@dataclass
class ConnectionRecord:
    """One geodesic (or candidate) joining the two events."""

    path: Optional[PathDiscretization]
    action: float
    grad_norm: float
    residual: Optional[float] = None
    endpoint_error: Optional[float] = None
    winding: Optional[tuple] = None
    C_gamma: Optional[float] = None
    q: Optional[float] = None
    initial_velocity: Optional[np.ndarray] = None
    geodesic: Optional[GeodesicSolution] = None
    discrete_action: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def verified(self, tol):
        return (self.residual is not None and self.residual <= tol
                and self.endpoint_error is not None)

    def to_dict(self):
        def num(x):
            return None if x is None else float(x)

        d = {
            "action": num(self.action),
            "discrete_action": num(self.discrete_action),
            "grad_norm": num(self.grad_norm),
            "residual": num(self.residual),
            "endpoint_error": num(self.endpoint_error),
            "winding": None if self.winding is None else [int(k) for k in self.winding],
            "C_gamma": num(self.C_gamma),
            "q": num(self.q),
            "initial_velocity": None if self.initial_velocity is None
            else [float(v) for v in self.initial_velocity],
        }
        for k, v in sorted(self.extra.items()):
            if isinstance(v, (bool, int, float, str)) or v is None:
                d[k] = v
            elif isinstance(v, (list, tuple, np.ndarray)):
                d[k] = [float(a) for a in np.ravel(v)]
        return d


@dataclass
class ConnectednessResult:
    status: ConnectStatus
    records: list = field(default_factory=list)
    diagnostic: str = ""
    citation: str = ""
    method: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def found(self):
        return self.status is ConnectStatus.FOUND

    @property
    def best(self):
        return self.records[0] if self.records else None

    def to_dict(self):
        d = {
            "status": self.status.value,
            "method": self.method,
            "diagnostic": self.diagnostic,
            "citation": self.citation,
            "records": [r.to_dict() for r in self.records],
        }
        for k, v in sorted(self.extra.items()):
            if isinstance(v, (bool, int, float, str)) or v is None:
                d[k] = v
        return d
