"""Problem descriptions shared by the optimizers and the harness.

A problem is a smooth function together with its curvature profile
(strong-convexity modulus ``mu`` and smoothness constant ``L``) and, when
known, its minimizer.  Methods only ever query the value/gradient callables;
the minimizer metadata exists so the analysis layer can measure
suboptimality and Lyapunov energies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SmoothnessProfile",
    "ObjectiveProblem",
    "as_point",
    "bregman_divergence",
    "three_point_identity_residual",
]


@dataclass(frozen=True)
class SmoothnessProfile:
    """Curvature bounds mu <= f'' <= L (as quadratic envelopes)."""

    mu: float
    L: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= self.L) or not np.isfinite(self.L):
            raise ValueError(
                f"smoothness profile needs 0 <= mu <= L < inf, got mu={self.mu}, L={self.L}"
            )
        if self.L <= 0.0:
            raise ValueError("smoothness constant L must be positive")

    @property
    def strongly_convex(self) -> bool:
        return self.mu > 0.0

    @property
    def condition_number(self) -> float:
        return self.L / self.mu if self.mu > 0.0 else np.inf


def as_point(x, dimension: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` to a finite float64 vector, optionally checking its length."""
    p = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if p.ndim != 1:
        raise ValueError(f"point must be a vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    if dimension is not None and p.shape[0] != dimension:
        raise ValueError(f"dimension mismatch: expected {dimension}, got {p.shape[0]}")
    return p


@dataclass(frozen=True, eq=False)
class ObjectiveProblem:
    """A smooth objective with curvature metadata.

    Parameters
    ----------
    dimension : int
        Ambient dimension d.
    profile : SmoothnessProfile
        Curvature bounds (mu, L).
    value, gradient : callables
        Evaluate f and grad f at a length-d vector.
    minimizer, minimum_value : optional
        Known optimum.  Problems without them can be optimized but are not
        admitted to bound checking (energies need x* and f*).
    value_batch : optional callable
        Vectorized value over an (n, d) array of points; used by the
        Monte-Carlo descent checks.  Must agree with ``value`` row-wise.
    family : optional tuple
        Structural tag (e.g. ``("fd", 4)``) that lets the harness route the
        problem to a compiled trajectory kernel.  Problems without a tag run
        through the generic single-step path.
    """

    dimension: int
    profile: SmoothnessProfile
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    minimizer: Optional[np.ndarray] = None
    minimum_value: Optional[float] = None
    value_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    family: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if (self.minimizer is None) != (self.minimum_value is None):
            raise ValueError("minimizer and minimum_value must be given together")
        if self.minimizer is not None:
            xs = as_point(self.minimizer, self.dimension)
            object.__setattr__(self, "minimizer", xs)
            gnorm = float(np.linalg.norm(np.asarray(self.gradient(xs), dtype=np.float64)))
            if gnorm > 1e-12 * max(1.0, self.profile.L):
                raise ValueError(
                    f"gradient norm {gnorm:.3e} at the declared minimizer exceeds "
                    f"first-order stationarity tolerance"
                )

    @property
    def has_minimizer(self) -> bool:
        return self.minimizer is not None

    def check_point(self, x) -> np.ndarray:
        return as_point(x, self.dimension)

    def suboptimality(self, x) -> float:
        """f(x) - f*; requires minimizer metadata."""
        if self.minimum_value is None:
            raise ValueError("problem has no known minimum; suboptimality undefined")
        return float(self.value(self.check_point(x))) - self.minimum_value


def bregman_divergence(problem: ObjectiveProblem, y, x) -> float:
    """D_f(y, x) = f(y) - f(x) - <grad f(x), y - x>.

    Nonnegative for convex f; between mu/2 and L/2 times ||y-x||^2 for
    problems in the (mu, L) class.
    """
    yv = problem.check_point(y)
    xv = problem.check_point(x)
    gx = np.asarray(problem.gradient(xv), dtype=np.float64)
    return float(problem.value(yv)) - float(problem.value(xv)) - float(np.dot(gx, yv - xv))


def three_point_identity_residual(problem: ObjectiveProblem, x, y, z) -> float:
    """Residual of <grad f(y) - grad f(x), y - z> = D(z,y) + D(y,x) - D(z,x).

    Exactly zero in real arithmetic for any f; the returned value measures
    floating-point error and is used as a self-consistency probe.
    """
    xv = problem.check_point(x)
    yv = problem.check_point(y)
    zv = problem.check_point(z)
    gx = np.asarray(problem.gradient(xv), dtype=np.float64)
    gy = np.asarray(problem.gradient(yv), dtype=np.float64)
    lhs = float(np.dot(gy - gx, yv - zv))
    rhs = (
        bregman_divergence(problem, zv, yv)
        + bregman_divergence(problem, yv, xv)
        - bregman_divergence(problem, zv, xv)
    )
    return lhs - rhs
