"""Built-in test problems: the flat-bottomed |x|^d family and diagonal quadratics.

Both families carry a ``family`` tag so the harness can run them through the
compiled trajectory kernels; they also work through the generic callable
interface like any user-defined problem.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .core import ObjectiveProblem, SmoothnessProfile, as_point

__all__ = ["fd_value", "fd_gradient", "make_fd_problem", "make_quadratic"]


def _check_fd_exponent(d) -> int:
    if int(d) != d or int(d) < 2:
        raise ValueError(f"f_d exponent must be an integer >= 2, got {d!r}")
    return int(d)


def fd_value(d: int, x: float) -> float:
    """Value of f_d: |x|^d inside the unit interval, linear with slope d outside.

    Convex, continuously differentiable, L = d(d-1) smooth on |x| <= 1 and
    affine beyond, with a degenerate (mu = 0) minimum at 0.
    """
    d = _check_fd_exponent(d)
    ax = abs(float(x))
    if ax < 1.0:
        return ax**d
    return 1.0 + d * (ax - 1.0)


def fd_gradient(d: int, x: float) -> float:
    """Derivative of ``fd_value``: d sign(x) |x|^{d-1} inside, d sign(x) outside."""
    d = _check_fd_exponent(d)
    x = float(x)
    ax = abs(x)
    if ax < 1.0:
        t = d * ax ** (d - 1)
    else:
        t = float(d)
    if x > 0.0:
        return t
    if x < 0.0:
        return -t
    return 0.0


def make_fd_problem(d: int) -> ObjectiveProblem:
    """1-D f_d problem with profile (0, d(d-1)) and minimizer 0."""
    d = _check_fd_exponent(d)

    def value(x: np.ndarray) -> float:
        return fd_value(d, x[0])

    def gradient(x: np.ndarray) -> np.ndarray:
        return np.array([fd_gradient(d, x[0])])

    def value_batch(X: np.ndarray) -> np.ndarray:
        ax = np.abs(np.asarray(X, dtype=np.float64)[:, 0])
        return np.where(ax < 1.0, ax**d, 1.0 + d * (ax - 1.0))

    return ObjectiveProblem(
        dimension=1,
        profile=SmoothnessProfile(mu=0.0, L=float(d * (d - 1))),
        value=value,
        gradient=gradient,
        minimizer=np.zeros(1),
        minimum_value=0.0,
        value_batch=value_batch,
        family=("fd", d),
    )


def make_quadratic(
    eigenvalues: Sequence[float], center: Optional[Sequence[float]] = None
) -> ObjectiveProblem:
    """Diagonal quadratic f(x) = (1/2) sum_i lam_i (x_i - c_i)^2.

    Profile is (min lam, max lam); the minimizer is ``center`` (zeros by
    default) with value 0.
    """
    lam = as_point(eigenvalues)
    if np.any(lam <= 0.0):
        raise ValueError("quadratic eigenvalues must all be positive")
    dim = lam.shape[0]
    c = np.zeros(dim) if center is None else as_point(center, dim)

    def value(x: np.ndarray) -> float:
        diff = x - c
        return 0.5 * float(np.dot(lam * diff, diff))

    def gradient(x: np.ndarray) -> np.ndarray:
        return lam * (x - c)

    def value_batch(X: np.ndarray) -> np.ndarray:
        diff = np.asarray(X, dtype=np.float64) - c
        return 0.5 * (diff * diff) @ lam

    return ObjectiveProblem(
        dimension=dim,
        profile=SmoothnessProfile(mu=float(lam.min()), L=float(lam.max())),
        value=value,
        gradient=gradient,
        minimizer=c.copy(),
        minimum_value=0.0,
        value_batch=value_batch,
        family=("quadratic", lam.copy(), c.copy()),
    )
