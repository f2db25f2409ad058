"""Lyapunov energies, guaranteed-rate envelopes, and statistical verifiers.

The contracting quantity for the accelerated family is
E = f(x_plus) - f* + (gamma/2)||v - x*||^2.  The rate guarantees bound its
expectation at iterate k+1 by a closed-form factor times the initial energy;
``rate_bound`` evaluates those factors and ``contraction_check`` compares
Monte-Carlo mean energies against them with an explicit slack policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .core import ObjectiveProblem
from .noise import MnsOracleConfig, NoiseShape, NoiseStream
from .optimizers import Regime, ShangState

__all__ = [
    "LyapunovRecord",
    "lyapunov",
    "make_lyapunov_record",
    "rate_bound",
    "envelope_values",
    "MeanEnergyRecord",
    "ContractionReport",
    "contraction_check",
    "DescentCheckResult",
    "descent_check",
]


@dataclass(frozen=True)
class LyapunovRecord:
    """Energy decomposition at one iterate, with the envelope value beside it."""

    k: int
    energy: float
    suboptimality: float
    v_distance_sq: float
    bound: float


def lyapunov(problem: ObjectiveProblem, state: ShangState) -> float:
    """E(state) = f(x_plus) - f* + (gamma/2)||v - x*||^2."""
    if not problem.has_minimizer:
        raise ValueError(
            "problem has no minimizer metadata and is not admitted to bound checking"
        )
    sub = float(problem.value(state.x_plus)) - problem.minimum_value
    diff = state.v - problem.minimizer
    vd = float(np.dot(diff, diff))
    return sub + 0.5 * state.gamma * vd


def make_lyapunov_record(
    problem: ObjectiveProblem, state: ShangState, bound: float = math.nan
) -> LyapunovRecord:
    if not problem.has_minimizer:
        raise ValueError(
            "problem has no minimizer metadata and is not admitted to bound checking"
        )
    sub = float(problem.value(state.x_plus)) - problem.minimum_value
    diff = state.v - problem.minimizer
    vd = float(np.dot(diff, diff))
    return LyapunovRecord(
        k=state.k, energy=sub + 0.5 * state.gamma * vd, suboptimality=sub,
        v_distance_sq=vd, bound=bound,
    )


def rate_bound(
    regime: Regime, k: int, e0: float, *, alpha_tilde: float = 0.0, m: float = 0.0
) -> float:
    """Guaranteed upper bound on E[E] at iterate k+1, given the initial energy.

    Strongly convex, m = 0: e0 (1+alpha)^-(k+1); strongly convex, m = 1:
    e0 (1-alpha~)^(k+1) (only m in {0, 1} carries a guarantee there).
    Convex, any m >= 0: e0 (1+2m)(2+2m)/((k+2+2m)(k+3+2m)), which at m = 0 is
    the 2/((k+2)(k+3)) accelerated sublinear rate.
    """
    if e0 < 0.0:
        raise ValueError("initial energy must be >= 0")
    if k < 0:
        raise ValueError("index must be >= 0")
    regime = Regime(regime)
    if regime is Regime.STRONGLY_CONVEX:
        if not 0.0 < alpha_tilde < 1.0:
            raise ValueError("strongly convex rates need alpha~ in (0, 1)")
        if m == 0.0:
            return e0 * (1.0 + alpha_tilde) ** (-(k + 1))
        if m == 1.0:
            return e0 * (1.0 - alpha_tilde) ** (k + 1)
        raise ValueError(f"no strongly-convex rate guarantee for m = {m}")
    if m < 0.0:
        raise ValueError("damping m must be >= 0")
    return e0 * ((1.0 + 2.0 * m) * (2.0 + 2.0 * m)) / ((k + 2 + 2.0 * m) * (k + 3 + 2.0 * m))


def envelope_values(
    regime: Regime,
    ks: Union[Sequence[int], np.ndarray],
    e0: float,
    *,
    alpha_tilde: float = 0.0,
    m: float = 0.0,
) -> np.ndarray:
    """Envelope at each iterate j in ``ks``: e0 at j=0, rate_bound(j-1) after.

    The rate guarantees bound the energy at iterate k+1 in terms of step
    index k, so the envelope seen at iterate j is the k = j-1 bound.
    """
    ks = np.asarray(ks, dtype=np.int64)
    out = np.empty(ks.shape, dtype=np.float64)
    for i, j in enumerate(ks):
        out[i] = e0 if j == 0 else rate_bound(regime, int(j) - 1, e0, alpha_tilde=alpha_tilde, m=m)
    return out


# ---------------------------------------------------------------------------
# contraction checking


@dataclass(frozen=True)
class MeanEnergyRecord:
    """Monte-Carlo mean energy at one recorded iterate."""

    k: int
    mean_energy: float
    std_energy: float
    n_runs: int


@dataclass(frozen=True)
class ContractionReport:
    passed: bool
    first_violation_k: Optional[int]
    n_checked: int
    worst_ratio: float
    worst_k: Optional[int]

    def __str__(self):
        verdict = "pass" if self.passed else f"FAIL at k={self.first_violation_k}"
        return (
            f"contraction {verdict}: {self.n_checked} recorded iterates, "
            f"worst mean/allowed ratio {self.worst_ratio:.6g} at k={self.worst_k}"
        )


def _stochastic_slack(rec: MeanEnergyRecord) -> float:
    if rec.mean_energy <= 0.0:
        return 0.05
    rel_se = (rec.std_energy / math.sqrt(rec.n_runs)) / rec.mean_energy
    return max(0.05, 3.0 * rel_se)


def _deterministic_slack(rec: MeanEnergyRecord) -> float:
    return 1e-9


def contraction_check(
    records: Iterable[MeanEnergyRecord],
    bound_fn: Callable[[int], float],
    tolerance_policy: Union[str, Callable[[MeanEnergyRecord], float]] = "stochastic",
) -> ContractionReport:
    """Check mean energy <= bound_fn(k) * (1 + slack) at every recorded k.

    ``tolerance_policy`` is "stochastic" (slack = max(5%, 3 relative standard
    errors); requires >= 100 runs per record), "deterministic" (slack 1e-9,
    for single exact trajectories), or a callable returning the slack.
    """
    if tolerance_policy == "stochastic":
        policy, needs_runs = _stochastic_slack, True
    elif tolerance_policy == "deterministic":
        policy, needs_runs = _deterministic_slack, False
    elif callable(tolerance_policy):
        policy, needs_runs = tolerance_policy, False
    else:
        raise ValueError(f"unknown tolerance policy {tolerance_policy!r}")

    records = list(records)
    if not records:
        raise ValueError("no records to check")
    first_violation = None
    worst_ratio = -math.inf
    worst_k = None
    for rec in records:
        if needs_runs and rec.n_runs < 100:
            raise ValueError(
                f"insufficient statistics at k={rec.k}: {rec.n_runs} runs < 100 "
                f"required by the stochastic policy"
            )
        allowed = bound_fn(rec.k) * (1.0 + policy(rec))
        ok = rec.mean_energy <= allowed
        if allowed > 0.0:
            ratio = rec.mean_energy / allowed
        else:
            ratio = 0.0 if ok else math.inf
        if not (ratio <= worst_ratio):  # NaN-aware: NaN becomes the worst entry
            worst_ratio, worst_k = ratio, rec.k
        if not ok and first_violation is None:
            first_violation = rec.k
    return ContractionReport(
        passed=first_violation is None,
        first_violation_k=first_violation,
        n_checked=len(records),
        worst_ratio=worst_ratio,
        worst_k=worst_k,
    )


# ---------------------------------------------------------------------------
# expected-descent verification for the auxiliary step


@dataclass(frozen=True)
class DescentCheckResult:
    mean_lhs: float
    rhs: float
    std_err: float
    n_samples: int
    passed: bool


def descent_check(
    problem: ObjectiveProblem,
    x,
    sigma: float,
    alpha_beta: float,
    n_samples: int,
    *,
    shape: NoiseShape = NoiseShape.ELEMENTWISE,
    averaging: int = 1,
    seed: int = 0,
) -> DescentCheckResult:
    """Monte-Carlo check of E[f(x - alpha_beta * g)] <= f(x) - (alpha_beta/2)||grad||^2.

    Only claimed for 0 < alpha_beta <= 1/(L(1+sigma_eff^2)) with sigma_eff^2
    the effective (averaged) noise constant; other stepsizes raise.  Pass rule
    is mean_lhs <= rhs + 3 standard errors of the sample mean; with sigma = 0
    the samples are identical and the comparison is exact.
    """
    x = problem.check_point(x)
    cfg = MnsOracleConfig(sigma=sigma, shape=shape, averaging_count=averaging, seed=seed)
    eff = cfg.effective_constant
    admissible = 1.0 / (problem.profile.L * (1.0 + eff))
    if not 0.0 < alpha_beta <= admissible * (1.0 + 1e-12):
        raise ValueError(
            f"alpha_beta = {alpha_beta} outside the admissible range "
            f"(0, {admissible}] where the descent property is guaranteed"
        )
    if n_samples < 2:
        raise ValueError("need at least 2 samples")

    grad = np.asarray(problem.gradient(x), dtype=np.float64)
    gnorm_sq = float(np.dot(grad, grad))
    if gnorm_sq == 0.0:
        raise ValueError("descent check is vacuous at a stationary point")
    rhs = float(problem.value(x)) - 0.5 * alpha_beta * gnorm_sq

    stream = NoiseStream(seed)
    k = cfg.averaging_count
    if cfg.shape is NoiseShape.SCALAR_FACTOR:
        zbar = stream.normals((n_samples, k)).mean(axis=1)
        g = (1.0 + sigma * zbar)[:, None] * grad[None, :]
    else:
        zbar = stream.normals((n_samples, k, x.shape[0])).mean(axis=1)
        g = (1.0 + sigma * zbar) * grad[None, :]
    xp = x[None, :] - alpha_beta * g
    if problem.value_batch is not None:
        fvals = np.asarray(problem.value_batch(xp), dtype=np.float64)
    else:
        fvals = np.array([problem.value(row) for row in xp])
    mean_lhs = float(fvals.mean())
    std_err = float(fvals.std(ddof=1)) / math.sqrt(n_samples)
    return DescentCheckResult(
        mean_lhs=mean_lhs, rhs=rhs, std_err=std_err, n_samples=n_samples,
        passed=mean_lhs <= rhs + 3.0 * std_err,
    )
