"""Single-step update rules and stepsize schedules.

The main family solves a Gauss-Seidel discretization of the damped
accelerated-gradient flow.  All implicit updates are linear in the unknown,
so each is solved in closed form (one division); no inner iterations.

Two regimes are supported.  The strongly convex regime uses constant
coefficients and a constant time-scale gamma = mu; the convex regime uses the
decaying stepsizes alpha_k = 2/(k+1) with a decreasing gamma_k schedule.  The
damped variant ("++") replaces the x-update stepsize by the effective
alpha~ = alpha/(1 + m*alpha); m = 0 recovers the undamped method bitwise.

Expression grouping in the update formulas is deliberately fixed (and
mirrored verbatim in the compiled kernels) so that compiled and pure
trajectories agree bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import ObjectiveProblem, SmoothnessProfile, as_point

__all__ = [
    "Regime",
    "ScheduleParams",
    "ShangState",
    "SnagState",
    "SnagOriginalParams",
    "SnagHnagParams",
    "BaselineState",
    "BaselineMethod",
    "build_schedule",
    "schedule_condition_residual",
    "schedule_condition_residuals",
    "make_initial_shang_state",
    "shang_step",
    "shangpp_step",
    "shangpp_dl_step",
    "snag_step_original",
    "snag_step_hnag",
    "snag_original_from_hnag",
    "make_snag_state",
    "make_baseline_state",
    "baseline_step",
]


class Regime(str, Enum):
    STRONGLY_CONVEX = "strongly_convex"
    CONVEX = "convex"


class BaselineMethod(str, Enum):
    SGD = "sgd"
    SHB = "shb"
    NAG = "nag"


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class ScheduleParams:
    """Resolved stepsize coefficients for one iteration index k.

    ``gamma`` is the raw time-scale used inside the v-update; ``energy_gamma``
    is the Lyapunov weight (mu in the strongly convex regime, the effective
    gamma~_k = gamma_k/(1+m*alpha_k) in the convex regime).  ``*_next`` fields
    are the k+1 values, needed because the auxiliary iterate formed inside a
    step uses next-index coefficients.
    """

    regime: Regime
    k: int
    alpha: float
    alpha_tilde: float
    beta: float
    gamma: float
    m: float
    mu: float
    sigma: float
    alpha_tilde_next: float
    beta_next: float
    gamma_next: float
    energy_gamma: float
    energy_gamma_next: float

    @property
    def aux_step(self) -> float:
        """Stepsize of the auxiliary gradient step at this index: alpha~_k beta_k."""
        return self.alpha_tilde * self.beta

    @property
    def aux_step_next(self) -> float:
        return self.alpha_tilde_next * self.beta_next


def _convex_coeffs(k: int, m: float, csq: float, c2L: float):
    # Canonical grouping; the compiled kernels repeat these expressions.
    a = 2.0 / (k + 1)
    at = 2.0 / (k + 1 + 2.0 * m)
    gm = a * at * c2L
    b = a * csq / gm
    ge = at * at * c2L
    return a, at, gm, b, ge


def build_schedule(
    regime: Regime,
    profile: SmoothnessProfile,
    sigma: float,
    m: float = 0.0,
    alpha: Optional[float] = None,
    k: int = 0,
) -> ScheduleParams:
    """Resolve the theory-backed coefficients at iteration k.

    Strongly convex: ``alpha`` is the effective stepsize alpha~ (defaults to
    sqrt(mu/L)/(1+sigma^2), the largest admissible value); the raw stepsize is
    alpha~/(1 - m*alpha~) and gamma = mu.  Convex: fully determined decaying
    schedule, no free stepsize.
    """
    regime = Regime(regime)
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    if m < 0.0:
        raise ValueError("damping m must be >= 0")
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    csq = 1.0 + sigma * sigma

    if regime is Regime.STRONGLY_CONVEX:
        mu, L = profile.mu, profile.L
        if mu <= 0.0:
            raise ValueError("strongly convex schedule requires mu > 0")
        at = math.sqrt(mu / L) / csq if alpha is None else float(alpha)
        if not 0.0 < at:
            raise ValueError(f"stepsize must be positive, got {at}")
        if m * at >= 1.0:
            raise ValueError(
                f"alpha~ = {at} with m = {m} leaves no finite raw stepsize (need m*alpha~ < 1)"
            )
        a = at / (1.0 - m * at)
        b = at * csq / mu
        return ScheduleParams(
            regime=regime, k=k, alpha=a, alpha_tilde=at, beta=b, gamma=mu,
            m=m, mu=mu, sigma=sigma,
            alpha_tilde_next=at, beta_next=b, gamma_next=mu,
            energy_gamma=mu, energy_gamma_next=mu,
        )

    if alpha is not None:
        raise ValueError("the convex schedule is fully determined; do not pass a stepsize")
    mu, L = profile.mu, profile.L
    c2L = csq * csq * L
    a, at, gm, b, ge = _convex_coeffs(k, m, csq, c2L)
    _, at1, gm1, b1, ge1 = _convex_coeffs(k + 1, m, csq, c2L)
    return ScheduleParams(
        regime=regime, k=k, alpha=a, alpha_tilde=at, beta=b, gamma=gm,
        m=m, mu=mu, sigma=sigma,
        alpha_tilde_next=at1, beta_next=b1, gamma_next=gm1,
        energy_gamma=ge, energy_gamma_next=ge1,
    )


def schedule_condition_residual(sched_k: ScheduleParams, sched_k1: ScheduleParams) -> float:
    """Residual of the one-sided schedule condition between consecutive steps.

    Evaluated on the effective pair (alpha~_k, energy gamma), which is the
    pair the convergence proofs constrain:
    (gamma~_{k+1} - gamma~_k)/alpha~_k - (mu - gamma~_{k+1}).
    Nonpositive (up to rounding) for all built-in schedules; identically zero
    for constant strongly convex schedules.
    """
    if sched_k1.k != sched_k.k + 1 or sched_k1.regime is not sched_k.regime:
        raise ValueError("arguments must be the same schedule at consecutive indices")
    ge0, ge1 = sched_k.energy_gamma, sched_k1.energy_gamma
    return (ge1 - ge0) / sched_k.alpha_tilde - (sched_k.mu - ge1)


def schedule_condition_residuals(
    regime: Regime,
    profile: SmoothnessProfile,
    sigma: float,
    m: float,
    ks: np.ndarray,
) -> np.ndarray:
    """Vectorized ``schedule_condition_residual`` over an array of indices k.

    Same formulas as the pairwise op, evaluated with numpy so that sweeping
    k <= 1e6 is cheap; the pairwise op cross-checks this on a subgrid.
    """
    ks = np.asarray(ks, dtype=np.float64)
    if Regime(regime) is Regime.STRONGLY_CONVEX:
        return np.zeros_like(ks)
    csq = 1.0 + sigma * sigma
    c2L = csq * csq * profile.L
    at0 = 2.0 / (ks + 1 + 2.0 * m)
    at1 = 2.0 / (ks + 2 + 2.0 * m)
    ge0 = at0 * at0 * c2L
    ge1 = at1 * at1 * c2L
    return (ge1 - ge0) / at0 - (profile.mu - ge1)


# ---------------------------------------------------------------------------
# accelerated-family states and steps


@dataclass(frozen=True, eq=False)
class ShangState:
    """Iterates of the accelerated family at index k.

    ``x_plus`` is the auxiliary iterate x - (alpha~_k beta_k) g(x_k); it is the
    point whose suboptimality the rate guarantees speak about.  ``gamma`` is
    the Lyapunov weight carried to index k.  ``last_g`` is the gradient sample
    drawn at x_k: it formed x_plus and is reused by the next x-update, so each
    evaluation point costs exactly one oracle draw.
    """

    x: np.ndarray
    v: np.ndarray
    x_plus: np.ndarray
    gamma: float
    k: int
    last_g: np.ndarray


def make_initial_shang_state(
    problem: ObjectiveProblem, x0, v0, sched0: ScheduleParams, oracle
) -> ShangState:
    """Draw g(x0) and form the k=0 state including its auxiliary iterate."""
    if sched0.k != 0:
        raise ValueError("initial state needs the k=0 schedule")
    x0 = problem.check_point(x0)
    v0 = problem.check_point(v0)
    g0 = np.asarray(oracle.sample(problem.gradient(x0)), dtype=np.float64)
    x_plus = x0 - sched0.aux_step * g0
    return ShangState(x=x0, v=v0, x_plus=x_plus, gamma=sched0.energy_gamma, k=0, last_g=g0)


def _accelerated_step(
    state: ShangState,
    sched: ScheduleParams,
    oracle,
    problem: ObjectiveProblem,
    x_stepsize: float,
) -> ShangState:
    if sched.k != state.k:
        raise ValueError(f"schedule is for k={sched.k} but state is at k={state.k}")
    st, b = x_stepsize, sched.beta
    x1 = (state.x + st * state.v - (st * b) * state.last_g) / (1.0 + st)
    g1 = np.asarray(oracle.sample(problem.gradient(x1)), dtype=np.float64)
    c1 = sched.alpha * (sched.mu / sched.gamma)
    c2 = sched.alpha / sched.gamma
    v1 = (state.v + c1 * x1 - c2 * g1) / (1.0 + c1)
    x_plus = x1 - (sched.alpha_tilde_next * sched.beta_next) * g1
    return ShangState(
        x=x1, v=v1, x_plus=x_plus, gamma=sched.energy_gamma_next, k=state.k + 1, last_g=g1
    )


def shang_step(state: ShangState, sched: ScheduleParams, oracle, problem) -> ShangState:
    """One undamped step: x-update with alpha_k, v-update with (alpha_k, gamma_k).

    Reuses state.last_g as g(x_k) and draws exactly one fresh sample at the
    new point x_{k+1}; that sample forms x_plus and is carried forward.
    """
    if sched.m != 0.0:
        raise ValueError("undamped step requires an m=0 schedule (use shangpp_step for m > 0)")
    return _accelerated_step(state, sched, oracle, problem, sched.alpha)


def shangpp_step(state: ShangState, sched: ScheduleParams, oracle, problem) -> ShangState:
    """One damped step: x-update stepsize alpha~_k, v-update unchanged.

    With m = 0 the schedule gives alpha~ = alpha and the output is bitwise
    identical to ``shang_step`` on the same stream.
    """
    return _accelerated_step(state, sched, oracle, problem, sched.alpha_tilde)


def shangpp_dl_step(
    state: ShangState, alpha: float, gamma: float, m: float, oracle, problem
) -> ShangState:
    """Practical one-draw variant: v first, then x, beta fixed at alpha/gamma.

    Draws a single gradient sample at x_k per iteration (no second evaluation
    point), which is the form intended for training loops.  Carries no
    Lyapunov weight semantics; state.gamma stores the constant gamma.
    """
    if alpha <= 0.0 or gamma <= 0.0:
        raise ValueError("alpha and gamma must be positive")
    if m < 0.0:
        raise ValueError("damping m must be >= 0")
    at = alpha / (1.0 + m * alpha)
    s = alpha / gamma
    g = np.asarray(oracle.sample(problem.gradient(state.x)), dtype=np.float64)
    v1 = state.v - s * g
    x1 = (state.x + at * v1 - (at * s) * g) / (1.0 + at)
    return ShangState(x=x1, v=v1, x_plus=x1, gamma=gamma, k=state.k + 1, last_g=g)


# ---------------------------------------------------------------------------
# SNAG (four-parameter Nesterov variant) in both algebraic forms


@dataclass(frozen=True, eq=False)
class SnagState:
    x: np.ndarray
    v: np.ndarray
    k: int


def make_snag_state(problem: ObjectiveProblem, x0, v0=None) -> SnagState:
    x0 = problem.check_point(x0)
    v0 = x0.copy() if v0 is None else problem.check_point(v0)
    return SnagState(x=x0, v=v0, k=0)


@dataclass(frozen=True)
class SnagOriginalParams:
    """Coefficients of the averaging form: alpha_hat, s, beta_hat, eta."""

    alpha_hat: float
    s: float
    beta_hat: float
    eta: float


@dataclass(frozen=True)
class SnagHnagParams:
    """Coefficients of the implicit flow form at index k+1, plus mu."""

    alpha: float
    beta: float
    gamma: float
    mu: float

    def __post_init__(self):
        if self.alpha <= 0.0 or self.gamma <= 0.0:
            raise ValueError("alpha and gamma must be positive")
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")


def snag_original_from_hnag(p: SnagHnagParams) -> SnagOriginalParams:
    """Parameter map between the two forms (they generate identical iterates)."""
    beta_hat = 1.0 / (1.0 + p.alpha * (p.mu / p.gamma))
    return SnagOriginalParams(
        alpha_hat=1.0 / (1.0 + p.alpha),
        s=p.alpha * p.beta,
        beta_hat=beta_hat,
        eta=beta_hat * p.alpha / p.gamma,
    )


def snag_step_original(
    state: SnagState, params: SnagOriginalParams, oracle, problem
) -> SnagState:
    """v_{k+1} = b^ v + (1-b^) x - eta g;  x_{k+1} = a^ x + (1-a^) v_{k+1} - a^ s g."""
    g = np.asarray(oracle.sample(problem.gradient(state.x)), dtype=np.float64)
    ah, bh = params.alpha_hat, params.beta_hat
    v1 = bh * state.v + (1.0 - bh) * state.x - params.eta * g
    x1 = ah * state.x + (1.0 - ah) * v1 - (ah * params.s) * g
    return SnagState(x=x1, v=v1, k=state.k + 1)


def snag_step_hnag(state: SnagState, params: SnagHnagParams, oracle, problem) -> SnagState:
    """Closed-form solve of the implicit form; one draw at x_k, v before x."""
    g = np.asarray(oracle.sample(problem.gradient(state.x)), dtype=np.float64)
    a, gm = params.alpha, params.gamma
    c1 = a * (params.mu / gm)
    c2 = a / gm
    v1 = (state.v + c1 * state.x - c2 * g) / (1.0 + c1)
    x1 = (state.x + a * v1 - (a * params.beta) * g) / (1.0 + a)
    return SnagState(x=x1, v=v1, k=state.k + 1)


# ---------------------------------------------------------------------------
# baselines


@dataclass(frozen=True, eq=False)
class BaselineState:
    """x plus one momentum buffer (gradient average for SHB, displacement for NAG)."""

    x: np.ndarray
    momentum_buffer: np.ndarray
    k: int


def make_baseline_state(problem: ObjectiveProblem, x0) -> BaselineState:
    x0 = problem.check_point(x0)
    return BaselineState(x=x0, momentum_buffer=np.zeros_like(x0), k=0)


def baseline_step(
    method: BaselineMethod,
    state: BaselineState,
    lr: float,
    momentum: float,
    oracle,
    problem: ObjectiveProblem,
) -> BaselineState:
    """One step of SGD, heavy ball, or Nesterov lookahead descent."""
    method = BaselineMethod(method)
    if lr <= 0.0:
        raise ValueError("lr must be positive")
    if not 0.0 <= momentum < 1.0:
        raise ValueError("momentum must lie in [0, 1)")
    if method is BaselineMethod.SGD:
        g = np.asarray(oracle.sample(problem.gradient(state.x)), dtype=np.float64)
        return BaselineState(x=state.x - lr * g, momentum_buffer=state.momentum_buffer, k=state.k + 1)
    if method is BaselineMethod.SHB:
        g = np.asarray(oracle.sample(problem.gradient(state.x)), dtype=np.float64)
        buf = momentum * state.momentum_buffer + g
        return BaselineState(x=state.x - lr * buf, momentum_buffer=buf, k=state.k + 1)
    # NAG: gradient at the lookahead point; buffer holds the last displacement
    y = state.x + momentum * state.momentum_buffer
    g = np.asarray(oracle.sample(problem.gradient(y)), dtype=np.float64)
    x1 = y - lr * g
    return BaselineState(x=x1, momentum_buffer=x1 - state.x, k=state.k + 1)
