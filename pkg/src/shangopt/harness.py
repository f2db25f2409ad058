"""Monte-Carlo experiment engine.

An experiment is (problem, method, sigma, run count, iteration count); each
run r draws its noise from the counter-based stream keyed (base_seed, r), so
results never depend on execution order and thread scheduling.  Aggregation
always reduces in ascending run index, making parallel output bitwise equal
to serial.

Built-in problem families are routed to the trajectory kernels; problems
without a family tag run through the generic single-step path (same streams,
same draw order, identical trajectories).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .analysis import MeanEnergyRecord, envelope_values
from .core import ObjectiveProblem, as_point
from .noise import MnsOracleConfig, NoiseShape, NoiseStream, NoisyGradientOracle
from .optimizers import (
    BaselineMethod,
    Regime,
    ShangState,
    SnagHnagParams,
    SnagOriginalParams,
    baseline_step,
    build_schedule,
    make_baseline_state,
    make_initial_shang_state,
    make_snag_state,
    shang_step,
    shangpp_dl_step,
    shangpp_step,
    snag_original_from_hnag,
    snag_step_original,
)

__all__ = [
    "METHOD_NAMES",
    "MethodSpec",
    "ExperimentSpec",
    "RunResult",
    "TrajectoryStats",
    "SweepPoint",
    "run_trajectory",
    "run_monte_carlo",
    "sigma_sweep",
]

METHOD_NAMES = ("shang", "shangpp", "shangpp_dl", "snag", "sgd", "shb", "nag")

DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class MethodSpec:
    """A method by name, with parameter overrides.

    ``tuning_sigma``, when set, resolves stepsize schedules (and baseline
    default learning rates) at that noise level instead of each cell's actual
    sigma — the frozen-hyperparameter protocol used by robustness sweeps.
    """

    name: str
    params: Mapping[str, float] = field(default_factory=dict)
    tuning_sigma: Optional[float] = None

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.name!r}; expected one of {METHOD_NAMES}")


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    problem: ObjectiveProblem
    method: MethodSpec
    sigma: float
    n_runs: int
    n_iters: int
    x0: np.ndarray
    base_seed: int = 0
    noise_shape: NoiseShape = NoiseShape.ELEMENTWISE
    averaging: int = 1
    record_every: int = 1
    max_budget: int = 10**9

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.n_runs < 1 or self.n_iters < 1:
            raise ValueError("n_runs and n_iters must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.n_runs * self.n_iters > self.max_budget:
            raise ValueError(
                f"budget exceeded: n_runs*n_iters = {self.n_runs * self.n_iters} "
                f"> {self.max_budget}"
            )
        if not self.problem.has_minimizer:
            raise ValueError(
                "harness experiments need minimizer metadata (suboptimality is the metric)"
            )
        object.__setattr__(self, "x0", as_point(self.x0, self.problem.dimension))
        object.__setattr__(self, "noise_shape", NoiseShape(self.noise_shape))

    @property
    def record_ks(self) -> np.ndarray:
        ks = list(range(0, self.n_iters + 1, self.record_every))
        if ks[-1] != self.n_iters:
            ks.append(self.n_iters)
        return np.asarray(ks, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RunResult:
    """One trajectory's records; diverged_at = -1 means the run completed."""

    ks: np.ndarray
    subopt: np.ndarray
    energy: np.ndarray
    diverged_at: int

    @property
    def diverged(self) -> bool:
        return self.diverged_at >= 0


@dataclass(frozen=True, eq=False)
class TrajectoryStats:
    """Per-recorded-k Monte-Carlo aggregates over the surviving runs.

    Diverged runs are excluded from every mean/std but counted.  ``bound`` is
    the guaranteed envelope (NaN for methods without one); ``e0_mean`` is the
    mean initial energy the envelope is anchored to.
    """

    ks: np.ndarray
    mean_subopt: np.ndarray
    std_subopt: np.ndarray
    mean_energy: np.ndarray
    std_energy: np.ndarray
    bound: np.ndarray
    n_runs: int
    diverged_runs: int
    e0_mean: float

    @property
    def all_diverged(self) -> bool:
        return self.diverged_runs >= self.n_runs

    def energy_records(self) -> list[MeanEnergyRecord]:
        n_alive = self.n_runs - self.diverged_runs
        return [
            MeanEnergyRecord(int(k), float(me), float(se), n_alive)
            for k, me, se in zip(self.ks, self.mean_energy, self.std_energy)
        ]


# ---------------------------------------------------------------------------
# method resolution


@dataclass(frozen=True)
class _Resolved:
    kind: str  # accel | dl | snag | baseline
    regime: Optional[Regime] = None
    m: float = 0.0
    base_at: Optional[float] = None  # strongly convex effective stepsize
    sig_s: float = 0.0  # sigma the schedule was resolved at
    dl_alpha: float = 0.0
    dl_gamma: float = 0.0
    snag: Optional[SnagOriginalParams] = None
    baseline: Optional[BaselineMethod] = None
    lr: float = 0.0
    momentum: float = 0.0

    @property
    def has_bound(self) -> bool:
        if self.kind != "accel":
            return False
        if self.regime is Regime.CONVEX:
            return True
        return self.m in (0.0, 1.0)


_KNOWN_PARAMS = {
    "shang": {"alpha_tilde", "regime"},
    "shangpp": {"alpha_tilde", "regime", "m"},
    "shangpp_dl": {"alpha", "gamma", "m"},
    "snag": {"alpha", "beta", "gamma", "mu", "alpha_hat", "s", "beta_hat", "eta"},
    "sgd": {"lr"},
    "shb": {"lr", "momentum"},
    "nag": {"lr", "momentum"},
}


def _resolve(method: MethodSpec, problem: ObjectiveProblem, sigma: float) -> _Resolved:
    params = dict(method.params)
    unknown = set(params) - _KNOWN_PARAMS[method.name]
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for method {method.name!r}")
    sig_s = sigma if method.tuning_sigma is None else method.tuning_sigma
    profile = problem.profile

    if method.name in ("shang", "shangpp"):
        regime = params.get("regime")
        if regime is None:
            regime = Regime.STRONGLY_CONVEX if profile.strongly_convex else Regime.CONVEX
        regime = Regime(regime)
        m = float(params.get("m", 1.0)) if method.name == "shangpp" else 0.0
        base_at = None
        if regime is Regime.STRONGLY_CONVEX:
            at = params.get("alpha_tilde")
            # resolve the default here so kernels and bounds share one number
            sched0 = build_schedule(regime, profile, sig_s, m=m, alpha=at, k=0)
            base_at = sched0.alpha_tilde
        elif "alpha_tilde" in params:
            raise ValueError("the convex schedule is fully determined; do not pass alpha_tilde")
        return _Resolved(kind="accel", regime=regime, m=m, base_at=base_at, sig_s=sig_s)

    if method.name == "shangpp_dl":
        return _Resolved(
            kind="dl",
            dl_alpha=float(params.get("alpha", 0.5)),
            dl_gamma=float(params.get("gamma", 1.0)),
            m=float(params.get("m", 1.5)),
            sig_s=sig_s,
        )

    if method.name == "snag":
        if {"alpha_hat", "s", "beta_hat", "eta"} <= set(params):
            snag = SnagOriginalParams(
                alpha_hat=float(params["alpha_hat"]), s=float(params["s"]),
                beta_hat=float(params["beta_hat"]), eta=float(params["eta"]),
            )
        elif {"alpha", "beta", "gamma"} <= set(params):
            hnag = SnagHnagParams(
                alpha=float(params["alpha"]), beta=float(params["beta"]),
                gamma=float(params["gamma"]), mu=float(params.get("mu", profile.mu)),
            )
            snag = snag_original_from_hnag(hnag)
        else:
            raise ValueError(
                "snag needs explicit parameters: either (alpha, beta, gamma[, mu]) "
                "or (alpha_hat, s, beta_hat, eta); no default schedule is provided"
            )
        return _Resolved(kind="snag", snag=snag, sig_s=sig_s)

    # baselines; default step 1/((1+sigma^2)L) at the tuning sigma
    lr = float(params.get("lr", 1.0 / ((1.0 + sig_s * sig_s) * profile.L)))
    momentum = float(params.get("momentum", 0.9 if method.name in ("shb", "nag") else 0.0))
    return _Resolved(
        kind="baseline", baseline=BaselineMethod(method.name), lr=lr,
        momentum=momentum, sig_s=sig_s,
    )


# ---------------------------------------------------------------------------
# single trajectories


def _noise_block_count(resolved: _Resolved, n_iters: int) -> int:
    # the accelerated family evaluates n_iters+1 points (one extra at x0)
    return n_iters + 1 if resolved.kind == "accel" else n_iters


def _run_kernel(spec: ExperimentSpec, resolved: _Resolved, run_index: int, desc) -> RunResult:
    kind, dexp, lam, cen = desc
    d = spec.problem.dimension
    elementwise = spec.noise_shape is NoiseShape.ELEMENTWISE
    per_point = spec.averaging * (d if elementwise else 1)
    total = _noise_block_count(resolved, spec.n_iters) * per_point
    noise = NoiseStream(spec.base_seed, run_index).normals(total)
    ks = spec.record_ks

    if resolved.kind == "accel":
        sub, en, div = _kernels.shang_trajectory(
            kind, dexp, lam, cen, spec.x0, spec.x0,
            resolved.regime is Regime.STRONGLY_CONVEX,
            spec.problem.profile.mu, spec.problem.profile.L,
            resolved.m, resolved.base_at if resolved.base_at is not None else 0.0,
            resolved.sig_s, spec.sigma, elementwise, spec.averaging,
            spec.n_iters, ks, noise,
        )
    elif resolved.kind == "dl":
        sub, en, div = _kernels.dl_trajectory(
            kind, dexp, lam, cen, spec.x0, spec.x0,
            resolved.dl_alpha, resolved.dl_gamma, resolved.m,
            spec.sigma, elementwise, spec.averaging, spec.n_iters, ks, noise,
        )
    elif resolved.kind == "snag":
        p = resolved.snag
        sub, en, div = _kernels.snag_trajectory(
            kind, dexp, lam, cen, spec.x0, spec.x0,
            p.alpha_hat, p.s, p.beta_hat, p.eta,
            spec.sigma, elementwise, spec.averaging, spec.n_iters, ks, noise,
        )
    else:
        codes = {BaselineMethod.SGD: 0, BaselineMethod.SHB: 1, BaselineMethod.NAG: 2}
        sub, en, div = _kernels.baseline_trajectory(
            kind, dexp, lam, cen, spec.x0, codes[resolved.baseline],
            resolved.lr, resolved.momentum,
            spec.sigma, elementwise, spec.averaging, spec.n_iters, ks, noise,
        )
    return RunResult(ks=ks, subopt=sub, energy=en, diverged_at=int(div))


def _run_generic(spec: ExperimentSpec, resolved: _Resolved, run_index: int) -> RunResult:
    problem = spec.problem
    cfg = MnsOracleConfig(
        sigma=spec.sigma, shape=spec.noise_shape,
        averaging_count=spec.averaging, seed=spec.base_seed,
    )
    oracle = NoisyGradientOracle(cfg, run_index)
    ks = spec.record_ks
    nrec = len(ks)
    sub = np.empty(nrec)
    en = np.full(nrec, math.nan)
    ri = 0
    diverged_at = -1
    fstar = problem.minimum_value
    xstar = problem.minimizer

    def record_energy(state: ShangState, idx: int) -> bool:
        nonlocal diverged_at
        s = float(problem.value(state.x_plus)) - fstar
        diff = state.v - xstar
        e = s + 0.5 * state.gamma * float(np.dot(diff, diff))
        if not (s <= DIVERGENCE_THRESHOLD) or not math.isfinite(e):
            diverged_at = idx
            sub[ri:] = math.nan
            en[ri:] = math.nan
            return False
        sub[ri] = s
        en[ri] = e
        return True

    def record_plain(x: np.ndarray, idx: int) -> bool:
        nonlocal diverged_at
        s = float(problem.value(x)) - fstar
        if not (s <= DIVERGENCE_THRESHOLD):
            diverged_at = idx
            sub[ri:] = math.nan
            en[ri:] = math.nan
            return False
        sub[ri] = s
        return True

    if resolved.kind == "accel":
        step = shang_step if resolved.m == 0.0 else shangpp_step
        sched = build_schedule(
            resolved.regime, problem.profile, resolved.sig_s, m=resolved.m,
            alpha=resolved.base_at, k=0,
        )
        state = make_initial_shang_state(problem, spec.x0, spec.x0, sched, oracle)
        if ri < nrec and ks[ri] == 0:
            if not record_energy(state, 0):
                return RunResult(ks, sub, en, diverged_at)
            ri += 1
        for k in range(spec.n_iters):
            if k > 0:
                sched = build_schedule(
                    resolved.regime, problem.profile, resolved.sig_s, m=resolved.m,
                    alpha=resolved.base_at, k=k,
                )
            try:
                state = step(state, sched, oracle, problem)
            except Exception as exc:
                raise RuntimeError(
                    f"{spec.method.name} failed at k={k}, run={run_index}: {exc}"
                ) from exc
            if ri < nrec and ks[ri] == k + 1:
                if not record_energy(state, k + 1):
                    break
                ri += 1
        return RunResult(ks, sub, en, diverged_at)

    if resolved.kind == "dl":
        state = ShangState(
            x=spec.x0.copy(), v=spec.x0.copy(), x_plus=spec.x0.copy(),
            gamma=resolved.dl_gamma, k=0, last_g=np.zeros_like(spec.x0),
        )
        if ri < nrec and ks[ri] == 0:
            record_plain(state.x, 0)
            ri += 1
        for k in range(spec.n_iters):
            state = shangpp_dl_step(
                state, resolved.dl_alpha, resolved.dl_gamma, resolved.m, oracle, problem
            )
            if ri < nrec and ks[ri] == k + 1:
                if not record_plain(state.x, k + 1):
                    break
                ri += 1
        return RunResult(ks, sub, en, diverged_at)

    if resolved.kind == "snag":
        sstate = make_snag_state(problem, spec.x0)
        if ri < nrec and ks[ri] == 0:
            record_plain(sstate.x, 0)
            ri += 1
        for k in range(spec.n_iters):
            sstate = snag_step_original(sstate, resolved.snag, oracle, problem)
            if ri < nrec and ks[ri] == k + 1:
                if not record_plain(sstate.x, k + 1):
                    break
                ri += 1
        return RunResult(ks, sub, en, diverged_at)

    bstate = make_baseline_state(problem, spec.x0)
    if ri < nrec and ks[ri] == 0:
        record_plain(bstate.x, 0)
        ri += 1
    for k in range(spec.n_iters):
        bstate = baseline_step(
            resolved.baseline, bstate, resolved.lr, resolved.momentum, oracle, problem
        )
        if ri < nrec and ks[ri] == k + 1:
            if not record_plain(bstate.x, k + 1):
                break
            ri += 1
    return RunResult(ks, sub, en, diverged_at)


def run_trajectory(spec: ExperimentSpec, run_index: int, engine: str = "auto") -> RunResult:
    """One seeded trajectory; deterministic given (base_seed, run_index).

    ``engine`` is "auto" (kernels when the problem family supports them),
    "kernel", or "generic" (single-step path; same streams, same results).
    """
    resolved = _resolve(spec.method, spec.problem, spec.sigma)
    desc = _kernels.kernel_descriptor(spec.problem)
    if engine == "kernel" and desc is None:
        raise ValueError("problem has no kernel family; use the generic engine")
    if engine not in ("auto", "kernel", "generic"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine != "generic" and desc is not None:
        try:
            return _run_kernel(spec, resolved, run_index, desc)
        except (ValueError, ZeroDivisionError) as exc:
            raise RuntimeError(
                f"{spec.method.name} failed in run={run_index}: {exc}"
            ) from exc
    return _run_generic(spec, resolved, run_index)


# ---------------------------------------------------------------------------
# Monte-Carlo aggregation


def run_monte_carlo(spec: ExperimentSpec, jobs: int = 1) -> TrajectoryStats:
    """Aggregate n_runs trajectories (run r on stream (base_seed, r)).

    Thread-parallel when jobs > 1; aggregation reduces in ascending run index
    either way, so the output is bitwise independent of parallelism.  If every
    run diverges the stats are returned NaN-flagged rather than raised.
    """
    resolved = _resolve(spec.method, spec.problem, spec.sigma)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda r: run_trajectory(spec, r), range(spec.n_runs)))
    else:
        results = [run_trajectory(spec, r) for r in range(spec.n_runs)]

    ks = spec.record_ks
    sub_stack = np.stack([r.subopt for r in results])
    en_stack = np.stack([r.energy for r in results])
    alive = np.array([not r.diverged for r in results])
    n_alive = int(alive.sum())
    diverged_runs = spec.n_runs - n_alive

    nrec = len(ks)
    if n_alive == 0:
        mean_sub = np.full(nrec, math.nan)
        std_sub = np.full(nrec, math.nan)
        mean_en = np.full(nrec, math.nan)
        std_en = np.full(nrec, math.nan)
    else:
        mean_sub = sub_stack[alive].mean(axis=0)
        mean_en = en_stack[alive].mean(axis=0)
        if n_alive >= 2:
            std_sub = sub_stack[alive].std(axis=0, ddof=1)
            std_en = en_stack[alive].std(axis=0, ddof=1)
        else:
            std_sub = np.zeros(nrec)
            std_en = np.zeros(nrec)

    e0_mean = math.nan
    bound = np.full(nrec, math.nan)
    if resolved.kind == "accel" and n_alive > 0 and ks[0] == 0:
        e0_mean = float(mean_en[0])
        if resolved.has_bound and math.isfinite(e0_mean):
            bound = envelope_values(
                resolved.regime, ks, e0_mean,
                alpha_tilde=resolved.base_at if resolved.base_at is not None else 0.0,
                m=resolved.m,
            )
    return TrajectoryStats(
        ks=ks, mean_subopt=mean_sub, std_subopt=std_sub,
        mean_energy=mean_en, std_energy=std_en, bound=bound,
        n_runs=spec.n_runs, diverged_runs=diverged_runs, e0_mean=e0_mean,
    )


# ---------------------------------------------------------------------------
# robustness sweep


@dataclass(frozen=True)
class SweepPoint:
    sigma: float
    final_mean_subopt: float
    delta: float
    diverged_runs: int
    n_runs: int


def sigma_sweep(
    base_spec: ExperimentSpec, sigmas: Sequence[float], jobs: int = 1
) -> list[SweepPoint]:
    """Run the spec at each sigma with hyperparameters frozen, report degradation.

    Hyperparameters are resolved once at the method's tuning sigma (defaulting
    to base_spec.sigma) and held fixed.  Degradation at sigma is
    Delta = (m(sigma) - m(0)) / m(0) on final-iterate mean suboptimality; the
    list must include the sigma = 0 anchor.
    """
    sigmas = [float(s) for s in sigmas]
    if 0.0 not in sigmas:
        raise ValueError("sweep requires the sigma = 0 anchor in the sigma list")
    method = base_spec.method
    if method.tuning_sigma is None:
        method = replace(method, tuning_sigma=base_spec.sigma)

    stats_by_sigma = {}
    for sig in sigmas:
        cell = replace(base_spec, sigma=sig, method=method)
        stats_by_sigma[sig] = run_monte_carlo(cell, jobs=jobs)

    anchor = stats_by_sigma[0.0]
    m0 = float(anchor.mean_subopt[-1])
    points = []
    for sig in sigmas:
        st = stats_by_sigma[sig]
        msig = float(st.mean_subopt[-1])
        if m0 != 0.0 and math.isfinite(m0) and math.isfinite(msig):
            delta = (msig - m0) / m0
        else:
            delta = math.nan
        points.append(
            SweepPoint(
                sigma=sig, final_mean_subopt=msig, delta=delta,
                diverged_runs=st.diverged_runs, n_runs=st.n_runs,
            )
        )
    return points
