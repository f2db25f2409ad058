"""Named runtime-verification suites behind ``shangopt verify``.

Each suite re-derives its expected values from the closed-form guarantees
(noise-constant identities, expected-descent inequality, schedule conditions,
form equivalences, rate envelopes) and measures the package against them,
returning one CheckResult per check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis import contraction_check, descent_check, envelope_values
from .harness import ExperimentSpec, MethodSpec, run_monte_carlo, run_trajectory, sigma_sweep
from .noise import (
    MnsOracleConfig,
    NoiseShape,
    NoiseStream,
    NoisyGradientOracle,
    empirical_mns_constant,
)
from .optimizers import (
    Regime,
    SnagHnagParams,
    build_schedule,
    make_snag_state,
    schedule_condition_residual,
    schedule_condition_residuals,
    snag_original_from_hnag,
    snag_step_hnag,
    snag_step_original,
)
from .problems import make_fd_problem, make_quadratic

__all__ = ["CheckResult", "SUITES", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        out = f"[{tag}] {self.name}: measured {self.measured:.6g} vs threshold {self.threshold:.6g}"
        if self.detail:
            out += f" ({self.detail})"
        return out


# ---------------------------------------------------------------------------
# lemma1: oracle moment identities


def _sample_batch(cfg: MnsOracleConfig, grad: np.ndarray, n: int) -> np.ndarray:
    """n noisy-gradient samples, rows = samples (same math as the oracle)."""
    stream = NoiseStream(cfg.seed)
    k = cfg.averaging_count
    if cfg.shape is NoiseShape.SCALAR_FACTOR:
        zbar = stream.normals((n, k)).mean(axis=1)
        return (1.0 + cfg.sigma * zbar)[:, None] * grad[None, :]
    zbar = stream.normals((n, k, grad.shape[0])).mean(axis=1)
    return (1.0 + cfg.sigma * zbar) * grad[None, :]


def suite_lemma1(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    """Oracle checks: noise constant sigma^2/K, unbiasedness, inner product, second moment."""
    n = 10**4 if quick else 10**5
    grad = np.array([3.0, 4.0])
    gnorm_sq = float(np.dot(grad, grad))
    results = []
    seed = 2024
    for sigma in (0.5, 1.0, 10.0):
        for k_avg in (1, 4):
            for shape in (NoiseShape.SCALAR_FACTOR, NoiseShape.ELEMENTWISE):
                seed += 1
                cfg = MnsOracleConfig(sigma=sigma, shape=shape, averaging_count=k_avg, seed=seed)
                target = sigma**2 / k_avg
                measured = empirical_mns_constant(cfg, NoiseStream(seed), grad, n)
                # exact relative SE of the squared-deviation ratio for
                # Gaussian factors: sqrt(2 sum w_i^2 / n), w_i = g_i^2/||g||^2
                if shape is NoiseShape.SCALAR_FACTOR:
                    rel_se = math.sqrt(2.0 / n)
                else:
                    w = grad**2 / gnorm_sq
                    rel_se = math.sqrt(2.0 * float(np.dot(w, w)) / n)
                err = abs(measured / target - 1.0)
                results.append(
                    CheckResult(
                        name=f"mns-constant sigma={sigma} K={k_avg} {shape.value}",
                        passed=err <= 5.0 * rel_se,
                        measured=measured,
                        threshold=target,
                        detail=f"|rel err| {err:.3g} <= 5*relSE {5 * rel_se:.3g}",
                    )
                )

                g = _sample_batch(cfg, grad, n)
                # unbiasedness, componentwise
                se = g.std(axis=0, ddof=1) / math.sqrt(n)
                dev = np.abs(g.mean(axis=0) - grad)
                ok = bool(np.all(dev <= 5.0 * se + 1e-300))
                results.append(
                    CheckResult(
                        name=f"unbiased sigma={sigma} K={k_avg} {shape.value}",
                        passed=ok,
                        measured=float(np.max(dev / np.maximum(se, 1e-300))),
                        threshold=5.0,
                        detail="max componentwise deviation in SE units",
                    )
                )
                # inner product <g, grad> -> ||grad||^2
                ip = g @ grad
                ip_se = ip.std(ddof=1) / math.sqrt(n)
                dev_ip = abs(float(ip.mean()) - gnorm_sq)
                results.append(
                    CheckResult(
                        name=f"inner-product sigma={sigma} K={k_avg} {shape.value}",
                        passed=dev_ip <= 5.0 * ip_se,
                        measured=float(ip.mean()),
                        threshold=gnorm_sq,
                        detail=f"dev {dev_ip:.3g} <= 5*SE {5 * ip_se:.3g}",
                    )
                )
                # second moment ||g||^2 -> (1 + sigma^2/K)||grad||^2
                sq = (g * g).sum(axis=1)
                target2 = (1.0 + sigma**2 / k_avg) * gnorm_sq
                sq_se = sq.std(ddof=1) / math.sqrt(n)
                dev2 = abs(float(sq.mean()) - target2)
                results.append(
                    CheckResult(
                        name=f"second-moment sigma={sigma} K={k_avg} {shape.value}",
                        passed=dev2 <= 5.0 * sq_se,
                        measured=float(sq.mean()),
                        threshold=target2,
                        detail=f"dev {dev2:.3g} <= 5*SE {5 * sq_se:.3g}",
                    )
                )
    return results


# ---------------------------------------------------------------------------
# lemma2: expected descent of the auxiliary step


def suite_lemma2(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    """E[f(x - ab g)] <= f(x) - (ab/2)||grad||^2 over points, sigmas, stepsizes."""
    n = 10**4 if quick else 10**5
    n_points = 5 if quick else 20
    problems = {"f4": make_fd_problem(4), "quad": make_quadratic([0.01, 1.0])}
    rng = np.random.default_rng(77)
    results = []
    for pname, problem in problems.items():
        d = problem.dimension
        points = []
        while len(points) < n_points:
            x = rng.uniform(-2.0, 2.0, size=d)
            g = np.asarray(problem.gradient(x))
            if float(np.dot(g, g)) > 1e-8:
                points.append(x)
        for sigma in (0.0, 1.0, 2.0):
            admissible = 1.0 / (problem.profile.L * (1.0 + sigma * sigma))
            for frac in (1.0, 0.5, 0.1):
                ab = frac * admissible
                worst = -math.inf
                ok = True
                for i, x in enumerate(points):
                    res = descent_check(
                        problem, x, sigma, ab, n, seed=9000 + 7 * i + int(10 * sigma)
                    )
                    ok = ok and res.passed
                    margin = (res.mean_lhs - res.rhs) / max(abs(res.rhs), 1e-300)
                    worst = max(worst, margin)
                results.append(
                    CheckResult(
                        name=f"descent {pname} sigma={sigma} ab={frac:.0%}",
                        passed=ok,
                        measured=worst,
                        threshold=0.0,
                        detail=f"worst relative (mean_lhs - rhs) over {n_points} points; "
                        "pass allows +3 SE",
                    )
                )
    return results


# ---------------------------------------------------------------------------
# schedules: one-sided condition, monotone gamma, damped->undamped reduction


def suite_schedules(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    k_max = 10**4 if quick else 10**6
    results = []
    # convex schedules: residual <= 1e-12 for all k (vectorized evaluation)
    for L, sigma in ((12.0, 0.0), (1.0, 1.0)):
        profile = make_fd_problem(4).profile if L == 12.0 else make_quadratic([1.0]).profile
        for m in (0.0, 1.0, 1.5):
            ks = np.arange(k_max + 1)
            res = schedule_condition_residuals(Regime.CONVEX, profile, sigma, m, ks)
            worst = float(res.max())
            # cross-check the vectorized formula against the pairwise op
            probe = [0, 1, 2, 10, 100, 10**3, min(10**5, k_max - 1), k_max - 1]
            pair_dev = 0.0
            for k in probe:
                s0 = build_schedule(Regime.CONVEX, profile, sigma, m=m, k=k)
                s1 = build_schedule(Regime.CONVEX, profile, sigma, m=m, k=k + 1)
                r_pair = schedule_condition_residual(s0, s1)
                pair_dev = max(pair_dev, abs(r_pair - float(res[k])))
            passed = worst <= 1e-12 and pair_dev <= 1e-12 * max(1.0, abs(worst))
            results.append(
                CheckResult(
                    name=f"one-sided condition convex m={m} L={profile.L:g} sigma={sigma}",
                    passed=passed,
                    measured=worst,
                    threshold=1e-12,
                    detail=f"max residual over k<={k_max}; pairwise-op dev {pair_dev:.3g}",
                )
            )
    # strongly convex: identically zero
    profile = make_quadratic([0.01, 1.0]).profile
    worst = 0.0
    for m, sigma in ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)):
        for k in (0, 1, 5, 100, 10**4):
            s0 = build_schedule(Regime.STRONGLY_CONVEX, profile, sigma, m=m, k=k)
            s1 = build_schedule(Regime.STRONGLY_CONVEX, profile, sigma, m=m, k=k + 1)
            worst = max(worst, abs(schedule_condition_residual(s0, s1)))
    results.append(
        CheckResult(
            name="one-sided condition strongly-convex identically zero",
            passed=worst == 0.0,
            measured=worst,
            threshold=0.0,
        )
    )
    # convex gamma strictly decreasing
    dec = True
    for m in (0.0, 1.0, 1.5):
        sched = [build_schedule(Regime.CONVEX, profile, 1.0, m=m, k=k) for k in range(200)]
        dec = dec and all(
            s1.gamma < s0.gamma and s1.energy_gamma < s0.energy_gamma
            for s0, s1 in zip(sched, sched[1:])
        )
    results.append(
        CheckResult(
            name="convex gamma strictly decreasing",
            passed=dec, measured=float(dec), threshold=1.0,
        )
    )
    # damped family at m=0 reduces bitwise to the undamped method
    n_steps = 10**3
    worst_red = 0.0
    for problem in (make_fd_problem(4), make_quadratic([0.25, 1.0])):
        for mname in ("shang", "shangpp"):
            params = {"m": 0.0} if mname == "shangpp" else {}
            spec = ExperimentSpec(
                problem=problem,
                method=MethodSpec(mname, params),
                sigma=1.0, n_runs=1, n_iters=n_steps,
                x0=np.full(problem.dimension, 1.0), base_seed=31, record_every=1,
            )
            if mname == "shang":
                ref = run_trajectory(spec, 0)
            else:
                out = run_trajectory(spec, 0)
                same = np.array_equal(ref.subopt, out.subopt) and np.array_equal(
                    ref.energy, out.energy
                )
                worst_red = max(worst_red, 0.0 if same else 1.0)
    results.append(
        CheckResult(
            name="m=0 reduction bitwise",
            passed=worst_red == 0.0,
            measured=worst_red,
            threshold=0.0,
            detail=f"{n_steps} steps on |x|^4 and a quadratic, shared streams",
        )
    )
    return results


# ---------------------------------------------------------------------------
# snag-equivalence


def suite_snag_equivalence(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    """Both SNAG forms agree at every state along shared-noise trajectories.

    At each of 100 steps per tuple, both forms advance the same current state
    with the same gradient draw and the two results are compared; the
    reference trajectory then continues with the flow-form result.  Deviations
    are per-coordinate, floored at the input-state scale (a raw per-coordinate
    denominator is ill-posed at oscillation zero crossings, where cancellation
    leaves the output far below the data the step consumed).
    """
    n_tuples = 100 if quick else 10**3
    n_steps = 100
    problem = make_quadratic([0.5, 2.0])
    rng = np.random.default_rng(4242)
    worst = 0.0
    for t in range(n_tuples):
        gamma = float(rng.uniform(0.05, 2.0))
        p = SnagHnagParams(
            alpha=float(rng.uniform(0.05, 1.5)),
            beta=float(rng.uniform(0.01, 1.0)),
            gamma=gamma,
            mu=float(rng.uniform(0.0, min(1.0, gamma))),
        )
        po = snag_original_from_hnag(p)
        x0 = rng.uniform(-2.0, 2.0, size=2)
        cfg = MnsOracleConfig(sigma=0.5, seed=10_000 + t)
        oa = NoisyGradientOracle(cfg)
        ob = NoisyGradientOracle(cfg)
        state = make_snag_state(problem, x0)
        for _ in range(n_steps):
            g_scale = float(np.max(np.abs(problem.gradient(state.x))))
            scale_in = max(
                float(np.max(np.abs(state.x))), float(np.max(np.abs(state.v))),
                g_scale, 1e-300,
            )
            ref = snag_step_hnag(state, p, ob, problem)
            alt = snag_step_original(state, po, oa, problem)
            for a, b in ((alt.x, ref.x), (alt.v, ref.v)):
                denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), scale_in)
                worst = max(worst, float(np.max(np.abs(a - b) / denom)))
            state = ref
    return [
        CheckResult(
            name="snag original vs flow form",
            passed=worst <= 1e-12,
            measured=worst,
            threshold=1e-12,
            detail=f"max per-coordinate relative deviation, {n_tuples} tuples x {n_steps} steps",
        )
    ]


# ---------------------------------------------------------------------------
# deterministic-rates


def _det_spec(problem, method, n_iters, **kw) -> ExperimentSpec:
    return ExperimentSpec(
        problem=problem, method=method, sigma=0.0, n_runs=1, n_iters=n_iters,
        x0=np.full(problem.dimension, 1.0) if problem.dimension == 1
        else np.full(problem.dimension, 1.0) / math.sqrt(problem.dimension),
        base_seed=5, record_every=1, **kw,
    )


def suite_deterministic_rates(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    n_iters = 10**3 if quick else 10**4
    results = []
    # strongly convex quadratics at three condition numbers
    for cond in (10, 100, 10**4):
        mu = 1.0 / cond
        problem = make_quadratic([mu, 1.0])
        for mname, m in (("shang", 0.0), ("shangpp", 1.0)):
            method = MethodSpec(mname, {"m": m} if mname == "shangpp" else {})
            spec = _det_spec(problem, method, n_iters)
            stats = run_monte_carlo(spec, jobs=1)
            at = math.sqrt(mu)  # default alpha~ at sigma = 0
            bound = envelope_values(
                Regime.STRONGLY_CONVEX, stats.ks, stats.e0_mean, alpha_tilde=at, m=m
            )
            ratio = stats.mean_energy / bound
            worst = float(np.nanmax(ratio))
            results.append(
                CheckResult(
                    name=f"pointwise rate cond={cond} {mname}",
                    passed=bool(np.all(stats.mean_energy <= bound * (1.0 + 1e-9))),
                    measured=worst,
                    threshold=1.0 + 1e-9,
                    detail="max energy/envelope over all k",
                )
            )
    # convex rates on the flat-bottomed family
    for dd in (4, 16):
        problem = make_fd_problem(dd)
        for m in (0.0, 1.0):
            method = MethodSpec("shangpp", {"m": m}) if m else MethodSpec("shang")
            spec = _det_spec(problem, method, n_iters)
            stats = run_monte_carlo(spec, jobs=1)
            bound = envelope_values(Regime.CONVEX, stats.ks, stats.e0_mean, m=m)
            worst = float(np.nanmax(stats.mean_energy / bound))
            results.append(
                CheckResult(
                    name=f"pointwise rate f{dd} m={m:g}",
                    passed=bool(np.all(stats.mean_energy <= bound * (1.0 + 1e-9))),
                    measured=worst,
                    threshold=1.0 + 1e-9,
                )
            )
    # deterministic energies never increase
    problem = make_quadratic([0.01, 1.0])
    spec = _det_spec(problem, MethodSpec("shang"), min(n_iters, 2000))
    stats = run_monte_carlo(spec, jobs=1)
    inc = float(np.max(np.diff(stats.mean_energy)))
    results.append(
        CheckResult(
            name="deterministic energy monotone nonincreasing",
            passed=inc <= 0.0,
            measured=inc,
            threshold=0.0,
            detail="max energy increment along the trajectory",
        )
    )
    return results


# ---------------------------------------------------------------------------
# stochastic-rates


def suite_stochastic_rates(jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    results = []
    n_runs = 100 if quick else 200
    quad = make_quadratic([0.01, 1.0])
    x0 = np.full(2, 1.0) / math.sqrt(2.0)

    # linear contraction, undamped, stochastic
    spec1 = ExperimentSpec(
        problem=quad, method=MethodSpec("shang", {"alpha_tilde": 0.05}),
        sigma=1.0, n_runs=n_runs, n_iters=2000, x0=x0, base_seed=1001, record_every=20,
    )
    st1 = run_monte_carlo(spec1, jobs=jobs)
    rep1 = contraction_check(
        st1.energy_records(),
        lambda k: envelope_values(
            Regime.STRONGLY_CONVEX, [k], st1.e0_mean, alpha_tilde=0.05, m=0.0
        )[0],
        "stochastic",
    )
    results.append(
        CheckResult(
            name="stochastic linear rate, undamped",
            passed=rep1.passed, measured=rep1.worst_ratio, threshold=1.0,
            detail=str(rep1),
        )
    )

    # linear contraction, damped (m=1)
    spec2 = replace(spec1, method=MethodSpec("shangpp", {"alpha_tilde": 0.05, "m": 1.0}))
    st2 = run_monte_carlo(spec2, jobs=jobs)
    rep2 = contraction_check(
        st2.energy_records(),
        lambda k: envelope_values(
            Regime.STRONGLY_CONVEX, [k], st2.e0_mean, alpha_tilde=0.05, m=1.0
        )[0],
        "stochastic",
    )
    results.append(
        CheckResult(
            name="stochastic linear rate, damped",
            passed=rep2.passed, measured=rep2.worst_ratio, threshold=1.0,
            detail=str(rep2),
        )
    )
    # damped envelope beats the undamped one at equal stepsize
    ks = np.arange(0, 2001)
    env1 = envelope_values(Regime.STRONGLY_CONVEX, ks, 1.0, alpha_tilde=0.05, m=0.0)
    env2 = envelope_values(Regime.STRONGLY_CONVEX, ks, 1.0, alpha_tilde=0.05, m=1.0)
    results.append(
        CheckResult(
            name="damped envelope below undamped",
            passed=bool(np.all(env2 <= env1)),
            measured=float(np.max(env2 / env1)),
            threshold=1.0,
        )
    )

    # sublinear rates on the flat-bottomed family
    n_iters = 2000 if quick else 10**4
    for dd in (4, 16):
        problem = make_fd_problem(dd)
        for sigma in (0.0, 10.0, 50.0):
            for m in (0.0, 1.0):
                method = MethodSpec("shangpp", {"m": m}) if m else MethodSpec("shang")
                spec = ExperimentSpec(
                    problem=problem, method=method, sigma=sigma,
                    n_runs=n_runs, n_iters=n_iters, x0=np.ones(1),
                    base_seed=7000 + dd, record_every=max(1, n_iters // 100),
                    noise_shape=NoiseShape.SCALAR_FACTOR,
                )
                st = run_monte_carlo(spec, jobs=jobs)
                policy = "stochastic" if sigma > 0 else "deterministic"
                rep = contraction_check(
                    st.energy_records(),
                    lambda k, e0=st.e0_mean, m=m: envelope_values(
                        Regime.CONVEX, [k], e0, m=m
                    )[0],
                    policy,
                )
                results.append(
                    CheckResult(
                        name=f"sublinear rate f{dd} sigma={sigma:g} m={m:g}",
                        passed=rep.passed and st.diverged_runs == 0,
                        measured=rep.worst_ratio,
                        threshold=1.0,
                        detail=str(rep),
                    )
                )

    # negative control: lookahead descent destabilizes at extreme noise
    f4 = make_fd_problem(4)
    nag_spec = ExperimentSpec(
        problem=f4, method=MethodSpec("nag"), sigma=50.0, n_runs=max(50, n_runs // 4),
        n_iters=n_iters, x0=np.ones(1), base_seed=333,
        record_every=max(1, n_iters // 100), noise_shape=NoiseShape.SCALAR_FACTOR,
    )
    nag_noisy = run_monte_carlo(nag_spec, jobs=jobs)
    nag_clean = run_monte_carlo(replace(nag_spec, sigma=0.0, n_runs=1), jobs=1)
    final_noisy = float(nag_noisy.mean_subopt[-1])
    final_clean = float(nag_clean.mean_subopt[-1])
    degraded = nag_noisy.diverged_runs > 0 or not math.isfinite(final_noisy) or (
        final_noisy > 10.0 * final_clean
    )
    results.append(
        CheckResult(
            name="negative control: nag at sigma=50",
            passed=degraded,
            measured=final_noisy,
            threshold=10.0 * final_clean,
            detail=f"{nag_noisy.diverged_runs} diverged; clean final {final_clean:.3g}",
        )
    )

    # frozen-hyperparameter sweep: bounded log-scale degradation
    sweep_base = ExperimentSpec(
        problem=quad,
        method=MethodSpec("shangpp", {"m": 1.0}, tuning_sigma=0.5),
        sigma=0.5, n_runs=n_runs, n_iters=2000, x0=x0, base_seed=9090, record_every=2000,
    )
    points = sigma_sweep(sweep_base, [0.0, 0.05, 0.1, 0.2, 0.5], jobs=jobs)
    m0 = points[0].final_mean_subopt
    worst_log = 0.0
    ok = all(p.diverged_runs == 0 and math.isfinite(p.delta) for p in points)
    for p in points:
        if p.final_mean_subopt <= 0 or m0 <= 0:
            ok = False
            break
        worst_log = max(
            worst_log, abs(math.log10(p.final_mean_subopt) - math.log10(m0)) / abs(math.log10(m0))
        )
    results.append(
        CheckResult(
            name="sigma-sweep bounded degradation",
            passed=ok and worst_log <= 0.5,
            measured=worst_log,
            threshold=0.5,
            detail="max |log10 m(sigma) - log10 m(0)| / |log10 m(0)|",
        )
    )
    return results


SUITES = {
    "lemma1": suite_lemma1,
    "lemma2": suite_lemma2,
    "schedules": suite_schedules,
    "snag-equivalence": suite_snag_equivalence,
    "deterministic-rates": suite_deterministic_rates,
    "stochastic-rates": suite_stochastic_rates,
}


def run_suite(name: str, jobs: int = 1, quick: bool = False) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name](jobs=jobs, quick=quick)
