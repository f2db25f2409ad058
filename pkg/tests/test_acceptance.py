"""Acceptance gate: the eleven headline guarantees, one test (and one
printed PASS/FAIL line) each.

Every expected value here is computed inside the test from closed-form
envelope formulas and first-principles statistics — not from the library's
own bound helpers — so these tests fail if the library drifts from the
guarantees rather than drifting with it.
"""

import math
import os
import time

import numpy as np
import pytest

from shangopt._kernels import HAVE_COMPILED
from shangopt.analysis import descent_check
from shangopt.core import SmoothnessProfile
from shangopt.harness import ExperimentSpec, MethodSpec, run_monte_carlo, run_trajectory, sigma_sweep
from shangopt.noise import (
    MnsOracleConfig,
    NoiseShape,
    NoiseStream,
    NoisyGradientOracle,
    empirical_mns_constant,
)
from shangopt.optimizers import (
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
from shangopt.problems import make_fd_problem, make_quadratic

COMPILED = HAVE_COMPILED and not os.environ.get("SHANGOPT_PURE")

SQ2 = math.sqrt(0.5)


def _report(num: int, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num:02d}: {'PASS' if passed else 'FAIL'} — {detail}"
    print(line)
    assert passed, line


def _stochastic_envelope_ok(stats, envelope):
    """Worst ratio of mean energy to envelope*(1+slack), slack = max(5%, 3 rel SE)."""
    n_alive = stats.n_runs - stats.diverged_runs
    worst = -math.inf
    for j in range(len(stats.ks)):
        mean = stats.mean_energy[j]
        if not math.isfinite(mean):
            return False, math.inf
        rel_se = 0.0
        if mean > 0.0 and n_alive > 1:
            rel_se = (stats.std_energy[j] / math.sqrt(n_alive)) / mean
        allowed = envelope[j] * (1.0 + max(0.05, 3.0 * rel_se))
        worst = max(worst, mean / allowed if allowed > 0 else math.inf)
    return worst <= 1.0, worst


def _sc_envelope(ks, e0, alpha_tilde, m):
    ks = np.asarray(ks, dtype=np.float64)
    if m == 0.0:
        return e0 * (1.0 + alpha_tilde) ** (-ks)
    return e0 * (1.0 - alpha_tilde) ** ks


def _convex_envelope(ks, e0, m):
    out = np.empty(len(ks))
    for i, j in enumerate(np.asarray(ks)):
        if j == 0:
            out[i] = e0
        else:
            out[i] = e0 * (1.0 + 2.0 * m) * (2.0 + 2.0 * m) / ((j + 1 + 2.0 * m) * (j + 2 + 2.0 * m))
    return out


def _sc_quadratic_spec(method, sigma=1.0, **overrides):
    base = dict(
        problem=make_quadratic([0.01, 1.0]),
        method=method,
        sigma=sigma,
        n_runs=200,
        n_iters=2000,
        x0=[SQ2, SQ2],  # distance exactly 1 from the minimizer
        base_seed=1001,
        record_every=20,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def test_criterion_01_strongly_convex_stochastic_contraction():
    spec = _sc_quadratic_spec(
        MethodSpec("shang", {"alpha_tilde": 0.05, "regime": "strongly_convex"})
    )
    t0 = time.perf_counter()
    stats = run_monte_carlo(spec, jobs=4)
    elapsed = time.perf_counter() - t0
    assert stats.diverged_runs == 0
    env = _sc_envelope(stats.ks, stats.mean_energy[0], 0.05, m=0.0)
    ok, worst = _stochastic_envelope_ok(stats, env)
    if COMPILED:
        ok = ok and elapsed < 30.0
    _report(1, ok, f"mean energy vs (1.05)^-k envelope, worst ratio {worst:.4f}, {elapsed:.2f} s")


def test_criterion_02_damped_strongly_convex_contraction():
    spec = _sc_quadratic_spec(
        MethodSpec("shangpp", {"alpha_tilde": 0.05, "regime": "strongly_convex", "m": 1.0})
    )
    stats = run_monte_carlo(spec, jobs=4)
    assert stats.diverged_runs == 0
    e0 = stats.mean_energy[0]
    env_damped = _sc_envelope(stats.ks, e0, 0.05, m=1.0)
    env_undamped = _sc_envelope(stats.ks, e0, 0.05, m=0.0)
    ok, worst = _stochastic_envelope_ok(stats, env_damped)
    dominated = bool(np.all(env_damped <= env_undamped))
    _report(
        2, ok and dominated,
        f"(0.95)^k envelope worst ratio {worst:.4f}; damped envelope below undamped: {dominated}",
    )


@pytest.mark.parametrize("d", [4, 16])
def test_criterion_03_convex_rates(d):
    problem = make_fd_problem(d)
    worst_overall = -math.inf
    ok_all = True
    per_cell_times = []
    for m, mname in [(0.0, "shang"), (1.0, "shangpp")]:
        params = {"regime": "convex"} if m == 0.0 else {"regime": "convex", "m": 1.0}
        for sigma in [0.0, 10.0, 50.0]:
            spec = ExperimentSpec(
                problem=problem,
                method=MethodSpec(mname, params),
                sigma=sigma,
                n_runs=200,
                n_iters=10**4,
                x0=[1.0],
                base_seed=7000 + d,
                noise_shape=NoiseShape.SCALAR_FACTOR,
                record_every=100,
            )
            t0 = time.perf_counter()
            stats = run_monte_carlo(spec, jobs=4)
            per_cell_times.append(time.perf_counter() - t0)
            assert stats.diverged_runs == 0, f"divergence at d={d} m={m} sigma={sigma}"
            env = _convex_envelope(stats.ks, stats.mean_energy[0], m)
            ok, worst = _stochastic_envelope_ok(stats, env)
            ok_all = ok_all and ok
            worst_overall = max(worst_overall, worst)
    if COMPILED:
        ok_all = ok_all and max(per_cell_times) < 120.0
    _report(
        3, ok_all,
        f"f{d}: 6 cells (m in {{0,1}} x sigma in {{0,10,50}}), worst ratio "
        f"{worst_overall:.4f}, slowest cell {max(per_cell_times):.2f} s",
    )


def _pointwise_ok(run, env):
    """energy <= env*(1+1e-9) at every k; worst ratio where the bound is nonzero.

    Deep into a linear-rate decay both sides underflow to exactly zero;
    0 <= 0 satisfies the bound and is excluded from the ratio diagnostics.
    """
    allowed = env * (1.0 + 1e-9)
    ok = bool(np.all(run.energy <= allowed))
    pos = allowed > 0.0
    ratio = float(np.max(run.energy[pos] / allowed[pos])) if np.any(pos) else 0.0
    return ok, ratio


def test_criterion_04_deterministic_pointwise_rates():
    t0 = time.perf_counter()
    worst = -math.inf
    ok = True

    for cond in [10, 100, 10**4]:
        mu = 1.0 / cond
        problem = make_quadratic([mu, 1.0])
        at = math.sqrt(mu)  # default sigma = 0 stepsize
        for m, mname, params in [
            (0.0, "shang", {"regime": "strongly_convex"}),
            (1.0, "shangpp", {"regime": "strongly_convex", "m": 1.0}),
        ]:
            spec = ExperimentSpec(
                problem=problem, method=MethodSpec(mname, params), sigma=0.0,
                n_runs=1, n_iters=10**4, x0=[SQ2, SQ2], base_seed=0,
            )
            run = run_trajectory(spec, 0)
            assert run.diverged_at == -1
            cell_ok, ratio = _pointwise_ok(run, _sc_envelope(run.ks, run.energy[0], at, m))
            worst = max(worst, ratio)
            ok = ok and cell_ok

    for d in [4, 16]:
        problem = make_fd_problem(d)
        for m, mname, params in [
            (0.0, "shang", {"regime": "convex"}),
            (1.0, "shangpp", {"regime": "convex", "m": 1.0}),
        ]:
            spec = ExperimentSpec(
                problem=problem, method=MethodSpec(mname, params), sigma=0.0,
                n_runs=1, n_iters=10**4, x0=[1.0], base_seed=0,
            )
            run = run_trajectory(spec, 0)
            assert run.diverged_at == -1
            cell_ok, ratio = _pointwise_ok(run, _convex_envelope(run.ks, run.energy[0], m))
            worst = max(worst, ratio)
            ok = ok and cell_ok

    elapsed = time.perf_counter() - t0
    if COMPILED:
        ok = ok and elapsed < 5.0
    _report(4, ok, f"10 deterministic trajectories, worst ratio {worst:.6f}, {elapsed:.2f} s")


def test_criterion_05_snag_form_equivalence():
    # Both algebraic forms advance the same current state with the same draw;
    # per-coordinate deviation is measured against the input-state scale.
    rng = np.random.default_rng(4242)
    problem = make_quadratic([0.5, 2.0])
    worst = 0.0
    for t in range(1000):
        alpha = rng.uniform(0.05, 1.5)
        beta = rng.uniform(0.01, 1.0)
        gamma = rng.uniform(0.05, 2.0)
        mu = rng.uniform(0.0, min(1.0, gamma))
        flow = SnagHnagParams(alpha=alpha, beta=beta, gamma=gamma, mu=mu)
        orig = snag_original_from_hnag(flow)

        cfg = MnsOracleConfig(sigma=0.5, seed=10_000 + t)
        oa, ob = NoisyGradientOracle(cfg), NoisyGradientOracle(cfg)
        state = make_snag_state(problem, [1.0, -1.0], [0.5, 0.5])
        for _ in range(100):
            scale = max(np.max(np.abs(state.x)), np.max(np.abs(state.v)), 1e-300)
            ref = snag_step_hnag(state, flow, oa, problem)
            alt = snag_step_original(state, orig, ob, problem)
            for a, b in [(ref.x, alt.x), (ref.v, alt.v)]:
                denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), scale)
                worst = max(worst, float(np.max(np.abs(a - b) / denom)))
            state = ref
    _report(5, worst <= 1e-12, f"1000 tuples x 100 steps, max relative deviation {worst:.3e}")


def test_criterion_06_damped_reduction_is_bitwise():
    cases = [
        (
            make_quadratic([0.25, 1.0]), [1.0, -1.0],
            MethodSpec("shang", {"alpha_tilde": 0.2, "regime": "strongly_convex"}),
            MethodSpec("shangpp", {"alpha_tilde": 0.2, "regime": "strongly_convex", "m": 0.0}),
            606,
        ),
        (
            make_fd_problem(4), [1.0],
            MethodSpec("shang", {"regime": "convex"}),
            MethodSpec("shangpp", {"regime": "convex", "m": 0.0}),
            607,
        ),
    ]
    ok = True
    for problem, x0, undamped, damped, seed in cases:
        kw = dict(problem=problem, sigma=1.0, n_runs=1, n_iters=1000, x0=x0, base_seed=seed)
        a = run_trajectory(ExperimentSpec(method=undamped, **kw), 0)
        b = run_trajectory(ExperimentSpec(method=damped, **kw), 0)
        ok = ok and np.array_equal(a.subopt, b.subopt) and np.array_equal(a.energy, b.energy)
    _report(6, ok, "m=0 trajectories bitwise equal to the undamped method on f4 and a quadratic")


def test_criterion_07_oracle_moment_identities():
    grad = np.array([3.0, 4.0])
    gnorm_sq = 25.0
    n = 10**5
    ok = True
    worst_c = 0.0
    cell = 0
    for sigma in [0.5, 1.0, 10.0]:
        for K in [1, 4]:
            for shape in [NoiseShape.SCALAR_FACTOR, NoiseShape.ELEMENTWISE]:
                cell += 1
                seed = 1000 + 17 * cell
                target = sigma * sigma / K

                cfg = MnsOracleConfig(sigma=sigma, shape=shape, averaging_count=K, seed=seed)
                c_hat = empirical_mns_constant(cfg, NoiseStream(seed), grad, n)
                if shape is NoiseShape.SCALAR_FACTOR:
                    rel_se = math.sqrt(2.0 / n)
                else:
                    w = grad**2 / gnorm_sq
                    rel_se = math.sqrt(2.0 * float(np.sum(w**2)) / n)
                dev = abs(c_hat / target - 1.0)
                worst_c = max(worst_c, dev / (5.0 * rel_se))
                ok = ok and dev <= 5.0 * rel_se

                # unbiasedness and the inner-product identity from raw draws
                stream = NoiseStream(seed)
                if shape is NoiseShape.SCALAR_FACTOR:
                    zbar = stream.normals((n, K)).mean(axis=1)
                    g = (1.0 + sigma * zbar)[:, None] * grad[None, :]
                else:
                    zbar = stream.normals((n, K, 2)).mean(axis=1)
                    g = (1.0 + sigma * zbar) * grad[None, :]
                for i in range(2):
                    se = g[:, i].std(ddof=1) / math.sqrt(n)
                    ok = ok and abs(g[:, i].mean() - grad[i]) <= 5.0 * se
                inner = g @ grad
                se = inner.std(ddof=1) / math.sqrt(n)
                ok = ok and abs(inner.mean() - gnorm_sq) <= 5.0 * se
    _report(
        7, ok,
        f"12 oracle cells; worst constant deviation {worst_c:.3f}x its 5-rel-SE budget",
    )


def test_criterion_08_expected_descent_suite():
    rng = np.random.default_rng(888)
    problems = [make_fd_problem(4), make_quadratic([0.01, 1.0])]
    ok = True
    n_cells = 0
    for problem in problems:
        d = problem.dimension
        # sample points away from the stationary point
        points = rng.uniform(0.1, 2.0, size=(20, d)) * rng.choice([-1.0, 1.0], size=(20, d))
        for sigma in [0.0, 1.0, 2.0]:
            admissible = 1.0 / (problem.profile.L * (1.0 + sigma * sigma))
            for frac in [1.0, 0.5, 0.1]:
                for x in points:
                    n_cells += 1
                    res = descent_check(
                        problem, x, sigma, frac * admissible, 10**5,
                        seed=int(rng.integers(2**32)),
                    )
                    ok = ok and res.passed
    _report(8, ok, f"{n_cells} descent checks (2 problems x 3 sigma x 3 stepsizes x 20 points)")


def test_criterion_09_schedule_condition():
    ks = np.arange(0, 10**6 + 1, dtype=np.int64)
    worst = -math.inf
    ok = True
    for m in [0.0, 1.0, 1.5]:
        for sigma in [0.0, 1.0]:
            for L in [1.0, 12.0]:
                prof = SmoothnessProfile(0.0, L)
                res = schedule_condition_residuals(Regime.CONVEX, prof, sigma, m, ks)
                worst = max(worst, float(res.max()))
                ok = ok and bool(np.all(res <= 1e-12))
                # Closed-form cross-check on a subgrid: -2C/(u(u+1)^2).  The
                # residual is a value of order C/u^3 built from terms of order
                # C/u^2 and C/u (two stacked cancellations), so its relative
                # accuracy degrades like eps * u^2 (~2e-4 at k = 1e6, observed
                # 2.6e-4 worst-case); 10*eps*u^2 plus a 1e-6 floor keeps the
                # check tight at small k without failing on rounding at 1e6.
                C = (1.0 + sigma * sigma) ** 2 * L
                eps = np.finfo(np.float64).eps
                for k in [0, 10, 10**3, 10**6]:
                    u = k + 1 + 2.0 * m
                    expected = -2.0 * C / (u * (u + 1.0) ** 2)
                    rel = max(1e-6, 10.0 * eps * u * u)
                    ok = ok and abs(res[k] - expected) <= rel * abs(expected)

    prof = SmoothnessProfile(0.25, 1.0)
    for m in [0.0, 1.0]:
        for k in [0, 1, 99]:
            a = build_schedule(Regime.STRONGLY_CONVEX, prof, 1.0, m=m, k=k)
            b = build_schedule(Regime.STRONGLY_CONVEX, prof, 1.0, m=m, k=k + 1)
            ok = ok and schedule_condition_residual(a, b) == 0.0
    _report(9, ok, f"convex residuals <= 1e-12 up to k=1e6 (max {worst:.3e}); constant schedules exactly 0")


def test_criterion_10_negative_control():
    # NAG's step is the noise-adjusted 1/((1+sigma^2)L), evaluated at each
    # run's own sigma: at sigma=50 the safe step is 2501x smaller than the
    # sigma=0 step 1/L, so even a noise-aware NAG loses its acceleration (the
    # sigma=0 reference converges ~1e7x further); the robust methods keep
    # their O(1/k^2) envelopes at sigma=50 with untouched schedules.
    problem = make_fd_problem(4)
    sigma = 50.0
    L = problem.profile.L

    def nag_spec(sig: float, n_runs: int) -> ExperimentSpec:
        lr = 1.0 / ((1.0 + sig * sig) * L)
        return ExperimentSpec(
            problem=problem, sigma=sig, n_runs=n_runs, n_iters=10**4, x0=[1.0],
            base_seed=333, noise_shape=NoiseShape.SCALAR_FACTOR, record_every=100,
            method=MethodSpec("nag", {"lr": lr, "momentum": 0.9}),
        )

    kw = dict(
        problem=problem, sigma=sigma, n_runs=200, n_iters=10**4, x0=[1.0],
        base_seed=333, noise_shape=NoiseShape.SCALAR_FACTOR, record_every=100,
    )
    nag = run_monte_carlo(nag_spec(sigma, 200), jobs=4)
    noiseless = run_monte_carlo(nag_spec(0.0, 1))
    ratio = nag.mean_subopt[-1] / noiseless.mean_subopt[-1]
    nag_bad = nag.diverged_runs > 0 or ratio > 10.0

    accel_ok = True
    for m, mname, params in [
        (0.0, "shang", {"regime": "convex"}),
        (1.0, "shangpp", {"regime": "convex", "m": 1.0}),
    ]:
        stats = run_monte_carlo(ExperimentSpec(method=MethodSpec(mname, params), **kw), jobs=4)
        accel_ok = accel_ok and stats.diverged_runs == 0
        env = _convex_envelope(stats.ks, stats.mean_energy[0], m)
        ok, _ = _stochastic_envelope_ok(stats, env)
        accel_ok = accel_ok and ok
    _report(
        10, nag_bad and accel_ok,
        f"NAG diverged_runs={nag.diverged_runs}, subopt ratio vs sigma=0 {ratio:.3g}; "
        f"accelerated envelopes at sigma=50 {'held' if accel_ok else 'VIOLATED'}",
    )


def test_criterion_11_sigma_sweep_stability():
    # Horizon note: multiplicative noise has no noise floor on a quadratic
    # centered at 0, so every cell keeps contracting forever and by k ~ 2000
    # the finals sit at ~1e-60 where the sample mean is pure log-normal tail
    # noise (measured spread ~13 decades there).  100 iterations puts the
    # sigma = 0 anchor at ~1e-8 — a realistic accuracy target — where the
    # 200-run mean concentrates (spread ~0.19, and <= 0.23 across seeds).
    base = ExperimentSpec(
        problem=make_quadratic([0.01, 1.0]),
        method=MethodSpec(
            "shangpp", {"regime": "strongly_convex", "m": 1.0}, tuning_sigma=0.5
        ),
        sigma=0.5,
        n_runs=200,
        n_iters=100,
        x0=[SQ2, SQ2],
        base_seed=9090,
        record_every=25,
    )
    points = sigma_sweep(base, [0.0, 0.05, 0.1, 0.2, 0.5], jobs=4)
    finals = {p.sigma: p.final_mean_subopt for p in points}
    ok = all(p.diverged_runs == 0 for p in points)
    ok = ok and all(math.isfinite(v) and v > 0.0 for v in finals.values())
    spread = max(abs(math.log10(finals[s] / finals[0.0])) for s in finals)
    # "stays bounded (log scale)": within half an order of magnitude of the
    # sigma = 0 anchor across the sweep
    ok = ok and spread <= 0.5
    _report(
        11, ok,
        f"frozen-hyperparameter sweep: max |log10 m(sigma)/m(0)| = {spread:.4f}, no divergences",
    )
