"""Compare the compiled trajectory kernels against the pure-Python fallback.

Times identical workloads through both implementations and verifies that the
recorded trajectories agree bitwise before reporting speedups.

Usage: python benchmarks/bench_kernels.py [--n-iters N] [--n-runs R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shangopt._kernels import _pyref
from shangopt.harness import ExperimentSpec, MethodSpec, run_trajectory
from shangopt.noise import NoiseShape
from shangopt.problems import make_fd_problem, make_quadratic

try:
    from shangopt._kernels import _fast
except ImportError:
    _fast = None


def _cases(n_iters: int):
    quad = make_quadratic([0.01, 1.0])
    f4 = make_fd_problem(4)
    x0q = np.full(2, 1.0) / np.sqrt(2.0)
    yield "shang/quad/sigma=1", ExperimentSpec(
        problem=quad, method=MethodSpec("shang"), sigma=1.0,
        n_runs=1, n_iters=n_iters, x0=x0q, base_seed=11, record_every=max(1, n_iters // 50),
    )
    yield "shangpp/f4/sigma=10", ExperimentSpec(
        problem=f4, method=MethodSpec("shangpp", {"m": 1.0}), sigma=10.0,
        n_runs=1, n_iters=n_iters, x0=np.ones(1), base_seed=11,
        record_every=max(1, n_iters // 50), noise_shape=NoiseShape.SCALAR_FACTOR,
    )
    yield "nag/quad/sigma=0.5", ExperimentSpec(
        problem=quad, method=MethodSpec("nag"), sigma=0.5,
        n_runs=1, n_iters=n_iters, x0=x0q, base_seed=11, record_every=max(1, n_iters // 50),
    )


def _time_engine(spec: ExperimentSpec, n_runs: int, module) -> tuple[float, np.ndarray]:
    import shangopt.harness as harness
    from shangopt import _kernels

    saved = {name: getattr(_kernels, name) for name in (
        "IMPLEMENTATION", "shang_trajectory", "dl_trajectory",
        "snag_trajectory", "baseline_trajectory",
    )}
    try:
        for name in saved:
            setattr(_kernels, name, getattr(module, name))
        run_trajectory(spec, 0)  # warm up
        t0 = time.perf_counter()
        for r in range(n_runs):
            out = run_trajectory(spec, r)
        elapsed = time.perf_counter() - t0
    finally:
        for name, val in saved.items():
            setattr(_kernels, name, val)
    return elapsed / n_runs, out.subopt


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-iters", type=int, default=20000)
    ap.add_argument("--n-runs", type=int, default=5)
    args = ap.parse_args()

    if _fast is None:
        print("compiled kernels unavailable; timing the pure fallback only")
    print(f"{'case':28s} {'pure (ms)':>10s} {'compiled (ms)':>14s} {'speedup':>8s}  match")
    for name, spec in _cases(args.n_iters):
        t_pure, sub_pure = _time_engine(spec, args.n_runs, _pyref)
        if _fast is None:
            print(f"{name:28s} {t_pure * 1e3:10.2f} {'-':>14s} {'-':>8s}  -")
            continue
        t_fast, sub_fast = _time_engine(spec, args.n_runs, _fast)
        match = np.array_equal(sub_pure, sub_fast, equal_nan=True)
        print(
            f"{name:28s} {t_pure * 1e3:10.2f} {t_fast * 1e3:14.2f} "
            f"{t_pure / t_fast:7.1f}x  {'bitwise' if match else 'MISMATCH'}"
        )
        if not match:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
