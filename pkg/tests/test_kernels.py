"""Bitwise-equivalence tests between the compiled and pure trajectory kernels."""

import os
import subprocess
import sys

import numpy as np
import pytest

from shangopt import _kernels
from shangopt._kernels import HAVE_COMPILED, _pyref, kernel_descriptor
from shangopt.core import ObjectiveProblem, SmoothnessProfile
from shangopt.harness import ExperimentSpec, MethodSpec, run_trajectory
from shangopt.noise import NoiseShape, NoiseStream
from shangopt.problems import make_fd_problem, make_quadratic

if HAVE_COMPILED:
    from shangopt._kernels import _fast

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="extension not built")


class TestKernelDescriptor:
    def test_fd_family(self):
        kind, dexp, lam, cen = kernel_descriptor(make_fd_problem(4))
        assert (kind, dexp) == (0, 4)
        np.testing.assert_array_equal(cen, [0.0])

    def test_quadratic_family(self):
        kind, dexp, lam, cen = kernel_descriptor(make_quadratic([0.5, 2.0], center=[1.0, -1.0]))
        assert (kind, dexp) == (1, 0)
        np.testing.assert_array_equal(lam, [0.5, 2.0])
        np.testing.assert_array_equal(cen, [1.0, -1.0])

    def test_unknown_family_maps_to_none(self):
        problem = ObjectiveProblem(
            dimension=1, profile=SmoothnessProfile(0.0, 1.0),
            value=lambda x: float(x[0] ** 2), gradient=lambda x: 2.0 * x,
        )
        assert kernel_descriptor(problem) is None


def _noise(seed, n):
    return NoiseStream(seed, 0).normals(n)


def _quad_args():
    lam = np.array([0.25, 1.0])
    cen = np.zeros(2)
    x0 = np.array([1.0, -1.0])
    return 1, 0, lam, cen, x0


def _fd_args():
    return 0, 4, np.zeros(1), np.zeros(1), np.array([0.9])


@needs_compiled
class TestCompiledMatchesPure:
    def _compare(self, fn_name, args):
        pure = getattr(_pyref, fn_name)(*args)
        fast = getattr(_fast, fn_name)(*args)
        np.testing.assert_array_equal(np.asarray(pure[0]), np.asarray(fast[0]))
        np.testing.assert_array_equal(np.asarray(pure[1]), np.asarray(fast[1]))
        assert pure[2] == fast[2]
        return pure

    def test_shang_strongly_convex(self):
        kind, dexp, lam, cen, x0 = _quad_args()
        ks = np.arange(0, 501, 10, dtype=np.int64)
        noise = _noise(3, 501 * 2)
        args = (kind, dexp, lam, cen, x0, x0, True, 0.25, 1.0, 0.0, 0.25,
                1.0, 1.0, True, 1, 500, ks, noise)
        sub, en, div = self._compare("shang_trajectory", args)
        assert div == -1
        assert np.all(np.isfinite(en))

    def test_shang_convex_damped(self):
        kind, dexp, lam, cen, x0 = _fd_args()
        ks = np.arange(0, 301, 5, dtype=np.int64)
        noise = _noise(8, 301)
        args = (kind, dexp, lam, cen, x0, x0, False, 0.0, 12.0, 1.0, 0.0,
                0.5, 0.5, True, 1, 300, ks, noise)
        self._compare("shang_trajectory", args)

    def test_shang_scalar_noise_with_averaging(self):
        kind, dexp, lam, cen, x0 = _quad_args()
        ks = np.arange(0, 201, 4, dtype=np.int64)
        noise = _noise(12, 201 * 3)
        args = (kind, dexp, lam, cen, x0, x0, True, 0.25, 1.0, 1.0, 0.2,
                1.0, 1.0, False, 3, 200, ks, noise)
        self._compare("shang_trajectory", args)

    def test_dl(self):
        kind, dexp, lam, cen, x0 = _fd_args()
        ks = np.arange(0, 301, 7, dtype=np.int64)
        noise = _noise(21, 301)
        args = (kind, dexp, lam, cen, x0, x0, 0.3, 2.0, 1.5,
                1.0, True, 1, 300, ks, noise)
        self._compare("dl_trajectory", args)

    def test_snag(self):
        kind, dexp, lam, cen, x0 = _quad_args()
        ks = np.arange(0, 201, 3, dtype=np.int64)
        noise = _noise(30, 201 * 2)
        args = (kind, dexp, lam, cen, x0, x0, 0.5, 0.2, 0.5, 0.5,
                0.5, True, 1, 200, ks, noise)
        self._compare("snag_trajectory", args)

    @pytest.mark.parametrize("method", [0, 1, 2])
    def test_baselines(self, method):
        kind, dexp, lam, cen, x0 = _quad_args()
        ks = np.arange(0, 301, 10, dtype=np.int64)
        noise = _noise(40 + method, 301 * 2)
        args = (kind, dexp, lam, cen, x0, method, 0.3, 0.9,
                1.0, True, 1, 300, ks, noise)
        self._compare("baseline_trajectory", args)

    def test_divergence_flag_parity(self):
        # SGD with lr = 3 on the unit quadratic doubles |x| each step; both
        # implementations must flag the same iterate and NaN the tail.
        lam = np.ones(1)
        cen = np.zeros(1)
        x0 = np.ones(1)
        ks = np.arange(0, 101, dtype=np.int64)
        noise = _noise(50, 100)
        args = (1, 0, lam, cen, x0, 0, 3.0, 0.0, 0.0, True, 1, 100, ks, noise)
        sub, en, div = self._compare("baseline_trajectory", args)
        assert div > 0
        assert np.isnan(np.asarray(sub)[div:]).all()

    def test_noise_too_short_raises_in_both(self):
        kind, dexp, lam, cen, x0 = _quad_args()
        ks = np.arange(0, 11, dtype=np.int64)
        noise = _noise(60, 5)
        args = (kind, dexp, lam, cen, x0, 0, 0.1, 0.0, 1.0, True, 1, 10, ks, noise)
        for mod in (_pyref, _fast):
            with pytest.raises(ValueError, match="too short"):
                mod.baseline_trajectory(*args)


def _assert_records_match(a, b):
    # Iterates and divergence behaviour must agree exactly; the recorded
    # observables may differ by reduction order only (the generic engine
    # records through problem.value, which uses BLAS dot, while the kernels
    # accumulate scalar-wise), so allow up to 2 ulp there.
    assert a.diverged_at == b.diverged_at
    for xa, xb in ((a.subopt, b.subopt), (a.energy, b.energy)):
        xa, xb = np.asarray(xa), np.asarray(xb)
        np.testing.assert_array_equal(np.isnan(xa), np.isnan(xb))
        ok = ~np.isnan(xa)
        if ok.any():
            np.testing.assert_array_max_ulp(xa[ok], xb[ok], maxulp=2)


class TestEngineEquivalence:
    """The kernel path must reproduce the single-step generic path."""

    @pytest.mark.parametrize(
        "method",
        [
            MethodSpec("shang", {"alpha_tilde": 0.1, "regime": "strongly_convex"}),
            MethodSpec("shangpp", {"alpha_tilde": 0.1, "regime": "strongly_convex", "m": 1.0}),
            MethodSpec("shang", {"regime": "convex"}),
            MethodSpec("shangpp_dl", {"alpha": 0.3, "gamma": 1.0, "m": 1.5}),
            MethodSpec("snag", {"alpha": 0.4, "beta": 0.3, "gamma": 1.2}),
            MethodSpec("sgd", {}),
            MethodSpec("shb", {}),
            MethodSpec("nag", {}),
        ],
    )
    @pytest.mark.parametrize("shape", [NoiseShape.ELEMENTWISE, NoiseShape.SCALAR_FACTOR])
    def test_kernel_matches_generic(self, method, shape):
        problem = make_quadratic([0.25, 1.0])
        spec = ExperimentSpec(
            problem=problem, method=method, sigma=0.8, n_runs=1, n_iters=200,
            x0=[1.0, -1.0], base_seed=77, noise_shape=shape, record_every=9,
        )
        a = run_trajectory(spec, 0, engine="kernel")
        b = run_trajectory(spec, 0, engine="generic")
        _assert_records_match(a, b)

    def test_kernel_matches_generic_on_fd(self):
        spec = ExperimentSpec(
            problem=make_fd_problem(4),
            method=MethodSpec("shangpp", {"regime": "convex", "m": 1.0}),
            sigma=1.0, n_runs=1, n_iters=300, x0=[0.9], base_seed=5,
            averaging=2, record_every=11,
        )
        a = run_trajectory(spec, 0, engine="kernel")
        b = run_trajectory(spec, 0, engine="generic")
        np.testing.assert_array_equal(a.subopt, b.subopt)
        np.testing.assert_array_equal(a.energy, b.energy)

    def test_kernel_engine_rejects_foreign_problem(self):
        problem = ObjectiveProblem(
            dimension=1, profile=SmoothnessProfile(1.0, 1.0),
            value=lambda x: 0.5 * float(x[0] ** 2), gradient=lambda x: x,
            minimizer=np.zeros(1), minimum_value=0.0,
        )
        spec = ExperimentSpec(
            problem=problem, method=MethodSpec("sgd", {}), sigma=0.0,
            n_runs=1, n_iters=5, x0=[1.0],
        )
        with pytest.raises(ValueError, match="kernel"):
            run_trajectory(spec, 0, engine="kernel")
        # auto falls back to the generic engine
        out = run_trajectory(spec, 0, engine="auto")
        assert out.diverged_at == -1


class TestImplementationSelection:
    def test_pure_env_var_forces_fallback(self):
        code = "import shangopt; print(shangopt.IMPLEMENTATION)"
        env = dict(os.environ, SHANGOPT_PURE="1")
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "pure"

    @needs_compiled
    def test_compiled_selected_by_default(self):
        code = "import shangopt; print(shangopt.IMPLEMENTATION)"
        env = {k: v for k, v in os.environ.items() if k != "SHANGOPT_PURE"}
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "compiled"

    def test_module_constants_consistent(self):
        assert _kernels.IMPLEMENTATION in ("pure", "compiled")
        assert _pyref.IMPLEMENTATION == "pure"
        if HAVE_COMPILED:
            assert _fast.IMPLEMENTATION == "compiled"
