"""Command-line front end.

Subcommands:

* ``bench``  — run a benchmark grid from a TOML config, one CSV per
  (method, problem, sigma) cell.
* ``verify`` — run named runtime-verification suites, one report line per
  check.
* ``sweep``  — frozen-hyperparameter robustness sweep over sigma, one
  degradation table CSV.

Exit codes: 0 success, 1 config/usage error, 2 verification failure,
3 runtime experiment failure.  ``SHANG_SEED`` provides the lowest-priority
seed default (below the config's ``experiment.seed`` and ``--seed``).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import ObjectiveProblem
from .harness import (
    _KNOWN_PARAMS,
    METHOD_NAMES,
    ExperimentSpec,
    MethodSpec,
    run_monte_carlo,
    sigma_sweep,
)
from .noise import NoiseShape
from .problems import make_fd_problem, make_quadratic
from .verify import SUITES, run_suite

__all__ = ["main", "cmd_bench", "cmd_verify", "cmd_sweep", "ConfigError"]

CSV_HEADER = "k,mean_subopt,std_subopt,mean_energy,std_energy,bound,n_runs,diverged_runs"
SWEEP_HEADER = "method,sigma,final_mean_suboptimality,delta,diverged_runs"

_EXPERIMENT_KEYS = {
    "problem", "d", "eigenvalues", "center", "sigma", "n_runs", "n_iters",
    "record_every", "noise_shape", "averaging", "x0", "seed", "methods",
    "max_budget", "tuning_sigma",
}


class ConfigError(Exception):
    """Invalid or unreadable experiment configuration."""


def _g17(x: float) -> str:
    """17-significant-digit decimal form (round-trips binary64 exactly)."""
    return format(float(x), ".17g")


def _sigma_tag(sigma: float) -> str:
    return format(sigma, "g").replace(".", "p").replace("-", "m").replace("+", "")


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


# ---------------------------------------------------------------------------
# config loading


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _check_keys(table: dict, allowed: set, prefix: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown config key {prefix + key!r}")


def _validate_config(raw: dict) -> None:
    _check_keys(raw, {"experiment", "output", "methods"}, "")
    exp = raw.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("missing [experiment] section")
    _check_keys(exp, _EXPERIMENT_KEYS, "experiment.")
    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("[output] must be a section")
    _check_keys(out, {"dir"}, "output.")
    methods = raw.get("methods", {})
    if not isinstance(methods, dict):
        raise ConfigError("[methods] must hold one sub-section per method")
    for name, params in methods.items():
        if name not in METHOD_NAMES:
            raise ConfigError(f"unknown config key 'methods.{name}'")
        if not isinstance(params, dict):
            raise ConfigError(f"[methods.{name}] must be a section")
        _check_keys(params, set(_KNOWN_PARAMS[name]) | {"tuning_sigma"}, f"methods.{name}.")


def _resolve_seed(cli_seed: Optional[int], raw: dict) -> int:
    if cli_seed is not None:
        seed = int(cli_seed)
    elif "seed" in raw.get("experiment", {}):
        seed = int(raw["experiment"]["seed"])
    else:
        env = os.environ.get("SHANG_SEED")
        if env is None:
            seed = 0
        else:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError(f"SHANG_SEED must be an integer, got {env!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must fit in u64, got {seed}")
    return seed


def _build_problems(exp: dict) -> list[tuple[str, ObjectiveProblem]]:
    """(label, problem) pairs; the `d` key is grid-valued for the f_d family."""
    name = exp.get("problem", "fd")
    if name == "fd":
        ds = _as_list(exp.get("d", 4))
        out = []
        for d in ds:
            if not isinstance(d, int) or isinstance(d, bool):
                raise ConfigError(f"experiment.d entries must be integers, got {d!r}")
            out.append((f"f{d}", make_fd_problem(d)))
        return out
    if name == "quadratic":
        if "eigenvalues" not in exp:
            raise ConfigError("quadratic problems need experiment.eigenvalues")
        lam = [float(v) for v in _as_list(exp["eigenvalues"])]
        center = exp.get("center")
        problem = make_quadratic(lam, None if center is None else np.asarray(center, float))
        return [(f"quad{len(lam)}d", problem)]
    raise ConfigError(f"unknown problem family {name!r}; expected 'fd' or 'quadratic'")


def _method_specs(exp: dict, raw: dict) -> list[MethodSpec]:
    names = exp.get("methods", list(METHOD_NAMES))
    if not names:
        raise ConfigError("no methods specified")
    tables = raw.get("methods", {})
    specs = []
    for name in names:
        if name not in METHOD_NAMES:
            raise ConfigError(f"unknown method {name!r}; expected one of {METHOD_NAMES}")
        params = dict(tables.get(name, {}))
        tuning = params.pop("tuning_sigma", exp.get("tuning_sigma"))
        specs.append(
            MethodSpec(name, params, tuning_sigma=None if tuning is None else float(tuning))
        )
    return specs


def _x0_for(exp: dict, problem: ObjectiveProblem) -> np.ndarray:
    x0 = exp.get("x0", 1.0)
    if isinstance(x0, (int, float)):
        return np.full(problem.dimension, float(x0))
    arr = np.asarray([float(v) for v in x0])
    if arr.shape != (problem.dimension,):
        raise ConfigError(
            f"experiment.x0 has length {arr.size}, problem dimension is {problem.dimension}"
        )
    return arr


def _build_cells(raw: dict, seed: int) -> list[tuple[str, ExperimentSpec]]:
    """All (csv-stem, spec) cells; every spec validated before anything runs."""
    exp = raw["experiment"]
    problems = _build_problems(exp)
    sigmas = [float(s) for s in _as_list(exp.get("sigma", 0.0))]
    methods = _method_specs(exp, raw)
    try:
        shape = NoiseShape(exp.get("noise_shape", "elementwise"))
    except ValueError:
        raise ConfigError(
            f"experiment.noise_shape must be 'scalar' or 'elementwise', "
            f"got {exp.get('noise_shape')!r}"
        ) from None
    cells = []
    for method in methods:
        for label, problem in problems:
            for sigma in sigmas:
                try:
                    spec = ExperimentSpec(
                        problem=problem,
                        method=method,
                        sigma=sigma,
                        n_runs=int(exp.get("n_runs", 200)),
                        n_iters=int(exp.get("n_iters", 1000)),
                        x0=_x0_for(exp, problem),
                        base_seed=seed,
                        noise_shape=shape,
                        averaging=int(exp.get("averaging", 1)),
                        record_every=int(exp.get("record_every", 1)),
                        max_budget=int(exp.get("max_budget", 10**9)),
                    )
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
                cells.append((f"{method.name}__{label}__sigma{_sigma_tag(sigma)}", spec))
    return cells


# ---------------------------------------------------------------------------
# CSV emission (17 significant digits, LF endings, fixed headers)


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_stats_csv(path: Path, stats) -> None:
    lines = [CSV_HEADER]
    for i, k in enumerate(stats.ks):
        lines.append(
            ",".join(
                (
                    str(int(k)),
                    _g17(stats.mean_subopt[i]),
                    _g17(stats.std_subopt[i]),
                    _g17(stats.mean_energy[i]),
                    _g17(stats.std_energy[i]),
                    _g17(stats.bound[i]),
                    str(stats.n_runs),
                    str(stats.diverged_runs),
                )
            )
        )
    _write_lines(path, lines)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bench(args) -> int:
    raw = _load_config(args.config)
    _validate_config(raw)
    seed = _resolve_seed(args.seed, raw)
    cells = _build_cells(raw, seed)
    out_dir = Path(args.out or raw.get("output", {}).get("dir", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, spec in cells:
        stats = run_monte_carlo(spec, jobs=args.jobs)
        path = out_dir / f"{stem}.csv"
        _write_stats_csv(path, stats)
        if not args.quiet:
            note = f", {stats.diverged_runs} diverged" if stats.diverged_runs else ""
            print(f"wrote {path} ({len(stats.ks)} records{note})")
    return 0


def cmd_verify(args) -> int:
    for name in args.suites:
        if name not in SUITES:
            print(
                f"error: unknown suite {name!r}; expected one of {', '.join(sorted(SUITES))}",
                file=sys.stderr,
            )
            return 1
    all_passed = True
    for name in args.suites:
        results = run_suite(name, jobs=args.jobs)
        n_pass = sum(r.passed for r in results)
        for r in results:
            if not args.quiet or not r.passed:
                print(r.line())
        print(f"suite {name}: {n_pass}/{len(results)} checks passed")
        all_passed = all_passed and n_pass == len(results)
    return 0 if all_passed else 2


def cmd_sweep(args) -> int:
    raw = _load_config(args.config)
    _validate_config(raw)
    seed = _resolve_seed(args.seed, raw)
    exp = raw["experiment"]
    problems = _build_problems(exp)
    if len(problems) > 1:
        raise ConfigError("sweep configs must name a single problem (scalar experiment.d)")
    label, problem = problems[0]
    sigmas = [float(s) for s in _as_list(exp.get("sigma", [0.0]))]
    if 0.0 not in sigmas:
        raise ConfigError("sweep requires sigma = 0 in the experiment.sigma list")
    tuning_default = exp.get("tuning_sigma")
    base_sigma = float(tuning_default) if tuning_default is not None else max(sigmas)
    methods = _method_specs(exp, raw)

    lines = [SWEEP_HEADER]
    for method in methods:
        try:
            base = ExperimentSpec(
                problem=problem,
                method=method,
                sigma=base_sigma,
                n_runs=int(exp.get("n_runs", 200)),
                n_iters=int(exp.get("n_iters", 1000)),
                x0=_x0_for(exp, problem),
                base_seed=seed,
                noise_shape=NoiseShape(exp.get("noise_shape", "elementwise")),
                averaging=int(exp.get("averaging", 1)),
                record_every=int(exp.get("record_every", 1)),
                max_budget=int(exp.get("max_budget", 10**9)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for point in sigma_sweep(base, sigmas, jobs=args.jobs):
            lines.append(
                ",".join(
                    (
                        method.name,
                        format(point.sigma, "g"),
                        _g17(point.final_mean_subopt),
                        _g17(point.delta),
                        str(point.diverged_runs),
                    )
                )
            )
        if not args.quiet:
            print(f"swept {method.name} on {label} over {len(sigmas)} sigma values")
    out_dir = Path(args.out or raw.get("output", {}).get("dir", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    _write_lines(path, lines)
    if not args.quiet:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """Argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
    if config_required:
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs hint for the harness")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shangopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_bench = sub.add_parser("bench", help="run a benchmark grid, one CSV per cell")
    _add_common(p_bench, config_required=True)
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="run runtime-verification suites")
    p_verify.add_argument(
        "suites", nargs="+", metavar="suite",
        help=f"one or more of: {', '.join(sorted(SUITES))}",
    )
    _add_common(p_verify, config_required=False)
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="sigma robustness sweep with frozen hyperparameters")
    _add_common(p_sweep, config_required=True)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
