"""Command-line interface: generate, fit, benchmark, curves.

Every command resolves its options from built-in defaults, then an
optional JSON config file, then flags (flags win), and writes the fully
resolved configuration alongside its outputs so any run can be audited
and reproduced.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ConvergenceError, lasso_fit, ols_fit, ridge_fit, standardize
from .benchmark import run_benchmark, write_report
from .datagen import (
    CORRELATION_KINDS,
    GRID_M,
    GRID_SNR,
    GRID_ZETA,
    generate_dataset,
    generate_scenario_grid,
    load_dataset,
    save_dataset,
)
from .evaluation import cv_grid_search, default_lambda_grid
from .penalty import PenaltyParams, lp_penalty, sparsestep_penalty
from .solver import SolverSchedule, majorizer_value, sparsestep_fit

OUTPUT_ROOT_ENV = "SPARSESTEP_OUTPUT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options for one command invocation."""

    command: str
    options: dict

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "options": self.options,
            "version": __version__,
        }


class _Parser(argparse.ArgumentParser):
    # report argparse failures through our exit-code scheme
    def error(self, message):
        raise UsageError(message)


def _output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def _write_manifest(config: RunConfig, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "manifest.json", "w") as fh:
        json.dump(config.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults < config file < flags into one options dict."""
    file_options = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_options = json.load(fh)
        if not isinstance(file_options, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
        unknown = set(file_options) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    options = dict(defaults)
    options.update(file_options)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

_GENERATE_DEFAULTS = {
    "all": False,
    "m": None,
    "zeta": None,
    "snr": None,
    "corr": None,
    "n_train": 20_000,
    "n_test": 10_000,
    "base_seed": 0,
    "out": None,
}


def cmd_generate(args: argparse.Namespace) -> int:
    options = _resolve(args, _GENERATE_DEFAULTS)
    filtered = any(options[key] for key in ("m", "zeta", "snr", "corr"))
    if not options["all"] and not filtered:
        raise UsageError("pass --all for the full grid or narrow it with filters")
    out = Path(options["out"]) if options["out"] else _output_root() / "datasets"
    options["out"] = str(out)

    specs = generate_scenario_grid(
        n_train=options["n_train"],
        n_test=options["n_test"],
        base_seed=options["base_seed"],
        m_values=tuple(options["m"] or GRID_M),
        zeta_values=tuple(options["zeta"] or GRID_ZETA),
        snr_values=tuple(options["snr"] or GRID_SNR),
        correlations=tuple(options["corr"] or CORRELATION_KINDS),
    )
    _write_manifest(RunConfig("generate", options), out)
    for spec in specs:
        save_dataset(generate_dataset(spec), out / spec.name)
        print(f"wrote {out / spec.name}")
    print(f"generated {len(specs)} dataset(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

_FIT_DEFAULTS = {
    "data": None,
    "method": "sparsestep",
    "lam": None,
    "cv": False,
    "folds": 10,
    "grid_points": 101,
    "seed": 0,
    "gamma0": 1e6,
    "gamma_stop": 1e-8,
    "gamma_step": 2.0,
    "t_max": 2,
    "epsilon": 1e-7,
    "out": None,
}


def _fit_payload(method: str, std_train, schedule: SolverSchedule, lam: float) -> dict:
    """Fit one method on standardized data; return JSON-ready details."""
    if method == "sparsestep":
        result = sparsestep_fit(std_train, schedule)
        return {
            "beta": [float(v) for v in result.beta],
            "support": sorted(result.support),
            "loss": result.final_loss,
            "descent_trace": [
                [gamma, t, loss] for gamma, t, loss in result.descent_trace
            ],
            "wall_time": result.wall_time,
            "schedule": {
                "lambda": schedule.lam,
                "gamma0": schedule.gamma0,
                "gamma_stop": schedule.gamma_stop,
                "gamma_step": schedule.gamma_step,
                "t_max": schedule.t_max,
                "epsilon": schedule.epsilon,
            },
        }
    if method == "ols":
        beta = ols_fit(std_train)
        penalty = 0.0
    elif method == "ridge":
        beta = ridge_fit(std_train, lam)
        penalty = lp_penalty(beta, 2, lam)
    elif method == "lasso":
        beta = lasso_fit(std_train, lam)
        penalty = lp_penalty(beta, 1, lam)
    else:
        raise UsageError(f"unknown method {method!r}")
    residual = std_train.y - std_train.X @ beta
    return {
        "beta": [float(v) for v in beta],
        "support": [int(j) for j in np.flatnonzero(beta)],
        "loss": float(residual @ residual + penalty),
    }


def cmd_fit(args: argparse.Namespace) -> int:
    options = _resolve(args, _FIT_DEFAULTS)
    if not options["data"]:
        raise UsageError("--data is required")
    method = options["method"]
    if method not in ("ols", "ridge", "lasso", "sparsestep"):
        raise UsageError(f"unknown method {method!r}")
    uses_lambda = method != "ols"
    if uses_lambda and not options["cv"] and options["lam"] is None:
        raise UsageError("pass --lambda VALUE or --cv")
    out = Path(options["out"]) if options["out"] else _output_root() / "fit_result.json"
    options["out"] = str(out)

    generated = load_dataset(options["data"])
    train = generated.train

    cv_curve = None
    if options["cv"] or not uses_lambda:
        grid = default_lambda_grid(options["grid_points"])
        lam, cv_curve = cv_grid_search(
            method, train, grid, options["folds"], options["seed"]
        )
    else:
        lam = float(options["lam"])

    std_train, std_params = standardize(train)
    schedule = SolverSchedule(
        lam=lam,
        gamma0=options["gamma0"],
        gamma_stop=options["gamma_stop"],
        gamma_step=options["gamma_step"],
        t_max=options["t_max"],
        epsilon=options["epsilon"],
    )
    payload = _fit_payload(method, std_train, schedule, lam)

    beta_std = np.asarray(payload["beta"])
    coef = beta_std / std_params.column_scales
    intercept = std_params.response_mean - float(coef @ std_params.column_means)
    payload.update(
        method=method,
        dataset=generated.spec.name,
        chosen_lambda=lam,
        coefficients_original=[float(v) for v in coef],
        intercept_original=intercept,
        standardization={
            "column_means": [float(v) for v in std_params.column_means],
            "column_scales": [float(v) for v in std_params.column_scales],
            "response_mean": std_params.response_mean,
        },
        config=RunConfig("fit", options).manifest(),
    )
    if cv_curve is not None:
        payload["cv_curve"] = [[lam_, score] for lam_, score in cv_curve]

    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

_BENCHMARK_DEFAULTS = {
    "data_root": None,
    "methods": "ols,ridge,lasso,sparsestep",
    "folds": 10,
    "grid_points": 101,
    "seed": 0,
    "alpha": 0.05,
    "reference": "sparsestep",
    "parallel": 1,
    "out": None,
}


def cmd_benchmark(args: argparse.Namespace) -> int:
    options = _resolve(args, _BENCHMARK_DEFAULTS)
    if not options["data_root"]:
        raise UsageError("--data-root is required")
    root = Path(options["data_root"])
    if not root.is_dir():
        raise FileNotFoundError(f"data root {root} is not a directory")
    dataset_dirs = sorted(p for p in root.iterdir() if (p / "meta.json").is_file())
    if not dataset_dirs:
        raise FileNotFoundError(f"no dataset directories under {root}")
    out = Path(options["out"]) if options["out"] else _output_root() / "benchmark"
    options["out"] = str(out)

    datasets = [load_dataset(p) for p in dataset_dirs]
    method_ids = tuple(m.strip() for m in options["methods"].split(",") if m.strip())
    report = run_benchmark(
        datasets,
        method_ids=method_ids,
        lambda_grid=default_lambda_grid(options["grid_points"]),
        k=options["folds"],
        base_seed=options["seed"],
        alpha=options["alpha"],
        reference=options["reference"],
        parallelism=options["parallel"],
    )
    write_report(report, out)
    _write_manifest(RunConfig("benchmark", options), out)
    print(f"benchmarked {len(datasets)} dataset(s) x {len(method_ids)} method(s)")
    for failure in report.failures:
        print(
            f"cell failed: {failure['dataset_id']} / {failure['method_id']}: "
            f"{failure['error']}",
            file=sys.stderr,
        )
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

_CURVES_DEFAULTS = {
    "gamma_squared": None,  # defaults to (0.3, 0.1, 0.05)
    "lam": 1.0,
    "points": 401,
    "out": None,
}

_MAJORIZER_GAMMA_SQUARED = 0.1
_MAJORIZER_SUPPORTS = (0.0, 0.25, 0.5)


def cmd_curves(args: argparse.Namespace) -> int:
    options = _resolve(args, _CURVES_DEFAULTS)
    gamma_squared = tuple(options["gamma_squared"] or (0.3, 0.1, 0.05))
    options["gamma_squared"] = list(gamma_squared)
    out = Path(options["out"]) if options["out"] else _output_root() / "curves"
    options["out"] = str(out)
    out.mkdir(parents=True, exist_ok=True)
    lam = float(options["lam"])
    grid = np.linspace(-2.0, 2.0, int(options["points"]))

    header = ["beta", "ridge", "lasso"] + [f"sparsestep_gsq{g:g}" for g in gamma_squared]
    lines = [",".join(header)]
    for b in grid:
        row = [b, lam * b * b, lam * abs(b)]
        row += [
            sparsestep_penalty(b, PenaltyParams(lam, float(np.sqrt(g))))
            for g in gamma_squared
        ]
        lines.append(",".join(repr(float(v)) for v in row))
    (out / "penalties.csv").write_text("\n".join(lines) + "\n")

    gamma = float(np.sqrt(_MAJORIZER_GAMMA_SQUARED))
    header = ["x", "penalty"] + [f"majorizer_y{y:g}" for y in _MAJORIZER_SUPPORTS]
    lines = [",".join(header)]
    for x in grid:
        row = [x, sparsestep_penalty(x, PenaltyParams(1.0, gamma))]
        row += [majorizer_value(x, y, gamma) for y in _MAJORIZER_SUPPORTS]
        lines.append(",".join(repr(float(v)) for v in row))
    (out / "majorizer.csv").write_text("\n".join(lines) + "\n")

    _write_manifest(RunConfig("curves", options), out)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsestep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="materialize simulation datasets")
    p.add_argument("--config", help="JSON file with option defaults")
    p.add_argument("--all", action="store_true", default=None,
                   help="generate the full scenario grid")
    p.add_argument("--m", type=int, action="append", help="filter: number of variables")
    p.add_argument("--zeta", type=int, action="append", help="filter: sparsity percent")
    p.add_argument("--snr", type=float, action="append", help="filter: signal-to-noise ratio")
    p.add_argument("--corr", action="append", choices=CORRELATION_KINDS,
                   help="filter: correlation kind")
    p.add_argument("--n-train", dest="n_train", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--out", help="output directory (default $%s/datasets)" % OUTPUT_ROOT_ENV)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit one method on one dataset")
    p.add_argument("--config")
    p.add_argument("--data", help="dataset directory (from `generate`)")
    p.add_argument("--method", choices=("ols", "ridge", "lasso", "sparsestep"))
    p.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    p.add_argument("--cv", action="store_true", default=None,
                   help="select lambda by cross-validation")
    p.add_argument("--folds", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--seed", type=int, help="cross-validation fold seed")
    p.add_argument("--gamma0", type=float)
    p.add_argument("--gamma-stop", dest="gamma_stop", type=float)
    p.add_argument("--gamma-step", dest="gamma_step", type=float)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", help="output JSON file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("benchmark", help="run the full evaluation protocol")
    p.add_argument("--config")
    p.add_argument("--data-root", dest="data_root",
                   help="directory holding generated dataset subdirectories")
    p.add_argument("--methods", help="comma-separated method ids")
    p.add_argument("--folds", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--reference", help="reference method for the step-down test")
    p.add_argument("--parallel", type=int, help="max concurrent dataset x method cells")
    p.add_argument("--out", help="report directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("curves", help="emit penalty/majorizer curve samples")
    p.add_argument("--config")
    p.add_argument("--gamma-squared", dest="gamma_squared", type=float, action="append",
                   help="squared sharpness values for the penalty curves")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (np.linalg.LinAlgError, ConvergenceError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
