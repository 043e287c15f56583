#!/usr/bin/env python3
"""Run the scaled-down simulation study and write a report directory.

36 datasets (m in {10, 50} x sparsity in {0, 50, 95} x SNR in {0.1, 10}
x three correlation kinds), n_train=3000 / n_test=1000, four methods,
41-point lambda grid, 10-fold cross-validation.  Takes a minute or two
single-threaded.
"""

import argparse
import sys
import time

import sparsestep as ss
from sparsestep.benchmark import write_report


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="study_report")
    parser.add_argument("--base-seed", type=int, default=42)
    parser.add_argument("--parallel", type=int, default=1)
    args = parser.parse_args(argv)

    specs = ss.generate_scenario_grid(
        n_train=3000, n_test=1000, base_seed=args.base_seed,
        m_values=(10, 50), zeta_values=(0, 50, 95), snr_values=(0.1, 10.0),
    )
    print(f"generating {len(specs)} datasets ...")
    datasets = [ss.generate_dataset(spec) for spec in specs]

    t0 = time.perf_counter()
    report = ss.run_benchmark(
        datasets,
        method_ids=("ols", "ridge", "lasso", "sparsestep"),
        lambda_grid=ss.default_lambda_grid(41),
        k=10,
        base_seed=args.base_seed,
        parallelism=args.parallel,
    )
    print(f"benchmark finished in {time.perf_counter() - t0:.0f}s")

    write_report(report, args.out)
    for metric in ("beta_mse", "sparsity_hitrate", "test_mse"):
        means = report.rank_matrices[metric].mean_ranks()
        ordered = sorted(means.items(), key=lambda kv: kv[1])
        print(f"{metric:18s} " + "  ".join(f"{m}={v:.2f}" for m, v in ordered))
    print(f"report written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
