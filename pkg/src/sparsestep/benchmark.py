"""Benchmark orchestration: the full evaluation protocol over many datasets.

For every dataset x method cell the regularization weight is selected by
k-fold cross-validation on the training block, the method is refit on
the whole training block, and three quality metrics plus the wall time
are recorded.  Rank matrices, Friedman/Holm statistics and best/worst
counts are then derived per metric.  Timing statistics are kept in a
separate output because wall times (unlike every other number here) are
not reproducible across runs.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import GeneratedDataset
from .evaluation import (
    EQUALITY_THRESHOLD,
    FIT_ERRORS,
    METHODS,
    HolmResult,
    PerfectConsistencyError,
    RankMatrix,
    best_worst_counts,
    beta_mse,
    cv_grid_search,
    default_lambda_grid,
    fit_on_standardized,
    fractional_ranks,
    friedman_test,
    holm_stepdown,
    pairwise_z_pvalues,
    sparsity_hitrate,
    test_mse,
)

#: metrics recorded per cell; hitrate is the only one where larger is better
QUALITY_METRICS = ("beta_mse", "sparsity_hitrate", "test_mse")
TIMING_METRIC = "fit_seconds"
HIGHER_IS_BETTER = ("sparsity_hitrate",)


@dataclass(frozen=True)
class MetricRecord:
    """All metric values for one dataset x method cell."""

    dataset_id: str
    method_id: str
    beta_mse: float
    sparsity_hitrate: float
    test_mse: float
    fit_seconds: float
    chosen_lambda: float

    def get(self, metric: str) -> float:
        return getattr(self, metric)


@dataclass
class BenchmarkReport:
    """Records plus derived rank matrices and statistics."""

    records: list[MetricRecord]
    rank_matrices: dict[str, RankMatrix]
    stats: dict
    timing_stats: dict
    failures: list[dict]


def run_cell(
    generated: GeneratedDataset,
    method_id: str,
    lambda_grid: np.ndarray,
    k: int,
    cv_seed: int,
) -> MetricRecord:
    """Run CV selection, refit, and evaluation for one cell.

    The recorded time covers the whole lambda sweep plus the final
    refit, mirroring a protocol where per-lambda fits are independent
    (no warm starts or path tricks).
    """
    train = generated.train
    t0 = time.perf_counter()
    chosen_lambda, _ = cv_grid_search(method_id, train, lambda_grid, k, cv_seed)
    coef, intercept = fit_on_standardized(method_id, train, chosen_lambda)
    elapsed = time.perf_counter() - t0
    predictions = generated.X_test @ coef + intercept
    return MetricRecord(
        dataset_id=generated.spec.name,
        method_id=method_id,
        beta_mse=beta_mse(coef, generated.beta_true),
        sparsity_hitrate=sparsity_hitrate(coef, generated.beta_true, tol=0.0),
        test_mse=test_mse(predictions, generated.y_test),
        fit_seconds=elapsed,
        chosen_lambda=float(chosen_lambda),
    )


def _records_matrix(
    records: list[MetricRecord],
    dataset_ids: tuple[str, ...],
    method_ids: tuple[str, ...],
    metric: str,
) -> np.ndarray:
    by_key = {(r.dataset_id, r.method_id): r for r in records}
    values = np.empty((len(dataset_ids), len(method_ids)))
    for i, did in enumerate(dataset_ids):
        for j, mid in enumerate(method_ids):
            rec = by_key.get((did, mid))
            if rec is None:
                raise KeyError(f"missing record for dataset {did!r}, method {mid!r}")
            values[i, j] = rec.get(metric)
    return values


def rank_records(
    records: list[MetricRecord],
    dataset_ids: tuple[str, ...],
    method_ids: tuple[str, ...],
    metric: str,
    equality_threshold: float = EQUALITY_THRESHOLD,
) -> RankMatrix:
    """Per-dataset fractional ranks for one metric (smaller rank = better)."""
    values = _records_matrix(records, dataset_ids, method_ids, metric)
    oriented = -values if metric in HIGHER_IS_BETTER else values
    ranks = np.vstack([fractional_ranks(row, equality_threshold) for row in oriented])
    return RankMatrix(
        ranks=ranks,
        dataset_ids=dataset_ids,
        method_ids=method_ids,
        equality_threshold=equality_threshold,
    )


def _holm_entries(result: HolmResult) -> list[dict]:
    return [
        {"method": name, "p_value": p, "threshold": cutoff, "reject": reject}
        for name, p, cutoff, reject in result.entries
    ]


def _metric_stats(
    records: list[MetricRecord],
    rank_matrix: RankMatrix,
    metric: str,
    reference: str,
    alpha: float,
) -> dict:
    values = _records_matrix(
        records, rank_matrix.dataset_ids, rank_matrix.method_ids, metric
    )
    oriented = -values if metric in HIGHER_IS_BETTER else values
    counts = best_worst_counts(oriented, rank_matrix.method_ids)
    stats: dict = {
        "mean_ranks": rank_matrix.mean_ranks(),
        "best_counts": {mid: c[0] for mid, c in counts.items()},
        "worst_counts": {mid: c[1] for mid, c in counts.items()},
    }
    try:
        chi2, f_stat, p_value = friedman_test(rank_matrix)
        stats["friedman"] = {"chi2": chi2, "f": f_stat, "p_value": p_value}
    except (PerfectConsistencyError, ValueError) as exc:
        stats["friedman"] = {"error": str(exc)}
    if reference in rank_matrix.method_ids and rank_matrix.n_methods >= 2:
        holm = holm_stepdown(pairwise_z_pvalues(rank_matrix, reference), alpha)
        stats["holm"] = {"reference": reference, "entries": _holm_entries(holm)}
    return stats


def run_benchmark(
    datasets: list[GeneratedDataset],
    method_ids: tuple[str, ...] = ("ols", "ridge", "lasso", "sparsestep"),
    lambda_grid: np.ndarray | None = None,
    k: int = 10,
    base_seed: int = 0,
    alpha: float = 0.05,
    reference: str = "sparsestep",
    parallelism: int = 1,
) -> BenchmarkReport:
    """Evaluate every dataset x method cell and aggregate the statistics.

    The CV seed for a dataset depends only on ``base_seed`` and the
    dataset (not the method), so every method sees identical folds.
    Cells may run concurrently up to ``parallelism``; results are
    reduced in a fixed order so the output does not depend on it.
    Failed cells are recorded and their method is dropped from the rank
    statistics (ranks need complete columns).
    """
    unknown = [m for m in method_ids if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {unknown}")
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()

    cells = [(gen, mid) for gen in datasets for mid in method_ids]

    def cv_seed_for(gen: GeneratedDataset) -> int:
        return int(
            np.random.SeedSequence([base_seed, gen.spec.seed]).generate_state(
                1, dtype=np.uint64
            )[0]
        )

    def run_one(cell) -> MetricRecord | Exception:
        gen, mid = cell
        try:
            return run_cell(gen, mid, lambda_grid, k, cv_seed_for(gen))
        except FIT_ERRORS + (RuntimeError,) as exc:
            return exc

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(run_one, cells))
    else:
        outcomes = [run_one(cell) for cell in cells]

    records: list[MetricRecord] = []
    failures: list[dict] = []
    for (gen, mid), outcome in zip(cells, outcomes):
        if isinstance(outcome, MetricRecord):
            records.append(outcome)
        else:
            failures.append(
                {
                    "dataset_id": gen.spec.name,
                    "method_id": mid,
                    "error": str(outcome),
                }
            )

    dataset_ids = tuple(gen.spec.name for gen in datasets)
    failed_methods = {f["method_id"] for f in failures}
    complete_methods = tuple(m for m in method_ids if m not in failed_methods)

    rank_matrices: dict[str, RankMatrix] = {}
    stats: dict = {
        "methods": list(method_ids),
        "ranked_methods": list(complete_methods),
        "n_datasets": len(dataset_ids),
        "alpha": alpha,
        "k_folds": k,
        "lambda_grid_points": len(lambda_grid),
        "failures": failures,
        "metrics": {},
    }
    timing_stats: dict = {"metrics": {}}
    if len(complete_methods) >= 2 and len(dataset_ids) >= 1:
        for metric in QUALITY_METRICS + (TIMING_METRIC,):
            rank_matrices[metric] = rank_records(
                records, dataset_ids, complete_methods, metric
            )
        if len(dataset_ids) >= 2:
            for metric in QUALITY_METRICS:
                stats["metrics"][metric] = _metric_stats(
                    records, rank_matrices[metric], metric, reference, alpha
                )
            timing_stats["metrics"][TIMING_METRIC] = _metric_stats(
                records, rank_matrices[TIMING_METRIC], TIMING_METRIC, reference, alpha
            )

    return BenchmarkReport(
        records=records,
        rank_matrices=rank_matrices,
        stats=stats,
        timing_stats=timing_stats,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def write_report(report: BenchmarkReport, directory: str | Path) -> Path:
    """Write records.csv, ranks_<metric>.csv, stats.json, timing_stats.json.

    ``records.csv`` is long-form (one row per dataset x method x
    metric).  Everything except wall times is byte-identical across
    reruns with the same seeds.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    lines = ["dataset,method,metric,value"]
    for rec in report.records:
        for metric in QUALITY_METRICS + (TIMING_METRIC, "chosen_lambda"):
            lines.append(f"{rec.dataset_id},{rec.method_id},{metric},{rec.get(metric)!r}")
    (directory / "records.csv").write_text("\n".join(lines) + "\n")

    for metric, matrix in report.rank_matrices.items():
        rows = ["dataset," + ",".join(matrix.method_ids)]
        for did, rank_row in zip(matrix.dataset_ids, matrix.ranks):
            rows.append(did + "," + ",".join(repr(float(v)) for v in rank_row))
        (directory / f"ranks_{metric}.csv").write_text("\n".join(rows) + "\n")

    with open(directory / "stats.json", "w") as fh:
        json.dump(report.stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(directory / "timing_stats.json", "w") as fh:
        json.dump(report.timing_stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory
