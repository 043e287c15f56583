"""Tests for the benchmark orchestration and report serialization."""

import json

import numpy as np
import pytest

from sparsestep import ScenarioSpec, generate_dataset, run_benchmark, write_report
from sparsestep.benchmark import QUALITY_METRICS, rank_records, run_cell
from sparsestep.datagen import scenario_seed


@pytest.fixture(scope="module")
def tiny_datasets():
    specs = [
        ScenarioSpec(
            m=5, zeta=50, snr=snr, correlation="uncorrelated",
            n_train=120, n_test=40,
            seed=scenario_seed(17, 5, 50, snr, "uncorrelated"),
        )
        for snr in (1.0, 10.0)
    ]
    return [generate_dataset(s) for s in specs]


@pytest.fixture(scope="module")
def tiny_report(tiny_datasets):
    return run_benchmark(
        tiny_datasets,
        method_ids=("ols", "ridge", "sparsestep"),
        lambda_grid=2.0 ** np.linspace(-15, 15, 9),
        k=5,
        base_seed=7,
    )


class TestRunBenchmark:
    def test_record_count(self, tiny_report):
        assert len(tiny_report.records) == 2 * 3
        assert tiny_report.failures == []

    def test_rank_rows_sum(self, tiny_report):
        k = 3
        for metric, matrix in tiny_report.rank_matrices.items():
            sums = matrix.ranks.sum(axis=1)
            np.testing.assert_allclose(sums, k * (k + 1) / 2)

    def test_cells_match_direct_calls(self, tiny_datasets, tiny_report):
        """The orchestration adds no numeric transformation over run_cell."""
        gen = tiny_datasets[0]
        seed = int(
            np.random.SeedSequence([7, gen.spec.seed]).generate_state(1, dtype=np.uint64)[0]
        )
        direct = run_cell(gen, "ridge", 2.0 ** np.linspace(-15, 15, 9), 5, seed)
        rec = next(
            r for r in tiny_report.records
            if r.dataset_id == gen.spec.name and r.method_id == "ridge"
        )
        assert direct.beta_mse == rec.beta_mse
        assert direct.test_mse == rec.test_mse
        assert direct.chosen_lambda == rec.chosen_lambda

    def test_parallel_matches_serial(self, tiny_datasets, tiny_report):
        parallel = run_benchmark(
            tiny_datasets,
            method_ids=("ols", "ridge", "sparsestep"),
            lambda_grid=2.0 ** np.linspace(-15, 15, 9),
            k=5,
            base_seed=7,
            parallelism=4,
        )
        for a, b in zip(tiny_report.records, parallel.records):
            assert (a.dataset_id, a.method_id) == (b.dataset_id, b.method_id)
            assert a.beta_mse == b.beta_mse
            assert a.test_mse == b.test_mse
            assert a.chosen_lambda == b.chosen_lambda

    def test_hitrate_ranked_larger_is_better(self, tiny_report):
        records = tiny_report.records
        ids = tuple(sorted({r.dataset_id for r in records}))
        methods = ("ols", "ridge", "sparsestep")
        matrix = rank_records(records, ids, methods, "sparsity_hitrate")
        by_key = {(r.dataset_id, r.method_id): r.sparsity_hitrate for r in records}
        for i, did in enumerate(ids):
            values = [by_key[(did, m)] for m in methods]
            best_method = int(np.argmax(values))
            assert matrix.ranks[i, best_method] == matrix.ranks[i].min()

    def test_stats_structure(self, tiny_report):
        stats = tiny_report.stats
        assert stats["n_datasets"] == 2
        for metric in QUALITY_METRICS:
            block = stats["metrics"][metric]
            assert "mean_ranks" in block and "friedman" in block
        assert "fit_seconds" not in stats["metrics"]
        assert "fit_seconds" in tiny_report.timing_stats["metrics"]

    def test_unknown_method_rejected(self, tiny_datasets):
        with pytest.raises(ValueError):
            run_benchmark(tiny_datasets, method_ids=("ols", "scad"))

    def test_failed_method_dropped_from_ranks(self):
        """m > n makes OLS fail per cell; the failing method is recorded
        and excluded from the rank statistics, which need complete columns."""
        specs = [
            ScenarioSpec(
                m=40, zeta=50, snr=snr, correlation="uncorrelated",
                n_train=30, n_test=10,
                seed=scenario_seed(23, 40, 50, snr, "uncorrelated"),
            )
            for snr in (1.0, 10.0)
        ]
        datasets = [generate_dataset(s) for s in specs]
        report = run_benchmark(
            datasets,
            method_ids=("ols", "ridge", "sparsestep"),
            lambda_grid=2.0 ** np.linspace(-5, 5, 5),
            k=5,
            base_seed=3,
        )
        assert {f["method_id"] for f in report.failures} == {"ols"}
        assert len(report.records) == 2 * 2
        for matrix in report.rank_matrices.values():
            assert matrix.method_ids == ("ridge", "sparsestep")
        assert report.stats["ranked_methods"] == ["ridge", "sparsestep"]


class TestWriteReport:
    def test_files_and_determinism(self, tiny_datasets, tiny_report, tmp_path):
        d1 = write_report(tiny_report, tmp_path / "a")
        for name in ("records.csv", "stats.json", "timing_stats.json",
                     "ranks_beta_mse.csv", "ranks_sparsity_hitrate.csv",
                     "ranks_test_mse.csv", "ranks_fit_seconds.csv"):
            assert (d1 / name).is_file()

        lines = (d1 / "records.csv").read_text().strip().splitlines()
        # header + 6 cells x 5 metrics
        assert len(lines) == 1 + 6 * 5
        assert sum(",beta_mse," in ln for ln in lines) == 6

        rerun = run_benchmark(
            tiny_datasets,
            method_ids=("ols", "ridge", "sparsestep"),
            lambda_grid=2.0 ** np.linspace(-15, 15, 9),
            k=5,
            base_seed=7,
        )
        d2 = write_report(rerun, tmp_path / "b")
        assert (d1 / "stats.json").read_bytes() == (d2 / "stats.json").read_bytes()
        assert (d1 / "ranks_beta_mse.csv").read_bytes() == (d2 / "ranks_beta_mse.csv").read_bytes()

    def test_stats_json_parses(self, tiny_report, tmp_path):
        write_report(tiny_report, tmp_path / "r")
        stats = json.loads((tmp_path / "r" / "stats.json").read_text())
        assert set(stats["metrics"]) == set(QUALITY_METRICS)
