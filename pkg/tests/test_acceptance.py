"""Acceptance suite: one test per exit criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines.  The scaled-down study (36 datasets, 4 methods, 41-point grid)
runs once in a session fixture and is reused; the determinism criterion
reruns it from scratch and compares report bytes.
"""

import itertools
import time

import numpy as np
import pytest

import sparsestep as ss
from sparsestep.datagen import make_beta, make_correlation, make_response, draw_design
from sparsestep.evaluation import fractional_ranks, friedman_chi2
from sparsestep.benchmark import write_report

STUDY_SEED = 42
ORACLE_SEED = 2026


def report_line(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f"  ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

def build_study_datasets():
    specs = ss.generate_scenario_grid(
        n_train=3000, n_test=1000, base_seed=STUDY_SEED,
        m_values=(10, 50), zeta_values=(0, 50, 95), snr_values=(0.1, 10.0),
    )
    return [ss.generate_dataset(spec) for spec in specs]


def run_study(datasets):
    return ss.run_benchmark(
        datasets,
        method_ids=("ols", "ridge", "lasso", "sparsestep"),
        lambda_grid=ss.default_lambda_grid(41),
        k=10,
        base_seed=STUDY_SEED,
    )


@pytest.fixture(scope="session")
def study_datasets():
    return build_study_datasets()


@pytest.fixture(scope="session")
def study_report(study_datasets):
    t0 = time.perf_counter()
    report = run_study(study_datasets)
    report.elapsed = time.perf_counter() - t0
    return report


def best_subset_by_enumeration(X, y, lam):
    """Global minimizer of rss + lam * support_size over all 2^m supports."""
    m = X.shape[1]
    best_obj, best = np.inf, None
    for size in range(m + 1):
        for support in itertools.combinations(range(m), size):
            if size == 0:
                rss = float(y @ y)
            else:
                XS = X[:, support]
                coef = np.linalg.lstsq(XS, y, rcond=None)[0]
                r = y - XS @ coef
                rss = float(r @ r)
            if rss + lam * size < best_obj:
                best_obj, best = rss + lam * size, frozenset(support)
    return best


def restricted_ols(X, y, support):
    coef = np.zeros(X.shape[1])
    idx = sorted(support)
    coef[idx] = np.linalg.lstsq(X[:, idx], y, rcond=None)[0]
    return coef


@pytest.fixture(scope="session")
def oracle_trials():
    """20 sparse-recovery problems: m=8, n=200, SNR=10, true support size 3.

    Each trial records the standardized data, the CV-chosen lambdas and
    the fits needed by both the oracle-agreement and the unbiasedness
    criteria.
    """
    grid = ss.default_lambda_grid(101)
    trials = []
    for i in range(20):
        rng = np.random.default_rng(np.random.SeedSequence([ORACLE_SEED, i]))
        sigma = make_correlation("uncorrelated", 8, rng)
        mu = rng.uniform(0, 1, 8)
        X = draw_design(200, mu, sigma, rng)
        beta = make_beta(8, 70, rng)  # floor(8*70/100) = 5 trailing zeros
        y, _ = make_response(X, beta, 10.0, rng)
        dataset = ss.Dataset(X=X, y=y)
        std, _ = ss.standardize(dataset)

        ss_lambda, _ = ss.cv_grid_search("sparsestep", dataset, grid, 10, i)
        fit = ss.sparsestep_fit(std, ss.SolverSchedule(lam=ss_lambda))
        lasso_lambda, _ = ss.cv_grid_search("lasso", dataset, grid, 10, i)
        lasso_beta = ss.lasso_fit(std, lasso_lambda)

        trials.append({
            "std": std,
            "beta_true": beta,
            "true_support": frozenset(np.flatnonzero(beta)),
            "ss_lambda": ss_lambda,
            "fit": fit,
            "lasso_beta": lasso_beta,
        })
    return trials


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def test_majorizer_domination_and_tangency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 100_000
    x = rng.uniform(-10, 10, n)
    y = rng.uniform(-10, 10, n)
    gamma = rng.uniform(1e-6, 10.0, n)
    g2 = gamma**2
    surrogate = (g2 * x**2 + y**4) / (y**2 + g2) ** 2
    penalty_x = x**2 / (x**2 + g2)
    penalty_y = y**2 / (y**2 + g2)
    tangent = (g2 * y**2 + y**4) / (y**2 + g2) ** 2
    dominated = np.all(surrogate >= penalty_x - 1e-12)
    tangency = np.max(np.abs(tangent - penalty_y)) <= 1e-12
    elapsed = time.perf_counter() - t0
    report_line(
        "majorizer domination and tangency (1e5 triples)",
        bool(dominated and tangency and elapsed < 5.0),
        f"elapsed {elapsed:.2f}s",
    )


def test_guaranteed_descent():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = -np.inf
    for _ in range(50):
        m = int(rng.integers(2, 21))
        X = rng.standard_normal((200, m))
        beta = rng.uniform(-1, 1, m)
        y = X @ beta + rng.standard_normal(200)
        ds = ss.Dataset(X=X, y=y)
        lam = float(rng.uniform(0.1, 20.0))
        fit = ss.sparsestep_fit(ds, ss.SolverSchedule(lam=lam))
        trace = fit.descent_trace
        for (g1, _, l1), (g2, _, l2) in zip(trace, trace[1:]):
            if g1 == g2:
                worst = max(worst, l2 - l1)
    elapsed = time.perf_counter() - t0
    report_line(
        "guaranteed descent within fixed-gamma blocks (50 datasets)",
        bool(worst <= 1e-10 and elapsed < 30.0),
        f"worst increase {worst:.2e}, elapsed {elapsed:.1f}s",
    )


def test_first_step_ridge_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(2, 12))
        X = rng.standard_normal((100, m))
        y = rng.standard_normal(100)
        ds = ss.Dataset(X=X, y=y)
        lam = float(rng.uniform(0.1, 10.0))
        schedule = ss.SolverSchedule(lam=lam)
        state = ss.build_omega(np.zeros(m), schedule.gamma0)
        first = ss.im_update(X.T @ X, X.T @ y, lam, state)
        ridge = ss.ridge_fit(ds, lam / schedule.gamma0**2)
        worst = max(worst, float(np.max(np.abs(first - ridge))))
    elapsed = time.perf_counter() - t0
    report_line(
        "first-step ridge equivalence (20 instances)",
        bool(worst <= 1e-8 and elapsed < 5.0),
        f"worst deviation {worst:.2e}",
    )


def test_gradient_matches_central_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    n = 10_000
    b = rng.uniform(0.05, 3.0, n) * rng.choice([-1.0, 1.0], n)
    lam = rng.uniform(0.5, 2.0, n)
    gamma = rng.uniform(0.1, 2.0, n)
    g2 = gamma**2
    h = 1e-6
    f_plus = lam * (b + h) ** 2 / ((b + h) ** 2 + g2)
    f_minus = lam * (b - h) ** 2 / ((b - h) ** 2 + g2)
    numeric = (f_plus - f_minus) / (2 * h)
    analytic = lam * 2 * g2 * b / (b**2 + g2) ** 2
    rel = np.abs(numeric - analytic) / np.maximum(np.abs(analytic), 1e-12)
    elapsed = time.perf_counter() - t0
    report_line(
        "gradient vs central differences (1e4 points)",
        bool(np.max(rel) <= 1e-5 and elapsed < 2.0),
        f"max relative error {np.max(rel):.2e}",
    )


def test_best_subset_oracle_agreement(oracle_trials):
    t0 = time.perf_counter()
    hits = 0
    for trial in oracle_trials:
        std = trial["std"]
        oracle = best_subset_by_enumeration(std.X, std.y, trial["ss_lambda"])
        hits += trial["fit"].support == oracle
    elapsed = time.perf_counter() - t0
    report_line(
        "best-subset oracle agreement (enumeration over all 2^8 supports)",
        hits >= 16,
        f"{hits}/20 seeds, elapsed {elapsed:.1f}s",
    )


def test_unbiasedness_vs_restricted_ols(oracle_trials):
    recovered = [
        t for t in oracle_trials if t["fit"].support == t["true_support"]
    ]
    assert recovered, "no seed recovered the true support"
    worst_dev = 0.0
    shrink_ok = True
    for trial in recovered:
        std = trial["std"]
        support = sorted(trial["true_support"])
        ols_restricted = restricted_ols(std.X, std.y, support)
        dev_ss = np.abs(trial["fit"].beta[support] - ols_restricted[support])
        worst_dev = max(worst_dev, float(dev_ss.max()))
        mad_ss = float(dev_ss.mean())
        mad_lasso = float(
            np.abs(trial["lasso_beta"][support] - ols_restricted[support]).mean()
        )
        shrink_ok &= mad_lasso > mad_ss
    report_line(
        "unbiasedness: matches restricted OLS, lasso shrinks more",
        bool(worst_dev <= 1e-3 and shrink_ok),
        f"{len(recovered)} recovered seeds, worst deviation {worst_dev:.2e}",
    )


def test_exact_snr_construction(study_datasets):
    t0 = time.perf_counter()
    worst = 0.0
    for gen in study_datasets:
        e = gen.y_train - gen.X_train @ gen.beta_true
        signal = gen.beta_true @ gen.X_train.T @ gen.X_train @ gen.beta_true
        realized = signal / (e @ e)
        worst = max(worst, abs(realized - gen.spec.snr) / gen.spec.snr)
    elapsed = time.perf_counter() - t0
    report_line(
        "exact SNR on every generated dataset",
        bool(worst <= 1e-10 and elapsed < 10.0),
        f"worst relative error {worst:.2e}",
    )


def test_statistics_oracles():
    t0 = time.perf_counter()
    # hand-computed chi2 = 6 for three identical orderings of three methods
    rm = ss.RankMatrix(
        ranks=np.array([[1.0, 2.0, 3.0]] * 3),
        dataset_ids=("d0", "d1", "d2"),
        method_ids=("a", "b", "c"),
    )
    chi2_ok = friedman_chi2(rm) == pytest.approx(6.0)
    try:
        ss.friedman_test(rm)
        degenerate_ok = False
    except ss.PerfectConsistencyError as exc:
        degenerate_ok = exc.chi2 == pytest.approx(6.0)

    # Monte-Carlo null calibration at alpha = 0.05
    rng = np.random.default_rng(5)
    rejections = 0
    for _ in range(1000):
        values = rng.standard_normal((10, 4))
        ranks = np.vstack([fractional_ranks(row, 0.0) for row in values])
        matrix = ss.RankMatrix(
            ranks=ranks,
            dataset_ids=tuple(f"d{i}" for i in range(10)),
            method_ids=("a", "b", "c", "d"),
        )
        _, _, p = ss.friedman_test(matrix)
        rejections += p <= 0.05
    rate = rejections / 1000.0

    holm_a = ss.holm_stepdown({"h1": 0.01, "h2": 0.04}, alpha=0.05)
    holm_b = ss.holm_stepdown({"h1": 0.03, "h2": 0.04}, alpha=0.05)
    holm_ok = holm_a.rejected() == {"h1", "h2"} and holm_b.rejected() == set()
    elapsed = time.perf_counter() - t0
    report_line(
        "statistics oracles (friedman chi2=6, null calibration, holm cases)",
        bool(chi2_ok and degenerate_ok and 0.03 <= rate <= 0.07 and holm_ok
             and elapsed < 30.0),
        f"null rejection rate {rate:.3f}, elapsed {elapsed:.1f}s",
    )


def test_scaled_down_study_ordering(study_report):
    ranks_beta = study_report.rank_matrices["beta_mse"].mean_ranks()
    ranks_test = study_report.rank_matrices["test_mse"].mean_ranks()
    beta_ok = (
        ranks_beta["sparsestep"] < ranks_beta["ols"]
        and ranks_beta["sparsestep"] < ranks_beta["ridge"]
    )
    test_ok = (
        ranks_test["sparsestep"] < ranks_test["ols"]
        and ranks_test["sparsestep"] < ranks_test["ridge"]
    )
    hit = [
        r.sparsity_hitrate
        for r in study_report.records
        if r.method_id == "sparsestep" and "_z95_" in r.dataset_id
    ]
    hit_ok = np.mean(hit) >= 0.85
    runtime_ok = study_report.elapsed < 1800.0
    report_line(
        "scaled-down study ordering and hitrate",
        bool(beta_ok and test_ok and hit_ok and runtime_ok and not study_report.failures),
        f"beta-mse ranks {ranks_beta}, test-mse ranks {ranks_test}, "
        f"zeta95 hitrate {np.mean(hit):.3f}, elapsed {study_report.elapsed:.0f}s",
    )


def test_study_determinism(study_report, tmp_path):
    """A from-scratch rerun of the full study reproduces stats.json exactly."""
    first = write_report(study_report, tmp_path / "first")
    rerun = run_study(build_study_datasets())
    second = write_report(rerun, tmp_path / "second")
    identical = (
        (first / "stats.json").read_bytes() == (second / "stats.json").read_bytes()
    )
    ranks_identical = all(
        (first / f"ranks_{metric}.csv").read_bytes()
        == (second / f"ranks_{metric}.csv").read_bytes()
        for metric in ("beta_mse", "sparsity_hitrate", "test_mse")
    )
    report_line(
        "study determinism (byte-identical stats.json on rerun)",
        bool(identical and ranks_identical),
    )
