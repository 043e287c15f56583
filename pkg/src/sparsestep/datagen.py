"""Deterministic synthetic-data generator for the simulation study.

Each scenario draws rows of ``X`` from a multivariate normal with one of
three correlation structures (identity, constant 0.5, or a small random
perturbation of the identity), standardizes the columns, draws a sparse
coefficient vector with uniform entries and trailing exact zeros, and
adds Gaussian noise rescaled so the realized signal-to-noise ratio
``beta' X'X beta / e'e`` on the training block matches the target
exactly.  Everything is a pure function of the scenario seed, so
regeneration is bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .data import Dataset

CORRELATION_KINDS = ("uncorrelated", "constant", "noise")
GRID_M = (10, 50, 100, 500)
GRID_ZETA = (0, 25, 50, 75, 95)
GRID_SNR = (0.1, 1.0, 10.0)

CONSTANT_CORRELATION = 0.5
NOISE_EPSILON = 0.01  # scale of the identity perturbation
NOISE_DIMENSION = 2   # dimension of the random unit vectors behind it
RNG_ALGORITHM = "numpy.random.PCG64"

_CSV_FORMAT = "%.17g"  # round-trips float64 exactly


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the simulation grid.

    ``zeta`` is the sparsity percentage: the last ``z = floor(m*zeta/100)``
    coefficients are exact zeros.
    """

    m: int
    zeta: int
    snr: float
    correlation: str
    n_train: int
    n_test: int
    seed: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.zeta not in GRID_ZETA:
            raise ValueError(f"zeta must be one of {GRID_ZETA}, got {self.zeta}")
        if self.snr not in GRID_SNR:
            raise ValueError(f"snr must be one of {GRID_SNR}, got {self.snr}")
        if self.correlation not in CORRELATION_KINDS:
            raise ValueError(
                f"correlation must be one of {CORRELATION_KINDS}, got {self.correlation!r}"
            )
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError(
                f"n_train and n_test must be positive, got {self.n_train}, {self.n_test}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")

    @property
    def z(self) -> int:
        """Number of trailing zero coefficients."""
        return self.m * self.zeta // 100

    @property
    def name(self) -> str:
        return f"m{self.m}_z{self.zeta}_snr{self.snr:g}_{self.correlation}"


@dataclass(frozen=True)
class GeneratedDataset:
    """Realized train/test split of one scenario."""

    spec: ScenarioSpec
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    beta_true: np.ndarray
    sigma_used: dict
    noise_scale: float
    mu: np.ndarray

    @property
    def train(self) -> Dataset:
        return Dataset(
            X=self.X_train, y=self.y_train, beta_true=self.beta_true,
            dataset_id=self.spec.name, meta=self.sigma_used,
        )

    @property
    def test(self) -> Dataset:
        return Dataset(
            X=self.X_test, y=self.y_test, beta_true=self.beta_true,
            dataset_id=self.spec.name, meta=self.sigma_used,
        )


def make_correlation(kind: str, m: int, rng: np.random.Generator) -> np.ndarray:
    """Build the m x m correlation matrix for one scenario kind.

    ``uncorrelated`` is the identity; ``constant`` has 0.5 everywhere
    off the diagonal; ``noise`` perturbs the identity with
    ``eps * u_i'u_j`` for independent uniform unit vectors ``u_i`` of
    dimension :data:`NOISE_DIMENSION`.  The result is checked to be
    symmetric positive semidefinite with unit diagonal; a failed check
    raises rather than silently repairing.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if kind == "uncorrelated":
        return np.eye(m)
    if kind == "constant":
        sigma = np.full((m, m), CONSTANT_CORRELATION)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    if kind == "noise":
        u = rng.standard_normal((m, NOISE_DIMENSION))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        noise = NOISE_EPSILON * (u @ u.T)
        np.fill_diagonal(noise, 0.0)
        sigma = np.eye(m) + noise
        min_eig = float(np.linalg.eigvalsh(sigma).min())
        if min_eig < -1e-10:
            raise np.linalg.LinAlgError(
                f"noise-perturbed correlation matrix is not PSD "
                f"(min eigenvalue {min_eig:.3e})"
            )
        return sigma
    raise ValueError(f"unknown correlation kind {kind!r}")


def draw_design(
    n: int, mu: np.ndarray, sigma: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw n rows from N(mu, sigma) and standardize the columns.

    The draw uses the Cholesky factor of ``sigma``; the standardization
    (mean 0, unit population variance per column) nullifies ``mu``, which
    is kept in the signature for fidelity to the generating process.
    """
    mu = np.asarray(mu, dtype=np.float64)
    m = mu.shape[0]
    if n < 2:
        raise ValueError(f"need n >= 2 rows to standardize, got {n}")
    try:
        chol = np.linalg.cholesky(np.asarray(sigma, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"correlation matrix factorization failed: {exc}"
        ) from exc
    X = mu + rng.standard_normal((n, m)) @ chol.T
    X -= X.mean(axis=0)
    scales = np.sqrt(np.mean(X**2, axis=0))
    if np.any(scales == 0):
        raise np.linalg.LinAlgError("degenerate draw: a column has zero variance")
    X /= scales
    return X


def make_beta(m: int, zeta: int, rng: np.random.Generator) -> np.ndarray:
    """Draw coefficients uniform on [-1, 1] and zero the last floor(m*zeta/100)."""
    if not 0 <= zeta < 100:
        raise ValueError(f"zeta must be a percentage in [0, 100), got {zeta}")
    beta = rng.uniform(-1.0, 1.0, size=m)
    z = m * zeta // 100
    if z:
        beta[m - z:] = 0.0
    return beta


def make_response(
    X: np.ndarray,
    beta: np.ndarray,
    snr: float,
    rng: np.random.Generator,
    *,
    calibration_rows: int | None = None,
) -> tuple[np.ndarray, float]:
    """Return ``y = X beta + e`` with the realized SNR pinned exactly.

    A raw standard-normal noise vector is drawn and rescaled by
    ``c = sqrt(beta' X'X beta / (snr * e0'e0))`` so the realized ratio
    ``beta' X'X beta / e'e`` equals ``snr`` exactly (not just in
    expectation).  With ``calibration_rows = k`` the ratio is pinned on
    the first k rows (the training block) while the same scale applies
    to the remaining rows.
    """
    if snr <= 0:
        raise ValueError(f"snr must be positive, got {snr}")
    X = np.asarray(X, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    signal_full = X @ beta
    rows = slice(None) if calibration_rows is None else slice(0, calibration_rows)
    signal = signal_full[rows]
    signal_energy = float(signal @ signal)
    if signal_energy == 0.0:
        raise ValueError("X beta is zero on the calibration rows; SNR is undefined")
    e0 = rng.standard_normal(X.shape[0])
    noise_energy = float(e0[rows] @ e0[rows])
    scale = float(np.sqrt(signal_energy / (snr * noise_energy)))
    return signal_full + scale * e0, scale


def scenario_seed(base_seed: int, m: int, zeta: int, snr: float, correlation: str) -> int:
    """Deterministic 64-bit seed for one grid cell.

    Derived from the cell's values (not its position), so a sub-grid
    generates exactly the same datasets as the matching cells of the
    full grid.
    """
    corr_code = CORRELATION_KINDS.index(correlation)
    seq = np.random.SeedSequence(
        [base_seed, m, zeta, int(round(snr * 10)), corr_code]
    )
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def generate_scenario_grid(
    n_train: int = 20_000,
    n_test: int = 10_000,
    base_seed: int = 0,
    *,
    m_values: tuple[int, ...] = GRID_M,
    zeta_values: tuple[int, ...] = GRID_ZETA,
    snr_values: tuple[float, ...] = GRID_SNR,
    correlations: tuple[str, ...] = CORRELATION_KINDS,
) -> list[ScenarioSpec]:
    """Cross product of the grid values; the defaults give all 180 cells."""
    specs = []
    for m in m_values:
        for zeta in zeta_values:
            for snr in snr_values:
                for corr in correlations:
                    specs.append(
                        ScenarioSpec(
                            m=m, zeta=zeta, snr=snr, correlation=corr,
                            n_train=n_train, n_test=n_test,
                            seed=scenario_seed(base_seed, m, zeta, snr, corr),
                        )
                    )
    return specs


def generate_dataset(spec: ScenarioSpec) -> GeneratedDataset:
    """Realize one scenario: a pure function of ``spec`` (and its seed)."""
    rng = np.random.default_rng(spec.seed)
    sigma = make_correlation(spec.correlation, spec.m, rng)
    mu = rng.uniform(0.0, 1.0, size=spec.m)
    n_total = spec.n_train + spec.n_test
    X = draw_design(n_total, mu, sigma, rng)
    beta = make_beta(spec.m, spec.zeta, rng)
    y, noise_scale = make_response(
        X, beta, spec.snr, rng, calibration_rows=spec.n_train
    )
    descriptor = {
        "kind": spec.correlation,
        "epsilon_noise": NOISE_EPSILON,
        "M": NOISE_DIMENSION,
    }
    return GeneratedDataset(
        spec=spec,
        X_train=X[: spec.n_train],
        y_train=y[: spec.n_train],
        X_test=X[spec.n_train:],
        y_test=y[spec.n_train:],
        beta_true=beta,
        sigma_used=descriptor,
        noise_scale=noise_scale,
        mu=mu,
    )


def save_dataset(generated: GeneratedDataset, directory: str | Path) -> Path:
    """Write one scenario directory (headerless full-precision CSVs + meta.json).

    Re-running with the same seed overwrites with identical bytes.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savetxt(directory / "X_train.csv", generated.X_train, fmt=_CSV_FORMAT, delimiter=",")
    np.savetxt(directory / "y_train.csv", generated.y_train, fmt=_CSV_FORMAT, delimiter=",")
    np.savetxt(directory / "X_test.csv", generated.X_test, fmt=_CSV_FORMAT, delimiter=",")
    np.savetxt(directory / "y_test.csv", generated.y_test, fmt=_CSV_FORMAT, delimiter=",")
    np.savetxt(directory / "beta_true.csv", generated.beta_true, fmt=_CSV_FORMAT, delimiter=",")
    meta = dict(asdict(generated.spec))
    meta.update(
        rng=RNG_ALGORITHM,
        noise_scale=generated.noise_scale,
        epsilon_noise=NOISE_EPSILON,
        M=NOISE_DIMENSION,
        mu=[float(v) for v in generated.mu],
        sigma=generated.sigma_used["kind"],
    )
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory


def _load_matrix(path: Path, columns: int) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data.reshape(-1, columns)


def load_dataset(directory: str | Path) -> GeneratedDataset:
    """Read back a directory written by :func:`save_dataset`."""
    directory = Path(directory)
    with open(directory / "meta.json") as fh:
        meta = json.load(fh)
    spec = ScenarioSpec(
        m=meta["m"], zeta=meta["zeta"], snr=meta["snr"],
        correlation=meta["correlation"], n_train=meta["n_train"],
        n_test=meta["n_test"], seed=meta["seed"],
    )
    return GeneratedDataset(
        spec=spec,
        X_train=_load_matrix(directory / "X_train.csv", spec.m),
        y_train=np.loadtxt(directory / "y_train.csv", delimiter=",", ndmin=1),
        X_test=_load_matrix(directory / "X_test.csv", spec.m),
        y_test=np.loadtxt(directory / "y_test.csv", delimiter=",", ndmin=1),
        beta_true=np.loadtxt(directory / "beta_true.csv", delimiter=",", ndmin=1),
        sigma_used={
            "kind": meta["sigma"],
            "epsilon_noise": meta["epsilon_noise"],
            "M": meta["M"],
        },
        noise_scale=meta["noise_scale"],
        mu=np.asarray(meta["mu"], dtype=np.float64),
    )
