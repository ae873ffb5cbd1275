"""Batch Monte-Carlo driver for the type I / type II error tables.

A study sweeps a grid of (window size, dependence range ``rho``, latent
correlation ``kappa12``, significance level, bandwidth constant) cells,
replicates the moving-average model in each cell, applies the selected tests
against the uniform mark hypothesis, and tabulates rejection rates.  Cells
with ``kappa12 = 0`` measure type I error, the others measure power.

Replications use per-cell substreams derived from the master seed, and all
reductions run in replication order, so a study is bit-reproducible for a
fixed seed regardless of the parallelism degree.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .estimators import (BandwidthConditionWarning, KernelSpec,
                         deviation_vector, monte_carlo_covariance,
                         smoothed_covariance_curve)
from .geometry import window_for_expected_points
from .gof import SingularCovarianceError, chi2_quantile, invert_spd
from .io import config_digest, write_rows_csv
from .marks import AngularBinSet, GaussCovariance2, uniform_bin_probs
from .models import MamConfig, mam_realize
from .rng import child_seed

_DEFAULT_POINT_GRID = tuple(float(n) for n in range(300, 3001, 300)) + (3125.0,)


@dataclass(frozen=True)
class StudyConfig:
    """Parameter grids and replication counts of one study run.

    The defaults reproduce the reference scenario: intensity chosen so the
    3000-sided square holds 3125 expected points, dependence ranges 0..300,
    latent correlations 0..0.8, eight bins of 20 degrees, bandwidth
    constants 20..60, and desk-scale replication counts of 1000.
    """

    intensity: float = 3125.0 / 3000.0 ** 2
    expected_points: tuple[float, ...] = _DEFAULT_POINT_GRID
    rho_grid: tuple[float, ...] = (0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0)
    kappa12_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.4, 0.8)
    alpha_grid: tuple[float, ...] = (0.025, 0.05, 0.1)
    ell: int = 8
    c_grid: tuple[float, ...] = (20.0, 30.0, 40.0, 50.0, 60.0)
    n_reps: int = 1000
    mc_reps: int = 1000
    seed: int = 0
    tests: str = "both"  # tmd | mgm | both
    mgm_null_rho: str = "match"  # null model shares the data's rho, or "zero"
    kappa11: float = 1.0
    kappa22: float = 1.0
    kernel: KernelSpec = KernelSpec()
    n_jobs: int = 1

    def __post_init__(self):
        for name in ("expected_points", "rho_grid", "kappa12_grid",
                     "alpha_grid", "c_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if self.n_reps < 1 or self.mc_reps < 1:
            raise ValueError("replication counts must be at least 1")
        if self.tests not in ("tmd", "mgm", "both"):
            raise ValueError("tests must be 'tmd', 'mgm', or 'both'")
        if self.mgm_null_rho not in ("match", "zero"):
            raise ValueError("mgm_null_rho must be 'match' or 'zero'")
        if not all(0 < a < 1 for a in self.alpha_grid):
            raise ValueError("alpha values must lie in (0, 1)")

    @property
    def selected_tests(self) -> tuple[str, ...]:
        return ("tmd", "mgm") if self.tests == "both" else (self.tests,)


@dataclass(frozen=True)
class ErrorRow:
    """Rejection rate of one test in one grid cell."""

    test: str
    rho: float
    kappa12: float
    expected_points: float
    alpha: float
    c: float | None
    rate: float
    se: float
    n_valid: int
    n_invalid: int
    seconds: float


FIELDS = ("test", "rho", "kappa12", "expected_points", "alpha", "c",
          "rate", "se", "n_valid", "n_invalid", "seconds")


@dataclass(frozen=True)
class ErrorTable:
    rows: tuple[ErrorRow, ...]
    seed: int
    digest: str

    def to_csv(self, path) -> None:
        write_rows_csv(path, FIELDS,
                       [{f: getattr(r, f) for f in FIELDS} for r in self.rows],
                       seed=self.seed, extra={"config": self.digest})

    def lookup(self, test, rho, kappa12, expected_points, alpha,
               c=None) -> ErrorRow:
        for row in self.rows:
            if (row.test == test and row.rho == rho and row.kappa12 == kappa12
                    and row.expected_points == expected_points
                    and row.alpha == alpha and row.c == c):
                return row
        raise KeyError("no such cell in the error table")


def _mam_config(config: StudyConfig, window, rho, kappa12, seed) -> MamConfig:
    kappa = GaussCovariance2(config.kappa11, config.kappa22, kappa12)
    return MamConfig(intensity=config.intensity, rho=rho, kappa=kappa,
                     window=window, seed=seed)


def _tmd_statistics(model_cfg, window, bins, p0, kernel, cs):
    """TMD statistics of one realization at every bandwidth constant.

    Returns an array aligned with ``cs``; NaN flags a singular covariance.
    ``None`` flags an empty pattern (whole replication invalid).
    """
    pattern = mam_realize(model_cfg)
    if len(pattern) == 0:
        return None
    y = deviation_vector(pattern, window, bins, p0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandwidthConditionWarning)
        estimates = smoothed_covariance_curve(pattern, window, bins, p0,
                                              kernel, cs)
    stats = np.empty(len(cs))
    for j, est in enumerate(estimates):
        try:
            inv, _ = invert_spd(est.matrix)
            stats[j] = y @ inv @ y
        except SingularCovarianceError:
            stats[j] = np.nan
    return stats


def _mgm_statistic(model_cfg, window, bins, p0, sigma0_inv):
    pattern = mam_realize(model_cfg)
    if len(pattern) == 0:
        return np.nan
    y = deviation_vector(pattern, window, bins, p0)
    return float(y @ sigma0_inv @ y)


def _run_reps(config: StudyConfig, task, seeds):
    if config.n_jobs == 1:
        return [task(s) for s in seeds]
    return Parallel(n_jobs=config.n_jobs, batch_size="auto")(
        delayed(task)(s) for s in seeds)


def run_study(config: StudyConfig) -> ErrorTable:
    """Sweep the study grid and tabulate rejection rates per cell.

    Within one scenario ``(test, rho, kappa12, expected points)`` the same
    ``n_reps`` realizations are evaluated at every significance level (and,
    for the TMD test, every bandwidth constant); the null-model covariance
    of the MGM test is Monte-Carlo estimated once per ``(window, rho)``.
    Replications that produce an empty pattern or a singular covariance are
    counted as invalid and excluded from the rate denominator.
    """
    bins = AngularBinSet(config.ell)
    p0 = uniform_bin_probs(bins)
    rows = []
    for n_exp in config.expected_points:
        window = window_for_expected_points(config.intensity, n_exp)
        for rho in config.rho_grid:
            sigma0_inv = None
            if "mgm" in config.selected_tests:
                null_rho = rho if config.mgm_null_rho == "match" else 0.0
                null_cfg = _mam_config(
                    config, window, null_rho, 0.0,
                    child_seed(config.seed, "sigma0", float(n_exp), float(rho)))
                sigma0 = monte_carlo_covariance(null_cfg, config.mc_reps, bins,
                                                p0, n_jobs=config.n_jobs)
                try:
                    sigma0_inv, _ = invert_spd(sigma0.matrix)
                except SingularCovarianceError:
                    sigma0_inv = None
            for kappa12 in config.kappa12_grid:
                for test in config.selected_tests:
                    rows.extend(_scenario_rows(config, test, window, bins, p0,
                                               float(n_exp), float(rho),
                                               float(kappa12), sigma0_inv))
    return ErrorTable(tuple(rows), seed=config.seed, digest=config_digest(config))


def _scenario_rows(config, test, window, bins, p0, n_exp, rho, kappa12,
                   sigma0_inv):
    started = time.perf_counter()
    seeds = [child_seed(config.seed, test, n_exp, rho, kappa12, r)
             for r in range(config.n_reps)]
    if test == "tmd":
        cs = tuple(float(c) for c in config.c_grid)

        def task(seed):
            return _tmd_statistics(_mam_config(config, window, rho, kappa12, seed),
                                   window, bins, p0, config.kernel, cs)

        results = _run_reps(config, task, seeds)
        stat_matrix = np.full((config.n_reps, len(cs)), np.nan)
        for i, res in enumerate(results):
            if res is not None:
                stat_matrix[i] = res
        per_c = [(c, stat_matrix[:, j]) for j, c in enumerate(cs)]
    else:
        if sigma0_inv is None:
            stats = np.full(config.n_reps, np.nan)
        else:
            def task(seed):
                return _mgm_statistic(
                    _mam_config(config, window, rho, kappa12, seed),
                    window, bins, p0, sigma0_inv)

            stats = np.asarray(_run_reps(config, task, seeds), dtype=float)
        per_c = [(None, stats)]
    seconds = time.perf_counter() - started
    rows = []
    for c, stats in per_c:
        valid = np.isfinite(stats)
        n_valid = int(valid.sum())
        for alpha in config.alpha_grid:
            crit = chi2_quantile(config.ell, 1.0 - alpha)
            n_reject = int(np.sum(stats[valid] > crit))
            rate = n_reject / n_valid if n_valid else np.nan
            se = np.sqrt(rate * (1.0 - rate) / n_valid) if n_valid else np.nan
            rows.append(ErrorRow(test=test, rho=rho, kappa12=kappa12,
                                 expected_points=n_exp, alpha=float(alpha),
                                 c=c, rate=rate, se=se, n_valid=n_valid,
                                 n_invalid=config.n_reps - n_valid,
                                 seconds=seconds))
    return rows


def power_curve(config: StudyConfig, test: str) -> ErrorTable:
    """Rejection rate against expected point count at ``kappa12 = 0.4``.

    Thin wrapper over :func:`run_study` restricted to the power scenario
    used for comparing the two tests across window sizes.
    """
    if test not in ("tmd", "mgm"):
        raise ValueError("test must be 'tmd' or 'mgm'")
    restricted = replace(config, kappa12_grid=(0.4,), tests=test)
    return run_study(restricted)
