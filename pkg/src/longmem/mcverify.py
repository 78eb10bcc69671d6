"""Monte Carlo and deterministic verification of the central limit theorem.

The empirical covariance of normalized partial sums is compared against
the exact finite-n covariance of the same (truncated) model — a bias-free
target — while the deterministic distance between the finite-n covariance
and the limit kernel is reported separately as the convergence gap.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ProcessSpec, ValidationError, validate
from .analytics import (
    LimitKernel,
    limit_kernel,
    normalization_plan,
    partial_sum_covariance_series,
    partial_sum_weights,
)
from .simulate import innovation_block

DEFAULT_Z_STAR = 4.0
BATCH_COUNT = 50  # batch-means shards for non-Gaussian standard errors


@dataclass(frozen=True)
class CovarianceReport:
    """Empirical vs. exact finite-n vs. limit covariance, with verdicts."""

    n: int
    replications: int
    empirical: np.ndarray
    finite_n_exact: np.ndarray
    limit: LimitKernel
    se: np.ndarray
    verdicts: np.ndarray   # bool per entry: |empirical - finite_n_exact| <= z* se
    gap_rel: np.ndarray    # |finite_n_exact - limit| / |limit| (0 where limit = 0)
    samples: np.ndarray    # (N, q) normalized partial sums
    seed: int
    z_star: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.verdicts))

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gap_rel))


def _shard_moments(spec, table, b, seed, rep_start, rep_count):
    """Sum of outer products and the raw samples for one replication shard."""
    q = spec.grid.q
    M = table.window
    n = table.n
    acc = np.zeros((q, q))
    samples = np.empty((rep_count, q))
    for r in range(rep_count):
        rep = rep_start + r
        eps = innovation_block(spec.innovations, seed, start=1 - M,
                               count=n + M, rep=rep)
        x = np.einsum("im,mi->i", table.z, eps) / b
        samples[r] = x
        acc += np.outer(x, x)
    return acc, samples


def run_clt_experiment(spec: ProcessSpec, n: int, N: int, seed: int,
                       z_star: float = DEFAULT_Z_STAR,
                       shards: int = 1) -> CovarianceReport:
    """Simulate N normalized partial-sum vectors and compare covariances.

    Replications are addressed by absolute index, so splitting them into
    shards (possibly run on worker threads) changes only the association
    order of the accumulators, never the draws.
    """
    if N < 100:
        raise ValueError("N must be >= 100")
    report = validate(spec)
    if not report.ok:
        raise ValidationError("; ".join(report.fatal))
    plan = normalization_plan(spec, n)   # raises RegimeError on mixed regimes
    kern = limit_kernel(spec)
    table = partial_sum_weights(spec, n)
    b = plan.b
    sigma = np.asarray(spec.innovations.sigma)

    finite = sigma * (table.z @ table.z.T) / np.outer(b, b)

    shards = max(1, min(int(shards), N))
    bounds = [(N * s) // shards for s in range(shards + 1)]
    jobs = [(bounds[s], bounds[s + 1] - bounds[s]) for s in range(shards)]
    if shards == 1:
        results = [_shard_moments(spec, table, b, seed, 0, N)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            futures = [pool.submit(_shard_moments, spec, table, b, seed, lo, cnt)
                       for lo, cnt in jobs]
            results = [f.result() for f in futures]
    acc = np.zeros((spec.grid.q, spec.grid.q))
    for shard_acc, _ in results:
        acc += shard_acc
    samples = np.concatenate([s for _, s in results], axis=0)
    empirical = acc / N

    if spec.innovations.law == "gaussian":
        se = np.sqrt((np.outer(np.diag(finite), np.diag(finite)) + finite ** 2) / N)
    else:
        batches = np.array_split(samples, BATCH_COUNT, axis=0)
        batch_cov = np.array([bt.T @ bt / len(bt) for bt in batches])
        se = batch_cov.std(axis=0, ddof=1) / math.sqrt(len(batches))

    verdicts = np.abs(empirical - finite) <= z_star * se
    denom = np.where(np.abs(kern.K) > 0, np.abs(kern.K), 1.0)
    gap_rel = np.abs(finite - kern.K) / denom
    return CovarianceReport(n=int(n), replications=int(N), empirical=empirical,
                            finite_n_exact=finite, limit=kern, se=se,
                            verdicts=verdicts, gap_rel=gap_rel, samples=samples,
                            seed=int(seed), z_star=float(z_star))


@dataclass(frozen=True)
class NormalityReport:
    """Per-coordinate Gaussianity diagnostics of a sample matrix."""

    n_samples: int
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    ks_distance: np.ndarray
    skew_band: float
    kurt_band: float

    @property
    def skew_ok(self) -> np.ndarray:
        return np.abs(self.skewness) <= self.skew_band

    @property
    def kurt_ok(self) -> np.ndarray:
        return np.abs(self.excess_kurtosis) <= self.kurt_band

    @property
    def passed(self) -> bool:
        return bool(np.all(self.skew_ok) and np.all(self.kurt_ok))


def normality_diagnostics(samples: np.ndarray, variances=None,
                          skew_z: float = 4.0,
                          kurt_z: float = 4.0) -> NormalityReport:
    """Sample skewness, excess kurtosis, and a KS distance per coordinate.

    Bands are Monte Carlo: +-skew_z sqrt(6/N) and +-kurt_z sqrt(24/N).
    The KS distance is taken against the zero-mean normal with the exact
    finite-n variance when ``variances`` is given, else the sample variance.
    """
    samples = np.asarray(samples, dtype=float)
    N, q = samples.shape
    if N < 500:
        raise ValueError("normality diagnostics need N >= 500")
    if variances is None:
        variances = samples.var(axis=0, ddof=1)
    variances = np.asarray(variances, dtype=float)
    skew = stats.skew(samples, axis=0)
    kurt = stats.kurtosis(samples, axis=0)
    ks = np.array([stats.kstest(samples[:, i], "norm",
                                args=(0.0, math.sqrt(variances[i]))).statistic
                   for i in range(q)])
    return NormalityReport(n_samples=int(N), skewness=skew, excess_kurtosis=kurt,
                           ks_distance=ks,
                           skew_band=skew_z * math.sqrt(6.0 / N),
                           kurt_band=kurt_z * math.sqrt(24.0 / N))


@dataclass(frozen=True)
class ExponentFit:
    """Log-log fit of the exact variance growth of the partial sums."""

    n_list: tuple
    slopes: np.ndarray
    theoretical: np.ndarray
    corrected: np.ndarray    # True where the ln^2-corrected model was fitted (d = 1)
    max_residual: np.ndarray

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.slopes - self.theoretical)


def fit_variance_exponent(spec: ProcessSpec, n_list) -> ExponentFit:
    """Least-squares slope of log Var(S_n) vs. log n per grid point.

    Variances are exact (semi-analytic series), so the fit carries no
    Monte Carlo noise.  Boundary points (d = 1) are fitted with the
    ln^2 n correction divided out; their theoretical slope is 3 - 2d = 1.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 5:
        raise ValueError("need at least 5 horizons")
    if any(n < 2 or (n & (n - 1)) for n in n_list):
        raise ValueError("horizons must be dyadic (powers of two, >= 2)")
    report = validate(spec)
    if not report.ok:
        raise ValidationError("; ".join(report.fatal))
    log_n = np.log(n_list)
    q = spec.grid.q
    slopes = np.empty(q)
    max_resid = np.empty(q)
    corrected = np.zeros(q, dtype=bool)
    cache: dict = {}
    for i in range(q):
        d = float(spec.memory.values[i])
        s2 = float(spec.innovations.sigma2[i])
        var = np.array([cache.setdefault(
            (d, n), partial_sum_covariance_series(d, d, 1.0, n).value)
            for n in n_list]) * s2
        y = np.log(var)
        if d == 1.0:
            corrected[i] = True
            y = y - 2.0 * np.log(np.log(n_list))
        coef = np.polyfit(log_n, y, 1)
        slopes[i] = coef[0]
        max_resid[i] = float(np.max(np.abs(y - np.polyval(coef, log_n))))
    return ExponentFit(n_list=tuple(n_list), slopes=slopes,
                       theoretical=3.0 - 2.0 * spec.memory.values.copy(),
                       corrected=corrected, max_residual=max_resid)
