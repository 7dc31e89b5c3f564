"""Payoff definitions and the price estimators for the discretely
monitored arithmetic Asian call.

Four routes to a price are provided:

* ``price_baseline``: exact sequential GBM paths on the monitoring grid and
  a flat Monte Carlo average (the reference estimator).
* ``price_kl_nested``: outer sampling of smoothed-path coefficient vectors,
  inner recovery of each path's time average from the rejection sampler's
  acceptance rate (or from a plain uniform-time average, switchable).
* ``price_subsample``: flat Monte Carlo on a coarser uniform grid of
  M = ceil(1/eps^2) points, exploiting that the process is fast-forwardable.
* ``geometric_asian_closed_form``: the lognormal closed form for the
  geometric-average payoff, used as an analytic oracle, plus its brute-force
  Monte Carlo counterpart ``price_geometric_mc`` for validating it.

No discounting is applied (riskless rate zero); callers that need a
discount factor scale the final value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import process
from .klcore import truncation_index_bm, wiener_eval_horner
from .process import GbmParams, GmaxBound, TimeGrid

__all__ = [
    "AsianPayoffSpec",
    "Estimate",
    "asian_payoff",
    "price_baseline",
    "price_kl_nested",
    "price_subsample",
    "geometric_asian_closed_form",
    "price_geometric_mc",
]

# Flat Monte Carlo runs in fixed-size path blocks, one counter-based stream
# per block; block size depends only on the grid width so results are a pure
# function of (seed, path index).
def _block_size(n_times: int) -> int:
    if n_times <= 128:
        return 65536
    if n_times <= 512:
        return 32768
    if n_times <= 4096:
        return 4096
    if n_times <= 32768:
        return 512
    return 64

_SUBSAMPLE_GRID_LIMIT = 100_000_000
_DEFAULT_SIZING = 4.0  # M0 = M1 = ceil(_DEFAULT_SIZING / eps^2)


@dataclass
class AsianPayoffSpec:
    """Strike, monitoring count, and averaging weights of the Asian call.

    Weights default to the uniform vector 1/T; they must be non-negative and
    sum to one, which is what makes the payoff 1-Lipschitz in the weighted
    path values.
    """

    strike: float
    monitoring_count: int
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.strike < 0:
            raise ValueError("strike must be non-negative")
        if self.monitoring_count < 1:
            raise ValueError("monitoring_count must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size != self.monitoring_count:
                raise ValueError("weights length must equal monitoring_count")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must be non-negative and sum to 1")
            self.weights = w

    def weight_vector(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return np.full(self.monitoring_count, 1.0 / self.monitoring_count)


@dataclass
class Estimate:
    """A Monte Carlo price: value, outer standard error, and provenance."""

    value: float
    std_error: float
    n_outer: int
    n_inner: int
    seed: int
    method: str


def asian_payoff(path_values: np.ndarray, spec: AsianPayoffSpec) -> float:
    """Payoff (sum_i w_i S_i - K)^+ of one monitored path."""
    values = np.asarray(path_values, dtype=float)
    w = spec.weight_vector()
    if values.shape[-1] != w.size:
        raise ValueError("path length does not match the weight vector")
    return float(max(values @ w - spec.strike, 0.0))


def _mean_payoff_flat(
    params: GbmParams,
    times: np.ndarray,
    weights: np.ndarray,
    strike: float,
    n_paths: int,
    seed: int,
    tag: int,
) -> tuple[float, float]:
    """Chunked flat MC: mean payoff and its standard error over n_paths."""
    n_times = times.size
    block = _block_size(n_times)
    dt = np.diff(times, prepend=0.0)
    drift_leg = params.effective_drift * dt
    vol_leg = params.sigma * np.sqrt(dt)
    total = 0.0
    total_sq = 0.0
    done = 0
    block_idx = 0
    while done < n_paths:
        b = min(block, n_paths - done)
        rng = process.stream(seed, tag, block_idx)
        z = rng.standard_normal((block, n_times))[:b]
        logs = np.cumsum(drift_leg + vol_leg * z, axis=1)
        pay = np.maximum(params.s0 * np.exp(logs) @ weights - strike, 0.0)
        total += float(pay.sum())
        total_sq += float(pay @ pay)
        done += b
        block_idx += 1
    mean = total / n_paths
    if n_paths > 1:
        var = max(total_sq - n_paths * mean * mean, 0.0) / (n_paths - 1)
    else:
        var = 0.0
    return mean, float(np.sqrt(var / n_paths))


def price_baseline(params: GbmParams, spec: AsianPayoffSpec, n_paths: int, seed: int) -> Estimate:
    """Reference estimator: exact paths on the T-point monitoring grid.

    Unbiased for the discrete Asian price; standard error is the sample
    standard deviation of per-path payoffs over sqrt(n_paths).
    """
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    grid = TimeGrid.uniform_monitoring(spec.monitoring_count)
    mean, se = _mean_payoff_flat(
        params, grid.points, spec.weight_vector(), spec.strike, n_paths, seed, process.TAG_PATHS
    )
    return Estimate(mean, se, n_paths, 1, seed, "baseline")


def price_subsample(
    params: GbmParams, spec: AsianPayoffSpec, epsilon: float, n_paths: int, seed: int
) -> Estimate:
    """Flat MC on the uniform M = ceil(1/eps^2) point grid with 1/M weights.

    The coarse grid stands in for the T monitoring points; its payoff MSE
    against the T-point payoff is O(eps^2), so the estimate carries an
    O(eps) bias allowance on top of the sampling error.
    """
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    m = int(np.ceil(1.0 / epsilon**2))
    if m > _SUBSAMPLE_GRID_LIMIT:
        raise ValueError(f"sub-sampling grid of {m} points exceeds the resource guard")
    times = np.arange(1, m + 1) / m
    weights = np.full(m, 1.0 / m)
    mean, se = _mean_payoff_flat(
        params, times, weights, spec.strike, n_paths, seed, process.TAG_PATHS
    )
    return Estimate(mean, se, n_paths, 1, seed, "subsample")


def price_kl_nested(
    params: GbmParams,
    spec: AsianPayoffSpec,
    epsilon: float,
    M0: int | None = None,
    M1: int | None = None,
    L: int | None = None,
    seed: int = 0,
    inner_mode: str = "acceptance",
    clip: float = 8.0,
    snap_to_monitoring: bool = False,
) -> Estimate:
    """Nested estimator over smoothed-path coefficient draws.

    Outer loop: sample a coefficient vector per path.  Inner loop, default
    mode ``acceptance``: run the rejection sampler for M1 accepted times and
    recover the path's time average as gmax * accepted / proposed, mirroring
    how the time average appears as a measurement probability in the
    amplitude encoding.  Mode ``uniform`` instead averages the path value at
    M1 uniform times (an unbiased plain inner average).  Standard error
    comes from outer variation only.

    Defaults: L is the truncation index for ``epsilon`` and
    M0 = M1 = ceil(4 / eps^2).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    if inner_mode not in ("acceptance", "uniform"):
        raise ValueError("inner_mode must be 'acceptance' or 'uniform'")
    if L is None:
        L = truncation_index_bm(epsilon)
    if M0 is None:
        M0 = int(np.ceil(_DEFAULT_SIZING / epsilon**2))
    if M1 is None:
        M1 = int(np.ceil(_DEFAULT_SIZING / epsilon**2))
    if M0 < 2 or M1 < 2:
        raise ValueError("M0 and M1 must be >= 2")
    gmax = process.g_max_bound(params, L, clip)
    snap = spec.monitoring_count if snap_to_monitoring else None
    strike = spec.strike
    total = 0.0
    total_sq = 0.0
    for i in range(M0):
        rng = process.stream(seed, process.TAG_NESTED, i)
        coeffs = process.sample_coefficients(rng, L, clip)
        if inner_mode == "acceptance":
            _, n_prop = process.rejection_sample_times(rng, coeffs, M1, gmax, params, snap_to=snap)
            gbar = gmax.value * M1 / n_prop
        else:
            u = rng.random(M1)
            t = (np.floor(u * snap) + 1.0) / snap if snap else u
            gbar = float(np.mean(process.gbm_from_bm(wiener_eval_horner(coeffs, t), t, params)))
        pay = max(gbar - strike, 0.0)
        total += pay
        total_sq += pay * pay
    mean = total / M0
    var = max(total_sq - M0 * mean * mean, 0.0) / (M0 - 1)
    return Estimate(mean, float(np.sqrt(var / M0)), M0, M1, seed, "kl_nested")


def _log_average_moments(params: GbmParams, points: np.ndarray) -> tuple[float, float]:
    """Mean and variance of ln of the discrete geometric average."""
    m = float(np.log(params.s0) + params.effective_drift * points.mean())
    # sum_{i,j} min(t_i, t_j) for sorted t: each t_(i) is the minimum in
    # 2(M - i) + 1 of the M^2 ordered pairs.
    t = np.sort(points)
    M = t.size
    counts = 2.0 * (M - 1.0 - np.arange(M)) + 1.0
    v = float(params.sigma**2 / M**2 * np.dot(t, counts))
    return m, v


def geometric_asian_closed_form(params: GbmParams, grid: TimeGrid, strike: float) -> float:
    """Closed-form price of the discretely monitored geometric-average call.

    The log of the geometric average A_G = (prod_k S(t_k))^(1/M) is Gaussian
    with mean m = ln s0 + drift * mean(t) and variance
    v = sigma^2 / M^2 * sum_{i,j} min(t_i, t_j), so

        E[(A_G - K)^+] = e^{m + v/2} Phi((m - ln K + v)/sqrt(v))
                         - K Phi((m - ln K)/sqrt(v)).

    Degenerate variance collapses to the deterministic payoff and K <= 0
    collapses to the mean of A_G.
    """
    if len(grid) == 0:
        raise ValueError("grid must be non-empty")
    m, v = _log_average_moments(params, grid.points)
    if strike <= 0.0:
        return float(np.exp(m + 0.5 * v) - strike)
    if v <= 0.0:
        return float(max(np.exp(m) - strike, 0.0))
    sd = np.sqrt(v)
    d2 = (m - np.log(strike)) / sd
    d1 = d2 + sd
    return float(np.exp(m + 0.5 * v) * norm.cdf(d1) - strike * norm.cdf(d2))


def price_geometric_mc(
    params: GbmParams, grid: TimeGrid, strike: float, n_paths: int, seed: int
) -> Estimate:
    """Brute-force Monte Carlo for the geometric-average call.

    Independent oracle for the closed form: exact sequential paths on the
    grid, geometric average computed as the exponential of the mean log.
    """
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    times = grid.points
    if times[0] == 0.0:
        times = times[1:]  # S(0) = s0 contributes log(s0) deterministically
        n_fixed = 1
    else:
        n_fixed = 0
    n_times = times.size
    m_total = n_times + n_fixed
    dt = np.diff(times, prepend=0.0)
    drift_leg = params.effective_drift * dt
    vol_leg = params.sigma * np.sqrt(dt)
    block = _block_size(n_times)
    total = 0.0
    total_sq = 0.0
    done = 0
    block_idx = 0
    log_s0 = np.log(params.s0)
    while done < n_paths:
        b = min(block, n_paths - done)
        rng = process.stream(seed, process.TAG_GEOMETRIC, block_idx)
        z = rng.standard_normal((block, n_times))[:b]
        logs = np.cumsum(drift_leg + vol_leg * z, axis=1) + log_s0
        mean_log = (logs.sum(axis=1) + n_fixed * log_s0) / m_total
        pay = np.maximum(np.exp(mean_log) - strike, 0.0)
        total += float(pay.sum())
        total_sq += float(pay @ pay)
        done += b
        block_idx += 1
    mean = total / n_paths
    var = max(total_sq - n_paths * mean * mean, 0.0) / (n_paths - 1)
    return Estimate(mean, float(np.sqrt(var / n_paths)), n_paths, 1, seed, "geometric_mc")
