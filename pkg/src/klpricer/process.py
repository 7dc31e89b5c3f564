"""Sampling machinery for geometric Brownian motion on [0, 1].

Provides clipped standard-normal coefficient draws for the smoothed-path
series, exact sequential path generation with lognormal increments (the
process is Markovian, so sparse grids are sampled directly), a rejection
sampler that draws monitoring times with density proportional to the path
value, and the envelope constant that makes the rejection step valid.

Randomness is counter-based and splittable: every stream is a Philox
generator keyed by (seed, stream tag, index), so any path can be regenerated
in isolation and results never depend on how work is divided among workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .klcore import WienerCoefficients, wiener_eval_horner

__all__ = [
    "GbmParams",
    "TimeGrid",
    "GmaxBound",
    "RejectionStarvedError",
    "stream",
    "sample_coefficients",
    "gbm_from_bm",
    "gbm_path_sequential",
    "rejection_sample_times",
    "g_max_bound",
]

# Stream tags keep draws for different purposes out of each other's keyspace.
TAG_COEFFS = 1
TAG_PATHS = 2
TAG_NESTED = 3
TAG_GEOMETRIC = 4
TAG_ANALYSIS = 8

_SQRT2_OVER_PI = np.sqrt(2.0) / np.pi

# Proposal batches for the rejection sampler; data-dependent but a pure
# function of the stream, so results are reproducible.
_MIN_BATCH = 4096
_MAX_BATCH = 1 << 20
_STARVATION_FACTOR = 1_000_000


class RejectionStarvedError(RuntimeError):
    """Raised when the rejection sampler sees essentially no acceptances.

    Signals a badly chosen envelope constant rather than bad luck.
    """


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for (seed, key...); same inputs, same draws."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass
class GbmParams:
    """Market parameters (initial price, drift, volatility) for the GBM.

    The process is s0 * exp(sigma B_t + (mu - sigma^2/2) t) on t in [0, 1].
    """

    s0: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def effective_drift(self) -> float:
        return self.mu - 0.5 * self.sigma**2


@dataclass
class TimeGrid:
    """Strictly increasing monitoring or sub-sampling times inside [0, 1]."""

    points: np.ndarray
    kind: str = "custom"

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        if self.points.size == 0:
            raise ValueError("time grid must be non-empty")
        if self.points[0] < 0.0 or self.points[-1] > 1.0:
            raise ValueError("time grid must lie within [0, 1]")
        if np.any(np.diff(self.points) <= 0.0):
            raise ValueError("time grid must be strictly increasing")

    @classmethod
    def uniform_monitoring(cls, T: int) -> "TimeGrid":
        """Monitoring times i/T for i = 1..T."""
        if T < 1:
            raise ValueError("T must be >= 1")
        return cls(points=np.arange(1, T + 1) / T, kind="monitoring")

    @classmethod
    def subsample(cls, M: int) -> "TimeGrid":
        """Sub-sampling grid k/M for k = 0..M."""
        if M < 1:
            raise ValueError("M must be >= 1")
        return cls(points=np.arange(0, M + 1) / M, kind="subsample")

    def __len__(self) -> int:
        return int(self.points.size)


@dataclass
class GmaxBound:
    """Envelope constant dominating the smoothed path value, with a clamp tally."""

    value: float
    clip_bound: float
    exceed_count: int = 0

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError("envelope value must be positive")


def g_max_bound(params: GbmParams, L: int, A: float = 8.0) -> GmaxBound:
    """Envelope s0 exp(sigma A (1 + (sqrt(2)/pi) H_L) + max(drift, 0)).

    With every |a_k| <= A the series satisfies
    |B_L(t)| <= A (1 + (sqrt(2)/pi) sum_{k<=L} 1/k), so the returned value
    dominates the smoothed GBM everywhere on [0, 1].
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    if A < 4.0:
        raise ValueError("clip bound A must be >= 4")
    harmonic = float(np.sum(1.0 / np.arange(1, L + 1))) if L > 0 else 0.0
    sup_b = A * (1.0 + _SQRT2_OVER_PI * harmonic)
    value = params.s0 * np.exp(params.sigma * sup_b + max(params.effective_drift, 0.0))
    return GmaxBound(value=float(value), clip_bound=A)


def sample_coefficients(rng: np.random.Generator, L: int, clip: float = 8.0) -> WienerCoefficients:
    """Draw L+1 independent standard normals, clamped to [-clip, clip].

    Clamping events are counted on the returned object; with clip = 8 the
    per-draw clamp probability is below 1.3e-15, so the induced bias is
    negligible while the path envelope stays finite.
    """
    if not isinstance(rng, np.random.Generator):
        raise TypeError("rng must be a numpy Generator (fatal sampling error)")
    if L < 0:
        raise ValueError("L must be >= 0")
    if clip < 4.0:
        raise ValueError("clip bound must be >= 4")
    raw = rng.standard_normal(L + 1)
    clipped = np.clip(raw, -clip, clip)
    n_clipped = int(np.count_nonzero(np.abs(raw) > clip))
    return WienerCoefficients(a=clipped, clip_bound=clip, n_clipped=n_clipped)


def gbm_from_bm(b, t, params: GbmParams, gmax: GmaxBound | None = None):
    """Map Brownian level b at time t to the GBM value s0 exp(sigma b + drift t).

    If an envelope is supplied, values exceeding it are clamped to the
    envelope and counted on ``gmax.exceed_count`` (overflow guard; cannot
    trigger when b came from coefficients clipped at the envelope's bound).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("time argument must lie in [0, 1]")
    val = params.s0 * np.exp(params.sigma * np.asarray(b, dtype=float) + params.effective_drift * t)
    if gmax is not None:
        over = val > gmax.value
        n_over = int(np.count_nonzero(over))
        if n_over:
            gmax.exceed_count += n_over
            val = np.where(over, gmax.value, val)
    return float(val) if val.ndim == 0 else val


def gbm_path_sequential(rng: np.random.Generator, grid: TimeGrid, params: GbmParams) -> np.ndarray:
    """Exact GBM path on the grid via sequential lognormal increments.

    S(t_{k+1}) = S(t_k) exp(drift dt + sigma sqrt(dt) z_k) with independent
    standard normals, so the joint law is that of the true process restricted
    to the grid.  A leading t = 0 point is emitted as s0 without consuming a
    draw.
    """
    pts = grid.points
    lead_zero = pts[0] == 0.0
    times = pts[1:] if lead_zero else pts
    out_head = [params.s0] if lead_zero else []
    if times.size == 0:
        return np.array(out_head)
    dt = np.diff(times, prepend=0.0)
    z = rng.standard_normal(times.size)
    log_increments = params.effective_drift * dt + params.sigma * np.sqrt(dt) * z
    values = params.s0 * np.exp(np.cumsum(log_increments))
    return np.concatenate([out_head, values]) if out_head else values


def _snap_to_grid(u: np.ndarray, T: int) -> np.ndarray:
    # Map uniforms on [0,1) to the monitoring times {1/T, ..., 1}.
    return (np.floor(u * T) + 1.0) / T


def rejection_sample_times(
    rng: np.random.Generator,
    coeffs: WienerCoefficients,
    count: int,
    gmax: GmaxBound,
    params: GbmParams,
    snap_to: int | None = None,
) -> tuple[np.ndarray, int]:
    """Draw ``count`` times with density proportional to the path value.

    Proposes t uniformly on [0, 1] (or snapped to the ``snap_to``-point
    monitoring grid) together with a uniform z, and accepts t when
    z <= G_L(a, t) / gmax.  Returns the accepted times and the number of
    proposals consumed through the final acceptance; the expected proposals
    per acceptance is gmax / integral(G_L).

    Raises ``RejectionStarvedError`` when 10^6 * count proposals produce
    fewer than ``count`` acceptances.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if np.max(np.abs(coeffs.a)) > gmax.clip_bound:
        raise ValueError("coefficients exceed the envelope's clip bound")
    accepted: list[np.ndarray] = []
    n_accepted = 0
    n_proposals = 0
    budget = _STARVATION_FACTOR * count
    while n_accepted < count:
        remaining = count - n_accepted
        if n_proposals >= budget:
            raise RejectionStarvedError(
                f"rejection sampler starved: {n_proposals} proposals produced "
                f"{n_accepted}/{count} acceptances (check the envelope constant)"
            )
        rate = max(n_accepted / n_proposals, 1e-6) if n_proposals else 1e-2
        batch = int(min(max(_MIN_BATCH, 1.2 * remaining / rate), _MAX_BATCH, budget - n_proposals))
        u = rng.random((batch, 2))
        t = _snap_to_grid(u[:, 0], snap_to) if snap_to else u[:, 0]
        g = gbm_from_bm(wiener_eval_horner(coeffs, t), t, params)
        if np.any(g > gmax.value * (1.0 + 1e-12)):
            raise ValueError("path value exceeded the envelope; gmax contract violated")
        hits = np.flatnonzero(u[:, 1] * gmax.value <= g)
        if hits.size >= remaining:
            last = hits[remaining - 1]
            accepted.append(t[hits[:remaining]])
            n_accepted = count
            n_proposals += int(last) + 1
        else:
            accepted.append(t[hits])
            n_accepted += hits.size
            n_proposals += batch
    return np.concatenate(accepted), n_proposals
