"""Payoff contracts, estimator examples, and cross-estimator structure."""

import numpy as np
import pytest
from scipy.integrate import quad

from klpricer import pricing, process
from klpricer.pricing import (
    AsianPayoffSpec,
    asian_payoff,
    geometric_asian_closed_form,
    price_baseline,
    price_geometric_mc,
    price_kl_nested,
    price_subsample,
)
from klpricer.process import GbmParams, TimeGrid

MARKET = GbmParams(100.0, 0.05, 0.2)
SPEC64 = AsianPayoffSpec(strike=100.0, monitoring_count=64)


class TestPayoff:
    def test_at_the_money_average(self):
        spec = AsianPayoffSpec(strike=100.0, monitoring_count=3)
        assert asian_payoff([100.0, 100.0, 100.0], spec) == 0.0

    def test_zero_strike_is_weighted_mean(self):
        spec = AsianPayoffSpec(strike=0.0, monitoring_count=3)
        assert asian_payoff([90.0, 100.0, 110.0], spec) == pytest.approx(100.0)

    def test_simple_value(self):
        spec = AsianPayoffSpec(strike=95.0, monitoring_count=3)
        assert asian_payoff([90.0, 100.0, 110.0], spec) == pytest.approx(5.0)

    def test_length_mismatch(self):
        spec = AsianPayoffSpec(strike=95.0, monitoring_count=3)
        with pytest.raises(ValueError):
            asian_payoff([90.0, 100.0], spec)

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            AsianPayoffSpec(strike=1.0, monitoring_count=2, weights=np.array([0.7, 0.7]))
        with pytest.raises(ValueError):
            AsianPayoffSpec(strike=1.0, monitoring_count=2, weights=np.array([1.5, -0.5]))

    def test_lipschitz_property_exact(self):
        rng = np.random.default_rng(0)
        spec = AsianPayoffSpec(strike=100.0, monitoring_count=16)
        w = spec.weight_vector()
        for _ in range(10_000):
            x = 100.0 * np.exp(rng.standard_normal(16) * 0.3)
            y = 100.0 * np.exp(rng.standard_normal(16) * 0.3)
            lhs = abs(asian_payoff(x, spec) - asian_payoff(y, spec))
            assert lhs <= float(w @ np.abs(x - y)) + 1e-12


class TestBaseline:
    def test_terminal_mean_at_zero_strike(self):
        spec = AsianPayoffSpec(strike=0.0, monitoring_count=1)
        est = price_baseline(MARKET, spec, 1_000_000, seed=41)
        target = 100.0 * np.exp(0.05)
        assert abs(est.value - target) <= 3.0 * est.std_error

    def test_degenerate_diffusion(self):
        params = GbmParams(100.0, 0.05, 1e-12)
        est = price_baseline(params, SPEC64, 100, seed=1)
        det = max(np.mean(100.0 * np.exp(0.05 * np.arange(1, 65) / 64)) - 100.0, 0.0)
        assert est.value == pytest.approx(det, rel=1e-9)
        assert est.std_error < 1e-9

    def test_deterministic_and_extensible(self):
        a = price_baseline(MARKET, SPEC64, 30_000, seed=5)
        b = price_baseline(MARKET, SPEC64, 30_000, seed=5)
        assert a == b
        # payoffs are a pure function of (seed, path index): growing the run
        # cannot change the shared prefix, so the two means are consistent
        big = price_baseline(MARKET, SPEC64, 60_000, seed=5)
        assert abs(big.value - a.value) < 5.0 * a.std_error

    def test_needs_two_paths(self):
        with pytest.raises(ValueError):
            price_baseline(MARKET, SPEC64, 1, seed=0)


class TestSubsample:
    def test_grid_size_from_epsilon(self):
        est = price_subsample(MARKET, SPEC64, epsilon=0.05, n_paths=1000, seed=3)
        assert est.method == "subsample"

    def test_resource_guard(self):
        with pytest.raises(ValueError):
            price_subsample(MARKET, SPEC64, epsilon=1e-5, n_paths=10, seed=0)

    def test_degenerate_riemann_sum(self):
        params = GbmParams(100.0, 0.05, 1e-12)
        est = price_subsample(params, SPEC64, epsilon=0.1, n_paths=64, seed=2)
        m = 100
        det = max(np.mean(100.0 * np.exp(0.05 * np.arange(1, m + 1) / m)) - 100.0, 0.0)
        assert est.value == pytest.approx(det, rel=1e-9)
        integral = quad(lambda t: 100.0 * np.exp(0.05 * t), 0, 1)[0]
        assert abs(det - max(integral - 100.0, 0.0)) < 2.0 / m * 100 * 0.05

    def test_matches_baseline_when_grid_refines(self):
        est_s = price_subsample(MARKET, SPEC64, epsilon=0.05, n_paths=200_000, seed=11)
        est_b = price_baseline(MARKET, SPEC64, 200_000, seed=12)
        se = np.hypot(est_s.std_error, est_b.std_error)
        gap = geometric_asian_closed_form(MARKET, TimeGrid.uniform_monitoring(64), 100.0) - \
            geometric_asian_closed_form(MARKET, TimeGrid.uniform_monitoring(400), 100.0)
        assert abs(est_s.value - est_b.value) <= 3.0 * se + 2.0 * abs(gap)


class TestNested:
    def test_degenerate_flat_path(self):
        # sigma -> 0 with zero effective drift: inner average is constant,
        # both inner modes return the deterministic payoff
        params = GbmParams(100.0, 0.0, 1e-12)
        spec = AsianPayoffSpec(strike=95.0, monitoring_count=8)
        for mode in ("acceptance", "uniform"):
            est = price_kl_nested(
                params, spec, epsilon=0.3, M0=8, M1=8, seed=2, inner_mode=mode
            )
            assert est.value == pytest.approx(5.0, rel=1e-6)
            assert est.std_error < 1e-6

    def test_default_sizing(self):
        est = price_kl_nested(MARKET, SPEC64, epsilon=0.3, seed=4)
        assert est.n_outer == int(np.ceil(4.0 / 0.3**2))
        assert est.n_inner == est.n_outer

    def test_inner_modes_agree(self):
        kw = dict(epsilon=0.1, M0=400, M1=400, seed=9)
        a = price_kl_nested(MARKET, SPEC64, inner_mode="acceptance", **kw)
        u = price_kl_nested(MARKET, SPEC64, inner_mode="uniform", **kw)
        se = np.hypot(a.std_error, u.std_error)
        # acceptance-rate ratio estimator carries an O(1/M1) inner bias
        assert abs(a.value - u.value) <= 3.0 * se + 0.5

    def test_snapped_mode_close_to_continuous(self):
        kw = dict(epsilon=0.1, M0=400, M1=400, seed=10)
        cont = price_kl_nested(MARKET, SPEC64, **kw)
        snap = price_kl_nested(MARKET, SPEC64, snap_to_monitoring=True, **kw)
        se = np.hypot(cont.std_error, snap.std_error)
        # continuous vs 64-point monitoring differ by an O(1/T) term
        assert abs(cont.value - snap.value) <= 3.0 * se + 0.5

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            price_kl_nested(MARKET, SPEC64, epsilon=0.1, M0=1, M1=10, seed=0)
        with pytest.raises(ValueError):
            price_kl_nested(MARKET, SPEC64, epsilon=0.1, inner_mode="nope", seed=0)

    def test_inner_noise_shrinks_with_m1(self):
        # MSE against a quadrature reference must decrease in M1 (3 sigma),
        # holding the outer sample fixed
        reference = _nested_reference_price(MARKET, 100.0, L=8, n_outer=200_000, seed=77)
        mses, sds = [], []
        reps = 24
        for m1 in (16, 64, 256):
            errs = np.empty(reps)
            for r in range(reps):
                est = price_kl_nested(
                    MARKET, SPEC64, epsilon=0.5, M0=500, M1=m1, L=8, seed=1000 + 97 * r
                )
                errs[r] = est.value - reference
            sq = errs**2
            mses.append(sq.mean())
            sds.append(sq.std(ddof=1) / np.sqrt(reps))
        assert mses[0] - mses[1] > -3.0 * np.hypot(sds[0], sds[1])
        assert mses[1] - mses[2] > -3.0 * np.hypot(sds[1], sds[2])
        assert mses[0] > mses[2]  # overall decrease is unmistakable


def _nested_reference_price(params, strike, L, n_outer, seed):
    """Quadrature-inner reference for the truncated-series price.

    Replaces the sampled inner mean with a 512-point Simpson integral of the
    smoothed path, leaving only outer sampling error.
    """
    from klpricer.klcore import wiener_eval_horner
    from scipy.integrate import simpson

    t = np.linspace(0.0, 1.0, 513)
    k = np.arange(1, L + 1, dtype=float)
    sines = (np.sqrt(2.0) / np.pi) * np.sin(np.pi * np.outer(k, t)) / k[:, None]
    total = 0.0
    chunk = 50_000
    done = 0
    while done < n_outer:
        b = min(chunk, n_outer - done)
        rng = process.stream(seed, 99, done)
        a = np.clip(rng.standard_normal((b, L + 1)), -8, 8)
        bpaths = np.outer(a[:, 0], t) + a[:, 1:] @ sines
        g = params.s0 * np.exp(params.sigma * bpaths + params.effective_drift * t)
        gbar = simpson(g, x=t, axis=1)
        total += float(np.maximum(gbar - strike, 0.0).sum())
        done += b
    return total / n_outer


class TestGeometricClosedForm:
    def test_degenerate_sigma(self):
        params = GbmParams(100.0, 0.05, 1e-14)
        grid = TimeGrid.uniform_monitoring(16)
        got = geometric_asian_closed_form(params, grid, 100.0)
        expect = max(100.0 * np.exp(0.05 * grid.points.mean()) - 100.0, 0.0)
        assert got == pytest.approx(expect, rel=1e-6)

    def test_zero_strike_limit(self):
        grid = TimeGrid.uniform_monitoring(16)
        got = geometric_asian_closed_form(MARKET, grid, 0.0)
        t = grid.points
        m = np.log(100.0) + MARKET.effective_drift * t.mean()
        counts = 2.0 * (t.size - 1.0 - np.arange(t.size)) + 1.0
        v = MARKET.sigma**2 / t.size**2 * float(np.sort(t) @ counts)
        assert got == pytest.approx(np.exp(m + v / 2), rel=1e-12)

    def test_brute_force_monte_carlo_agreement(self):
        grid = TimeGrid.uniform_monitoring(64)
        cf = geometric_asian_closed_form(MARKET, grid, 100.0)
        mc = price_geometric_mc(MARKET, grid, 100.0, 1_000_000, seed=13)
        assert abs(cf - mc.value) <= 3.0 * mc.std_error

    def test_min_sum_identity(self):
        # the sorted-counts shortcut must equal the O(M^2) double sum
        t = np.array([0.1, 0.4, 0.45, 0.9, 1.0])
        double = sum(min(a, b) for a in t for b in t)
        counts = 2.0 * (t.size - 1.0 - np.arange(t.size)) + 1.0
        assert float(np.sort(t) @ counts) == pytest.approx(double, rel=1e-12)


class TestPayoffMseTransfer:
    def test_truncated_vs_reference_paths(self):
        # payoff MSE is bounded by the worst per-point MSE (shared randomness)
        L, L_ref, T, n = 16, 512, 32, 20_000
        t = np.arange(1, T + 1) / T
        k = np.arange(1, L_ref + 1, dtype=float)
        sines = (np.sqrt(2.0) / np.pi) * np.sin(np.pi * np.outer(k, t)) / k[:, None]
        rng = process.stream(31, 98)
        a = rng.standard_normal((n, L_ref + 1))
        drift_part = np.outer(a[:, 0], t)
        b_ref = drift_part + a[:, 1:] @ sines
        b_trunc = drift_part + a[:, 1 : L + 1] @ sines[:L]
        s_ref = 100.0 * np.exp(MARKET.sigma * b_ref + MARKET.effective_drift * t)
        s_tr = 100.0 * np.exp(MARKET.sigma * b_trunc + MARKET.effective_drift * t)
        pay_ref = np.maximum(s_ref.mean(axis=1) - 100.0, 0.0)
        pay_tr = np.maximum(s_tr.mean(axis=1) - 100.0, 0.0)
        payoff_mse = float(np.mean((pay_ref - pay_tr) ** 2))
        point_mse = float(np.mean((s_ref - s_tr) ** 2, axis=0).max())
        assert payoff_mse <= point_mse * 1.05
