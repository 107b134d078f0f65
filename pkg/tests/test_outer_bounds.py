import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from semantic_mt.mathkit import q_function
from semantic_mt.outer_bounds import (
    ALPHA_EPS,
    BudgetError,
    DistortionBudget,
    alpha_objective,
    beta_value,
    check_budget,
    classify_region,
    conditional_rd_bound,
    error_prob_bound,
    error_prob_bound_batch,
    fano_arm,
    optimal_alpha,
    outer_bound_closed,
    outer_bound_closed_grid,
    outer_bound_numeric,
    pe_inverse,
    shannon_lower_bound,
    stationarity_residual,
)
from semantic_mt.source import GaussianMixtureSpec, binary_symmetric_spec, example1_spec, semantic_entropy

EX1 = example1_spec()
H_EX1 = 1.48547529722733431950
# H(omega) - 0.5 + 1/2 log2(0.375 / 0.01), 30-digit evaluation
RATE_A_EX1 = 3.59988464247527475810


def grid_alpha(T, spec, n=1_000_001):
    """Brute-force the alpha problem with an independent formula."""
    L = spec.L
    h = spec.half_width()
    a = np.linspace(ALPHA_EPS, h - ALPHA_EPS, n)
    g = 2 * norm.sf(L * a / math.sqrt(np.trace(spec.K))) + T / (L * (h - a) ** 2)
    j = int(np.argmin(g))
    return a[j], g[j], a[1] - a[0]


class TestOptimalAlpha:
    def test_zero_trace_pushes_to_edge(self):
        a, raw = optimal_alpha(0.0, EX1)
        h = 0.5
        assert a == pytest.approx(h - ALPHA_EPS, abs=1e-9)
        assert raw == pytest.approx(2 * q_function(2 * (h - ALPHA_EPS) / math.sqrt(1.25)), rel=1e-9)

    def test_grid_oracle_t004(self):
        a, raw = optimal_alpha(0.04, EX1)
        ag, vg, step = grid_alpha(0.04, EX1)
        assert abs(a - ag) <= max(1e-6, step)
        assert raw <= vg + 1e-12

    def test_large_trace_uncapped(self):
        assert optimal_alpha(10.0, EX1)[1] > 1.0

    def test_negative_trace(self):
        with pytest.raises(ValueError):
            optimal_alpha(-0.1, EX1)

    @pytest.mark.parametrize("T", [0.005, 0.02, 0.04, 0.1])
    def test_stationarity(self, T):
        a, raw = optimal_alpha(T, EX1)
        assert ALPHA_EPS < a < 0.5 - ALPHA_EPS
        assert abs(stationarity_residual(a, T, EX1)) <= 1e-6

    def test_batch_route_agrees(self):
        T = np.array([0.0, 0.003, 0.02, 0.04, 0.1, 0.3])
        direct = np.array([error_prob_bound(t, EX1) for t in T])
        np.testing.assert_allclose(error_prob_bound_batch(T, EX1), direct, atol=1e-10)


class TestErrorProbBound:
    def test_noiseless_limit(self):
        spec = GaussianMixtureSpec(weights=(0.5, 0.2, 0.3), cov=(0.005, 0.005))
        assert error_prob_bound(0.0, spec) < 1e-20

    def test_capped(self):
        assert error_prob_bound(50.0, EX1) == 1.0

    def test_grid_oracle_t01(self):
        _, vg, _ = grid_alpha(0.1, EX1)
        assert error_prob_bound(0.1, EX1) == pytest.approx(min(1.0, vg), abs=1e-6)

    def test_monotone(self):
        T = np.linspace(0, 0.5, 200)
        pe = [error_prob_bound(t, EX1) for t in T]
        assert np.all(np.diff(pe) >= -1e-12)
        assert max(pe) <= 1.0

    def test_inverse(self):
        t1 = pe_inverse(1.0, EX1)
        assert error_prob_bound(t1, EX1) >= 1.0
        assert error_prob_bound(t1 - 1e-6, EX1) < 1.0

    def test_objective_convex_on_interval(self):
        a = np.linspace(0.01, 0.49, 400)
        g = alpha_objective(a, 0.04, EX1)
        assert np.all(np.diff(g, 2) >= -1e-10)


class TestBeta:
    def test_binary_fano_arm_is_one(self):
        spec = binary_symmetric_spec(0.5)
        assert beta_value((0.5, 0.5), 0.9, spec) == pytest.approx(0.9)
        assert fano_arm(1.0, spec) == 1.0

    def test_both_arms_example1(self):
        # at trace 0.02 the Fano arm (~1.815) still exceeds H(omega), so D_S is returned
        arm = 1.0 + error_prob_bound(0.02, EX1)
        assert arm == pytest.approx(1.8147168448513726, abs=1e-9)
        assert beta_value((0.01, 0.01), H_EX1, EX1) == pytest.approx(min(H_EX1, arm), abs=1e-12)

    def test_fano_arm_binds(self):
        spec = GaussianMixtureSpec(weights=(0.25,) * 4, cov=(0.02, 0.02))
        arm = fano_arm(error_prob_bound(0.01, spec), spec)
        assert arm < 2.0
        assert beta_value((0.005, 0.005), 2.0, spec) == pytest.approx(arm, abs=1e-12)

    def test_full_trace_caps(self):
        assert fano_arm(error_prob_bound(1.25, EX1), EX1) == pytest.approx(2.0)

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            beta_value((1.0, 0.1), 1.0, EX1)


class TestBudget:
    def test_box(self):
        check_budget(DistortionBudget(1.0, (0.1, 0.1)), EX1)
        for bad in [DistortionBudget(1.6, (0.1, 0.1)), DistortionBudget(1.0, (0.0, 0.1)),
                    DistortionBudget(1.0, (0.8, 0.1)), DistortionBudget(1.0, (0.1,))]:
            with pytest.raises(BudgetError):
                check_budget(bad, EX1)

    def test_strict_floor(self):
        with pytest.raises(BudgetError):
            check_budget(DistortionBudget(0.3, (0.1, 0.1)), EX1, strict=True)
        check_budget(DistortionBudget(0.7, (0.1, 0.1)), EX1, strict=True)


class TestRegions:
    def test_example1_is_a_or_bstar(self):
        for ds in np.linspace(0, H_EX1, 7):
            for dx in [0.01, 0.2, 0.5]:
                assert classify_region(DistortionBudget(ds, (dx, dx)), EX1) in ("A", "Bstar")

    def test_full_entropy_large_trace(self):
        assert classify_region(DistortionBudget(H_EX1, (0.75, 0.5)), EX1) == "A"

    def test_binary_threshold_tie_is_a(self):
        # for M = 2 the Fano arm equals 1 at every trace, so D_S <= 1 is region A
        spec = binary_symmetric_spec(0.22)
        assert classify_region(DistortionBudget(0.99, (1e-4, 1e-4)), spec) == "A"

    def test_plateau_region(self):
        spec = GaussianMixtureSpec(weights=(0.25,) * 4, cov=(0.02, 0.02))
        b = DistortionBudget(1.9, (0.005, 0.005))
        assert classify_region(b, spec) == "Bstar"

    def test_region_c_outside_default_box(self):
        b = DistortionBudget(2.5, (0.75, 0.5))
        assert classify_region(b, EX1, validate=False) == "C"


class TestOuterBound:
    def test_region_a_value(self):
        r = outer_bound_closed(DistortionBudget(0.5, (0.1, 0.1)), EX1)
        assert r.region == "A"
        assert r.rate == pytest.approx(RATE_A_EX1, abs=1e-12)

    def test_inactive_corner(self):
        b = DistortionBudget(H_EX1, (0.75, 0.5))
        assert outer_bound_closed(b, EX1).rate == pytest.approx(0.0, abs=1e-12)
        assert outer_bound_numeric(b, EX1).rate == pytest.approx(0.0, abs=1e-4)

    def test_high_resolution(self):
        b = DistortionBudget(0.0, (1e-3, 1e-3))
        expect = H_EX1 + 0.5 * math.log2(0.375 / 1e-6)
        assert outer_bound_numeric(b, EX1).rate == pytest.approx(expect, abs=1e-4)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_closed_matches_numeric(self, s, u1, u2):
        b = DistortionBudget(s * H_EX1, (u1 * 0.75, u2 * 0.5))
        assert abs(outer_bound_closed(b, EX1).rate - outer_bound_numeric(b, EX1).rate) <= 1e-4

    def test_closed_matches_numeric_bstar(self):
        spec = GaussianMixtureSpec(weights=(0.25,) * 4, cov=(0.02, 0.02))
        b = DistortionBudget(1.9, (0.005, 0.01))
        c, n = outer_bound_closed(b, spec), outer_bound_numeric(b, spec)
        assert c.region == "Bstar"
        assert abs(c.rate - n.rate) <= 1e-4

    def test_never_below_conditional(self):
        for ds in np.linspace(0, H_EX1, 5):
            for dx in [0.01, 0.1, 0.4]:
                b = DistortionBudget(ds, (dx, dx))
                assert outer_bound_numeric(b, EX1).rate >= conditional_rd_bound(b.D_X, EX1) - 1e-12

    def test_result_invariants(self):
        r = outer_bound_closed(DistortionBudget(1.0, (0.05, 0.2)), EX1)
        assert r.rate >= 0
        assert 0 < r.alpha_star < 0.5
        assert 0 <= r.p_e <= 1
        assert r.beta <= 1.0 + 1e-12

    def test_monotone_on_grid(self):
        ds = np.linspace(0, H_EX1, 6)
        d1 = np.linspace(0.05, 0.75, 6)
        d2 = np.linspace(0.05, 0.5, 6)
        R = np.array([[[outer_bound_closed(DistortionBudget(a, (b, c)), EX1).rate for c in d2]
                       for b in d1] for a in ds])
        for ax in range(3):
            assert np.all(np.diff(R, axis=ax) <= 1e-12)


class TestClosedGrid:
    @pytest.mark.parametrize("spec", [EX1, GaussianMixtureSpec(weights=(0.25,) * 4, cov=(0.02, 0.02))])
    def test_matches_scalar(self, spec):
        H = semantic_entropy(spec)
        v = spec.variances
        ds, d1, d2 = np.meshgrid(np.linspace(0, H, 7), np.linspace(1e-4, v[0], 7), np.linspace(1e-4, v[1], 7),
                                 indexing="ij")
        grid = outer_bound_closed_grid(ds, (d1, d2), spec)
        for j in np.ndindex(ds.shape):
            b = DistortionBudget(ds[j], (d1[j], d2[j]))
            assert grid[j] == pytest.approx(outer_bound_closed(b, spec).rate, abs=1e-9)

    def test_region_c_fallback(self):
        b = DistortionBudget(2.5, (0.75, 0.5))
        expect = outer_bound_closed(b, EX1, validate=False).rate
        assert float(outer_bound_closed_grid(2.5, (0.75, 0.5), EX1)) == pytest.approx(expect, abs=1e-12)


class TestBaselineBounds:
    def test_conditional_values(self):
        assert conditional_rd_bound((0.75, 0.5), EX1) == 0.0
        assert conditional_rd_bound((0.375, 0.25), EX1) == pytest.approx(1.0)
        assert conditional_rd_bound((0.1875, 0.125), EX1) == pytest.approx(2.0)

    def test_conditional_domain(self):
        with pytest.raises(BudgetError):
            conditional_rd_bound((0.0, 0.1), EX1)

    def test_slb_equal_means(self):
        spec = GaussianMixtureSpec(weights=(0.5, 0.2, 0.3), cov=(0.75, 0.5), mean_layout="explicit",
                                   means_matrix=[[0.0, 0.0]] * 3)
        D = (0.1, 0.1)
        assert shannon_lower_bound(D, spec) == pytest.approx(conditional_rd_bound(D, spec), abs=1e-9)

    def test_slb_noiseless(self):
        spec = EX1.with_cov([1e-4, 1e-4])
        D = (1e-5, 1e-5)
        expect = conditional_rd_bound(D, spec) + 2 * semantic_entropy(spec)
        assert shannon_lower_bound(D, spec) == pytest.approx(expect, abs=1e-6)

    def test_slb_above_conditional(self):
        D = (0.1, 0.1)
        assert shannon_lower_bound(D, EX1) >= conditional_rd_bound(D, EX1)
