import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semantic_mt.mathkit import (
    EntropyEstimate,
    binary_convolve,
    binary_entropy,
    entropy,
    gm_posterior_entropy,
    minimize_scalar,
    q_function,
)
from semantic_mt.source import GaussianMixtureSpec, example1_spec

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)

# 30-digit mpmath evaluations
H2_011 = 0.49991595816452799564
Q_1 = 0.15865525393145705141
# 400x400 Gauss-Legendre product quadrature of H(S|X) for the 3-component example
H_S_GIVEN_X_EX1 = 0.6511243


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)

    def test_reference_value(self):
        assert binary_entropy(0.11) == pytest.approx(H2_011, abs=1e-12)

    def test_array_input(self):
        out = binary_entropy(np.array([0.0, 0.5, 0.11]))
        np.testing.assert_allclose(out, [0.0, 1.0, H2_011], atol=1e-12)

    @pytest.mark.parametrize("bad", [-0.01, 1.5, float("nan")])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            binary_entropy(bad)

    @given(probs)
    def test_symmetry(self, p):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)


class TestBinaryConvolve:
    def test_identity_and_absorbing(self):
        assert binary_convolve(0.3, 0.0) == pytest.approx(0.3)
        assert binary_convolve(0.3, 0.5) == pytest.approx(0.5)

    def test_reference(self):
        assert binary_convolve(0.2, 0.3) == pytest.approx(0.38, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            binary_convolve(0.2, 1.2)

    @given(probs, probs, probs)
    def test_commutative_associative(self, a, b, c):
        assert binary_convolve(a, b) == pytest.approx(binary_convolve(b, a), abs=1e-12)
        lhs = binary_convolve(binary_convolve(a, b), c)
        rhs = binary_convolve(a, binary_convolve(b, c))
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestQFunction:
    def test_values(self):
        assert q_function(0.0) == 0.5
        assert q_function(np.inf) == 0.0
        assert q_function(1.0) == pytest.approx(Q_1, abs=1e-14)

    @given(st.floats(min_value=-30, max_value=30))
    def test_reflection(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)

    def test_monotone(self):
        x = np.linspace(-6, 6, 1001)
        assert np.all(np.diff(q_function(x)) <= 0)


def test_entropy_uniform():
    assert entropy([0.25] * 4) == pytest.approx(2.0)
    assert entropy([1.0, 0.0]) == 0.0


class TestMinimizeScalar:
    def test_quadratic(self):
        x, v = minimize_scalar(lambda t: (t - 0.3) ** 2, 0.0, 1.0, tol=1e-9)
        assert x == pytest.approx(0.3, abs=1e-8)
        assert v == pytest.approx(0.0, abs=1e-15)

    def test_boundary_minimum(self):
        x, v = minimize_scalar(lambda t: t, 0.0, 1.0)
        assert x == 0.0 and v == 0.0

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            minimize_scalar(lambda t: t, 1.0, 1.0)

    def test_vectorized_matches_scalar(self):
        f = lambda t: np.cosh(t - 0.7)
        a = minimize_scalar(f, -2, 2, vectorized=True)
        b = minimize_scalar(f, -2, 2)
        assert a[0] == pytest.approx(b[0], abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.1, max_value=5))
    def test_convex_against_grid(self, c, s):
        f = lambda t: s * (t - c) ** 2 + np.exp(0.3 * t)
        x, _ = minimize_scalar(f, -4.0, 4.0, tol=1e-9, vectorized=True)
        grid = np.linspace(-4.0, 4.0, 1_000_001)
        xg = grid[np.argmin(f(grid))]
        assert abs(x - xg) <= 8.0 / 1e6 + 1e-9


class TestPosteriorEntropy:
    def test_equal_means_gives_prior_entropy(self):
        spec = GaussianMixtureSpec(
            weights=(0.5, 0.2, 0.3), cov=(1.0,), mean_layout="explicit", means_matrix=[[0.0]] * 3
        )
        assert gm_posterior_entropy(spec, "quadrature") == pytest.approx(entropy(spec.omega), abs=1e-9)
        est = gm_posterior_entropy(spec, n=20_000)
        assert est == pytest.approx(entropy(spec.omega), abs=1e-9)

    def test_tiny_noise(self):
        spec = example1_spec().with_cov([1e-6, 1e-6])
        assert gm_posterior_entropy(spec, n=20_000) < 1e-6

    def test_example1_against_quadrature(self):
        est = gm_posterior_entropy(example1_spec(), n=1_000_000, seed=3, return_stderr=True)
        assert isinstance(est, EntropyEstimate)
        assert abs(est.value - H_S_GIVEN_X_EX1) <= 3 * est.stderr

    @pytest.mark.slow
    def test_example1_large_sample(self):
        est = gm_posterior_entropy(example1_spec(), n=10_000_000, seed=11, return_stderr=True)
        assert abs(est.value - H_S_GIVEN_X_EX1) <= 3 * est.stderr

    def test_deterministic(self):
        a = gm_posterior_entropy(example1_spec(), n=50_000, seed=5)
        b = gm_posterior_entropy(example1_spec(), n=50_000, seed=5)
        assert a == b

    def test_range(self):
        spec = example1_spec()
        v = gm_posterior_entropy(spec, n=50_000)
        assert 0.0 <= v <= entropy(spec.omega)

    def test_quadrature_single_agent_matches_mc(self):
        spec = example1_spec().marginal(0)
        q = gm_posterior_entropy(spec, "quadrature")
        mc = gm_posterior_entropy(spec, n=1_000_000, seed=1, return_stderr=True)
        assert abs(q - mc.value) <= 3 * mc.stderr

    def test_errors(self):
        with pytest.raises(ValueError):
            gm_posterior_entropy(example1_spec(), "quadrature")
        with pytest.raises(ValueError):
            gm_posterior_entropy(example1_spec(), n=100)
        with pytest.raises(ValueError):
            gm_posterior_entropy(example1_spec(), "simpson")
