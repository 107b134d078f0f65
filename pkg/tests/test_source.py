import numpy as np
import pytest

from semantic_mt.mathkit import q_function
from semantic_mt.source import (
    GaussianMixtureSpec,
    binary_symmetric_spec,
    example1_spec,
    per_agent_flip_prob,
    sample,
    semantic_entropy,
    validate,
)

H_OMEGA_EX1 = 1.48547529722733431950  # mpmath, 30 digits


def test_example1_valid():
    assert validate(example1_spec()) == []


def test_weights_sum_diagnostic():
    bad = GaussianMixtureSpec(weights=(0.5, 0.6), cov=(1.0,))
    msgs = validate(bad)
    assert any("weights sum" in m for m in msgs)


def test_indefinite_covariance_diagnostic():
    # eigenvalues 1.0 and -0.1
    K = np.array([[0.45, 0.55], [0.55, 0.45]])
    bad = GaussianMixtureSpec(weights=(0.5, 0.5), cov=K)
    msgs = validate(bad)
    assert any("not positive definite" in m for m in msgs)


def test_validate_collects_all_problems():
    bad = GaussianMixtureSpec(weights=(0.5, 0.6), cov=[[1.0, 2.0], [2.0, 1.0]], mean_layout="centered_pm1")
    assert len(validate(bad)) >= 2


def test_means_layouts():
    np.testing.assert_array_equal(example1_spec().means, [[1, 1], [2, 2], [3, 3]])
    np.testing.assert_array_equal(binary_symmetric_spec(0.25).means, [[-1, -1], [1, 1]])
    assert example1_spec().half_width() == 0.5
    assert binary_symmetric_spec().half_width() == 1.0


def test_spec_hashable_and_roundtrip():
    s = example1_spec()
    assert hash(s) == hash(example1_spec())
    assert GaussianMixtureSpec.from_dict(s.to_dict()) == s


class TestSemanticEntropy:
    def test_uniform(self):
        assert semantic_entropy(binary_symmetric_spec()) == pytest.approx(1.0)

    def test_example1(self):
        assert semantic_entropy(example1_spec()) == pytest.approx(H_OMEGA_EX1, abs=1e-12)

    def test_degenerate_limit(self):
        spec = GaussianMixtureSpec(weights=(1 - 1e-12, 1e-12), cov=(1.0,))
        assert semantic_entropy(spec) < 1e-9


class TestSample:
    def test_empty_block(self):
        with pytest.raises(ValueError):
            sample(example1_spec(), 0, seed=1)

    def test_deterministic(self):
        a = sample(example1_spec(), 1000, seed=9)
        b = sample(example1_spec(), 1000, seed=9)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.observations, b.observations)

    def test_shapes(self):
        blk = sample(example1_spec(), 17, seed=0)
        assert blk.labels.shape == (17,)
        assert blk.observations.shape == (17, 2)
        assert set(np.unique(blk.labels)) <= {1, 2, 3}

    def test_label_frequencies(self):
        spec = binary_symmetric_spec(0.25)
        k = 1_000_000
        blk = sample(spec, k, seed=2)
        freq = np.mean(blk.labels == 1)
        se = np.sqrt(0.25 / k)
        assert abs(freq - 0.5) <= 3 * se

    def test_midpoint_detection_rate(self):
        spec = binary_symmetric_spec(0.25)
        k = 1_000_000
        blk = sample(spec, k, seed=4)
        err = np.mean((blk.observations[:, 0] >= 0) != (blk.labels == 2))
        p = per_agent_flip_prob(spec, 0)
        assert abs(err - p) <= 3 * np.sqrt(p * (1 - p) / k)

    def test_conditional_moments(self):
        spec = example1_spec()
        blk = sample(spec, 200_000, seed=1)
        sel = blk.observations[blk.labels == 3]
        np.testing.assert_allclose(sel.mean(axis=0), [3, 3], atol=0.02)
        np.testing.assert_allclose(np.cov(sel.T), spec.K, atol=0.02)


class TestFlipProb:
    def test_centered_unit_variance(self):
        spec = GaussianMixtureSpec(weights=(0.5, 0.5), cov=(1.0, 1.0), mean_layout="centered_pm1")
        assert per_agent_flip_prob(spec, 0) == pytest.approx(0.15865525393145705, abs=1e-14)

    def test_unit_ladder_half_spacing(self):
        spec = GaussianMixtureSpec(weights=(0.5, 0.5), cov=(0.25,))
        assert per_agent_flip_prob(spec, 0) == pytest.approx(q_function(1.0), abs=1e-14)

    def test_noiseless(self):
        assert per_agent_flip_prob(binary_symmetric_spec(1e-8), 1) == 0.0

    def test_requires_binary(self):
        with pytest.raises(ValueError):
            per_agent_flip_prob(example1_spec(), 0)
