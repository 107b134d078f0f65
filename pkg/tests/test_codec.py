import itertools
import math

import numpy as np
import pytest

from semantic_mt.codec import (
    ArithmeticCoder,
    CodecConfig,
    DegreeProfile,
    ProfileError,
    build_ldpc,
    dequantize,
    dithered_quantize,
    empirical_log_loss,
    entropy_code_rate,
    fuse_labels,
    label_equivocation,
    np_cluster,
    parse_profile,
    plugin_conditional_entropy,
    run_baseline_trial,
    run_trial,
    step_for_distortion,
    sw_decode,
    sw_encode,
)
from semantic_mt.codec.ldpc import load_profile
from semantic_mt.codec.quantizer import bits_for_step, dither_sequence, expected_mse
from semantic_mt.codec.trial import reconstruction_flip_rate
from semantic_mt.mathkit import binary_entropy, q_function
from semantic_mt.source import binary_symmetric_spec, example1_spec, sample


@pytest.fixture(scope="module")
def code_2048():
    return build_ldpc(2048, 0.5, "3 6", seed=1)


class TestCluster:
    def test_tie_goes_up(self):
        spec = binary_symmetric_spec(1.0)
        assert np_cluster([0.0, -1e-12, 1e-12], spec, 0).tolist() == [2, 1, 2]

    def test_error_rate_unit_variance(self):
        spec = binary_symmetric_spec(1.0)
        blk = sample(spec, 1_000_000, seed=3)
        err = np.mean(np_cluster(blk.observations[:, 0], spec, 0) != blk.labels)
        p = q_function(1.0)
        assert abs(err - p) <= 3 * math.sqrt(p * (1 - p) / 1_000_000)

    def test_noiseless(self):
        spec = binary_symmetric_spec(1e-8)
        blk = sample(spec, 10_000, seed=3)
        assert np.all(np_cluster(blk.observations[:, 1], spec, 1) == blk.labels)

    def test_threshold_shifts_boundary(self):
        spec = binary_symmetric_spec(1.0)
        # LLR at x is 2x for means -1/+1 and unit variance
        assert np_cluster([0.4], spec, 0, threshold=math.exp(1.0))[0] == 1
        assert np_cluster([0.6], spec, 0, threshold=math.exp(1.0))[0] == 2

    def test_requires_binary(self):
        with pytest.raises(ValueError):
            np_cluster([0.0], example1_spec(), 0)


class TestQuantizer:
    def test_centered_sample_zero_dither(self):
        idx = dithered_quantize([1.0, -1.0], [2, 1], 3, 0.5, 0, dither_scale=0.0)
        assert idx.tolist() == [0, 0]

    def test_deterministic(self):
        x = np.random.default_rng(0).normal(size=1000)
        lab = np.ones(1000, dtype=int)
        a = dithered_quantize(x, lab, 4, 0.3, 11)
        b = dithered_quantize(x, lab, 4, 0.3, 11)
        np.testing.assert_array_equal(a, b)

    def test_range_and_step_validation(self):
        with pytest.raises(ValueError):
            dithered_quantize([0.0], [1], 3, 0.0, 0)
        idx = dithered_quantize([100.0, -100.0], [1, 1], 3, 1.0, 0)
        assert idx.tolist() == [3, -4]

    def test_mse_matches_uniform_moment(self):
        rng = np.random.default_rng(7)
        x = rng.normal(1.0, 0.3, 1_000_000)
        lab = np.full(x.size, 2)
        step = math.sqrt(12 * 0.05)
        idx, clipped = dithered_quantize(x, lab, 4, step, 99, return_clipped=True)
        assert clipped.mean() < 1e-4
        xh = dequantize(idx, lab, 4, step, 99)
        mse = np.mean((x - xh) ** 2)
        assert abs(mse / (step**2 / 12) - 1) <= 0.02
        # subtractive dither decorrelates the error from the input
        assert abs(np.corrcoef(xh - x, x)[0, 1]) < 0.01

    def test_roundtrip_cell_bound_and_label_flip(self):
        rng = np.random.default_rng(1)
        x = rng.normal(-1.0, 0.4, 5000)
        lab = np.ones(x.size, dtype=int)
        step = 0.25
        idx, clipped = dithered_quantize(x, lab, 5, step, 5, return_clipped=True)
        xh = dequantize(idx, lab, 5, step, 5)
        ok = ~clipped
        assert np.all(np.abs(x - xh)[ok] <= step / 2 + 1e-12)
        flipped = dequantize(idx, np.full(x.size, 2), 5, step, 5)
        np.testing.assert_allclose(flipped - xh, 2.0)

    def test_mmse_reconstruction_lowers_error(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, math.sqrt(0.22), 200_000)
        lab = np.full(x.size, 1)
        step = step_for_distortion(0.2, 0.22)
        q = bits_for_step(step, 0.22)
        idx = dithered_quantize(x - 1.0, lab, q, step, 3)
        plain = dequantize(idx, lab, q, step, 3)
        mmse = dequantize(idx, lab, q, step, 3, prior_var=0.22)
        e_mmse = np.mean((mmse - (x - 1.0)) ** 2)
        assert e_mmse < np.mean((plain - (x - 1.0)) ** 2)
        assert e_mmse == pytest.approx(0.2, rel=0.02)

    def test_step_rules(self):
        assert step_for_distortion(0.2, 0.22, mmse=False) == pytest.approx(math.sqrt(2.4))
        s = step_for_distortion(0.02, 0.22)
        assert expected_mse(s, 0.22) == pytest.approx(0.02, rel=1e-6)
        # fine steps: conditional mean barely helps
        assert s == pytest.approx(math.sqrt(12 * 0.02), rel=0.1)

    def test_dither_range(self):
        u = dither_sequence(100_000, 2.0, 1)
        assert u.min() >= -1.0 and u.max() < 1.0


class TestLdpc:
    def test_regular_rate(self, code_2048):
        assert abs(code_2048.rate - 0.5) <= 1 / 2048
        col = np.asarray(code_2048.parity.sum(axis=0)).ravel()
        assert np.all(col == 3)

    def test_no_zero_columns_across_seeds(self):
        for seed in range(100):
            c = build_ldpc(1024, 0.3, seed=seed)
            assert np.asarray(c.parity.sum(axis=0)).min() >= 1

    def test_girth_at_least_six(self, code_2048):
        # independent 4-cycle search: a column pair sharing two rows
        H = code_2048.parity.tocsr()
        seen = set()
        for r in range(H.shape[0]):
            cols = H.indices[H.indptr[r] : H.indptr[r + 1]]
            for pair in itertools.combinations(sorted(cols), 2):
                assert pair not in seen
                seen.add(pair)
        assert code_2048.four_cycles() == 0

    def test_deterministic(self):
        a = build_ldpc(1024, 0.4, seed=5)
        b = build_ldpc(1024, 0.4, seed=5)
        c = build_ldpc(1024, 0.4, seed=6)
        assert (a.parity != b.parity).nnz == 0
        assert (a.parity != c.parity).nnz > 0

    def test_infeasible(self):
        with pytest.raises(ProfileError):
            build_ldpc(2048, 0.4, "3 6")
        with pytest.raises(ProfileError):
            build_ldpc(1024, 1.5)
        with pytest.raises(ProfileError):
            build_ldpc(512, 0.5)
        with pytest.raises(ProfileError):
            build_ldpc(1024, 0.002, DegreeProfile.regular(5))

    def test_profile_parsing(self, tmp_path):
        assert parse_profile("3 6") == DegreeProfile.regular(3, 6)
        irr = parse_profile("# mix\n2 0.5\n3 0.25\n4 0.25\n")
        assert irr.degrees == (2, 3, 4)
        c = build_ldpc(2048, 0.4, irr, seed=2)
        deg = np.asarray(c.parity.sum(axis=0)).ravel()
        assert np.bincount(deg).tolist()[2:] == [1024, 512, 512]
        f = tmp_path / "p.txt"
        f.write_text("3 6\n")
        assert load_profile(f) == DegreeProfile.regular(3, 6)
        for bad in ["", "3", "2 0.5\n3 0.2", "6 3"]:
            with pytest.raises(ProfileError):
                parse_profile(bad)


class TestSlepianWolf:
    def test_zero_and_linearity(self, code_2048):
        rng = np.random.default_rng(0)
        assert not sw_encode(np.zeros(2048), code_2048).any()
        a, b = rng.integers(0, 2, (2, 2048))
        np.testing.assert_array_equal(sw_encode(a ^ b, code_2048), sw_encode(a, code_2048) ^ sw_encode(b, code_2048))

    def test_dense_oracle(self, code_2048):
        x = np.random.default_rng(1).integers(0, 2, 2048)
        dense = code_2048.parity.toarray().astype(int)
        np.testing.assert_array_equal(sw_encode(x, code_2048), dense @ x % 2)

    def test_length_mismatch(self, code_2048):
        with pytest.raises(ValueError):
            sw_encode(np.zeros(100), code_2048)

    def test_noiseless_side_info(self, code_2048):
        x = np.random.default_rng(2).integers(0, 2, 2048)
        info = sw_decode(sw_encode(x, code_2048), x, 1e-9, code_2048, return_info=True)
        assert info.iterations <= 1 and info.converged
        np.testing.assert_array_equal(info.bits, x)

    def test_bsc_005_rate_04(self):
        code = build_ldpc(8192, 0.4, seed=4)
        rng = np.random.default_rng(3)
        errs = []
        for _ in range(50):
            x = rng.integers(0, 2, 8192).astype(np.uint8)
            y = x ^ (rng.random(8192) < 0.05)
            est = sw_decode(sw_encode(x, code), y, 0.05, code, 100)
            errs.append(np.mean(est != x))
        assert np.mean(errs) <= 1e-3

    def test_decoded_satisfies_checks(self, code_2048):
        rng = np.random.default_rng(4)
        x = rng.integers(0, 2, 2048).astype(np.uint8)
        y = x ^ (rng.random(2048) < 0.03)
        syn = sw_encode(x, code_2048)
        info = sw_decode(syn, y, 0.03, code_2048, return_info=True)
        assert info.converged
        np.testing.assert_array_equal(sw_encode(info.bits, code_2048), syn)


class TestEntropyCoding:
    def test_constant_stream(self):
        assert entropy_code_rate(np.zeros(5000), np.ones(5000)) == 0.0

    def test_uniform_indices(self):
        rng = np.random.default_rng(0)
        idx = rng.integers(-4, 4, 100_000)
        lab = rng.integers(1, 3, 100_000)
        assert entropy_code_rate(idx, lab) == pytest.approx(3.0, abs=0.02)

    def test_conditioning_helps(self):
        rng = np.random.default_rng(1)
        lab = rng.integers(1, 3, 20_000)
        idx = np.where(lab == 1, rng.integers(0, 2, lab.size), rng.integers(2, 6, lab.size))
        assert entropy_code_rate(idx, lab) < plugin_conditional_entropy(idx)

    def test_arithmetic_coder_roundtrip_and_overhead(self):
        rng = np.random.default_rng(5)
        k = 10_000
        lab = rng.integers(1, 3, k)
        p1 = [0.05, 0.15, 0.6, 0.15, 0.05]
        p2 = [0.3, 0.3, 0.2, 0.1, 0.1]
        idx = np.where(lab == 1, rng.choice(5, k, p=p1), rng.choice(5, k, p=p2)) - 2
        coder = ArithmeticCoder(alphabet=5, n_contexts=2, offset=-2)
        payload = coder.encode(idx, lab - 1)
        np.testing.assert_array_equal(coder.decode(payload, k, lab - 1), idx)
        assert coder.rate(idx, lab - 1) - entropy_code_rate(idx, lab) <= 0.02


class TestFusion:
    spec = binary_symmetric_spec(0.22)

    def test_agreement(self):
        post = fuse_labels([np.array([1, 2]), np.array([1, 2])], self.spec, [0.1, 0.3])
        assert np.argmax(post, axis=1).tolist() == [0, 1]

    def test_symmetric_conflict(self):
        post = fuse_labels([np.array([1]), np.array([2])], self.spec, [0.2, 0.2])
        np.testing.assert_allclose(post, [[0.5, 0.5]])

    def test_enumeration_oracle(self):
        post = fuse_labels([np.array([1]), np.array([2])], self.spec, [0.1, 0.2])
        # P(S=1 | 1, 2) = 0.9*0.2 / (0.9*0.2 + 0.1*0.8)
        assert post[0, 0] == pytest.approx(0.18 / 0.26, abs=1e-12)

    def test_log_loss_above_equivocation(self):
        rng = np.random.default_rng(0)
        S = rng.integers(1, 3, 20_000)
        d1 = np.where(rng.random(S.size) < 0.1, 3 - S, S)
        d2 = np.where(rng.random(S.size) < 0.2, 3 - S, S)
        post = fuse_labels([d1, d2], self.spec, [0.1, 0.2])
        assert empirical_log_loss(post, S) >= label_equivocation(S, [d1, d2]) - 1e-12


class TestTrial:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            CodecConfig(q=0)
        with pytest.raises(ValueError):
            CodecConfig(k=100)
        with pytest.raises(ValueError):
            CodecConfig(bp_max_iters=0)
        with pytest.raises(ValueError):
            CodecConfig(spec=example1_spec())

    def test_deterministic(self):
        cfg = CodecConfig(k=2048, trials=1)
        assert run_trial(cfg, 17) == run_trial(cfg, 17)
        assert run_baseline_trial(cfg, 17) == run_baseline_trial(cfg, 17)
        assert run_trial(cfg, 17) != run_trial(cfg, 18)

    def test_rate_accounting_closes(self):
        r = run_trial(CodecConfig(k=4096), 3)
        assert r.sum_rate == pytest.approx(sum(a + b for a, b in r.rates), abs=0)
        assert r.log_loss >= r.equivocation - 1e-12
        assert len(r.csv_row()) == len(r.csv_header())

    def test_noiseless_limit(self):
        cfg = CodecConfig(spec=binary_symmetric_spec(1e-8), reconstruction="plain", k=8192)
        r = run_trial(cfg, 1)
        step = math.sqrt(12 * 0.2)
        assert r.log_loss < 1e-9
        for m in r.mse:
            assert m == pytest.approx(step**2 / 12, rel=0.05)
        b = run_baseline_trial(cfg, 1)
        np.testing.assert_allclose(b.mse, r.mse, rtol=0.05)

    def test_test_channel_flips_labels(self):
        cfg = CodecConfig(k=8192, label_flip=(0.1, 0.1))
        r = run_trial(cfg, 2)
        base = run_trial(CodecConfig(k=8192), 2)
        assert r.log_loss > base.log_loss
        assert r.equivocation > base.equivocation
        # lossless syndrome coding: weaker label correlation costs syndrome bits
        assert r.rates[1][0] > base.rates[1][0]

    def test_flip_rate_formula(self):
        # zero-width quantizer cell reduces to the plain detection error
        assert reconstruction_flip_rate(1e-12, 1.0, 0.25) == pytest.approx(q_function(2.0), rel=1e-9)

    @pytest.mark.slow
    def test_baseline_worse_semantics_at_high_noise(self):
        cfg = CodecConfig(spec=binary_symmetric_spec(0.5), trials=50)
        seeds = cfg.trial_seeds()
        ours = np.mean([run_trial(cfg, s).log_loss for s in seeds])
        base = np.mean([run_baseline_trial(cfg, s).log_loss for s in seeds])
        assert base >= ours
