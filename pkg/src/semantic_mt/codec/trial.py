"""One Monte-Carlo run of the detect-and-compress pipeline, and its baseline.

Pipeline per trial: sample -> per-agent label detection -> optional label
test channel (BSC ``d_i``) -> label-offset dithered quantization -> label
coding (agent 1 at its entropy, later agents by LDPC syndromes against
agent 1's label) -> decoder: syndrome decoding, dequantization, label fusion,
log-loss and MSE.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from ..mathkit import binary_convolve, binary_entropy
from ..source import (
    GaussianMixtureSpec,
    agent_half_width,
    binary_symmetric_spec,
    ensure_valid,
    per_agent_flip_prob,
    sample,
)
from .clustering import np_cluster
from .entropy import dither_phase, entropy_code_rate, plugin_conditional_entropy
from .fusion import empirical_log_loss, fuse_labels, label_equivocation
from .ldpc import cached_ldpc
from .quantizer import (
    _truncnorm_mean,
    bits_for_step,
    dequantize,
    dither_sequence,
    dithered_quantize,
    index_range,
    step_for_distortion,
)
from .slepian_wolf import design_syndrome_rate, sw_decode, sw_encode

# fixed substream slots under each trial seed
_SLOT_SAMPLE, _SLOT_FLIP, _SLOT_DITHER0 = 0, 1, 2
_LDPC_SALT = 0x5EED


@dataclass(frozen=True)
class CodecConfig:
    """Knobs of the simulated scheme.

    ``step`` (per-agent scalar or None) overrides the quantizer step; when
    None it is derived from ``target_D_X``. ``q`` None sizes the index range
    for a clip rate below 1e-4. ``label_flip`` is the BSC test channel
    ``(d_1, .., d_L)`` applied to the detected labels before coding.
    """

    spec: GaussianMixtureSpec = field(default_factory=binary_symmetric_spec)
    q: int | None = None
    step: float | None = None
    target_D_X: float = 0.2
    dither_scale: float = 1.0
    sw_rate_margin: float = 0.15
    ldpc_profile: str | None = None
    bp_max_iters: int = 100
    k: int = 8192
    trials: int = 100
    master_seed: int = 0
    np_threshold: float = 1.0
    label_flip: tuple[float, ...] | None = None
    reconstruction: str = "mmse"
    context_bins: int = 16

    def __post_init__(self):
        ensure_valid(self.spec)
        if self.spec.M != 2:
            raise ValueError("the codec handles binary labels (M = 2)")
        if self.q is not None and self.q < 1:
            raise ValueError("q must be >= 1")
        if self.bp_max_iters < 1:
            raise ValueError("bp_max_iters must be >= 1")
        if self.k < 1024:
            raise ValueError("block length k must be >= 1024")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.reconstruction not in ("mmse", "plain"):
            raise ValueError("reconstruction must be 'mmse' or 'plain'")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        flips = self.label_flip if self.label_flip is not None else (0.0,) * self.spec.L
        flips = tuple(float(d) for d in flips)
        if len(flips) != self.spec.L or any(not 0.0 <= d <= 0.5 for d in flips):
            raise ValueError("label_flip needs one value in [0, 1/2] per agent")
        object.__setattr__(self, "label_flip", flips)

    @property
    def L(self) -> int:
        return self.spec.L

    def agent_step(self, i: int) -> float:
        if self.step is not None:
            return float(self.step)
        return step_for_distortion(self.target_D_X, self.spec.cov[i][i], mmse=self.reconstruction == "mmse")

    def agent_bits(self, i: int, var: float | None = None) -> int:
        if self.q is not None:
            return self.q
        # a flipped label can sit on the far side of the observation
        offset = 2.0 * agent_half_width(self.spec, i) if self.label_flip[i] > 0 else 0.0
        return bits_for_step(self.agent_step(i), self.spec.cov[i][i] if var is None else var, offset=offset)

    def label_crossover(self, i: int) -> float:
        """Analytic flip rate between the coded labels of agent 1 and agent ``i``."""
        a = binary_convolve(per_agent_flip_prob(self.spec, 0), self.label_flip[0])
        b = binary_convolve(per_agent_flip_prob(self.spec, i), self.label_flip[i])
        return binary_convolve(a, b)

    def ldpc_seed(self) -> int:
        return int(np.random.SeedSequence([self.master_seed, _LDPC_SALT]).generate_state(1)[0])

    def trial_seeds(self) -> list[int]:
        """Per-trial seeds derived from ``master_seed``."""
        ss = np.random.SeedSequence(self.master_seed)
        return [int(s) for s in ss.generate_state(self.trials, dtype=np.uint64)]


@dataclass(frozen=True)
class TrialReport:
    """Measured rates (bits/sample) and distortions of one trial."""

    rates: tuple[tuple[float, float], ...]
    log_loss: float
    equivocation: float
    mse: tuple[float, ...]
    cluster_error: tuple[float, ...]
    sw_residual_error: float
    sw_code_rate: float
    clip_rate: tuple[float, ...]
    trial_seed: int
    substream_seeds: tuple[int, ...]

    @property
    def sum_rate(self) -> float:
        return float(sum(a + b for a, b in self.rates))

    @property
    def label_rate(self) -> float:
        return float(sum(a for a, _ in self.rates))

    @property
    def quantizer_rate(self) -> float:
        return float(sum(b for _, b in self.rates))

    def csv_header(self) -> list[str]:
        L = len(self.rates)
        cols = ["trial_seed", "R_sum"]
        cols += [f"R{i + 1}_label" for i in range(L)] + [f"R{i + 1}_quant" for i in range(L)]
        cols += ["log_loss", "equivocation"]
        cols += [f"mse{i + 1}" for i in range(L)] + [f"cluster_err{i + 1}" for i in range(L)]
        cols += ["sw_residual", "sw_code_rate"] + [f"clip{i + 1}" for i in range(L)]
        return cols

    def csv_row(self) -> list:
        return (
            [self.trial_seed, self.sum_rate]
            + [a for a, _ in self.rates]
            + [b for _, b in self.rates]
            + [self.log_loss, self.equivocation]
            + list(self.mse)
            + list(self.cluster_error)
            + [self.sw_residual_error, self.sw_code_rate]
            + list(self.clip_rate)
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _substreams(trial_seed: int, L: int) -> list[int]:
    kids = np.random.SeedSequence(int(trial_seed)).spawn(_SLOT_DITHER0 + L)
    return [int(k.generate_state(1, dtype=np.uint64)[0]) for k in kids]


def _agent_centers(spec: GaussianMixtureSpec, i: int) -> tuple[float, float]:
    return float(spec.means[0, i]), float(spec.means[1, i])


def code_labels(config: CodecConfig, coded: list[np.ndarray]):
    """Label stage: rates, decoder-side labels, residual error, syndrome rate.

    Agent 1's labels are charged their empirical entropy and assumed
    delivered exactly; each later agent's labels go through LDPC syndrome
    coding with agent 1's labels as side information.
    """
    k = config.k
    rates = [plugin_conditional_entropy(coded[0])]
    decoded = [coded[0]]
    residual = []
    sw_rates = []
    y = (coded[0] == 2).astype(np.uint8)
    for i in range(1, config.L):
        rho = config.label_crossover(i)
        target = design_syndrome_rate(rho, config.sw_rate_margin)
        bits = (coded[i] == 2).astype(np.uint8)
        m = int(round(target * k))
        if m >= k or rho >= 0.5 - 1e-12:
            # syndrome would not compress: send the labels uncoded
            rates.append(1.0)
            decoded.append(coded[i])
            residual.append(0.0)
            sw_rates.append(1.0)
            continue
        code = cached_ldpc(k, max(m, 1) / k, config.ldpc_profile, config.ldpc_seed())
        syn = sw_encode(bits, code)
        est = sw_decode(syn, y, rho, code, config.bp_max_iters)
        rates.append(code.rate)
        sw_rates.append(code.rate)
        decoded.append(np.where(est == 1, 2, 1).astype(np.int64))
        residual.append(float(np.mean(est != bits)))
    return rates, decoded, (float(np.mean(residual)) if residual else 0.0), (float(np.mean(sw_rates)) if sw_rates else 0.0)


def run_trial(config: CodecConfig, trial_seed: int) -> TrialReport:
    """Simulate one block of ``config.k`` samples through the scheme."""
    spec = config.spec
    L, k = config.L, config.k
    seeds = _substreams(trial_seed, L)
    blk = sample(spec, k, seed=seeds[_SLOT_SAMPLE])
    S = blk.labels
    flip_rng = np.random.default_rng(seeds[_SLOT_FLIP])

    detected, coded = [], []
    for i in range(L):
        c = np_cluster(blk.observations[:, i], spec, i, config.np_threshold)
        detected.append(c)
        flips = flip_rng.random(k) < config.label_flip[i]
        coded.append(np.where(flips, 3 - c, c))

    label_rates, decoded, sw_residual, sw_rate = code_labels(config, coded)

    quant_rates, mses, clips = [], [], []
    for i in range(L):
        step, q = config.agent_step(i), config.agent_bits(i)
        centers = _agent_centers(spec, i)
        dseed = seeds[_SLOT_DITHER0 + i]
        idx, clipped = dithered_quantize(
            blk.observations[:, i], coded[i], q, step, dseed, centers, config.dither_scale, return_clipped=True
        )
        u = dither_sequence(k, step, dseed, config.dither_scale)
        ctx = dither_phase(u / config.dither_scale, step, config.context_bins)
        quant_rates.append(entropy_code_rate(idx, coded[i], ctx))
        prior = spec.cov[i][i] if config.reconstruction == "mmse" else None
        xhat = dequantize(idx, decoded[i], q, step, dseed, centers, config.dither_scale, prior_var=prior)
        mses.append(float(np.mean((xhat - blk.observations[:, i]) ** 2)))
        clips.append(float(np.mean(clipped)))

    flip_rates = [binary_convolve(per_agent_flip_prob(spec, i), config.label_flip[i]) for i in range(L)]
    post = fuse_labels(decoded, spec, flip_rates)
    return TrialReport(
        rates=tuple((float(a), float(b)) for a, b in zip(label_rates, quant_rates)),
        log_loss=empirical_log_loss(post, S),
        equivocation=label_equivocation(S, decoded),
        mse=tuple(mses),
        cluster_error=tuple(float(np.mean(c != S)) for c in detected),
        sw_residual_error=sw_residual,
        sw_code_rate=sw_rate,
        clip_rate=tuple(clips),
        trial_seed=int(trial_seed),
        substream_seeds=tuple(seeds),
    )


def reconstruction_flip_rate(step: float, half_width: float, var: float, n: int = 512) -> float:
    """Detection error of the midpoint rule applied to ``x + e``, ``e ~ U[-step/2, step/2)``.

    ``E_e[Q((h + e) / sigma)]`` by the midpoint rule over the error.
    """
    e = ((np.arange(n) + 0.5) / n - 0.5) * step
    return float(np.mean(ndtr(-(half_width + e) / math.sqrt(var))))


def run_baseline_trial(config: CodecConfig, trial_seed: int) -> TrialReport:
    """Compress-then-detect: quantize raw observations, detect at the decoder.

    Each agent quantizes its observation with one codebook (no label
    offset). Agent 1's indices are charged ``H^(idx_1 | dither phase)``,
    agent 2's ``H^(idx_2 | idx_1, dither phase)``. The decoder applies the
    midpoint detector to each plain reconstruction ``x + e`` and fuses the
    decisions with their analytic flip rates; MMSE reconstruction then
    weights the per-label cell means by that fused posterior.
    """
    spec = config.spec
    L, k = config.L, config.k
    seeds = _substreams(trial_seed, L)
    blk = sample(spec, k, seed=seeds[_SLOT_SAMPLE])
    S = blk.labels
    means = spec.means
    total_var = [spec.cov[i][i] + float(np.var(means[:, i])) for i in range(L)]

    idxs, cells, rates, clips, dets, flips = [], [], [], [], [], []
    for i in range(L):
        step = config.step if config.step is not None else step_for_distortion(
            config.target_D_X, total_var[i], mmse=config.reconstruction == "mmse"
        )
        q = config.q if config.q is not None else bits_for_step(step, total_var[i] + float(np.max(means[:, i] ** 2)))
        dseed = seeds[_SLOT_DITHER0 + i]
        ones = np.ones(k, dtype=np.int64)
        idx, clipped = dithered_quantize(
            blk.observations[:, i], ones, q, step, dseed, (0.0, 0.0), config.dither_scale, return_clipped=True
        )
        u = dither_sequence(k, step, dseed, config.dither_scale)
        ctx = dither_phase(u / config.dither_scale, step, config.context_bins)
        if i == 0:
            rates.append(entropy_code_rate(idx, ones, ctx))
        else:
            rates.append(max(0.0, plugin_conditional_entropy(idx, idxs[0], ctx)))
        lo_i, hi_i = index_range(q)
        left = np.where(idx == lo_i, -np.inf, (idx - 0.5) * step - u)
        right = np.where(idx == hi_i, np.inf, (idx + 0.5) * step - u)
        plain = idx * step - u
        dets.append(np_cluster(plain, spec, i, config.np_threshold))
        h_i = 0.5 * abs(float(means[1, i] - means[0, i]))
        flips.append(reconstruction_flip_rate(step, h_i, spec.cov[i][i]))
        idxs.append(idx)
        cells.append((left, right, plain))
        clips.append(float(np.mean(clipped)))

    post = fuse_labels(dets, spec, flips)
    mses = []
    for i in range(L):
        left, right, plain = cells[i]
        if config.reconstruction == "plain":
            xhat = plain
        else:
            sd = math.sqrt(spec.cov[i][i])
            xhat = np.zeros(k)
            for s in range(spec.M):
                m_s = means[s, i] + sd * _truncnorm_mean((left - means[s, i]) / sd, (right - means[s, i]) / sd)
                xhat += post[:, s] * m_s
        mses.append(float(np.mean((xhat - blk.observations[:, i]) ** 2)))
    return TrialReport(
        rates=tuple((0.0, float(r)) for r in rates),
        log_loss=empirical_log_loss(post, S),
        equivocation=label_equivocation(S, dets),
        mse=tuple(mses),
        cluster_error=tuple(float(np.mean(d != S)) for d in dets),
        sw_residual_error=0.0,
        sw_code_rate=0.0,
        clip_rate=tuple(clips),
        trial_seed=int(trial_seed),
        substream_seeds=tuple(seeds),
    )


def run_trials(config: CodecConfig, baseline: bool = False) -> list[TrialReport]:
    fn = run_baseline_trial if baseline else run_trial
    return [fn(config, s) for s in config.trial_seeds()]
