"""Decoder-side label fusion and semantic distortion measurement."""

from __future__ import annotations

import numpy as np

from ..source import GaussianMixtureSpec, per_agent_flip_prob
from .entropy import plugin_conditional_entropy


def fuse_labels(decoded_label_blocks, spec: GaussianMixtureSpec, flip_rates=None, prior=None) -> np.ndarray:
    """Posterior ``P(S = s | s_1, ..., s_L)`` per symbol, shape ``(k, 2)``.

    Each agent's decoded label is modelled as ``S`` passed through an
    independent BSC with flip rate ``flip_rates[i]`` (default: the agent's
    detection error ``Q(h_i / sigma_i)``).
    """
    if spec.M != 2:
        raise ValueError("label fusion is implemented for two labels")
    blocks = [np.asarray(b, dtype=np.int64) for b in decoded_label_blocks]
    if flip_rates is None:
        flip_rates = [per_agent_flip_prob(spec, i) for i in range(len(blocks))]
    if len(flip_rates) != len(blocks):
        raise ValueError("need one flip rate per agent")
    prior = spec.omega if prior is None else np.asarray(prior, dtype=float)
    logp = np.tile(np.log(prior), (blocks[0].size, 1))
    for blk, f in zip(blocks, flip_rates):
        f = float(np.clip(f, 1e-300, 0.5))
        for s in (1, 2):
            logp[:, s - 1] += np.where(blk == s, np.log1p(-f), np.log(f))
    logp -= logp.max(axis=1, keepdims=True)
    post = np.exp(logp)
    return post / post.sum(axis=1, keepdims=True)


def empirical_log_loss(posterior, true_labels) -> float:
    """``(1/k) sum_j -log2 P(s_j | ...)`` against the true labels (1-based)."""
    post = np.asarray(posterior, dtype=float)
    s = np.asarray(true_labels, dtype=np.int64)
    p = post[np.arange(s.size), s - 1]
    return float(-np.mean(np.log2(np.maximum(p, 1e-300))))


def label_equivocation(true_labels, decoded_label_blocks) -> float:
    """Plug-in ``H(S | decoded labels)``; a lower bound on any empirical log-loss."""
    return plugin_conditional_entropy(true_labels, *decoded_label_blocks)
