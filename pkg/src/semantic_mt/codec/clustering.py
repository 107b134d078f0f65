"""Per-agent binary label detection (likelihood-ratio threshold)."""

from __future__ import annotations

import math

import numpy as np

from ..source import GaussianMixtureSpec


def np_cluster(x_block, spec: GaussianMixtureSpec, agent: int, threshold: float = 1.0) -> np.ndarray:
    """Label each sample 2 if ``log p(x|S=2) - log p(x|S=1) >= log threshold``, else 1.

    With a common variance the log-likelihood ratio is linear,
    ``(mu_2 - mu_1)(x - (mu_1 + mu_2)/2) / sigma^2``. ``threshold = 1`` is the
    MAP rule for equal priors; a sample exactly on the boundary goes to
    label 2.

    Parameters
    ----------
    x_block : observations of agent ``agent`` (0-based).
    spec : binary (``M = 2``) source description.
    threshold : likelihood-ratio threshold ``t > 0``.
    """
    if spec.M != 2:
        raise ValueError("np_cluster handles two labels only")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    x = np.asarray(x_block, dtype=float)
    mu1, mu2 = spec.means[0, agent], spec.means[1, agent]
    var = spec.cov[agent][agent]
    llr = (mu2 - mu1) * (x - 0.5 * (mu1 + mu2)) / var
    return np.where(llr >= math.log(threshold), 2, 1).astype(np.int64)
