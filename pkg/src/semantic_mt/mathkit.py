"""Scalar information-theoretic and probabilistic kernels.

All entropies are in bits. ``0 log 0`` is taken as 0.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, logsumexp

_LN2 = math.log(2.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_prob(p, name="p"):
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return arr


def _xlog2x(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def binary_entropy(p):
    """Binary entropy ``H_2(p)`` in bits; accepts scalars or arrays."""
    arr = _check_prob(p)
    h = -_xlog2x(arr) - _xlog2x(1.0 - arr)
    return float(h) if h.ndim == 0 else h


def binary_convolve(p, q):
    """Crossover probability of two cascaded BSCs: ``p(1-q) + q(1-p)``."""
    a = _check_prob(p, "p")
    b = _check_prob(q, "q")
    out = a * (1.0 - b) + b * (1.0 - a)
    return float(out) if out.ndim == 0 else out


def entropy(pmf) -> float:
    """Shannon entropy of a probability vector, in bits."""
    pmf = np.asarray(pmf, dtype=float)
    return float(-_xlog2x(pmf).sum())


def q_function(x):
    """Standard Gaussian tail ``P{Z >= x}``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def minimize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    grid: int = 1024,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Minimize ``f`` on ``[lo, hi]``: coarse grid scan, then golden section.

    The grid (``grid`` points including both ends) picks the best sample;
    golden-section search then runs on the bracket formed by its two
    neighbours. For unimodal ``f`` the result is the global minimizer to
    within ``tol``. With ``vectorized`` the grid is evaluated in one call
    ``f(array)``.

    Returns
    -------
    (argmin, min)
    """
    if not lo < hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = max(int(grid), 1024)
    xs = np.linspace(lo, hi, grid)
    vals = np.asarray(f(xs), dtype=float) if vectorized else np.array([f(x) for x in xs])
    j = int(np.argmin(vals))
    best_x, best_v = float(xs[j]), float(vals[j])
    a = float(xs[max(j - 1, 0)])
    b = float(xs[min(j + 1, grid - 1)])

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(f(c)), float(f(d))
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(f(d))
    for x, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_x, best_v = x, v
    # the bracket may have collapsed onto an endpoint
    for x in (a, b):
        v = float(f(x))
        if v < best_v:
            best_x, best_v = x, v
    return best_x, float(best_v)


class EntropyEstimate(NamedTuple):
    value: float
    stderr: float


def _posterior_entropies(x, means, cov_inv, log_w):
    d = x[:, None, :] - means[None, :, :]
    q = -0.5 * np.einsum("nmi,ij,nmj->nm", d, cov_inv, d) + log_w
    lp = q - logsumexp(q, axis=1, keepdims=True)
    ent = -(np.exp(lp) * lp).sum(axis=1) / _LN2
    return np.clip(ent, 0.0, None)


def gm_posterior_entropy(
    spec,
    method: str = "monte_carlo",
    n: int = 1_000_000,
    seed: int = 0,
    return_stderr: bool = False,
    nodes: int = 2048,
):
    """Estimate ``H(S|X)`` for a Gaussian mixture source, in bits.

    ``monte_carlo`` draws ``n`` pairs ``(S, X)`` from a generator seeded with
    ``seed`` and averages the posterior entropy; ``quadrature`` integrates
    over ``+-8`` standard deviations with at least 2048 Gauss-Legendre
    ``nodes`` and is only available for a single agent.

    With ``return_stderr`` an :class:`EntropyEstimate` is returned; the
    quadrature standard error is reported as 0.
    """
    means = np.asarray(spec.means, dtype=float)
    cov = np.asarray(spec.cov, dtype=float)
    w = np.asarray(spec.weights, dtype=float)
    log_w = np.log(w)
    L = cov.shape[0]

    if method == "quadrature":
        if L != 1:
            raise ValueError("quadrature is only supported for a single agent (L = 1)")
        sd = math.sqrt(cov[0, 0])
        lo = means[:, 0].min() - 8.0 * sd
        hi = means[:, 0].max() + 8.0 * sd
        t, weights = leggauss(max(2048, int(nodes)))
        x = 0.5 * (t + 1.0) * (hi - lo) + lo
        wq = 0.5 * (hi - lo) * weights
        q = -0.5 * (x[:, None] - means[None, :, 0]) ** 2 / cov[0, 0] + log_w
        dens = np.exp(logsumexp(q, axis=1)) / math.sqrt(2.0 * math.pi * cov[0, 0])
        ent = _posterior_entropies(x[:, None], means, np.linalg.inv(cov), log_w)
        val = float(np.sum(wq * dens * ent))
        return EntropyEstimate(val, 0.0) if return_stderr else val

    if method != "monte_carlo":
        raise ValueError(f"unsupported method {method!r}")
    if n < 10_000:
        raise ValueError("monte_carlo needs n >= 10^4")

    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(cov)
    cov_inv = np.linalg.inv(cov)
    total = 0.0
    total_sq = 0.0
    chunk = 200_000
    done = 0
    while done < n:
        m = min(chunk, n - done)
        labels = rng.choice(len(w), size=m, p=w)
        x = means[labels] + rng.standard_normal((m, L)) @ chol.T
        ent = _posterior_entropies(x, means, cov_inv, log_w)
        total += ent.sum()
        total_sq += np.square(ent).sum()
        done += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    se = math.sqrt(var / n)
    return EntropyEstimate(float(mean), se) if return_stderr else float(mean)
