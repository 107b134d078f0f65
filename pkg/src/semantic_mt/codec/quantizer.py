"""Subtractive-dithered uniform scalar quantizer with label-dependent offsets.

Each agent removes the mean of the component named by its label, adds a
uniform dither shared with the decoder through a seed, and rounds to a
multiple of ``step``. Indices are clipped to the signed ``q``-bit range.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

_SQRT2PI = math.sqrt(2.0 * math.pi)


def dither_sequence(k: int, step: float, seed, scale: float = 1.0) -> np.ndarray:
    """Uniform dither on ``[-scale*step/2, scale*step/2)``, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    return (rng.random(k) - 0.5) * (step * scale)


def index_range(q: int) -> tuple[int, int]:
    if q < 1:
        raise ValueError("q must be >= 1")
    return -(2 ** (q - 1)), 2 ** (q - 1) - 1


def _centers(label_block, centers):
    labels = np.asarray(label_block, dtype=np.int64)
    return np.asarray(centers, dtype=float)[labels - 1]


def dithered_quantize(
    x_block,
    label_block,
    q: int,
    step: float,
    dither_seed,
    centers=(-1.0, 1.0),
    dither_scale: float = 1.0,
    return_clipped: bool = False,
):
    """Quantize ``x - centers[label] + dither`` to signed integer indices.

    ``centers`` lists the component mean for labels 1..M of this agent. With
    ``return_clipped`` a boolean mask of clipped samples is returned too.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x_block, dtype=float)
    u = dither_sequence(x.size, step, dither_seed, dither_scale)
    raw = np.round((x - _centers(label_block, centers) + u) / step)
    lo, hi = index_range(q)
    idx = np.clip(raw, lo, hi).astype(np.int64)
    if return_clipped:
        return idx, raw != idx
    return idx


def _truncnorm_mean(a, b):
    """Mean of a standard normal restricted to ``[a, b]``, stable in both tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    flip = a > 0  # work in the left tail where ndtr keeps precision
    a2 = np.where(flip, -b, a)
    b2 = np.where(flip, -a, b)
    Z = ndtr(b2) - ndtr(a2)
    num = (np.exp(-0.5 * a2 * a2) - np.exp(-0.5 * b2 * b2)) / _SQRT2PI
    with np.errstate(divide="ignore", invalid="ignore"):
        m = num / Z
    # cells far out in a tail: the mass sits at the edge nearest the origin
    edge = np.where(np.abs(a2) < np.abs(b2), a2, b2)
    m = np.where(Z > 1e-300, m, edge)
    m = np.clip(m, a2, b2)
    return np.where(flip, -m, m)


def dequantize(
    index_block,
    decoded_labels,
    q: int,
    step: float,
    dither_seed,
    centers=(-1.0, 1.0),
    dither_scale: float = 1.0,
    prior_var: float | None = None,
):
    """Reconstruct observations from indices and decoded labels.

    Without ``prior_var`` the reconstruction is ``index*step - dither + center``.
    With ``prior_var`` it is the conditional mean of a zero-mean Gaussian
    residual (variance ``prior_var``) over the known quantizer cell, which
    lowers the MSE at coarse steps; clipped end cells extend to infinity.
    """
    idx = np.asarray(index_block, dtype=np.int64)
    u = dither_sequence(idx.size, step, dither_seed, dither_scale)
    c = _centers(decoded_labels, centers)
    if prior_var is None:
        return idx * step - u + c
    lo, hi = index_range(q)
    sd = math.sqrt(prior_var)
    left = np.where(idx == lo, -np.inf, (idx - 0.5) * step - u)
    right = np.where(idx == hi, np.inf, (idx + 0.5) * step - u)
    return sd * _truncnorm_mean(left / sd, right / sd) + c


def bits_for_step(step: float, var: float, clip_prob: float = 1e-4, offset: float = 0.0) -> int:
    """Smallest ``q`` whose index range keeps Gaussian residual clipping below ``clip_prob``.

    ``offset`` widens the range for residuals centred away from zero (a
    label that disagrees with the side of the observation).
    """
    z = float(norm.isf(0.5 * clip_prob))
    reach = (abs(offset) + z * math.sqrt(var)) / step + 1.0
    return max(1, 1 + int(math.ceil(math.log2(reach))))


@lru_cache(maxsize=1024)
def expected_mse(step: float, var: float, n_dither: int = 256) -> float:
    """Expected MSE of conditional-mean reconstruction for a Gaussian residual.

    Averages over the dither phase (midpoint rule) and sums the within-cell
    variance ``P(cell) Var(x | cell)`` over all cells; no clipping.
    """
    sd = math.sqrt(var)
    u = (np.arange(n_dither) + 0.5) / n_dither - 0.5
    span = int(math.ceil(12.0 * sd / step)) + 2
    i = np.arange(-span, span + 1)
    edges_lo = ((i[None, :] - 0.5) - u[:, None]) * step / sd
    edges_hi = edges_lo + step / sd
    P = ndtr(edges_hi) - ndtr(edges_lo)
    m = _truncnorm_mean(edges_lo, edges_hi)
    # E[x^2] - E[(E[x|cell])^2]
    return float(var * (1.0 - np.mean(np.sum(P * m * m, axis=1))))


def step_for_distortion(D: float, var: float, mmse: bool = True) -> float:
    """Quantizer step that meets MSE ``D`` for a Gaussian residual of variance ``var``.

    With plain reconstruction this is ``sqrt(12 D)``; with conditional-mean
    reconstruction the step is larger and found by bisection on
    :func:`expected_mse`, which is increasing in the step.
    """
    if D <= 0:
        raise ValueError("D must be positive")
    if not mmse:
        return math.sqrt(12.0 * D)
    if D >= var * (1 - 1e-6):
        return 40.0 * math.sqrt(var)
    lo, hi = 1e-6, 40.0 * math.sqrt(var)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if expected_mse(mid, var) < D:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
