"""Syndrome-based Slepian-Wolf coding of binary label streams.

The encoder sends ``s = H x``; the decoder runs sum-product belief
propagation with priors from correlated side information, flipping the
sign of each check's outgoing messages when its syndrome bit is 1.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..mathkit import binary_entropy
from .ldpc import LdpcCode

_LLR_CLIP = 40.0
_T_FLOOR = 1e-15


class DecodeInfo(NamedTuple):
    bits: np.ndarray
    iterations: int
    converged: bool


def _as_bits(x, n, name):
    x = np.asarray(x)
    if x.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {x.shape}")
    return (x != 0).astype(np.uint8)


def sw_encode(label_bits, code: LdpcCode) -> np.ndarray:
    """Syndrome ``H x`` over GF(2), as a uint8 array of length ``m``."""
    x = _as_bits(label_bits, code.n, "label_bits")
    return (code.parity @ x.astype(np.int64) % 2).astype(np.uint8)


def sw_decode(
    syndrome,
    side_info_bits,
    crossover: float,
    code: LdpcCode,
    max_iters: int = 100,
    return_info: bool = False,
):
    """Recover ``x`` from its syndrome and side information ``y = x xor BSC(crossover)``.

    Sum-product decoding in the LLR domain. A check node ``c`` sends
    ``2 atanh((-1)^{s_c} prod tanh(m/2))`` over the other incoming messages.
    Decoding stops once the hard decision reproduces the syndrome.
    """
    s = _as_bits(syndrome, code.m, "syndrome")
    y = _as_bits(side_info_bits, code.n, "side_info_bits")
    if not 0.0 <= crossover < 0.5:
        raise ValueError("crossover must lie in [0, 1/2)")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    def done(x):
        return np.array_equal(sw_encode(x, code), s)

    if done(y):
        return DecodeInfo(y, 0, True) if return_info else y

    ec, ev = code.edge_check, code.edge_var
    starts = np.flatnonzero(np.r_[True, ec[1:] != ec[:-1]])
    # checks without edges cannot occur (every row gets >= 1 edge in PEG)
    chk_sign = 1.0 - 2.0 * s.astype(float)

    if crossover <= 0.0:
        prior = np.full(code.n, _LLR_CLIP)
    else:
        prior = np.full(code.n, min(np.log((1 - crossover) / crossover), _LLR_CLIP))
    prior = prior * (1.0 - 2.0 * y)

    m_cv = np.zeros(ec.size)
    total = prior.copy()
    x = y
    for it in range(1, max_iters + 1):
        m_vc = total[ev] - m_cv
        t = np.tanh(0.5 * np.clip(m_vc, -_LLR_CLIP, _LLR_CLIP))
        neg = t < 0
        logabs = np.log(np.maximum(np.abs(t), _T_FLOOR))
        sum_log = np.add.reduceat(logabs, starts)
        par = np.add.reduceat(neg.astype(np.int64), starts) % 2
        ext_log = sum_log[ec] - logabs
        ext_neg = (par[ec] + neg) % 2
        mag = np.exp(ext_log)
        prod = np.where(ext_neg == 1, -mag, mag) * chk_sign[ec]
        prod = np.clip(prod, -1 + 1e-15, 1 - 1e-15)
        m_cv = np.clip(2.0 * np.arctanh(prod), -_LLR_CLIP, _LLR_CLIP)
        total = prior + np.bincount(ev, weights=m_cv, minlength=code.n)
        x = (total < 0).astype(np.uint8)
        if done(x):
            return DecodeInfo(x, it, True) if return_info else x
    return DecodeInfo(x, max_iters, False) if return_info else x


def design_syndrome_rate(crossover: float, margin: float) -> float:
    """``H2(crossover) + margin``, the syndrome rate used for a given correlation."""
    return binary_entropy(crossover) + margin
