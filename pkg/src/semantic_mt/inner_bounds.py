"""Achievable sum-rate of the detect-and-compress scheme (two agents, binary label).

Each agent clusters its observation into a label ``S_i`` (a BSC(``p_i``)
view of ``S``), describes the label through a BSC(``d_i``) test channel,
and quantizes its observation given the label. The sum rate is

    1 + H2(P * D) - H2(d_1) - H2(d_2) + 1/2 sum_i log2(sigma_i^2 / D_Xi)

with ``P = p_1 * p_2`` and ``D = d_1 * d_2`` (binary convolution), subject to
the decoder's residual label uncertainty ``H(S | C_1, C_2) <= D_S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathkit import binary_convolve, binary_entropy, minimize_scalar
from .outer_bounds import BudgetError, DistortionBudget
from .source import GaussianMixtureSpec, ensure_valid, per_agent_flip_prob


class InfeasibleBudgetError(ValueError):
    """No test-channel pair meets the semantic budget."""


@dataclass(frozen=True)
class InnerBoundResult:
    rate: float
    d: tuple[float, float]
    constraint_slack: float
    per_agent: tuple[tuple[float, float], tuple[float, float]]


def _h2(p):
    # unchecked vectorized H2 for internal grids
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.nan_to_num(out, nan=0.0)


def _conv(a, b):
    return a * (1 - b) + b * (1 - a)


def semantic_mismatch(d1, d2, p1, p2):
    """``H2(p1*d1) + H2(p2*d2) - H2((p1*p2)*(d1*d2))``, i.e. ``H(S|C1,C2)``."""
    for name, v in (("d1", d1), ("d2", d2), ("p1", p1), ("p2", p2)):
        arr = np.asarray(v, dtype=float)
        if np.any(arr < 0) or np.any(arr > 0.5):
            raise ValueError(f"{name} must lie in [0, 1/2]")
    P = binary_convolve(p1, p2)
    D = binary_convolve(d1, d2)
    return (
        binary_entropy(binary_convolve(p1, d1))
        + binary_entropy(binary_convolve(p2, d2))
        - binary_entropy(binary_convolve(P, D))
    )


def _mismatch(d1, d2, p1, p2):
    return _h2(_conv(p1, d1)) + _h2(_conv(p2, d2)) - _h2(_conv(_conv(p1, p2), _conv(d1, d2)))


def _label_rate(d1, d2, p1, p2):
    return 1.0 + _h2(_conv(_conv(p1, p2), _conv(d1, d2))) - _h2(d1) - _h2(d2)


def check_inner_spec(spec: GaussianMixtureSpec) -> tuple[float, float]:
    """Return ``(p_1, p_2)``; raise if the source is not the symmetric binary two-agent case."""
    ensure_valid(spec)
    if spec.L != 2 or spec.M != 2:
        raise ValueError("inner bound is defined for L = 2 agents and M = 2 labels only")
    if abs(spec.weights[0] - 0.5) > 1e-12:
        raise ValueError("inner bound requires uniform label weights")
    return per_agent_flip_prob(spec, 0), per_agent_flip_prob(spec, 1)


def quantizer_rates(D_X, spec: GaussianMixtureSpec) -> tuple[float, float]:
    var = spec.variances
    D = np.asarray(D_X, dtype=float)
    if D.shape != (2,) or np.any(D <= 0) or np.any(D > var * (1 + 1e-12)):
        raise BudgetError(f"D_X={tuple(D)} outside (0, sigma^2]")
    return tuple(float(max(0.0, 0.5 * math.log2(var[i] / D[i]))) for i in range(2))


def default_d_grid(n: int = 512) -> np.ndarray:
    """Grid on ``(0, 1/2]`` that is quadratically denser near 0."""
    t = np.arange(1, n + 1) / n
    return 0.5 * t * t


def _max_feasible(d1, p1, p2, D_S, iters=48):
    """Largest ``d_2`` in ``[0, 1/2]`` keeping the mismatch within ``D_S``, per ``d_1``.

    The mismatch grows with either test-channel flip probability, so the
    feasible set in ``d_2`` is an interval starting at 0. Entries where even
    ``d_2 = 0`` is infeasible come back as NaN. Vectorized over ``d1``.
    """
    d1 = np.asarray(d1, dtype=float)
    lo = np.zeros_like(d1)
    hi = np.full_like(d1, 0.5)
    ok0 = _mismatch(d1, lo, p1, p2) <= D_S
    ok_half = _mismatch(d1, hi, p1, p2) <= D_S
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        good = _mismatch(d1, mid, p1, p2) <= D_S
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    out = np.where(ok_half, 0.5, lo)
    return np.where(ok0, out, np.nan)


def _optimize_labels(D_S, p1, p2, grid_n=512, tol=1e-6):
    grid = default_d_grid(grid_n)
    d1, d2 = np.meshgrid(grid, grid, indexing="ij")
    feas = _mismatch(d1, d2, p1, p2) <= D_S
    # d = 0 on either axis is handled by continuity
    zero_ok = [_mismatch(0.0, grid, p1, p2) <= D_S, _mismatch(grid, 0.0, p1, p2) <= D_S]
    obj = np.where(feas, _label_rate(d1, d2, p1, p2), np.inf)
    cand = []
    if feas.any():
        j = np.unravel_index(np.argmin(obj), obj.shape)
        cand.append((float(obj[j]), float(grid[j[0]]), float(grid[j[1]])))
    if zero_ok[0].any():
        v = np.where(zero_ok[0], _label_rate(0.0, grid, p1, p2), np.inf)
        j = int(np.argmin(v))
        cand.append((float(v[j]), 0.0, float(grid[j])))
    if zero_ok[1].any():
        v = np.where(zero_ok[1], _label_rate(grid, 0.0, p1, p2), np.inf)
        j = int(np.argmin(v))
        cand.append((float(v[j]), float(grid[j]), 0.0))
    if float(_mismatch(0.0, 0.0, p1, p2)) <= D_S:
        cand.append((float(_label_rate(0.0, 0.0, p1, p2)), 0.0, 0.0))
    if not cand:
        raise InfeasibleBudgetError(
            f"D_S={D_S} below the scheme floor H(S|S1,S2)={float(_mismatch(0.0, 0.0, p1, p2)):.6g}"
        )
    best, b1, b2 = min(cand)

    # Local refinement: the rate falls and the mismatch rises in each d_i, so
    # for a fixed d_1 the best d_2 sits on the constraint boundary (or at 1/2).
    def along(d1_val):
        d2_val = _max_feasible(d1_val, p1, p2, D_S)
        v = _label_rate(d1_val, np.nan_to_num(d2_val), p1, p2)
        return np.where(np.isnan(d2_val), np.inf, v)

    # boundary search in t = sqrt(2 d_1), dense near d_1 = 0
    t, v = minimize_scalar(lambda t: along(0.5 * t * t), 0.0, 1.0, tol=tol * 1e-3,
                           grid=4 * grid_n, vectorized=True)
    if v < best:
        x = 0.5 * t * t
        best, b1, b2 = float(v), x, float(_max_feasible(x, p1, p2, D_S))
    return best, b1, b2


def inner_bound(budget: DistortionBudget, spec: GaussianMixtureSpec, grid_n: int = 512) -> InnerBoundResult:
    """Minimize the sum rate over test-channel flips ``(d_1, d_2)``.

    A ``grid_n x grid_n`` feasibility-masked grid on ``(0, 1/2]^2`` locates
    the optimum, which is then polished along the constraint boundary.
    The reported rate is the limit of vanishing coding overhead.
    """
    p1, p2 = check_inner_spec(spec)
    if budget.D_S < 0.0:
        raise BudgetError(f"D_S={budget.D_S} must be non-negative")
    r12, r22 = quantizer_rates(budget.D_X, spec)
    label, d1, d2 = _optimize_labels(budget.D_S, p1, p2, grid_n=grid_n)
    slack = budget.D_S - float(_mismatch(d1, d2, p1, p2))
    P = _conv(p1, p2)
    D = _conv(d1, d2)
    r11 = 1.0 - float(_h2(d1))
    r21 = float(_h2(_conv(P, D)) - _h2(d2))
    return InnerBoundResult(
        rate=float(label + r12 + r22),
        d=(float(d1), float(d2)),
        constraint_slack=float(slack),
        per_agent=((r11, r12), (r21, r22)),
    )


def symmetric_test_channel(D_S: float, spec: GaussianMixtureSpec, iters: int = 60) -> float:
    """Flip probability ``d`` with ``H(S|C_1,C_2) = D_S`` when both agents use ``d``.

    A feasible, generally suboptimal design; returns 1/2 when the budget
    exceeds the mismatch at ``d = 1/2``.
    """
    p1, p2 = check_inner_spec(spec)
    if float(_mismatch(0.0, 0.0, p1, p2)) > D_S:
        raise InfeasibleBudgetError(f"D_S={D_S} below the scheme floor")
    lo, hi = 0.0, 0.5
    if float(_mismatch(hi, hi, p1, p2)) <= D_S:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if float(_mismatch(mid, mid, p1, p2)) <= D_S:
            lo = mid
        else:
            hi = mid
    return lo


def brute_force_label_rate(D_S: float, spec: GaussianMixtureSpec, n: int = 2048) -> float:
    """Exhaustive minimum of the label rate on an ``n x n`` grid of ``(0, 1/2]^2``.

    The grid is quadratically spaced (``d = t^2 / 2`` with ``t`` uniform) so
    that small flip probabilities near the scheme floor are resolved. Used
    as an independent check of :func:`inner_bound`.
    """
    p1, p2 = check_inner_spec(spec)
    grid = 0.5 * (np.arange(1, n + 1) / n) ** 2
    best = math.inf
    for start in range(0, n, 256):
        d1 = grid[start : start + 256, None]
        feas = _mismatch(d1, grid[None, :], p1, p2) <= D_S
        if feas.any():
            v = np.where(feas, _label_rate(d1, grid[None, :], p1, p2), np.inf)
            best = min(best, float(v.min()))
    if not math.isfinite(best):
        raise InfeasibleBudgetError("no feasible grid point")
    return best


def sw_corners(d, p1: float, p2: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Label-rate corner points of the two-user Slepian-Wolf pentagon.

    ``(I(S_1; C_1), I(S_2; C_2 | C_1))`` and the mirror image, where ``C_i``
    is the agent-``i`` label seen through its ``d_i`` test channel.
    """
    d1, d2 = d
    joint = float(_h2(_conv(_conv(p1, p2), _conv(d1, d2))))
    h1, h2 = float(_h2(d1)), float(_h2(d2))
    return (1.0 - h1, joint - h2), (joint - h1, 1.0 - h2)


def rate_allocation(budget: DistortionBudget, spec: GaussianMixtureSpec, sweep_points: int = 21):
    """Per-agent rate pairs ``(R_1, R_2)`` along the optimal dominant face.

    Quantizer rates are fixed per agent; the label rates move along the
    time-sharing segment between the Slepian-Wolf corners at the optimal
    ``(d_1, d_2)``. When ``p_1 = p_2`` the swapped optimum ``(d_2, d_1)`` is
    equally good and its corners are included, so the face is the union of
    both segments. Points are ordered by increasing ``R_1``.
    """
    if sweep_points < 2:
        raise ValueError("need at least two sweep points")
    res = inner_bound(budget, spec)
    p1, p2 = check_inner_spec(spec)
    r12, r22 = res.per_agent[0][1], res.per_agent[1][1]
    corners = list(sw_corners(res.d, p1, p2))
    if abs(p1 - p2) < 1e-15:
        corners += list(sw_corners(res.d[::-1], p1, p2))
    r1 = [c[0] for c in corners]
    total = res.rate - r12 - r22
    out = []
    for x in np.linspace(min(r1), max(r1), sweep_points):
        out.append((float(x + r12), float(total - x + r22)))
    return out
