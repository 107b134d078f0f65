"""Sum-rate outer bound for Gaussian mixture sources and two baseline bounds.

The outer bound minimizes

    H(omega) - beta(Gamma) + 1/2 log2(det K_X / det Gamma)

over diagonal ``Gamma = diag(gamma_1..gamma_L)`` with ``0 < gamma_i <= D_Xi``,
where ``beta = min{D_S, 1 + log2(M-1) p_e(tr Gamma)}`` and ``p_e`` is a
detection-error bound built from a Gaussian concentration term and an MSE
(Chebyshev-type) term traded off through a free parameter ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .mathkit import gm_posterior_entropy, minimize_scalar, q_function
from .source import GaussianMixtureSpec, ensure_valid, semantic_entropy

ALPHA_EPS = 1e-6
REGIONS = ("A", "Bstar", "C")


@dataclass(frozen=True)
class DistortionBudget:
    """Semantic log-loss budget ``D_S`` (bits) and per-agent MSE budgets ``D_X``."""

    D_S: float
    D_X: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "D_S", float(self.D_S))
        object.__setattr__(self, "D_X", tuple(float(d) for d in np.ravel(self.D_X)))


@dataclass(frozen=True)
class OuterBoundResult:
    rate: float
    region: str
    gamma: tuple[float, ...]
    alpha_star: float
    p_e: float
    beta: float


class BudgetError(ValueError):
    """Distortion budget outside the admissible box."""


# -- box handling -----------------------------------------------------------


@lru_cache(maxsize=64)
def conditional_entropy_floor(spec: GaussianMixtureSpec, n: int = 400_000, seed: int = 7):
    """Monte-Carlo ``H(S|X)`` with its standard error, cached per spec."""
    return gm_posterior_entropy(spec, "monte_carlo", n=n, seed=seed, return_stderr=True)


def check_budget(budget: DistortionBudget, spec: GaussianMixtureSpec, strict: bool = False):
    """Raise :class:`BudgetError` unless the budget lies in the admissible box.

    The default box is ``0 <= D_S <= H(omega)``, ``0 < D_Xi <= (K_X)_ii``.
    ``strict`` additionally requires ``D_S >= H(S|X)`` (Monte-Carlo estimate,
    three standard errors of slack).
    """
    ensure_valid(spec)
    if len(budget.D_X) != spec.L:
        raise BudgetError(f"expected {spec.L} observation budgets, got {len(budget.D_X)}")
    H = semantic_entropy(spec)
    if not (-1e-12 <= budget.D_S <= H + 1e-12):
        raise BudgetError(f"D_S={budget.D_S} outside [0, H(omega)={H:.6g}]")
    var = spec.variances
    for i, d in enumerate(budget.D_X):
        if not (0.0 < d <= var[i] * (1 + 1e-12)):
            raise BudgetError(f"D_X[{i}]={d} outside (0, {var[i]:.6g}]")
    if strict:
        est = conditional_entropy_floor(spec)
        if budget.D_S < est.value - 3.0 * est.stderr:
            raise BudgetError(f"D_S={budget.D_S} below H(S|X)~{est.value:.6g}")


# -- detection-error bound --------------------------------------------------


def _alpha_terms(spec: GaussianMixtureSpec):
    L = spec.L
    c = L / math.sqrt(float(np.trace(spec.K)))
    return L, c, spec.half_width()


def alpha_objective(alpha, T, spec: GaussianMixtureSpec):
    """``2 Q(L alpha / sqrt(tr K)) + (h - alpha)^-2 T / L``."""
    L, c, h = _alpha_terms(spec)
    alpha = np.asarray(alpha, dtype=float)
    return 2.0 * q_function(c * alpha) + np.asarray(T) / (L * (h - alpha) ** 2)


def stationarity_residual(alpha: float, T: float, spec: GaussianMixtureSpec) -> float:
    """KKT residual ``c phi(c alpha) - (T/L)(h - alpha)^-3`` of the alpha problem."""
    L, c, h = _alpha_terms(spec)
    phi = math.exp(-0.5 * (c * alpha) ** 2) / math.sqrt(2.0 * math.pi)
    return c * phi - (T / L) * (h - alpha) ** -3


def optimal_alpha(T: float, spec: GaussianMixtureSpec) -> tuple[float, float]:
    """Minimize the alpha objective over ``[eps, h - eps]``.

    Returns ``(alpha_star, p_e_raw)`` where ``p_e_raw`` is the uncapped
    minimum.
    """
    if T < 0:
        raise ValueError("trace T must be non-negative")
    return _optimal_alpha(float(T), spec)


@lru_cache(maxsize=65536)
def _optimal_alpha(T: float, spec: GaussianMixtureSpec) -> tuple[float, float]:
    _, _, h = _alpha_terms(spec)
    f = lambda a: alpha_objective(a, T, spec)  # noqa: E731
    return minimize_scalar(f, ALPHA_EPS, h - ALPHA_EPS, tol=1e-11, vectorized=True)


def error_prob_bound(T: float, spec: GaussianMixtureSpec) -> float:
    """``p_e(T) = min{1, min_alpha objective}``; non-decreasing in ``T``."""
    return min(1.0, optimal_alpha(T, spec)[1])


def error_prob_bound_batch(T, spec: GaussianMixtureSpec, iters: int = 60) -> np.ndarray:
    """Vectorized ``p_e`` via the stationarity condition.

    The alpha objective is convex on ``(0, h)`` and its stationary point
    solves ``c L phi(c alpha) (h - alpha)^3 = T``, whose left side falls
    monotonically in ``alpha``; bisection on it gives ``alpha*`` for every
    entry of ``T`` at once. Independent of :func:`optimal_alpha`.
    """
    T = np.asarray(T, dtype=float)
    L, c, h = _alpha_terms(spec)
    lo = np.full(T.shape, ALPHA_EPS)
    hi = np.full(T.shape, h - ALPHA_EPS)

    def lhs(a):
        return c * L * np.exp(-0.5 * (c * a) ** 2) / math.sqrt(2 * math.pi) * (h - a) ** 3

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        go_right = lhs(mid) > T
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    a = 0.5 * (lo + hi)
    raw = 2.0 * ndtr(-c * a) + T / (L * (h - a) ** 2)
    return np.minimum(raw, 1.0)


@lru_cache(maxsize=256)
def pe_inverse(target: float, spec: GaussianMixtureSpec, tol: float = 1e-9) -> float:
    """Smallest trace ``T`` with ``p_e(T) >= target`` (bisection on ``T``)."""
    if error_prob_bound(0.0, spec) >= target:
        return 0.0
    hi = 1e-3
    while error_prob_bound(hi, spec) < target:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError(f"p_e never reaches {target}")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if error_prob_bound(mid, spec) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def fano_arm(p_e, spec: GaussianMixtureSpec):
    """``1 + log2(M-1) p_e``."""
    return 1.0 + math.log2(spec.M - 1) * p_e


def beta_value(gamma, D_S: float, spec: GaussianMixtureSpec) -> float:
    """``min{D_S, 1 + log2(M-1) p_e(sum gamma)}``."""
    g = np.asarray(gamma, dtype=float)
    var = spec.variances
    if g.shape != (spec.L,) or np.any(g < 0) or np.any(g > var * (1 + 1e-12)):
        raise ValueError(f"gamma must satisfy 0 <= gamma_i <= (K_X)_ii, got {gamma!r}")
    return min(D_S, fano_arm(error_prob_bound(float(g.sum()), spec), spec))


# -- the outer bound --------------------------------------------------------


def _logdet2(K) -> float:
    sign, ld = np.linalg.slogdet(K)
    return ld / math.log(2.0)


def outer_bound_numeric(
    budget: DistortionBudget,
    spec: GaussianMixtureSpec,
    validate: bool = True,
    coarse: int = 64,
    refine: int = 96,
    passes: int = 2,
) -> OuterBoundResult:
    """Grid search of the outer-bound objective over diagonal ``Gamma``.

    A ``coarse`` grid per axis on ``(0, D_Xi]`` is followed by ``passes``
    refinements with ``refine`` points spanning one coarse cell either side
    of the incumbent. Defaults give a final per-axis step below
    ``1e-5 * D_Xi``.
    """
    if validate:
        check_budget(budget, spec)
    D = np.asarray(budget.D_X, dtype=float)
    L = spec.L
    H = semantic_entropy(spec)
    logdetK = _logdet2(spec.K)
    c_fano = math.log2(spec.M - 1)

    def evaluate(axes):
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pe = error_prob_bound_batch(pts.sum(axis=1), spec)
        beta = np.minimum(budget.D_S, 1.0 + c_fano * pe)
        rate = H - beta + 0.5 * (logdetK - np.log2(pts).sum(axis=1))
        j = int(np.argmin(rate))
        return pts[j], rate[j], pe[j], beta[j]

    axes = [np.linspace(D[i] / coarse, D[i], coarse) for i in range(L)]
    steps = D / coarse
    best, rate, pe, beta = evaluate(axes)
    for _ in range(passes):
        axes = []
        for i in range(L):
            lo = max(best[i] - steps[i], steps[i] * 1e-3)
            hi = min(best[i] + steps[i], D[i])
            axes.append(np.linspace(lo, hi, refine))
        steps = np.array([ax[1] - ax[0] for ax in axes])
        best, rate, pe, beta = evaluate(axes)

    T = float(best.sum())
    alpha, _ = optimal_alpha(T, spec)
    region = classify_region(budget, spec, validate=False)
    return OuterBoundResult(
        rate=float(rate),
        region=region,
        gamma=tuple(float(g) for g in best),
        alpha_star=alpha,
        p_e=float(pe),
        beta=float(beta),
    )


def classify_region(budget: DistortionBudget, spec: GaussianMixtureSpec, validate: bool = True) -> str:
    """Label the budget ``A``, ``C`` or ``Bstar`` (ties resolve in that order).

    ``A``: ``D_S <= 1+log2(M-1)`` and ``D_S <= 1 + log2(M-1) p_e(sum D_X)``
    (semantic constraint binds). ``C``: ``D_S >= 1+log2(M-1)`` and
    ``p_e(sum D_X) >= 1``. Everything else, where the Fano arm binds
    with ``p_e < 1`` or below ``D_S``, is ``Bstar``.
    """
    if validate:
        check_budget(budget, spec)
    thr = fano_arm(1.0, spec)
    pe = error_prob_bound(sum(budget.D_X), spec)
    if budget.D_S <= thr and budget.D_S <= fano_arm(pe, spec):
        return "A"
    if budget.D_S >= thr and pe >= 1.0:
        return "C"
    return "Bstar"


def outer_bound_closed(budget: DistortionBudget, spec: GaussianMixtureSpec, validate: bool = True) -> OuterBoundResult:
    """Region-wise closed form of the outer bound."""
    if validate:
        check_budget(budget, spec)
    region = classify_region(budget, spec, validate=False)
    D = np.asarray(budget.D_X, dtype=float)
    L = spec.L
    H = semantic_entropy(spec)
    logdetK = _logdet2(spec.K)
    gauss = 0.5 * (logdetK - float(np.log2(D).sum()))
    T = float(D.sum())
    alpha, raw = optimal_alpha(T, spec)
    pe = min(1.0, raw)
    gamma = tuple(float(d) for d in D)

    if region == "A":
        beta = budget.D_S
        rate = H - beta + gauss
    elif region == "Bstar":
        beta = fano_arm(pe, spec)
        rate = H - beta + gauss
    else:
        beta = fano_arm(1.0, spec)
        rate = H - beta + gauss
        # equal-split candidate on the p_e = 1 trace; only admissible if it fits the box
        t_one = pe_inverse(1.0, spec)
        if t_one > 0 and np.all(t_one / L <= D):
            alt = H - beta + 0.5 * (logdetK - L * math.log2(t_one / L))
            if alt < rate:
                rate = alt
                gamma = (t_one / L,) * L
                alpha, raw = optimal_alpha(t_one, spec)
                pe = min(1.0, raw)
    return OuterBoundResult(
        rate=float(rate), region=region, gamma=gamma, alpha_star=alpha, p_e=pe, beta=float(beta)
    )


def outer_bound_closed_grid(D_S, D_X, spec: GaussianMixtureSpec) -> np.ndarray:
    """Vectorized :func:`outer_bound_closed` rate over broadcast budgets.

    ``D_X`` is a sequence of ``L`` arrays broadcasting against ``D_S``.
    Outside region C the closed form is ``H - min{D_S, Fano arm} + gauss``
    with ``p_e`` from the batched stationarity solve; C cells fall back to
    the scalar routine. Budgets are not box-checked.
    """
    D_S = np.asarray(D_S, dtype=float)
    parts = np.broadcast_arrays(D_S, *[np.asarray(d, dtype=float) for d in D_X])
    D_S, D = parts[0], np.stack(parts[1:])
    if D.shape[0] != spec.L:
        raise BudgetError(f"expected {spec.L} observation budgets")
    T = D.sum(axis=0)
    uniq, inv = np.unique(T, return_inverse=True)
    pe = error_prob_bound_batch(uniq, spec)[inv].reshape(T.shape)
    gauss = 0.5 * (_logdet2(spec.K) - np.log2(D).sum(axis=0))
    thr = fano_arm(1.0, spec)
    rate = np.array(semantic_entropy(spec) - np.minimum(D_S, fano_arm(pe, spec)) + gauss, dtype=float)
    in_c = (D_S >= thr) & (pe >= 1.0) & ~((D_S <= thr) & (D_S <= fano_arm(pe, spec)))
    for j in map(tuple, np.argwhere(in_c)):
        b = DistortionBudget(float(D_S[j]), tuple(float(D[(i,) + j]) for i in range(spec.L)))
        rate[j] = outer_bound_closed(b, spec, validate=False).rate
    return rate


# -- baseline bounds --------------------------------------------------------


def _check_dx(D_X, spec):
    D = np.asarray(D_X, dtype=float)
    var = spec.variances
    if D.shape != (spec.L,):
        raise BudgetError(f"expected {spec.L} observation budgets")
    if np.any(D <= 0) or np.any(D > var * (1 + 1e-12)):
        raise BudgetError(f"D_X={tuple(D)} outside (0, sigma^2]")
    return D, var


def conditional_rd_bound(D_X, spec: GaussianMixtureSpec) -> float:
    """``sum_i 1/2 log2(sigma_i^2 / D_Xi)`` (label known at both ends)."""
    D, var = _check_dx(D_X, spec)
    return float(0.5 * np.log2(var / D).sum())


@lru_cache(maxsize=256)
def _agent_equivocation(spec: GaussianMixtureSpec, i: int) -> float:
    return gm_posterior_entropy(spec.marginal(i), "quadrature")


def shannon_lower_bound(D_X, spec: GaussianMixtureSpec) -> float:
    """Per-agent Shannon lower bound, summed over agents.

    ``sum_i [H(omega) - H(S|X_i) + 1/2 log2(sigma_i^2 / D_Xi)]`` with the
    equivocation ``H(S|X_i)`` computed by quadrature.
    """
    D, var = _check_dx(D_X, spec)
    H = semantic_entropy(spec)
    total = 0.0
    for i in range(spec.L):
        total += H - _agent_equivocation(spec, i) + 0.5 * math.log2(var[i] / D[i])
    return float(total)
