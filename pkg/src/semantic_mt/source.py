"""Gaussian mixture source model.

A semantic label ``S`` in ``{1..M}`` is drawn with probabilities ``weights``;
given ``S = l`` the ``L`` agents observe ``X ~ N(mean_l, K_X)`` with a common
covariance ``K_X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .mathkit import entropy, q_function

MEAN_LAYOUTS = ("unit_ladder", "centered_pm1", "explicit")


def _as_tuple2d(a) -> tuple[tuple[float, ...], ...]:
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    return tuple(tuple(float(v) for v in row) for row in arr)


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Immutable, hashable description of the mixture source.

    ``cov`` may be given as an ``L x L`` matrix or a length-``L`` diagonal.
    ``mean_layout`` selects the component means: ``unit_ladder`` puts
    component ``l`` at ``l * 1`` (``l = 1..M``), ``centered_pm1`` (``M = 2``)
    at ``-1`` and ``+1``, and ``explicit`` takes an ``M x L`` ``means_matrix``.
    """

    weights: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]
    mean_layout: str = "unit_ladder"
    means_matrix: tuple[tuple[float, ...], ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in np.ravel(self.weights)))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 1:
            cov = np.diag(cov)
        object.__setattr__(self, "cov", _as_tuple2d(cov))
        if self.means_matrix is not None:
            object.__setattr__(self, "means_matrix", _as_tuple2d(self.means_matrix))

    @property
    def M(self) -> int:
        return len(self.weights)

    @property
    def L(self) -> int:
        return len(self.cov)

    @property
    def K(self) -> np.ndarray:
        return np.array(self.cov, dtype=float)

    @property
    def omega(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @cached_property
    def means(self) -> np.ndarray:
        """``M x L`` matrix of component means."""
        if self.mean_layout == "unit_ladder":
            return np.outer(np.arange(1, self.M + 1, dtype=float), np.ones(self.L))
        if self.mean_layout == "centered_pm1":
            return np.outer(np.array([-1.0, 1.0])[: self.M], np.ones(self.L))
        if self.mean_layout == "explicit":
            if self.means_matrix is None:
                raise ValueError("explicit mean layout needs means_matrix")
            return np.array(self.means_matrix, dtype=float)
        raise ValueError(f"unknown mean layout {self.mean_layout!r}")

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.K).copy()

    def half_width(self) -> float:
        """Half of the smallest gap between component means of the agent-average.

        This is the decision half-width ``h`` of the average-statistic
        detector: 1/2 for ``unit_ladder``, 1 for ``centered_pm1``.
        """
        centers = np.sort(self.means.mean(axis=1))
        if len(centers) < 2:
            raise ValueError("need at least two components")
        return 0.5 * float(np.min(np.diff(centers)))

    def marginal(self, i: int) -> "GaussianMixtureSpec":
        """Single-agent spec for agent ``i`` (0-based)."""
        return GaussianMixtureSpec(
            weights=self.weights,
            cov=((self.cov[i][i],),),
            mean_layout="explicit",
            means_matrix=self.means[:, [i]],
        )

    def with_cov(self, cov) -> "GaussianMixtureSpec":
        return GaussianMixtureSpec(self.weights, cov, self.mean_layout, self.means_matrix)

    def to_dict(self) -> dict:
        d = {
            "weights": list(self.weights),
            "cov": [list(r) for r in self.cov],
            "mean_layout": self.mean_layout,
        }
        if self.means_matrix is not None:
            d["means"] = [list(r) for r in self.means_matrix]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixtureSpec":
        return cls(
            weights=d["weights"],
            cov=d["cov"],
            mean_layout=d.get("mean_layout", "unit_ladder"),
            means_matrix=d.get("means"),
        )


@dataclass(frozen=True)
class SampleBlock:
    labels: np.ndarray  # length k, values in 1..M
    observations: np.ndarray  # k x L
    seed: int


def example1_spec() -> GaussianMixtureSpec:
    """Three-component, two-agent toy source (weights 0.5/0.2/0.3)."""
    return GaussianMixtureSpec(weights=(0.5, 0.2, 0.3), cov=(0.75, 0.5))


def binary_symmetric_spec(sigma2: float = 0.22, L: int = 2) -> GaussianMixtureSpec:
    """Uniform binary label, ``K_X = sigma2 * I``, means at -1 and +1."""
    return GaussianMixtureSpec(
        weights=(0.5, 0.5), cov=(sigma2,) * L, mean_layout="centered_pm1"
    )


def validate(spec: GaussianMixtureSpec) -> list[str]:
    """Return a list of violated invariants; an empty list means the mixture is valid."""
    problems: list[str] = []
    w = spec.omega
    if spec.M < 2:
        problems.append("need M >= 2 components")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        problems.append("weights must be strictly positive")
    if abs(w.sum() - 1.0) > 1e-12:
        problems.append(f"weights sum != 1 (sum = {w.sum():.12g})")

    K = spec.K
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
        problems.append("covariance must be a square L x L matrix")
    else:
        if not np.allclose(K, K.T, atol=1e-12):
            problems.append("covariance not symmetric")
        eig = np.linalg.eigvalsh(0.5 * (K + K.T))
        if np.min(eig) <= 1e-12:
            problems.append(
                f"covariance not positive definite (min eigenvalue {np.min(eig):.3g})"
            )

    if spec.mean_layout not in MEAN_LAYOUTS:
        problems.append(f"unknown mean layout {spec.mean_layout!r}")
    elif spec.mean_layout == "centered_pm1" and spec.M != 2:
        problems.append("centered_pm1 layout requires M = 2")
    elif spec.mean_layout == "explicit":
        if spec.means_matrix is None:
            problems.append("explicit mean layout needs means_matrix")
        elif np.shape(spec.means_matrix) != (spec.M, spec.L):
            problems.append(
                f"means matrix must be {spec.M} x {spec.L}, got {np.shape(spec.means_matrix)}"
            )
    return problems


def ensure_valid(spec: GaussianMixtureSpec) -> None:
    problems = validate(spec)
    if problems:
        raise ValueError("invalid GaussianMixtureSpec: " + "; ".join(problems))


def semantic_entropy(spec: GaussianMixtureSpec) -> float:
    """``H(omega)`` in bits."""
    return entropy(spec.omega)


def sample(spec: GaussianMixtureSpec, k: int, seed: int) -> SampleBlock:
    """Draw ``k`` i.i.d. (label, observation) pairs; deterministic in ``seed``."""
    if k < 1:
        raise ValueError("block length k must be >= 1")
    ensure_valid(spec)
    rng = np.random.default_rng(seed)
    idx = rng.choice(spec.M, size=k, p=spec.omega / spec.omega.sum())
    chol = np.linalg.cholesky(spec.K)
    x = spec.means[idx] + rng.standard_normal((k, spec.L)) @ chol.T
    return SampleBlock(labels=idx + 1, observations=x, seed=seed)


def agent_half_width(spec: GaussianMixtureSpec, i: int) -> float:
    if spec.M != 2:
        raise ValueError("per-agent half width is defined for M = 2 only")
    return 0.5 * abs(float(spec.means[1, i] - spec.means[0, i]))


def per_agent_flip_prob(spec: GaussianMixtureSpec, i: int) -> float:
    """ML label-detection error of agent ``i`` (0-based): ``Q(h_i / sigma_i)``."""
    if spec.M != 2:
        raise ValueError("per-agent flip probability requires M = 2")
    sd = math.sqrt(spec.cov[i][i])
    return q_function(agent_half_width(spec, i) / sd)
