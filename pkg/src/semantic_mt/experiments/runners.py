"""Figure runners. Each returns a list of :class:`SweepRow` in a fixed order."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from ..codec import CodecConfig, run_baseline_trial, run_trial
from ..inner_bounds import (
    InfeasibleBudgetError,
    _mismatch,
    check_inner_spec,
    inner_bound,
    rate_allocation,
    symmetric_test_channel,
)
from ..outer_bounds import (
    BudgetError,
    DistortionBudget,
    classify_region,
    conditional_rd_bound,
    outer_bound_closed,
    outer_bound_closed_grid,
    outer_bound_numeric,
    shannon_lower_bound,
)
from ..source import GaussianMixtureSpec, binary_symmetric_spec, semantic_entropy
from .config import ConfigError, ExperimentConfig
from .csvio import SweepRow, parallel_map


def _two_agents(spec: GaussianMixtureSpec):
    if spec.L != 2:
        raise ConfigError("figure runners plot two observation budgets; spec must have L = 2")


def _check_box(spec, D_S, D_X1, D_X2):
    """Raise BudgetError if any grid value leaves the outer-bound box."""
    H = semantic_entropy(spec)
    var = spec.variances
    D_S = np.asarray(D_S, dtype=float)
    if D_S.size and (D_S.min() < -1e-12 or D_S.max() > H + 1e-12):
        raise BudgetError(f"D_S grid leaves [0, H(omega)={H:.6g}]")
    for i, d in enumerate((D_X1, D_X2)):
        d = np.asarray(d, dtype=float)
        if d.size and (d.min() <= 0 or d.max() > var[i] * (1 + 1e-12)):
            raise BudgetError(f"D_X{i + 1} grid leaves (0, {var[i]:.6g}]")


# -- bound figures ----------------------------------------------------------


def run_surface(cfg: ExperimentConfig) -> list[SweepRow]:
    """Outer, conditional and Shannon lower bounds over ``(D_S, D_X1 = D_X2)``."""
    spec = cfg.source()
    _two_agents(spec)
    ds = cfg.grids["D_S"].values(semantic_entropy(spec))
    dx = cfg.grids["D_X"].values(float(spec.variances.min()))
    _check_box(spec, ds, dx, dx)
    S, X = np.meshgrid(ds, dx, indexing="ij")
    outer = outer_bound_closed_grid(S, (X, X), spec)
    cond = [conditional_rd_bound((d, d), spec) for d in dx]
    slb = [shannon_lower_bound((d, d), spec) for d in dx]
    numeric = bool(cfg.params.get("numeric", False))
    rows = []
    for a, s in enumerate(ds):
        for b, d in enumerate(dx):
            budget = DistortionBudget(s, (d, d))
            rows.append(SweepRow(
                series="surface", D_S=float(s), D_X1=float(d), D_X2=float(d), D_X_sum=float(2 * d),
                outer_closed=float(outer[a, b]),
                outer_numeric=outer_bound_numeric(budget, spec).rate if numeric else None,
                conditional=cond[b], slb=slb[b], region=classify_region(budget, spec, validate=False),
            ))
    return rows


def run_contours(cfg: ExperimentConfig) -> list[SweepRow]:
    """Long-format slices: fixed ``D_S`` over ``(D_X1, D_X2)``, fixed ``D_X1`` over ``(D_S, D_X2)``."""
    spec = cfg.source()
    _two_agents(spec)
    var = spec.variances
    H = semantic_entropy(spec)
    ds = cfg.grids["D_S"].values(H)
    dx1 = cfg.grids["D_X1"].values(float(var[0]))
    dx2 = cfg.grids["D_X2"].values(float(var[1]))
    ds_slices = [float(v) for v in cfg.params["ds_slices"]]
    dx1_slices = [float(v) for v in cfg.params["dx1_slices"]]
    if not ds_slices and not dx1_slices:
        raise ConfigError("no contour slices configured")
    _check_box(spec, ds_slices + list(ds), list(dx1) + dx1_slices, dx2)

    rows = []
    A, B = np.meshgrid(dx1, dx2, indexing="ij")
    for s in ds_slices:
        R = outer_bound_closed_grid(s, (A, B), spec)
        for j in np.ndindex(R.shape):
            rows.append(SweepRow(series="fixed_D_S", slice=s, D_S=s, D_X1=float(A[j]), D_X2=float(B[j]),
                                 D_X_sum=float(A[j] + B[j]), outer_closed=float(R[j])))
    S, B = np.meshgrid(ds, dx2, indexing="ij")
    for v in dx1_slices:
        R = outer_bound_closed_grid(S, (v, B), spec)
        for j in np.ndindex(R.shape):
            rows.append(SweepRow(series="fixed_D_X1", slice=v, D_S=float(S[j]), D_X1=v, D_X2=float(B[j]),
                                 D_X_sum=float(v + B[j]), outer_closed=float(R[j])))
    return rows


def _split_trace(spec, T):
    """Per-agent budgets proportional to the marginal variances."""
    w = spec.variances / spec.variances.sum()
    return tuple(np.asarray(T, dtype=float) * wi for wi in w)


def run_regions(cfg: ExperimentConfig) -> list[SweepRow]:
    """Region label over ``(D_S, sum D_X)`` with budgets split in proportion to the variances."""
    spec = cfg.source()
    _two_agents(spec)
    ds = cfg.grids["D_S"].values(semantic_entropy(spec))
    T = cfg.grids["D_X_sum"].values(float(spec.variances.sum()))
    d1, d2 = _split_trace(spec, T)
    _check_box(spec, ds, d1, d2)
    S = ds[:, None] * np.ones_like(T)[None, :]
    R = outer_bound_closed_grid(S, (d1[None, :], d2[None, :]), spec)
    rows = []
    for a, s in enumerate(ds):
        for b, t in enumerate(T):
            budget = DistortionBudget(s, (d1[b], d2[b]))
            rows.append(SweepRow(series="regions", D_S=float(s), D_X1=float(d1[b]), D_X2=float(d2[b]),
                                 D_X_sum=float(t), region=classify_region(budget, spec, validate=False),
                                 outer_closed=float(R[a, b])))
    return rows


def region_boundary_jumps(spec: GaussianMixtureSpec, rows: list[SweepRow], eps: float = 1e-9) -> list[float]:
    """Closed-form rate jump at each region boundary crossed by the grid.

    For every pair of grid neighbours (along ``D_S`` or along ``sum D_X``)
    carrying different labels, the boundary is located by bisection on the
    connecting segment and the rate is compared at ``eps`` either side.
    """
    by_key = {(r.D_S, r.D_X_sum): r for r in rows}
    ds = sorted({r.D_S for r in rows})
    ts = sorted({r.D_X_sum for r in rows})

    def point(s, t):
        return DistortionBudget(s, _split_trace(spec, t))

    jumps = []
    for a in range(len(ds)):
        for b in range(len(ts)):
            here = by_key[(ds[a], ts[b])]
            for nb in ((a + 1, b), (a, b + 1)):
                if nb[0] >= len(ds) or nb[1] >= len(ts):
                    continue
                there = by_key[(ds[nb[0]], ts[nb[1]])]
                if there.region == here.region:
                    continue
                p0 = np.array([here.D_S, here.D_X_sum])
                p1 = np.array([there.D_S, there.D_X_sum])
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    q = p0 + mid * (p1 - p0)
                    if classify_region(point(*q), spec, validate=False) == here.region:
                        lo = mid
                    else:
                        hi = mid
                u = (p1 - p0) / np.linalg.norm(p1 - p0)
                edge = p0 + hi * (p1 - p0)
                left = outer_bound_closed(point(*(edge - eps * u)), spec, validate=False).rate
                right = outer_bound_closed(point(*(edge + eps * u)), spec, validate=False).rate
                jumps.append(abs(right - left))
    return jumps


# -- simulation figures -----------------------------------------------------


def scheme_floor(spec: GaussianMixtureSpec) -> float:
    """Smallest semantic distortion the detect-and-compress scheme can reach."""
    p1, p2 = check_inner_spec(spec)
    return float(_mismatch(0.0, 0.0, p1, p2))


def bounds_at(spec: GaussianMixtureSpec, D_S: float, D_X) -> tuple[float | None, float]:
    """Inner and outer bound at measured distortions.

    ``D_S`` is clamped to ``[scheme floor, H(omega)]`` and ``D_X`` to the
    marginal variances, since measured values can stray past either edge
    by sampling noise. The inner value is None when infeasible.
    """
    var = spec.variances
    dx = tuple(float(min(d, v)) for d, v in zip(D_X, var))
    H = semantic_entropy(spec)
    outer = outer_bound_closed(DistortionBudget(min(max(D_S, 0.0), H), dx), spec).rate
    try:
        inner = inner_bound(DistortionBudget(max(D_S, scheme_floor(spec)), dx), spec).rate
    except InfeasibleBudgetError:
        inner = None
    return inner, outer


def _se(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def measure(config: CodecConfig, baseline: bool = False, threads: int = 1, seeds=None) -> dict:
    """Run trials and summarize rates and distortions (means and standard errors)."""
    fn = run_baseline_trial if baseline else run_trial
    seeds = config.trial_seeds() if seeds is None else list(seeds)
    reps = parallel_map(lambda s: fn(config, s), seeds, threads)
    R = [r.sum_rate for r in reps]
    mse = np.array([r.mse for r in reps])
    per_agent = np.array([[a + b for a, b in r.rates] for r in reps])
    return {
        "reports": reps,
        "R_sum": float(np.mean(R)),
        "R_sum_se": _se(R),
        "R_agent": tuple(float(v) for v in per_agent.mean(axis=0)),
        "D_S": float(np.mean([r.log_loss for r in reps])),
        "D_S_se": _se([r.log_loss for r in reps]),
        "D_X": tuple(float(v) for v in mse.mean(axis=0)),
        "D_X_se": _se(mse.mean(axis=1)),
    }


def _sim_row(series, spec, m, seed, **coords) -> SweepRow:
    inner, outer = bounds_at(spec, m["D_S"], m["D_X"])
    return SweepRow(
        series=series, inner=inner, outer_closed=outer,
        R_sum=m["R_sum"], R_sum_se=m["R_sum_se"], R1=m["R_agent"][0], R2=m["R_agent"][1],
        D_S_meas=m["D_S"], D_S_meas_se=m["D_S_se"], D_X1_meas=m["D_X"][0], D_X2_meas=m["D_X"][1],
        D_X_meas_se=m["D_X_se"], trials=len(m["reports"]), seed=seed, **coords,
    )


def run_rd_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Bound curves against ``D_X`` (fixed ``D_S``) and ``D_S`` (fixed ``D_X``), with simulated points.

    Simulations at fixed ``D_S`` run the scheme without a label test
    channel (its semantic distortion then sits at the scheme floor, under
    the budget). Along the ``D_S`` axis both agents flip their labels
    through the same test channel sized to the target, and reconstruction
    is the plain dithered one, whose error does not depend on label
    agreement.
    """
    spec = cfg.source()
    check_inner_spec(spec)
    DS0, DX0 = float(cfg.params["D_S"]), float(cfg.params["D_X"])
    var = float(spec.variances.min())
    rows = []

    def bound_row(series, s, d):
        b = DistortionBudget(s, (d, d))
        try:
            inner = inner_bound(b, spec).rate
        except InfeasibleBudgetError:
            inner = None
        return SweepRow(series=series, D_S=s, D_X1=d, D_X2=d, D_X_sum=2 * d, inner=inner,
                        outer_closed=outer_bound_closed(b, spec).rate, conditional=conditional_rd_bound((d, d), spec))

    dx = cfg.grids["D_X"].values(var)
    ds = cfg.grids["D_S"].values(semantic_entropy(spec))
    _check_box(spec, list(ds) + [DS0], list(dx) + [DX0], list(dx) + [DX0])
    rows += [bound_row("bound_vs_D_X", DS0, float(d)) for d in dx]
    rows += [bound_row("bound_vs_D_S", float(s), DX0) for s in ds]

    threads = cfg.threads
    for d in cfg.grids["D_X_sim"].values(var):
        c = cfg.codec_config(target_D_X=float(d))
        rows.append(_sim_row("sim_vs_D_X", spec, measure(c, threads=threads), cfg.seed, D_S=DS0, D_X1=float(d),
                             D_X2=float(d), step=c.agent_step(0)))
        if cfg.params.get("baseline", True):
            rows.append(_sim_row("baseline_vs_D_X", spec, measure(c, True, threads), cfg.seed, D_S=DS0,
                                 D_X1=float(d), D_X2=float(d)))
    for s in cfg.grids["D_S_sim"].values(semantic_entropy(spec)):
        d = symmetric_test_channel(float(s), spec)
        c = cfg.codec_config(target_D_X=DX0, label_flip=(d,) * spec.L, reconstruction="plain")
        rows.append(_sim_row("sim_vs_D_S", spec, measure(c, threads=threads), cfg.seed, D_S=float(s), D_X1=DX0,
                             D_X2=DX0, step=c.agent_step(0)))
    if cfg.params.get("baseline", True):
        c = cfg.codec_config(target_D_X=DX0)
        rows.append(_sim_row("baseline_vs_D_S", spec, measure(c, True, threads), cfg.seed, D_X1=DX0, D_X2=DX0))
    return rows


def run_alloc(cfg: ExperimentConfig) -> list[SweepRow]:
    """Optimal rate-allocation face plus the simulated per-agent rates."""
    spec = cfg.source()
    check_inner_spec(spec)
    DS0, DX0 = float(cfg.params["D_S"]), float(cfg.params["D_X"])
    b = DistortionBudget(DS0, (DX0, DX0))
    rows = [SweepRow(series="face", D_S=DS0, D_X1=DX0, D_X2=DX0, R1=r1, R2=r2, R_sum=r1 + r2)
            for r1, r2 in rate_allocation(b, spec, int(cfg.params.get("sweep_points", 21)))]
    m = measure(cfg.codec_config(target_D_X=DX0), threads=cfg.threads)
    rows.append(_sim_row("sim", spec, m, cfg.seed, D_S=DS0, D_X1=DX0, D_X2=DX0))
    return rows


def calibrate_step(config: CodecConfig, target_rate: float, seeds, threads: int = 1, xtol: float = 1e-3) -> float:
    """Quantizer step giving mean sum rate ``target_rate`` over ``seeds``.

    Root-finding in ``log(step)`` with common random numbers across
    evaluations; the rate falls monotonically as the step grows.
    """
    sd = math.sqrt(float(config.spec.variances.max()))

    def gap(log_step):
        c = _with(config, step=math.exp(log_step))
        return measure(c, threads=threads, seeds=seeds)["R_sum"] - target_rate

    lo, hi = math.log(0.02 * sd), math.log(30.0 * sd)
    if gap(lo) < 0 or gap(hi) > 0:
        raise ValueError(f"target rate {target_rate} outside the reachable range")
    return math.exp(brentq(gap, lo, hi, xtol=xtol))


def _with(config: CodecConfig, **kw) -> CodecConfig:
    return replace(config, **kw)


def run_snr_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Distortions at a fixed sum rate, and bounds at a fixed budget, against ``sigma^-2`` in dB.

    Below ``sigma^2 = D_X`` the observation budget is met at zero
    quantizer rate, so ``D_X`` is clamped to ``sigma^2`` there.
    """
    base = cfg.source()
    L = base.L
    target = float(cfg.params["target_rate"])
    DS0, DX0 = float(cfg.params["D_S"]), float(cfg.params["D_X"])
    n_cal = int(cfg.params.get("calibration_trials", 2))
    rows = []
    for snr in cfg.grids["snr_db"].values():
        s2 = 10.0 ** (-snr / 10.0)
        spec = binary_symmetric_spec(s2, L)
        c = cfg.codec_config(spec=spec)
        cal = CodecConfig(spec=spec, trials=n_cal, k=c.k, master_seed=(cfg.seed + 1) % 2**64)
        step = calibrate_step(_with(c, step=1.0), target, cal.trial_seeds(), cfg.threads)
        c = _with(c, step=step)
        m = measure(c, threads=cfg.threads)
        rows.append(SweepRow(
            series="fixed_rate", snr_db=float(snr), sigma2=s2, step=step, R_sum=m["R_sum"], R_sum_se=m["R_sum_se"],
            R1=m["R_agent"][0], R2=m["R_agent"][1], D_S_meas=m["D_S"], D_S_meas_se=m["D_S_se"],
            D_X1_meas=m["D_X"][0], D_X2_meas=m["D_X"][1], D_X_meas_se=m["D_X_se"], trials=len(m["reports"]),
            seed=cfg.seed,
        ))
    for snr in cfg.grids["snr_db_bounds"].values():
        s2 = 10.0 ** (-snr / 10.0)
        spec = binary_symmetric_spec(s2, L)
        dx = min(DX0, s2)
        b = DistortionBudget(DS0, (dx,) * L)
        try:
            inner = inner_bound(b, spec).rate
        except InfeasibleBudgetError:
            inner = None
        rows.append(SweepRow(series="bounds", snr_db=float(snr), sigma2=s2, D_S=DS0, D_X1=dx, D_X2=dx,
                             D_X_sum=L * dx, inner=inner, outer_closed=outer_bound_closed(b, spec).rate,
                             region=classify_region(b, spec)))
    return rows


RUNNERS = {
    "surface": run_surface,
    "contours": run_contours,
    "regions": run_regions,
    "rd_sweep": run_rd_sweep,
    "alloc": run_alloc,
    "snr_sweep": run_snr_sweep,
}
