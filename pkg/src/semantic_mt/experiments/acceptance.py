"""Acceptance checks shared by ``verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured margins in
``detail``; nothing here retunes a tolerance after seeing the data.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from ..codec import CodecConfig, build_ldpc, run_trial, sw_decode, sw_encode
from ..codec.slepian_wolf import design_syndrome_rate
from ..inner_bounds import brute_force_label_rate, inner_bound
from ..mathkit import q_function
from ..outer_bounds import (
    DistortionBudget,
    error_prob_bound,
    fano_arm,
    outer_bound_closed,
    outer_bound_numeric,
)
from ..source import GaussianMixtureSpec, binary_symmetric_spec, example1_spec, semantic_entropy
from .config import default_config
from .csvio import render_csv
from .runners import RUNNERS, bounds_at, run_snr_sweep, run_surface


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} [{self.seconds:.1f}s]"


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


PLATEAU_SPEC = GaussianMixtureSpec(weights=(0.25,) * 4, cov=(0.02, 0.02))
SETUP_SPEC = binary_symmetric_spec(0.22)


@_timed
def check_closed_vs_numeric(n: int = 12, tol: float = 1e-4, budget_s: float = 60.0) -> CheckResult:
    """Closed form against the grid-search optimum on an ``n^3`` box grid."""
    spec = example1_spec()
    H = semantic_entropy(spec)
    v = spec.variances
    t0 = time.perf_counter()
    worst = 0.0
    for s in np.linspace(0.0, H, n):
        for a in np.linspace(v[0] / n, v[0], n):
            for b in np.linspace(v[1] / n, v[1], n):
                bud = DistortionBudget(s, (a, b))
                worst = max(worst, abs(outer_bound_closed(bud, spec).rate - outer_bound_numeric(bud, spec).rate))
    dt = time.perf_counter() - t0
    ok = worst <= tol and dt <= budget_s
    return CheckResult("closed-form vs numeric outer bound", ok,
                       f"max |closed - numeric| = {worst:.2e} over {n ** 3} budgets (tol {tol:g}), {dt:.1f}s (limit {budget_s:g}s)",
                       data={"max_dev": worst, "elapsed": dt})


@_timed
def check_dominance(budget_s: float = 30.0) -> CheckResult:
    """Outer >= conditional everywhere; outer > SLB somewhere with sum D_X <= 0.1."""
    t0 = time.perf_counter()
    rows = run_surface(default_config("surface"))
    dt = time.perf_counter() - t0
    dom = min(r.outer_closed - r.conditional for r in rows)
    better = [r for r in rows if r.D_X_sum <= 0.1 + 1e-12 and r.outer_closed > r.slb]
    gain = max((r.outer_closed - r.slb for r in better), default=0.0)
    ok = dom >= -1e-12 and len(better) > 0 and dt <= budget_s
    return CheckResult("dominance and improvement", ok,
                       f"min(outer - conditional) = {dom:.3g} over {len(rows)} cells; "
                       f"{len(better)} cells with sum D_X <= 0.1 beat the SLB (max gain {gain:.3f} bits); {dt:.1f}s",
                       data={"min_dominance": dom, "n_better": len(better)})


@_timed
def check_activeness(n: int = 20, tol: float = 1e-9) -> CheckResult:
    """Semantic plateau beyond the Fano arm; strict decrease along each D_Xi."""
    spec = PLATEAU_SPEC
    H = semantic_entropy(spec)
    dx = (0.005, 0.005)
    arm = fano_arm(error_prob_bound(sum(dx), spec), spec)
    plateau = [outer_bound_closed(DistortionBudget(s, dx), spec).rate for s in np.linspace(arm, H, n)]
    spread = max(plateau) - min(plateau)
    below = [outer_bound_closed(DistortionBudget(s, dx), spec).rate for s in np.linspace(0.0, arm, n)]
    active_ok = bool(np.all(np.diff(below) < 0))

    worst_step = -math.inf
    for sp in (example1_spec(), spec):
        Hs = semantic_entropy(sp)
        v = sp.variances
        for s in (0.0, 0.5 * Hs, Hs):
            for i in range(2):
                rates = []
                for x in np.linspace(v[i] / n, v[i], n):
                    D = [0.3 * v[0], 0.3 * v[1]]
                    D[i] = x
                    rates.append(outer_bound_closed(DistortionBudget(s, tuple(D)), sp).rate)
                worst_step = max(worst_step, float(np.max(np.diff(rates))))
    ok = spread <= tol and active_ok and worst_step < 0
    return CheckResult("activeness of constraints", ok,
                       f"plateau spread {spread:.2e} for D_S in [{arm:.4f}, {H:g}] (tol {tol:g}); "
                       f"D_S active below the arm: {active_ok}; largest D_X step {worst_step:.3e} (< 0 required)",
                       data={"spread": spread, "worst_step": worst_step, "arm": arm})


@_timed
def check_sandwich(n: int = 10, tol: float = 1e-6) -> CheckResult:
    """Inner >= outer on an ``n x n`` grid; slack inner bound equals the conditional RD sum."""
    spec = SETUP_SPEC
    worst = math.inf
    for s in np.linspace(0.04, 1.0, n):
        for d in np.linspace(0.02, 0.22, n):
            b = DistortionBudget(s, (d, d))
            worst = min(worst, inner_bound(b, spec).rate - outer_bound_closed(b, spec).rate)
    slack_err = 0.0
    for d in np.linspace(0.02, 0.22, n):
        expect = float(np.sum(0.5 * np.log2(spec.variances / d)))
        slack_err = max(slack_err, abs(inner_bound(DistortionBudget(1.0, (d, d)), spec).rate - expect))
    ok = worst >= -1e-12 and slack_err <= tol
    return CheckResult("inner/outer sandwich", ok,
                       f"min(inner - outer) = {worst:.2e} on {n}x{n}; slack-constraint deviation {slack_err:.2e} (tol {tol:g})",
                       data={"min_gap": worst, "slack_err": slack_err})


@_timed
def check_inner_optimizer(tol: float = 1e-4) -> CheckResult:
    """512^2 grid plus boundary search against the 2048^2 brute force."""
    spec = SETUP_SPEC
    budgets = [(0.05, 0.2), (0.04, 0.1), (0.1, 0.2), (0.3, 0.05), (0.6, 0.15)]
    devs = []
    for s, d in budgets:
        r = inner_bound(DistortionBudget(s, (d, d)), spec)
        label = r.rate - float(np.sum(0.5 * np.log2(spec.variances / d)))
        devs.append(abs(label - brute_force_label_rate(s, spec, n=2048)))
    ok = max(devs) <= tol
    return CheckResult("inner-bound optimizer vs brute force", ok,
                       "deviations " + ", ".join(f"{x:.1e}" for x in devs) + f" (tol {tol:g})",
                       data={"devs": devs})


@_timed
def check_codec_statistics(trials: int = 50, k: int = 8192, budget_s: float = 600.0) -> CheckResult:
    """Clustering error, quantizer MSE, SW residual and the log-loss inequality."""
    t0 = time.perf_counter()
    spec = SETUP_SPEC
    notes, ok = [], True

    mmse = CodecConfig(spec=spec, k=k, trials=trials, master_seed=101)
    reps = [run_trial(mmse, s) for s in mmse.trial_seeds()]
    p = q_function(1.0 / math.sqrt(0.22))
    N = 2 * k * trials
    err = float(np.mean([r.cluster_error for r in reps]))
    z = abs(err - p) / math.sqrt(p * (1 - p) / N)
    ok &= z <= 3.0
    notes.append(f"cluster error {err:.5f} vs Q(1/sigma) {p:.5f} ({z:.2f} MC sd)")
    ll_margin = min(r.log_loss - r.equivocation for r in reps)
    ok &= ll_margin >= -1e-12
    notes.append(f"min(log-loss - H(S|decoded)) = {ll_margin:.2e}")

    plain = CodecConfig(spec=spec, k=k, trials=trials, master_seed=202, reconstruction="plain")
    step = plain.agent_step(0)
    mse = float(np.mean([run_trial(plain, s).mse for s in plain.trial_seeds()]))
    rel = abs(mse / (step**2 / 12) - 1)
    ok &= rel <= 0.02
    notes.append(f"quantizer MSE/(step^2/12) - 1 = {rel:.4f}")

    worst_sw = 0.0
    for i, cross in enumerate((0.02, 0.05, 0.11)):
        code = build_ldpc(k, design_syndrome_rate(cross, 0.15), seed=7 + i)
        rng = np.random.default_rng(303 + i)
        errs = []
        for _ in range(trials):
            x = rng.integers(0, 2, k).astype(np.uint8)
            y = x ^ (rng.random(k) < cross).astype(np.uint8)
            errs.append(float(np.mean(sw_decode(sw_encode(x, code), y, cross, code) != x)))
        worst_sw = max(worst_sw, float(np.mean(errs)))
    in_pipeline = max(r.sw_residual_error for r in reps)
    ok &= worst_sw <= 1e-3 and in_pipeline <= 1e-3
    notes.append(f"SW residual <= {worst_sw:.1e} (crossover 0.02/0.05/0.11), in-pipeline max {in_pipeline:.1e}")
    dt = time.perf_counter() - t0
    ok &= dt <= budget_s
    return CheckResult("codec statistics", bool(ok), "; ".join(notes) + f"; {dt:.0f}s",
                       data={"z": z, "rel_mse": rel, "sw": worst_sw, "ll_margin": ll_margin})


def setup_codec_config(trials: int = 50, seed: int = 0) -> CodecConfig:
    """The simulated setup: symmetric binary source, q = 3, targets (0.05, 0.2)."""
    return CodecConfig(spec=SETUP_SPEC, q=3, target_D_X=0.2, trials=trials, master_seed=seed)


@_timed
def check_end_to_end(trials: int = 50, max_gap: float = 0.5) -> CheckResult:
    """Every trial's ``(R, D_S, D_X)`` above the outer bound and within ``max_gap`` of the inner bound."""
    cfg = setup_codec_config(trials)
    gaps, margins = [], []
    for s in cfg.trial_seeds():
        r = run_trial(cfg, s)
        inner, outer = bounds_at(SETUP_SPEC, r.log_loss, r.mse)
        gaps.append(r.sum_rate - inner)
        margins.append(r.sum_rate - outer)
    ok = min(margins) > 0 and max(gaps) <= max_gap and min(gaps) >= -1e-9
    return CheckResult("end-to-end sandwich", ok,
                       f"R - inner in [{min(gaps):.3f}, {max(gaps):.3f}] (limit {max_gap}); "
                       f"min(R - outer) = {min(margins):.3f} over {trials} trials",
                       data={"gaps": gaps, "margins": margins})


def sign_test_decreasing(values) -> tuple[int, int, float]:
    """One-sided sign test that consecutive values fall; exact ties are dropped."""
    d = np.diff(np.asarray(values, dtype=float))
    down, up = int(np.sum(d < 0)), int(np.sum(d > 0))
    n = down + up
    p = binomtest(down, n, 0.5, alternative="greater").pvalue if n else 1.0
    return down, n, float(p)


@_timed
def check_snr_trend(trials: int = 20, slack: float = 1e-3, alpha: float = 0.05) -> CheckResult:
    rows = run_snr_sweep(default_config("snr_sweep", codec={"trials": trials}))
    bounds = [r for r in rows if r.series == "bounds"]
    gaps = [r.inner - r.outer_closed for r in bounds if r.inner is not None]
    gap_ok = len(gaps) == len(bounds) and bool(np.all(np.diff(gaps) <= slack))
    fixed = [r for r in rows if r.series == "fixed_rate"]
    rate_dev = max(abs(r.R_sum - 3.85) for r in fixed)
    ds = sign_test_decreasing([r.D_S_meas for r in fixed])
    dx = sign_test_decreasing([0.5 * (r.D_X1_meas + r.D_X2_meas) for r in fixed])
    ok = gap_ok and ds[2] < alpha and dx[2] < alpha and rate_dev <= 0.02
    return CheckResult("SNR trends", ok,
                       f"gap non-increasing over {len(gaps)} points: {gap_ok} (max rise {np.max(np.diff(gaps)):.1e}); "
                       f"|R - 3.85| <= {rate_dev:.3f}; D_S falls {ds[0]}/{ds[1]} (p={ds[2]:.3f}); "
                       f"D_X falls {dx[0]}/{dx[1]} (p={dx[2]:.3f})",
                       data={"gaps": gaps, "ds": ds, "dx": dx, "rows": rows})


@_timed
def check_determinism() -> CheckResult:
    """Regenerate figure CSVs twice (and with two threads) and compare bytes."""
    same = []
    with tempfile.TemporaryDirectory() as tmp:
        for kind, over in (("regions", {}), ("alloc", {"codec": {"trials": 3, "k": 2048}})):
            cfg = default_config(kind, **over)
            texts = []
            for threads in (1, 1, 2):
                cfg.threads = threads
                text = render_csv(RUNNERS[kind](cfg), cfg.digest(), kind)
                path = Path(tmp) / f"{kind}_{len(texts)}.csv"
                path.write_text(text)
                texts.append(path.read_bytes())
            same.append(all(t == texts[0] for t in texts))
    return CheckResult("determinism", all(same), f"byte-identical reruns: regions {same[0]}, alloc {same[1]}")


ALL_CHECKS = (
    check_closed_vs_numeric,
    check_dominance,
    check_activeness,
    check_sandwich,
    check_inner_optimizer,
    check_codec_statistics,
    check_end_to_end,
    check_snr_trend,
    check_determinism,
)


def run_verify(echo=print) -> list[CheckResult]:
    results = []
    for chk in ALL_CHECKS:
        res = chk()
        echo(res.line())
        results.append(res)
    return results
