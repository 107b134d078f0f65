"""Bare-bones SVG line and scatter charts for the figure CSVs (no plotting dependency)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

W, H = 640, 420
PAD_L, PAD_R, PAD_T, PAD_B = 70, 150, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _range(vals):
    vals = [v for v in vals if v is not None and math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def chart(series: dict, xlabel: str, ylabel: str, title: str = "", points: dict | None = None) -> str:
    """``series`` / ``points`` map a legend name to ``(xs, ys)``; lines and markers respectively."""
    points = points or {}
    allx = [x for xs, _ in list(series.values()) + list(points.values()) for x in xs]
    ally = [y for _, ys in list(series.values()) + list(points.values()) for y in ys]
    x0, x1 = _range(allx)
    y0, y1 = _range(ally)
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B

    def sx(x):
        return PAD_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return PAD_T + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in range(5):
        xv = x0 + t * (x1 - x0) / 4
        yv = y0 + t * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{H - PAD_B + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{PAD_L - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{PAD_L + pw / 2}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{PAD_T + ph / 2}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{PAD_L + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    legend_y = PAD_T + 10
    for n, (name, (xs, ys)) in enumerate(list(series.items()) + list(points.items())):
        col = COLORS[n % len(COLORS)]
        pts = [(x, y) for x, y in zip(xs, ys) if y is not None and math.isfinite(y)]
        if name in series:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        else:
            out += [f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3.5" fill="{col}"/>' for x, y in pts]
        out.append(f'<rect x="{W - PAD_R + 10}" y="{legend_y - 8}" width="10" height="10" fill="{col}"/>')
        out.append(f'<text x="{W - PAD_R + 24}" y="{legend_y + 1}">{escape(str(name))}</text>')
        legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def region_map(rows) -> str:
    """Cell map of region labels over ``(sum D_X, D_S)``; ``sum D_X`` on a log axis."""
    xs = sorted({r.D_X_sum for r in rows})
    ys = sorted({r.D_S for r in rows})
    names = sorted({r.region for r in rows})
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B
    cw, chh = pw / len(xs), ph / len(ys)
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">']
    for r in rows:
        col = COLORS[names.index(r.region) % len(COLORS)]
        x = PAD_L + xi[r.D_X_sum] * cw
        y = PAD_T + (len(ys) - 1 - yi[r.D_S]) * chh
        out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw + 0.5:.1f}" height="{chh + 0.5:.1f}" fill="{col}"/>')
    out.append(f'<text x="{PAD_L}" y="{H - PAD_B + 16}">{xs[0]:.3g}</text>')
    out.append(f'<text x="{PAD_L + pw}" y="{H - PAD_B + 16}" text-anchor="end">{xs[-1]:.3g}</text>')
    out.append(f'<text x="{PAD_L + pw / 2}" y="{H - 10}" text-anchor="middle">sum D_X (cell index)</text>')
    out.append(f'<text x="{PAD_L - 6}" y="{PAD_T + 8}" text-anchor="end">{ys[-1]:.3g}</text>')
    out.append(f'<text x="{PAD_L - 6}" y="{PAD_T + ph}" text-anchor="end">{ys[0]:.3g}</text>')
    out.append(f'<text transform="translate(16,{PAD_T + ph / 2}) rotate(-90)" text-anchor="middle">D_S</text>')
    for n, name in enumerate(names):
        out.append(f'<rect x="{W - PAD_R + 10}" y="{PAD_T + 16 * n}" width="10" height="10" fill="{COLORS[n]}"/>')
        out.append(f'<text x="{W - PAD_R + 24}" y="{PAD_T + 16 * n + 9}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _pick(rows, series):
    return [r for r in rows if r.series == series]


def render(kind: str, rows) -> str:
    """One representative chart per figure kind."""
    if kind == "surface":
        ds = sorted({r.D_S for r in rows})
        keep = ds[:: max(1, len(ds) // 4)]
        lines = {f"outer D_S={s:.2f}": ([r.D_X1 for r in rows if r.D_S == s], [r.outer_closed for r in rows if r.D_S == s])
                 for s in keep}
        first = [r for r in rows if r.D_S == ds[0]]
        lines["conditional"] = ([r.D_X1 for r in first], [r.conditional for r in first])
        lines["SLB"] = ([r.D_X1 for r in first], [r.slb for r in first])
        return chart(lines, "D_X1 = D_X2", "rate (bits)", "bounds against observation distortion")
    if kind == "contours":
        lines = {}
        for series, xkey in (("fixed_D_S", "D_X1"), ("fixed_D_X1", "D_S")):
            sel = _pick(rows, series)
            if not sel:
                continue
            y2 = min(r.D_X2 for r in sel)
            for v in sorted({r.slice for r in sel}):
                sub = [r for r in sel if r.slice == v and r.D_X2 == y2]
                lines[f"{series}={v:g}"] = ([getattr(r, xkey) for r in sub], [r.outer_closed for r in sub])
        return chart(lines, "D_X1 or D_S", "rate (bits)", "slices at the smallest D_X2")
    if kind == "regions":
        return region_map(rows)
    if kind == "rd_sweep":
        b = _pick(rows, "bound_vs_D_X")
        lines = {"inner": ([r.D_X1 for r in b], [r.inner for r in b]), "outer": ([r.D_X1 for r in b], [r.outer_closed for r in b])}
        pts = {s: ([r.D_X1_meas for r in _pick(rows, s)], [r.R_sum for r in _pick(rows, s)])
               for s in ("sim_vs_D_X", "baseline_vs_D_X") if _pick(rows, s)}
        return chart(lines, "D_X", "sum rate (bits)", "fixed D_S", pts)
    if kind == "alloc":
        f = _pick(rows, "face")
        pts = {"simulated": ([r.R1 for r in _pick(rows, "sim")], [r.R2 for r in _pick(rows, "sim")])}
        return chart({"optimal face": ([r.R1 for r in f], [r.R2 for r in f])}, "R1", "R2", "rate allocation", pts)
    if kind == "snr_sweep":
        f = _pick(rows, "fixed_rate")
        b = _pick(rows, "bounds")
        lines = {
            "D_S measured": ([r.snr_db for r in f], [r.D_S_meas for r in f]),
            "D_X measured": ([r.snr_db for r in f], [0.5 * (r.D_X1_meas + r.D_X2_meas) for r in f]),
            "inner - outer": ([r.snr_db for r in b], [None if r.inner is None else r.inner - r.outer_closed for r in b]),
        }
        return chart(lines, "SNR = 1/sigma^2 (dB)", "bits or MSE", "fixed-rate distortions and bound gap")
    raise ValueError(f"no chart for {kind!r}")


def write_svg(path, kind: str, rows) -> Path:
    path = Path(path)
    path.write_text(render(kind, rows))
    return path
