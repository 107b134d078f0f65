"""Regenerate every figure CSV (and SVG) into ``figures/`` with small settings.

Run with ``python demos/03_regenerate_figures.py [outdir]``. The bound
figures use full defaults; the simulated ones use 4 trials so the whole
script finishes in about a minute. ``semantic-mt <kind>`` uses the full
defaults.
"""

import sys
from pathlib import Path

from semantic_mt.experiments import RUNNERS, default_config, write_csv
from semantic_mt.experiments.svg import write_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
quick = {"trials": 4}

for kind in ("surface", "contours", "regions", "alloc", "rd_sweep", "snr_sweep"):
    codec = quick if kind in ("alloc", "rd_sweep", "snr_sweep") else {}
    cfg = default_config(kind, codec=codec)
    rows = RUNNERS[kind](cfg)
    path = write_csv(out / f"{kind}.csv", rows, cfg.digest(), kind)
    write_svg(path.with_suffix(".svg"), kind, rows)
    print(f"{kind:<10} {len(rows):>7} rows -> {path}")
