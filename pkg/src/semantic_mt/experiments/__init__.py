"""Figure reproductions as CSV, and the acceptance driver."""

from .config import ConfigError, ExperimentConfig, GridAxis, default_config, load_config
from .csvio import SweepRow, read_csv, render_csv, write_csv
from .runners import (
    RUNNERS,
    bounds_at,
    measure,
    region_boundary_jumps,
    run_alloc,
    run_contours,
    run_rd_sweep,
    run_regions,
    run_snr_sweep,
    run_surface,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "GridAxis",
    "RUNNERS",
    "SweepRow",
    "bounds_at",
    "default_config",
    "load_config",
    "measure",
    "read_csv",
    "region_boundary_jumps",
    "render_csv",
    "run_alloc",
    "run_contours",
    "run_rd_sweep",
    "run_regions",
    "run_snr_sweep",
    "run_surface",
    "write_csv",
]
