"""Experiment configuration: YAML in, validated dataclass out."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..codec import CodecConfig
from ..source import GaussianMixtureSpec, binary_symmetric_spec, ensure_valid, example1_spec

KINDS = ("surface", "contours", "regions", "rd_sweep", "alloc", "snr_sweep", "verify")
THREADS_ENV = "SEMANTIC_MT_THREADS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridAxis:
    """``n`` points from ``start`` to ``stop`` inclusive.

    ``stop`` may be None, meaning the top of the admissible box for that
    coordinate (filled in by the runner).
    """

    start: float
    stop: float | None
    n: int
    spacing: str = "linear"

    def __post_init__(self):
        if int(self.n) < 1:
            raise ConfigError("grid needs at least one point")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError("log spacing needs a positive start")
        if self.stop is not None and self.stop < self.start:
            raise ConfigError(f"grid stop {self.stop} below start {self.start}")

    def values(self, stop: float | None = None) -> np.ndarray:
        hi = self.stop if self.stop is not None else stop
        if hi is None:
            raise ConfigError("grid stop unresolved")
        if self.n == 1:
            return np.array([float(self.start)])
        if self.spacing == "log":
            return np.geomspace(self.start, hi, int(self.n))
        return np.linspace(self.start, hi, int(self.n))

    @classmethod
    def parse(cls, v) -> "GridAxis":
        if isinstance(v, GridAxis):
            return v
        if isinstance(v, (list, tuple)):
            return cls(*v)
        if isinstance(v, dict):
            return cls(v["start"], v.get("stop"), v["n"], v.get("spacing", "linear"))
        raise ConfigError(f"cannot read grid axis from {v!r}")

    def to_list(self) -> list:
        return [self.start, self.stop, int(self.n), self.spacing]


def build_spec(d: dict) -> GaussianMixtureSpec:
    """``{preset: example1}``, ``{preset: binary, sigma2: .., L: ..}`` or an explicit spec dict."""
    d = dict(d)
    preset = d.pop("preset", None)
    if preset == "example1":
        spec = example1_spec()
    elif preset == "binary":
        spec = binary_symmetric_spec(float(d.get("sigma2", 0.22)), int(d.get("L", 2)))
    elif preset is None:
        spec = GaussianMixtureSpec.from_dict(d)
    else:
        raise ConfigError(f"unknown spec preset {preset!r}")
    ensure_valid(spec)
    return spec


_BINARY = {"preset": "binary", "sigma2": 0.22}
_EX1 = {"preset": "example1"}

DEFAULTS: dict[str, dict] = {
    "surface": {
        "spec": _EX1,
        "grids": {"D_S": [0.0, None, 50], "D_X": [0.01, 0.5, 50]},
        "params": {"numeric": False},
    },
    "contours": {
        "spec": _EX1,
        "grids": {"D_S": [0.0, None, 200], "D_X1": [0.01, 0.75, 200], "D_X2": [0.01, 0.5, 50]},
        "params": {
            "ds_slices": [0.02, 0.34, 0.66, 0.98, 1.30],
            "dx1_slices": [0.02, 0.165, 0.310, 0.455, 0.600],
        },
    },
    "regions": {
        "spec": _EX1,
        "grids": {"D_S": [0.0, None, 60], "D_X_sum": [1e-5, 1.25, 60, "log"]},
        "params": {},
    },
    "rd_sweep": {
        "spec": _BINARY,
        "grids": {
            "D_X": [0.02, 0.22, 41],
            "D_S": [0.04, 1.0, 41],
            "D_X_sim": [0.05, 0.2, 4],
            "D_S_sim": [0.05, 0.5, 4],
        },
        "params": {"D_S": 0.05, "D_X": 0.2, "baseline": True},
        "codec": {"trials": 20},
    },
    "alloc": {
        "spec": _BINARY,
        "grids": {},
        "params": {"D_S": 0.05, "D_X": 0.2, "sweep_points": 21},
        "codec": {"trials": 20},
    },
    "snr_sweep": {
        "spec": _BINARY,
        "grids": {"snr_db": [3.0, 20.0, 10], "snr_db_bounds": [6.5, 20.0, 10]},
        "params": {"target_rate": 3.85, "rate_tol": 0.02, "D_S": 0.05, "D_X": 0.2, "calibration_trials": 2},
        "codec": {"trials": 20},
    },
    "verify": {"spec": _EX1, "grids": {}, "params": {"quick": False}},
}


@dataclass
class ExperimentConfig:
    kind: str
    spec: dict
    grids: dict[str, GridAxis] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    codec: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    threads: int = 1
    emit_svg: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        self.grids = {k: GridAxis.parse(v) for k, v in self.grids.items()}
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.seed = int(self.seed)
        if int(self.threads) < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.source()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def source(self) -> GaussianMixtureSpec:
        return build_spec(self.spec)

    def codec_config(self, **overrides) -> CodecConfig:
        kw = dict(self.codec)
        kw.update(overrides)
        kw.setdefault("spec", self.source())
        kw.setdefault("master_seed", self.seed)
        if kw.get("label_flip") is not None:
            kw["label_flip"] = tuple(kw["label_flip"])
        try:
            return CodecConfig(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad codec options: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "spec": self.spec,
            "grids": {k: v.to_list() for k, v in sorted(self.grids.items())},
            "params": self.params,
            "codec": self.codec,
            "seed": self.seed,
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of everything that affects results.

        Output path, thread count and SVG emission are excluded so that the
        same experiment written elsewhere stays byte-identical.
        """
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=float)
        return hashlib.sha256(blob.encode()).hexdigest()


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "spec":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_config(kind: str, **overrides) -> ExperimentConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    d = _merge({"kind": kind, **DEFAULTS[kind]}, overrides)
    return ExperimentConfig(**d)


def load_config(source, kind: str | None = None) -> ExperimentConfig:
    """Read a YAML config (path or text) and merge it over the kind's defaults.

    ``kind`` (from the CLI subcommand) wins over a ``kind`` key in the file;
    the two must agree if both are given.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and os.path.exists(source)):
        text = Path(source).read_text()
    else:
        text = source
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    file_kind = raw.pop("kind", None)
    if file_kind is not None:
        file_kind = str(file_kind).replace("-", "_")
    if kind is not None and file_kind is not None and file_kind != kind:
        raise ConfigError(f"config is for {file_kind!r}, not {kind!r}")
    k = kind or file_kind
    if k is None:
        raise ConfigError("experiment kind not given")
    unknown = set(raw) - {"spec", "grids", "params", "codec", "out", "seed", "threads", "emit_svg"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return default_config(k, **raw)


def resolve_threads(cli_value: int | None, config: ExperimentConfig) -> int:
    if cli_value is not None:
        return max(1, int(cli_value))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer") from exc
    return config.threads
