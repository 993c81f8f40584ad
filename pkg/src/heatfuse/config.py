"""Run configuration shared by the CLI and the pipeline helpers.

Defaults follow the reference experimental setup: diffusion scale
rho = 2, photometric weights {0, 0.05, 0.1} for bags of features and
{0, 0.1, 0.2} for distance distributions, HKS times
{1024, 1351.2, 1782.9, 2352.5, 4096} (distances use {1024, 4096}),
200 eigenpairs, vocabulary size 48, and 2500 farthest-point samples.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

DESCRIPTOR_KINDS = (
    "hks_bof",
    "chks_bof_multiscale",
    "color_hist",
    "dist_distribution_geometric",
    "dist_distribution_joint",
)

SCHEMES = ("fused_gaussian", "cotangent")


@dataclass(frozen=True)
class RunConfig:
    rho: float = 2.0
    etas: tuple = (0.0, 0.05, 0.1)
    dist_etas: tuple = (0.0, 0.1, 0.2)
    times: tuple = (1024.0, 1351.2, 1782.9, 2352.5, 4096.0)
    dist_times: tuple = (1024.0, 4096.0)
    k: int = 200
    vocab_size: int = 48
    vocab_seed: int = 0
    fps_count: int = 2500
    color_scale: float = 100.0
    truncation_eps: float = 1e-7
    descriptor: str = "hks_bof"
    scheme: str = "fused_gaussian"
    dist_bins: int = 64
    color_bins: int = 8
    solver_tol: float = 1e-10
    solver_seed: int = 0
    area_weighted_bof: bool = True
    use_srgb_coords: bool = False
    dense_laplacian: bool = False

    def __post_init__(self):
        for name in ("etas", "dist_etas", "times", "dist_times"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if self.descriptor not in DESCRIPTOR_KINDS:
            raise ConfigError(
                f"unknown descriptor {self.descriptor!r}; have {DESCRIPTOR_KINDS}"
            )
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; have {SCHEMES}")
        if any(e < 0 for e in self.etas + self.dist_etas):
            raise ConfigError("eta values must be nonnegative")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.color_scale <= 0:
            raise ConfigError("color_scale must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("etas", "dist_etas", "times", "dist_times"):
            d[name] = list(d[name])
        return d

    def updated(self, **overrides) -> "RunConfig":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        return replace(self, **overrides)


def load_config(path) -> RunConfig:
    """RunConfig from a JSON file of field overrides."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return RunConfig().updated(**doc)
