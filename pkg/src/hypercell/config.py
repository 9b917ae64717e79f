"""Experiment configuration: parsing, validation and canonical serialisation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .directions import (
    atoms_of, delta_max, describe, from_record, has_continuous_part, is_absolutely_continuous, n_min,
    supp_condition_atoms,
)
from .errors import ConfigError, HypercellError
from .functionals import SIZE_FUNCTIONALS, ball_value, size_functional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("complementary", "small_cells", "speed", "limit_shape", "atoms", "tail_lemma", "sample_dump")
WINDOW_EXPERIMENTS = ("atoms",)
MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dim: int = 2
    gamma: float = 1.0
    dist: dict = field(default_factory=lambda: {"type": "isotropic"})
    sigma: str = "Circumradius"
    a_grid: tuple = ()
    n_samples: int = 10_000
    seed: int = 0
    workers: int = 1
    window_R: float | None = None
    output_dir: str = "out"
    oracle_n: int = 1_000_000
    t_grid: tuple = (2.0, 4.0, 8.0, 16.0, 32.0)
    chunk_size: int = 1000
    ks_tolerance: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "a_grid", tuple(float(a) for a in self.a_grid))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.window_R is not None:
            object.__setattr__(self, "window_R", float(self.window_R))

    # -- serialisation -------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["a_grid"] = list(self.a_grid)
        d["t_grid"] = list(self.t_grid)
        return d

    def canonical_json(self) -> str:
        """Key-sorted compact JSON."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        """Hash of the canonical JSON without the keys that cannot change results."""
        content = {k: v for k, v in self.to_dict().items() if k not in ("workers", "output_dir")}
        return hashlib.sha256(json.dumps(content, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, check: bool = True) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if check:
            cfg.check()
        return cfg

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})
        cfg.check()
        return cfg

    # -- validation ----------------------------------------------------

    def distribution(self):
        try:
            return from_record(self.dist, self.dim)
        except ConfigError:
            raise
        except (HypercellError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid distribution: {exc}") from exc

    def check(self) -> None:
        """Raise ConfigError for malformed or incompatible settings."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.dim not in (2, 3):
            raise ConfigError("dim must be 2 or 3")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError("gamma must be positive")
        if self.sigma not in SIZE_FUNCTIONALS:
            raise ConfigError(f"unknown size functional {self.sigma!r}")
        try:
            size_functional(self.sigma, self.dim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if any(not a > 0 for a in self.a_grid):
            raise ConfigError("a_grid entries must be positive")
        if self.n_samples < 1 or self.workers < 1 or self.chunk_size < 1:
            raise ConfigError("n_samples, workers and chunk_size must be positive")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.window_R is not None and not self.window_R > 0:
            raise ConfigError("window_R must be positive")
        dist = self.distribution()
        needs_grid = ("small_cells", "speed", "limit_shape", "atoms")
        if self.experiment in needs_grid and not self.a_grid:
            raise ConfigError(f"{self.experiment} needs a non-empty a_grid")
        if self.experiment == "speed" and len(self.a_grid) < 4:
            raise ConfigError("speed needs at least 4 grid points for the rate fit")
        if self.experiment in ("complementary", "small_cells", "speed", "limit_shape"):
            if not is_absolutely_continuous(dist):
                raise ConfigError(f"{self.experiment} needs an absolutely continuous directional distribution")
        if self.experiment == "tail_lemma":
            if not is_absolutely_continuous(dist):
                raise ConfigError("tail_lemma needs a distribution with a bounded density")
        if self.experiment == "atoms":
            if self.dim != 2:
                raise ConfigError("atoms uses the planar window sampler")
            if not atoms_of(dist):
                raise ConfigError("atoms needs a distribution with at least one atom")
            if not supp_condition_atoms(dist):
                raise ConfigError("atoms needs d+1 support points not in a closed half sphere; "
                                  f"here every cell has at least n_min={n_min(dist)} facets")
        if self.experiment == "sample_dump" and not is_absolutely_continuous(dist) and self.dim != 2:
            raise ConfigError("non-continuous distributions are sampled by the planar window sampler only")


def parse_text(text: str, fmt: str, check: bool = True) -> ExperimentConfig:
    try:
        data = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return ExperimentConfig.from_dict(data, check)


def load(path, check: bool = True) -> ExperimentConfig:
    path = Path(path)
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, fmt, check)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "info" | "warning" | "error"
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.level}] {self.code}: {self.message}"


def validate(cfg: ExperimentConfig) -> list[Diagnostic]:
    """Diagnostics about the distribution and the sampling budget; never raises."""
    out = []
    try:
        cfg.check()
    except ConfigError as exc:
        out.append(Diagnostic("error", "config", str(exc)))
    try:
        dist = cfg.distribution()
    except ConfigError as exc:
        out.append(Diagnostic("error", "distribution", str(exc)))
        return out
    out.append(Diagnostic("info", "distribution", f"{describe(dist)['type']} in d={cfg.dim}: even, "
                                                   "support not contained in a great circle"))
    try:
        out.append(Diagnostic("info", "n_min", str(n_min(dist))))
        out.append(Diagnostic("info", "delta_max", repr(delta_max(dist))))
        out.append(Diagnostic("info", "supp_condition_atoms", str(supp_condition_atoms(dist))))
    except HypercellError as exc:
        out.append(Diagnostic("error", "support", str(exc)))
    out.append(Diagnostic("info", "continuous_part", str(has_continuous_part(dist))))
    try:
        k = size_functional(cfg.sigma, cfg.dim).degree
        ball = ball_value(cfg.sigma, cfg.dim)
    except ValueError:
        return out
    for a in cfg.a_grid:
        if a * cfg.gamma >= 1:
            out.append(Diagnostic("warning", "rare_event",
                                  f"a={a!r}: a*gamma >= 1, conditioning not rare, truncation disabled"))
            continue
        cap = a / ball ** (1.0 / k)
        p_trunc = -math.expm1(-cfg.gamma * cap)
        out.append(Diagnostic("info", "budget",
                              f"a={a!r}: truncation r < {cap!r} has probability {p_trunc:.3g}; "
                              f"{cfg.n_samples} conditioned samples per grid point"))
    return out
