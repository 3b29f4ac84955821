from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from .classifier import normalize_metric
from .exceptions import ConfigError, DataError
from .features import FEATURE_NAMES, check_relaxation
from .pitch import GridConfig
from .storage import parse_key_values

DEFAULT_REF_FREQ = 65.40639


def parse_features(value) -> tuple[str, ...]:
    """`all`, a single feature name, or a comma list; returned in FeatureSet order."""
    if isinstance(value, (tuple, list)):
        names = [str(v).strip() for v in value]
    else:
        text = str(value or "all").strip()
        if text.lower() == "all":
            return FEATURE_NAMES
        names = [n.strip() for n in text.split(",") if n.strip()]
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown or not names:
        raise ConfigError(f"unknown feature(s) {unknown or names}; choose from all, {', '.join(FEATURE_NAMES)}")
    return tuple(n for n in FEATURE_NAMES if n in set(names))


@dataclass(frozen=True)
class RunConfig:
    r: int = 4
    k: int = 5
    metric: str = "db"
    features: tuple[str, ...] = FEATURE_NAMES
    bins_per_octave: int = 120
    octaves: int = 6
    ref_freq: float = DEFAULT_REF_FREQ
    conf_threshold: float = 0.0
    max_seconds: float | None = None
    cache_dir: Path = field(default_factory=lambda: Path(".spd_cache"))
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "r", check_relaxation(self.r))
            object.__setattr__(self, "metric", normalize_metric(self.metric))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "features", parse_features(self.features))
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.jobs == 0 or self.jobs < -1:
            raise ConfigError(f"jobs must be >= 1 (or -1 for all cores), got {self.jobs}")
        if self.max_seconds is not None and not self.max_seconds > 0:
            raise ConfigError(f"max_seconds must be positive, got {self.max_seconds}")
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def grid(self) -> GridConfig:
        return GridConfig(
            ref_freq=self.ref_freq,
            bins_per_octave=self.bins_per_octave,
            octaves=self.octaves,
            conf_threshold=self.conf_threshold,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def describe(self) -> str:
        feats = "all" if self.features == FEATURE_NAMES else ",".join(self.features)
        return f"r={self.r} k={self.k} metric={self.metric} features={feats}"


def _optional_float(value: str) -> float | None:
    return None if value.strip().lower() in ("", "none") else float(value)


_COERCE = {
    "r": int,
    "k": int,
    "metric": str,
    "features": str,
    "bins_per_octave": int,
    "octaves": int,
    "ref_freq": float,
    "conf_threshold": float,
    "max_seconds": _optional_float,
    "cache_dir": Path,
    "seed": int,
    "jobs": int,
}


def settings_defaults() -> dict:
    return {
        "r": getattr(settings, "SPD_RELAXATION", 4),
        "k": getattr(settings, "SPD_NEIGHBOURS", 5),
        "metric": getattr(settings, "SPD_METRIC", "db"),
        "features": getattr(settings, "SPD_FEATURES", "all"),
        "ref_freq": getattr(settings, "SPD_REF_FREQ", DEFAULT_REF_FREQ),
        "conf_threshold": getattr(settings, "SPD_CONF_THRESHOLD", 0.0),
        "cache_dir": getattr(settings, "SPD_CACHE_DIR", Path(".spd_cache")),
        "seed": getattr(settings, "SPD_SEED", 0),
        "jobs": getattr(settings, "SPD_JOBS", 1),
    }


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    try:
        pairs = parse_key_values(text, source=str(path))
    except DataError as exc:
        raise ConfigError(str(exc)) from exc

    values = {}
    for key, raw in pairs.items():
        if key not in _COERCE:
            raise ConfigError(f"{path}: unknown key {key!r}")
        try:
            values[key] = _COERCE[key](raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from exc
    return values


def resolve_run_config(flags: dict | None = None, config_path=None, environ=None) -> RunConfig:
    """flags > SPD_CACHE_DIR (cache_dir only) > config file > settings defaults."""
    environ = os.environ if environ is None else environ
    values = settings_defaults()
    if config_path:
        values.update(read_config_file(config_path))
    if environ.get("SPD_CACHE_DIR"):
        values["cache_dir"] = Path(environ["SPD_CACHE_DIR"])
    for key, value in (flags or {}).items():
        if key in _COERCE and value is not None:
            values[key] = value
    return RunConfig(**values)
