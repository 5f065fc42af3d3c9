"""Pipeline configuration: one JSON object, every key optional, unknown keys rejected.

Layout (defaults shown by ``bradyquant --dump-config``)::

    {
      "seed": 0,
      "filters": {"finger_tapping": [7, 3], "hand_movement": [7, 3], "rapid_am": [5, 4]},
      "extrema": {"prominence_frac": 0.1, "min_separation": 3},
      "fatigue": {"window": 5, "alpha": 0.1},
      "net": {...NetConfig fields...},
      "train": {...TrainConfig fields...},
      "boost": {...BoostConfig fields...},
      "stats": {"lam": 1.0, "lambda_grid": null, "n_basis": 10, "bootstrap": 200, ...},
      "cv": {"folds": 5},
      "scorer": {"per_movement": false}
    }
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from typing import Optional

from .arrest_net import NetConfig, TrainConfig
from .boost import BoostConfig
from .exceptions import ConfigError
from .landmarks import MovementKind
from .signal import FILTER_DEFAULTS, ExtremaConfig
from .stats.plam import PlamConfig


@dataclass(frozen=True)
class FatigueConfig:
    window: int = 5
    alpha: float = 0.1


@dataclass(frozen=True)
class StatsConfig:
    lam: float = 1.0
    lambda_grid: Optional[tuple] = None
    n_basis: int = 10
    tol: float = 1e-6
    max_cycles: int = 200
    bootstrap: int = 200

    def plam(self, seed: int = 0) -> PlamConfig:
        grid = tuple(self.lambda_grid) if self.lambda_grid else None
        return PlamConfig(n_basis=self.n_basis, lam=self.lam, lambda_grid=grid, tol=self.tol,
                          max_cycles=self.max_cycles, seed=seed)


@dataclass(frozen=True)
class CVConfig:
    folds: int = 5


@dataclass(frozen=True)
class ScorerConfig:
    # one booster per movement instead of a single joint booster
    per_movement: bool = False


def _default_filters():
    return {m.value: tuple(v) for m, v in FILTER_DEFAULTS.items()}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    filters: dict = field(default_factory=_default_filters)
    extrema: ExtremaConfig = ExtremaConfig()
    fatigue: FatigueConfig = FatigueConfig()
    net: NetConfig = NetConfig(conv_kernels=(3, 3, 3))
    train: TrainConfig = TrainConfig(epochs=60, lr_schedule="cosine")
    boost: BoostConfig = BoostConfig()
    stats: StatsConfig = StatsConfig()
    cv: CVConfig = CVConfig()
    scorer: ScorerConfig = ScorerConfig()

    def filter_map(self) -> dict:
        return {MovementKind.parse(k): tuple(v) for k, v in self.filters.items()}

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Same configuration with every component seed set to ``seed``."""
        return dataclasses.replace(
            self,
            seed=seed,
            net=dataclasses.replace(self.net, seed=seed),
            train=dataclasses.replace(self.train, seed=seed),
            boost=dataclasses.replace(self.boost, seed=seed),
        )

    def validate(self) -> "PipelineConfig":
        try:
            self.net.validate()
            self.train.validate()
            self.boost.validate()
        except Exception as exc:  # component validators raise their own types
            raise ConfigError(str(exc)) from None
        for name, wp in self.filters.items():
            if len(wp) != 2 or wp[1] >= wp[0] or wp[0] % 2 == 0:
                raise ConfigError(f"filters.{name}: need odd window > polyorder, got {list(wp)}")
        if self.cv.folds < 2:
            raise ConfigError("cv.folds must be >= 2")
        if self.stats.bootstrap < 1:
            raise ConfigError("stats.bootstrap must be >= 1")
        return self

    def to_dict(self) -> dict:
        return _to_plain(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [_to_plain(v) for v in obj]
    return obj


def _coerce(default, value, path):
    if dataclasses.is_dataclass(default):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _merge(default, value, path)
    if isinstance(default, tuple) or (default is None and isinstance(value, list)):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string")
    return value


def _merge(base, data: dict, path: str):
    known = {f.name: f for f in fields(base)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    updates = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        current = getattr(base, key)
        if key == "filters" and isinstance(base, PipelineConfig):
            updates[key] = _filters(current, value, sub)
        else:
            updates[key] = _coerce(current, value, sub)
    return dataclasses.replace(base, **updates)


def _filters(current, value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    out = dict(current)
    for name, wp in value.items():
        try:
            kind = MovementKind.parse(name)
        except ValueError:
            raise ConfigError(f"{path}: unknown movement {name!r}") from None
        if not (isinstance(wp, list) and len(wp) == 2 and all(isinstance(v, int) for v in wp)):
            raise ConfigError(f"{path}.{name}: expected [window, polyorder]")
        out[kind.value] = tuple(wp)
    return out


def from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return _merge(PipelineConfig(), data, "").validate()


def loads(text: str) -> PipelineConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return from_dict(data)


def load(path) -> PipelineConfig:
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
