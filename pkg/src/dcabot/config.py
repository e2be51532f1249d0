"""Run configuration: INI file plus command-line overrides.

Example file::

    [normalization]
    n_p = 20
    n_d = 10
    n_s1 = 5
    n_s2 = 20
    window = 1000

    [population]
    population_size = 100
    threshold_lo = 200
    threshold_hi = 800
    antigen_store_capacity = 50
    # antigen_per_cell_per_step = 5

    [run]
    weights = WS3
    reps = 10
    seed = 0
    threshold = 0.5
    classify_on = mac
    suspect = bot
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from dcabot.engine import DEFAULT_PRESET, PopulationConfig
from dcabot.pipeline import RunSettings
from dcabot.signals import NormalizationConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    settings: RunSettings = field(default_factory=RunSettings)
    weights: str = DEFAULT_PRESET
    reps: int = 10
    base_seed: int = 0
    suspect: str = "bot"
    trace: str | None = None
    scenario: str | None = None
    duration: float | None = None

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0 < self.settings.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.settings.classify_on not in ("mac", "mcav"):
            raise ConfigError("classify_on must be 'mac' or 'mcav'")

    def to_dict(self) -> dict:
        return {
            **self.settings.to_dict(),
            "weights": self.weights,
            "reps": self.reps,
            "base_seed": self.base_seed,
            "suspect": self.suspect,
            "trace": self.trace,
            "scenario": self.scenario,
            "duration": self.duration,
        }


_NORM_KEYS = {"n_p": float, "n_d": float, "n_s1": float, "n_s2": float, "window": int}
_POP_KEYS = {"population_size": int, "antigen_store_capacity": int,
             "antigen_per_cell_per_step": int, "rng_seed": int}


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    return dict(parser[name]) if parser.has_section(name) else {}


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        if not parser.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read config file {path}")
    try:
        norm_kw = {k: _NORM_KEYS[k](v) for k, v in _section(parser, "normalization").items()
                   if k in _NORM_KEYS}
        pop_raw = _section(parser, "population")
        pop_kw = {k: _POP_KEYS[k](v) for k, v in pop_raw.items() if k in _POP_KEYS}
        base_pop = PopulationConfig()
        lo = float(pop_raw.get("threshold_lo", base_pop.threshold_range[0]))
        hi = float(pop_raw.get("threshold_hi", base_pop.threshold_range[1]))
        run_raw = _section(parser, "run")
        norm = NormalizationConfig(**norm_kw)
        pop = replace(base_pop, threshold_range=(lo, hi), **pop_kw)
        settings = RunSettings(
            norm=norm,
            population=pop,
            threshold=float(run_raw.get("threshold", RunSettings.threshold)),
            classify_on=run_raw.get("classify_on", RunSettings.classify_on),
        )
        values = {
            "weights": run_raw.get("weights", DEFAULT_PRESET),
            "reps": int(run_raw.get("reps", 10)),
            "base_seed": int(run_raw.get("seed", 0)),
            "suspect": run_raw.get("suspect", "bot"),
            "trace": run_raw.get("trace"),
            "scenario": run_raw.get("scenario"),
            "duration": float(run_raw["duration"]) if "duration" in run_raw else None,
        }
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    threshold = overrides.pop("threshold", None)
    classify_on = overrides.pop("classify_on", None)
    if threshold is not None:
        settings = replace(settings, threshold=threshold)
    if classify_on is not None:
        settings = replace(settings, classify_on=classify_on)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(settings=settings, **values)
