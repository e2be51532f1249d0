"""End-to-end runs: dataset -> DC engine -> AnalysisReport, repeated and swept."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable

from dcabot import engine
from dcabot.analysis import (
    DEFAULT_THRESHOLD,
    Aggregate,
    AnalysisReport,
    aggregate_runs,
)
from dcabot.engine import PRESETS, PopulationConfig, WeightMatrix
from dcabot.events import Dataset
from dcabot.scenarios import generate, preset
from dcabot.signals import NormalizationConfig
from dcabot.stats import wilcoxon_signed_rank

SWEEP_PRESETS = tuple(PRESETS)  # WS1..WS5


@dataclass(frozen=True)
class RunSettings:
    norm: NormalizationConfig = field(default_factory=NormalizationConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    threshold: float = DEFAULT_THRESHOLD
    classify_on: str = "mac"

    def to_dict(self) -> dict:
        return {
            "normalization": self.norm.to_dict(),
            "population": self.population.to_dict(),
            "threshold": self.threshold,
            "classify_on": self.classify_on,
        }


def analyse(dataset: Dataset, weights: WeightMatrix, settings: RunSettings, seed: int) -> AnalysisReport:
    """One DCA pass over ``dataset`` with the engine seeded by ``seed``."""
    pop = replace(settings.population, rng_seed=seed)
    result = engine.run(dataset, settings.norm, pop, weights)
    return AnalysisReport.from_tally(
        result.tally,
        names=dataset.process_names(),
        threshold=settings.threshold,
        classify_on=settings.classify_on,
        weights=weights.preset_name or "custom",
        seed=seed,
        dropped=result.dropped,
        meta={"scenario": dataset.meta.get("scenario"), "sampled": result.sampled},
    )


DatasetSource = Callable[[int], Dataset]


def scenario_source(scenario_id: str, duration: float | None = None) -> DatasetSource:
    """A fresh generated dataset per run seed."""
    return lambda seed: generate(preset(scenario_id, seed=seed, duration=duration))


def fixed_source(dataset: Dataset) -> DatasetSource:
    return lambda seed: dataset


def run_seeds(base_seed: int, reps: int) -> list[int]:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    return [base_seed + i for i in range(reps)]


def run_experiment(
    source: DatasetSource,
    weights: WeightMatrix,
    settings: RunSettings,
    reps: int = 10,
    base_seed: int = 0,
) -> tuple[list[AnalysisReport], Aggregate]:
    reports = [analyse(source(s), weights, settings, s) for s in run_seeds(base_seed, reps)]
    return reports, aggregate_runs(reports)


@dataclass
class SweepResult:
    """Mean suspect MCAV/MAC per (session, weight set), plus per-run vectors."""

    sessions: list[str]
    presets: list[str]
    mean_mcav: dict[tuple[str, str], float | None]
    mean_mac: dict[tuple[str, str], float | None]
    runs_mcav: dict[tuple[str, str], list[float]]
    runs_mac: dict[tuple[str, str], list[float]]
    reps: int

    def pairwise_wilcoxon(self, metric: str = "mcav") -> dict[tuple[str, str], float | None]:
        """Paired signed-rank p-value per preset pair, pooled over sessions and runs.

        ``None`` when a single repetition was run.
        """
        runs = self.runs_mcav if metric == "mcav" else self.runs_mac
        out: dict[tuple[str, str], float | None] = {}
        for a, b in itertools.combinations(self.presets, 2):
            if self.reps < 2:
                out[(a, b)] = None
                continue
            diffs = [
                y - x
                for sess in self.sessions
                for x, y in zip(runs[(sess, a)], runs[(sess, b)])
            ]
            out[(a, b)] = wilcoxon_signed_rank(diffs)[1] if diffs else None
        return out


def _suspect_score(report: AnalysisReport, suspect: str, metric: str) -> float:
    """Suspect value in one run; a suspect with no presentations scores 0."""
    try:
        p = report.by_name(suspect)
    except KeyError:
        return 0.0
    return p.mcav if metric == "mcav" else p.mac


def run_sweep(
    sources: dict[str, DatasetSource],
    settings: RunSettings,
    reps: int = 10,
    base_seed: int = 0,
    presets: tuple[str, ...] = SWEEP_PRESETS,
    suspect: str = "bot",
) -> SweepResult:
    """Every session x weight set x repetition; datasets are shared across weight sets."""
    seeds = run_seeds(base_seed, reps)
    mean_mcav, mean_mac, runs_mcav, runs_mac = {}, {}, {}, {}
    for sess, source in sources.items():
        datasets = [source(s) for s in seeds]
        for name in presets:
            w = engine.get_preset(name)
            reports = [analyse(ds, w, settings, s) for ds, s in zip(datasets, seeds)]
            runs_mcav[(sess, name)] = [_suspect_score(r, suspect, "mcav") for r in reports]
            runs_mac[(sess, name)] = [_suspect_score(r, suspect, "mac") for r in reports]
            mean_mcav[(sess, name)] = sum(runs_mcav[(sess, name)]) / reps
            mean_mac[(sess, name)] = sum(runs_mac[(sess, name)]) / reps
    return SweepResult(list(sources), list(presets), mean_mcav, mean_mac, runs_mcav, runs_mac, reps)
