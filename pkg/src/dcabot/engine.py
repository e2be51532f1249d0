"""Dendritic cell population: signal fusion, migration and antigen presentation."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from dcabot.analysis import PresentationTally
from dcabot.events import ANTIGEN, AntigenEvent, Dataset
from dcabot.signals import NormalizationConfig, SignalSample, iter_signals

OUTPUTS = ("csm", "semi", "mat")
INPUTS = ("pamp", "ds", "ss")


@dataclass(frozen=True)
class WeightMatrix:
    """Rows are outputs (csm, semi, mat), columns inputs (PAMP, DS, SS)."""

    csm: tuple[float, float, float]
    semi: tuple[float, float, float]
    mat: tuple[float, float, float]
    preset_name: str | None = None

    def __post_init__(self) -> None:
        for name in OUTPUTS:
            row = getattr(self, name)
            if len(row) != 3:
                raise ValueError(f"{name} row needs 3 weights, got {len(row)}")
            object.__setattr__(self, name, tuple(float(v) for v in row))

    @property
    def rows(self) -> tuple[tuple[float, float, float], ...]:
        return (self.csm, self.semi, self.mat)

    def to_dict(self) -> dict:
        return {"preset": self.preset_name, "csm": list(self.csm),
                "semi": list(self.semi), "mat": list(self.mat)}

    @classmethod
    def from_dict(cls, d: dict, name: str | None = None) -> WeightMatrix:
        return cls(tuple(d["csm"]), tuple(d["semi"]), tuple(d["mat"]),
                   preset_name=d.get("preset", name))


# weight sets WS1..WS5; WS3 is the reference set
PRESETS: dict[str, WeightMatrix] = {
    "WS1": WeightMatrix((2, 1, 2), (0, 0, 1), (2, 1, -3), "WS1"),
    "WS2": WeightMatrix((4, 2, 6), (0, 0, 1), (8, 4, -12), "WS2"),
    "WS3": WeightMatrix((4, 2, 3), (0, 0, 1), (8, 4, -6), "WS3"),
    "WS4": WeightMatrix((2, 1, 1.5), (0, 0, 1), (8, 4, -6), "WS4"),
    "WS5": WeightMatrix((8, 4, 0.6), (0, 0, 1), (16, 8, -1.2), "WS5"),
}
PRESET_ALIASES = {"table1": "WS3"}
DEFAULT_PRESET = "WS3"


def get_preset(name: str) -> WeightMatrix:
    key = PRESET_ALIASES.get(name.lower(), name.upper())
    try:
        return PRESETS[key]
    except KeyError:
        raise KeyError(f"unknown weight preset {name!r}") from None


def load_weights(name: str) -> WeightMatrix:
    """Resolve a preset name, or load a JSON file with csm/semi/mat rows."""
    try:
        return get_preset(name)
    except KeyError:
        pass
    path = Path(name)
    if not path.is_file():
        raise KeyError(f"unknown weight preset {name!r}")
    return WeightMatrix.from_dict(json.loads(path.read_text()), name=path.stem)


def fuse_signals(s: SignalSample, w: WeightMatrix) -> tuple[float, float, float]:
    p, d, sf = s.pamp, s.ds, s.ss
    return tuple(r[0] * p + r[1] * d + r[2] * sf for r in w.rows)  # type: ignore[return-value]


@dataclass(frozen=True)
class PopulationConfig:
    population_size: int = 100
    threshold_range: tuple[float, float] = (200.0, 800.0)
    antigen_store_capacity: int = 50
    antigen_per_cell_per_step: int | None = None  # None: bounded only by capacity
    rng_seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.threshold_range
        object.__setattr__(self, "threshold_range", (float(lo), float(hi)))
        if not 0 < lo <= hi:
            raise ValueError("threshold_range must satisfy 0 < lo <= hi")
        if self.population_size < 1 or self.antigen_store_capacity < 1:
            raise ValueError("population_size and antigen_store_capacity must be positive")
        if self.antigen_per_cell_per_step is not None and self.antigen_per_cell_per_step < 1:
            raise ValueError("antigen_per_cell_per_step must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["threshold_range"] = list(self.threshold_range)
        return d


@dataclass
class DendriticCell:
    id: int
    migration_threshold: float
    cum_csm: float = 0.0
    cum_semi: float = 0.0
    cum_mat: float = 0.0
    antigen_store: list[str] = field(default_factory=list)

    def absorb(self, outputs: tuple[float, float, float]) -> None:
        csm, semi, mat = outputs
        self.cum_csm += csm
        self.cum_semi += semi
        self.cum_mat += mat

    @property
    def context(self) -> int:
        return 0 if self.cum_semi > self.cum_mat else 1


@dataclass(frozen=True, slots=True)
class PresentationRecord:
    antigen_type: str
    context: int
    cell_id: int


class Population:
    """Fixed-size DC population; migrated cells are replaced immediately."""

    def __init__(self, cfg: PopulationConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.rng_seed)
        self._ids = itertools.count()
        self.cells = [self._new_cell() for _ in range(cfg.population_size)]
        self.sampled = 0
        self.dropped = 0

    def _new_cell(self) -> DendriticCell:
        lo, hi = self.cfg.threshold_range
        return DendriticCell(id=next(self._ids), migration_threshold=self.rng.uniform(lo, hi))

    def __len__(self) -> int:
        return len(self.cells)

    def assign(self, antigen: Sequence[AntigenEvent]) -> None:
        """Give each antigen to one uniformly chosen cell that can take it.

        Antigen is dropped when no cell has room.
        """
        cap = self.cfg.antigen_store_capacity
        per_step = self.cfg.antigen_per_cell_per_step
        n = len(self.cells)
        received = [0] * n if per_step is not None else None

        def available(i: int) -> bool:
            if len(self.cells[i].antigen_store) >= cap:
                return False
            return received is None or received[i] < per_step

        n_open = sum(1 for i in range(n) if available(i))
        for ag in antigen:
            self.sampled += 1
            if n_open == 0:
                self.dropped += 1
                continue
            # rejection sampling == uniform over available cells
            while True:
                i = self.rng.randrange(n)
                if available(i):
                    break
            self.cells[i].antigen_store.append(ag.antigen_type)
            if received is not None:
                received[i] += 1
            if not available(i):
                n_open -= 1

    def update(self, outputs: tuple[float, float, float]) -> list[PresentationRecord]:
        """Add outputs to every cell, then migrate and replace mature ones."""
        out: list[PresentationRecord] = []
        for i, cell in enumerate(self.cells):
            cell.absorb(outputs)
            if cell.cum_csm >= cell.migration_threshold:
                out.extend(present(cell))
                self.cells[i] = self._new_cell()
        return out

    def drain(self) -> list[PresentationRecord]:
        """Force-migrate every live cell (end of stream)."""
        out: list[PresentationRecord] = []
        for cell in self.cells:
            out.extend(present(cell))
            cell.antigen_store.clear()
        return out


def present(cell: DendriticCell) -> list[PresentationRecord]:
    ctx = cell.context
    return [PresentationRecord(a, ctx, cell.id) for a in cell.antigen_store]


def step(
    population: Population,
    sample: SignalSample,
    new_antigen: Sequence[AntigenEvent],
    w: WeightMatrix,
) -> list[PresentationRecord]:
    """Store antigen, then fuse the sample into every cell and migrate."""
    population.assign(new_antigen)
    return population.update(fuse_signals(sample, w))


@dataclass
class RunResult:
    records: list[PresentationRecord]
    tally: PresentationTally
    sampled: int
    dropped: int
    steps: int
    population_sizes: list[int] = field(default_factory=list)

    @property
    def presented(self) -> int:
        return len(self.records)


def run(
    dataset: Dataset,
    norm: NormalizationConfig,
    pop: PopulationConfig,
    w: WeightMatrix,
    on_step: Callable[[int, Population], None] | None = None,
) -> RunResult:
    """Process a whole dataset window by window, then drain the population."""
    population = Population(pop)
    width = norm.window

    antigen = [it.payload for it in dataset.events if it.kind == ANTIGEN]
    by_window = {k: list(g) for k, g in itertools.groupby(antigen, key=lambda a: a.ts // width)}
    samples = {s.ts // width: s for s in iter_signals(dataset, norm)}
    last = max(itertools.chain(by_window, samples), default=-1)

    records: list[PresentationRecord] = []
    sizes: list[int] = []
    for k in range(last + 1):
        sample = samples.get(k) or SignalSample(k * width, 0.0, 0.0, 0.0)
        records.extend(step(population, sample, by_window.get(k, ()), w))
        sizes.append(len(population))
        if on_step is not None:
            on_step(k, population)
    if last >= 0:
        records.extend(population.drain())

    return RunResult(
        records=records,
        tally=PresentationTally.from_records(records),
        sampled=population.sampled,
        dropped=population.dropped,
        steps=last + 1,
        population_sizes=sizes,
    )


def records_to_csv(records: Sequence[PresentationRecord]) -> str:
    lines = ["cell_id,antigen_type,context"]
    lines.extend(f"{r.cell_id},{r.antigen_type},{r.context}" for r in records)
    return "\n".join(lines) + "\n"
