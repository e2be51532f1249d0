"""Anomaly coefficients (MCAV, MAC), labelling and run aggregation."""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from dcabot.stats import mann_whitney_u

ANOMALOUS = "anomalous"
NORMAL = "normal"
DEFAULT_THRESHOLD = 0.5
ALT_THRESHOLD = 0.2
SIGNIFICANCE = 0.05


@dataclass
class PresentationTally:
    """Per antigen type: total presentations (Y) and mature ones (Z)."""

    total: dict[str, int] = field(default_factory=dict)
    mature: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for x, y in self.total.items():
            z = self.mature.get(x, 0)
            if not 0 <= z <= y:
                raise ValueError(f"tally for {x!r} violates 0 <= Z <= Y ({z}, {y})")
        extra = set(self.mature) - set(self.total)
        if extra:
            raise ValueError(f"mature counts without totals: {sorted(extra)}")

    @classmethod
    def from_records(cls, records: Iterable) -> PresentationTally:
        total: Counter = Counter()
        mature: Counter = Counter()
        for r in records:
            total[r.antigen_type] += 1
            if r.context == 1:
                mature[r.antigen_type] += 1
        return cls(dict(total), {x: mature.get(x, 0) for x in total})


def compute_mcav(tally: PresentationTally) -> dict[str, float]:
    return {x: tally.mature.get(x, 0) / y for x, y in tally.total.items() if y > 0}


def compute_mac(mcav: Mapping[str, float], antigen_counts: Mapping[str, int]) -> dict[str, float]:
    """MCAV scaled by each process's share of all output antigen."""
    if not mcav:
        return {}
    if set(mcav) != set(antigen_counts):
        raise ValueError("mcav and antigen_counts must share keys")
    total = sum(antigen_counts.values())
    if total <= 0:
        raise ValueError("antigen counts must be positive")
    return {x: mcav[x] * antigen_counts[x] / total for x in mcav}


def classify(values: Mapping[str, float], threshold: float) -> dict[str, str]:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    return {x: ANOMALOUS if v > threshold else NORMAL for x, v in values.items()}


@dataclass
class ProcessScore:
    process_id: str
    name: str
    antigen_count: int
    mcav: float
    mac: float
    label: str


@dataclass
class AnalysisReport:
    processes: dict[str, ProcessScore]
    threshold: float = DEFAULT_THRESHOLD
    classify_on: str = "mac"
    weights: str | None = None
    seed: int | None = None
    dropped: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_tally(
        cls,
        tally: PresentationTally,
        names: Mapping[str, str] | None = None,
        threshold: float = DEFAULT_THRESHOLD,
        classify_on: str = "mac",
        **kwargs,
    ) -> AnalysisReport:
        if classify_on not in ("mac", "mcav"):
            raise ValueError("classify_on must be 'mac' or 'mcav'")
        names = names or {}
        mcav = compute_mcav(tally)
        counts = {x: tally.total[x] for x in mcav}
        mac = compute_mac(mcav, counts)
        labels = classify(mac if classify_on == "mac" else mcav, threshold)
        procs = {
            x: ProcessScore(x, names.get(x, x), counts[x], mcav[x], mac[x], labels[x])
            for x in sorted(mcav, key=_pid_key)
        }
        return cls(procs, threshold=threshold, classify_on=classify_on, **kwargs)

    def by_name(self, name: str) -> ProcessScore:
        for p in self.processes.values():
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "classify_on": self.classify_on,
            "weights": self.weights,
            "seed": self.seed,
            "dropped": self.dropped,
            "meta": self.meta,
            "processes": [vars(p) for p in self.processes.values()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> AnalysisReport:
        procs = {p["process_id"]: ProcessScore(**p) for p in d["processes"]}
        return cls(procs, d["threshold"], d["classify_on"], d["weights"], d["seed"],
                   d["dropped"], d.get("meta", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _pid_key(pid: str) -> tuple:
    return (0, int(pid), "") if pid.isdigit() else (1, 0, pid)


@dataclass
class ProcessAggregate:
    process_id: str
    name: str
    mean_antigen: float
    mean_mcav: float
    mean_mac: float
    mcav_runs: list[float]
    mac_runs: list[float]
    antigen_runs: list[int]


@dataclass
class Aggregate:
    processes: dict[str, ProcessAggregate]
    n_runs: int

    def by_name(self, name: str) -> ProcessAggregate:
        for p in self.processes.values():
            if p.name == name:
                return p
        raise KeyError(name)

    def reference(self, suspect: str = "bot") -> ProcessAggregate | None:
        """The named suspect if present, else the process with highest mean MAC."""
        if not self.processes:
            return None
        try:
            return self.by_name(suspect)
        except KeyError:
            return max(self.processes.values(), key=lambda p: (p.mean_mac, p.process_id))

    def mann_whitney(self, suspect: str = "bot") -> dict[str, tuple[float, float]]:
        """p-values (MCAV, MAC) of the suspect against every other process."""
        ref = self.reference(suspect)
        out: dict[str, tuple[float, float]] = {}
        if ref is None:
            return out
        for pid, p in self.processes.items():
            if pid == ref.process_id:
                continue
            out[pid] = (
                mann_whitney_u(ref.mcav_runs, p.mcav_runs)[1],
                mann_whitney_u(ref.mac_runs, p.mac_runs)[1],
            )
        return out

    def to_dict(self) -> dict:
        return {"n_runs": self.n_runs, "processes": [vars(p) for p in self.processes.values()]}


def aggregate_runs(reports: Sequence[AnalysisReport]) -> Aggregate:
    """Per-process means over runs, keeping the per-run vectors.

    A process absent from a run (no presentations) is skipped for that run.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    seen: dict[str, list[ProcessScore]] = {}
    for rep in reports:
        for pid, score in rep.processes.items():
            seen.setdefault(pid, []).append(score)
    procs = {}
    for pid in sorted(seen, key=_pid_key):
        scores = seen[pid]
        procs[pid] = ProcessAggregate(
            process_id=pid,
            name=scores[0].name,
            mean_antigen=statistics.fmean(s.antigen_count for s in scores),
            mean_mcav=statistics.fmean(s.mcav for s in scores),
            mean_mac=statistics.fmean(s.mac for s in scores),
            mcav_runs=[s.mcav for s in scores],
            mac_runs=[s.mac for s in scores],
            antigen_runs=[s.antigen_count for s in scores],
        )
    return Aggregate(procs, len(reports))


TABLE_COLUMNS = ["experiment", "process", "output_antigen", "mean_mcav", "mean_mac", "p_mcav", "p_mac"]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def table_rows(experiment: str, agg: Aggregate, suspect: str = "bot") -> list[list[str]]:
    """Rows of the per-process results table; p-values sit on the non-suspect rows."""
    pvals = agg.mann_whitney(suspect)
    ref = agg.reference(suspect)
    ordered = sorted(agg.processes.values(), key=lambda p: (p is not ref, _pid_key(p.process_id)))
    rows = []
    for p in ordered:
        p_mcav, p_mac = pvals.get(p.process_id, (None, None))
        rows.append([experiment, p.name, f"{p.mean_antigen:.1f}", _fmt(p.mean_mcav),
                     _fmt(p.mean_mac), _fmt(p_mcav), _fmt(p_mac)])
    return rows


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
