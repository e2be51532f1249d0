"""Command line: ``dcabot gen | run | sweep | report``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from dcabot import engine
from dcabot.analysis import (
    TABLE_COLUMNS,
    Aggregate,
    classify,
    rows_to_csv,
    table_rows,
)
from dcabot.config import ConfigError, RunConfig, load_config
from dcabot.events import TraceError, read_dataset, write_dataset
from dcabot.pipeline import (
    DatasetSource,
    fixed_source,
    run_experiment,
    run_sweep,
    scenario_source,
)
from dcabot.scenarios import PRESETS, ScenarioConfigError, canonical_name, generate, preset


class StageError(click.ClickException):
    """Runtime failure attributed to one pipeline stage (exit code 1)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _scenario_label(name: str) -> str:
    try:
        return canonical_name(name)
    except KeyError:
        raise click.UsageError(f"unknown scenario {name!r}") from None


def _config(config_path, **overrides) -> RunConfig:
    try:
        return load_config(config_path, **overrides)
    except ConfigError as exc:
        raise click.UsageError(f"bad configuration: {exc}") from None


def _weights(name: str) -> engine.WeightMatrix:
    try:
        return engine.load_weights(name)
    except KeyError:
        raise click.UsageError(f"unknown weights {name!r} (use WS1..WS5, table1 or a JSON file)") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"bad weights file {name!r}: {exc}") from None


def _source(cfg: RunConfig) -> tuple[str, DatasetSource]:
    if cfg.trace and cfg.scenario:
        raise click.UsageError("give either --trace or --scenario, not both")
    if cfg.scenario:
        label = _scenario_label(cfg.scenario)
        return label, scenario_source(label, cfg.duration)
    if cfg.trace:
        try:
            dataset = read_dataset(cfg.trace)
        except OSError as exc:
            raise StageError("parse", str(exc)) from None
        except TraceError as exc:
            raise StageError("parse", f"{cfg.trace}: {exc}") from None
        return str(dataset.meta.get("scenario") or Path(cfg.trace).stem), fixed_source(dataset)
    raise click.UsageError("one of --trace or --scenario is required")


def _agg_to_dict(label: str, agg: Aggregate, cfg: RunConfig) -> dict:
    pvals = agg.mann_whitney(cfg.suspect)
    procs = []
    for pid, p in agg.processes.items():
        d = vars(p).copy()
        p_mcav, p_mac = pvals.get(pid, (None, None))
        d.update(p_mcav=p_mcav, p_mac=p_mac)
        procs.append(d)
    return {"experiment": label, "n_runs": agg.n_runs, "config": cfg.to_dict(), "processes": procs}


def _fmt_p(v: float | None, missing: str = "-", fmt: str = ".4f") -> str:
    return missing if v is None else format(v, fmt)


def _summary(label: str, processes: list[dict], threshold: float, classify_on: str) -> str:
    key = "mean_" + classify_on
    labels = classify({p["process_id"]: p[key] for p in processes}, threshold)
    lines = [
        f"experiment {label}  (label on mean {classify_on.upper()} > {threshold})",
        f"{'process':<10} {'pid':>6} {'antigen':>9} {'MCAV':>7} {'MAC':>7} {'p_MCAV':>8} {'p_MAC':>8}  label",
    ]
    for p in processes:
        lines.append(
            f"{p['name']:<10} {p['process_id']:>6} {p['mean_antigen']:>9.1f} {p['mean_mcav']:>7.4f} "
            f"{p['mean_mac']:>7.4f} {_fmt_p(p.get('p_mcav')):>8} {_fmt_p(p.get('p_mac')):>8}  "
            f"{labels[p['process_id']]}"
        )
    return "\n".join(lines) + "\n"


_common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI run configuration."),
    click.option("--weights", default=None, help="WS1..WS5, table1, or a JSON weight file."),
    click.option("--reps", type=int, default=None, help="Repetitions (default 10)."),
    click.option("--seed", type=int, default=None, help="Base seed; run i uses seed + i."),
    click.option("--threshold", type=float, default=None, help="Classification threshold (0.5; 0.2 alt)."),
    click.option("--classify-on", type=click.Choice(["mac", "mcav"]), default=None),
    click.option("--suspect", default=None, help="Process name tested against the rest (default bot)."),
    click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Dendritic cell algorithm bot detection on host event traces."""


@main.command()
@click.option("--scenario", required=True, help="Preset: " + ", ".join(PRESETS))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--duration", type=float, default=None, help="Session length in seconds.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def gen(scenario: str, seed: int, duration: float | None, out: str):
    """Generate a synthetic trace and its meta sidecar."""
    label = _scenario_label(scenario)
    try:
        dataset = generate(preset(label, seed=seed, duration=duration))
    except ScenarioConfigError as exc:
        raise click.UsageError(str(exc)) from None
    path = write_dataset(dataset, Path(out) / f"{label}_seed{seed}.csv")
    click.echo(str(path))


@main.command("run")
@click.option("--trace", type=click.Path(dir_okay=False), default=None)
@click.option("--scenario", default=None)
@click.option("--duration", type=float, default=None)
@common_options
def run_cmd(trace, scenario, duration, config_path, weights, reps, seed, threshold, classify_on, suspect, out):
    """Run the DCA repeatedly and write per-run and aggregate reports."""
    cfg = _config(config_path, trace=trace, scenario=scenario, duration=duration, weights=weights,
                  reps=reps, base_seed=seed, threshold=threshold, classify_on=classify_on,
                  suspect=suspect)
    w = _weights(cfg.weights)
    label, source = _source(cfg)
    try:
        reports, agg = run_experiment(source, w, cfg.settings, cfg.reps, cfg.base_seed)
    except TraceError as exc:
        raise StageError("parse", str(exc)) from None
    except Exception as exc:  # noqa: BLE001
        raise StageError("engine", f"{type(exc).__name__}: {exc}") from None

    out_dir = Path(out)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    for rep in reports:
        d = rep.to_dict()
        d["config"] = cfg.to_dict()
        _dump_json(out_dir / "runs" / f"run_seed{rep.seed}.json", d)
    summary = _agg_to_dict(label, agg, cfg)
    _dump_json(out_dir / "aggregate.json", summary)
    (out_dir / "table.csv").write_text(
        rows_to_csv(TABLE_COLUMNS, table_rows(label, agg, cfg.suspect)), encoding="utf-8")
    text = _summary(label, summary["processes"], cfg.settings.threshold, cfg.settings.classify_on)
    (out_dir / "summary.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command()
@click.option("--trace", "traces", multiple=True, type=click.Path(dir_okay=False))
@click.option("--scenario", "scenarios", multiple=True,
              help="Preset name, repeatable; 'attack' = E2.x sessions, 'all' = E1..E2.3.b.")
@click.option("--duration", type=float, default=None)
@common_options
def sweep(traces, scenarios, duration, config_path, weights, reps, seed, threshold, classify_on, suspect, out):
    """Run every weight set WS1..WS5 and tabulate mean suspect MCAV / MAC."""
    cfg = _config(config_path, reps=reps, base_seed=seed, threshold=threshold,
                  classify_on=classify_on, suspect=suspect)
    if weights is not None:
        raise click.UsageError("sweep always runs WS1..WS5; drop --weights")
    names: list[str] = []
    for s in scenarios:
        if s.lower() == "all":
            names.extend(k for k in PRESETS if k != "E3")
        elif s.lower() == "attack":
            names.extend(k for k in PRESETS if k.startswith("E2"))
        else:
            names.append(_scenario_label(s))
    sources: dict[str, DatasetSource] = {n: scenario_source(n, duration) for n in dict.fromkeys(names)}
    for t in traces:
        label, src = _source(RunConfig(settings=cfg.settings, trace=t))
        sources[label] = src
    if not sources:
        raise click.UsageError("give at least one --trace or --scenario")

    try:
        res = run_sweep(sources, cfg.settings, cfg.reps, cfg.base_seed, suspect=cfg.suspect)
    except Exception as exc:  # noqa: BLE001
        raise StageError("engine", f"{type(exc).__name__}: {exc}") from None

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["experiment", *res.presets]
    for metric, table in (("mcav", res.mean_mcav), ("mac", res.mean_mac)):
        rows = [[s, *(f"{table[(s, p)]:.4f}" for p in res.presets)] for s in res.sessions]
        (out_dir / f"sweep_{metric}.csv").write_text(rows_to_csv(header, rows), encoding="utf-8")
    wil_rows = []
    p_mcav, p_mac = res.pairwise_wilcoxon("mcav"), res.pairwise_wilcoxon("mac")
    for pair in p_mcav:
        wil_rows.append([*pair, _fmt_p(p_mcav[pair], "NA", ".6g"), _fmt_p(p_mac[pair], "NA", ".6g")])
    (out_dir / "sweep_wilcoxon.csv").write_text(
        rows_to_csv(["preset_a", "preset_b", "p_mcav", "p_mac"], wil_rows), encoding="utf-8")
    _dump_json(out_dir / "sweep.json", {
        "config": cfg.to_dict(),
        "sessions": res.sessions,
        "presets": res.presets,
        "runs_mcav": {f"{s}|{p}": v for (s, p), v in res.runs_mcav.items()},
        "runs_mac": {f"{s}|{p}": v for (s, p), v in res.runs_mac.items()},
    })
    click.echo((out_dir / "sweep_mcav.csv").read_text(), nl=False)
    click.echo((out_dir / "sweep_wilcoxon.csv").read_text(), nl=False)


@main.command()
@click.option("--in", "in_dir", type=click.Path(file_okay=False, exists=True), required=True,
              help="Output directory of a previous run.")
@click.option("--threshold", type=float, default=None, help="Re-label with another threshold.")
@click.option("--classify-on", type=click.Choice(["mac", "mcav"]), default=None)
def report(in_dir: str, threshold: float | None, classify_on: str | None):
    """Print the plain-text summary of a finished run."""
    path = Path(in_dir) / "aggregate.json"
    if not path.is_file():
        raise StageError("report", f"no aggregate.json in {in_dir}")
    data = json.loads(path.read_text(encoding="utf-8"))
    conf = data["config"]
    thr = conf["threshold"] if threshold is None else threshold
    if not 0 < thr < 1:
        raise click.UsageError("threshold must lie in (0, 1)")
    click.echo(_summary(data["experiment"], data["processes"], thr,
                        classify_on or conf["classify_on"]), nl=False)

