"""Seeded synthetic host traces for the inactive / attack / normal sessions.

Each process is a :class:`ProcessProfile` with a set of behaviours. A bot
with attack behaviours runs on an episode schedule: each episode opens with a
botmaster command on the C&C channel (the bot's ``chat`` behaviour), answered
after a short latency, and the keylogging or flooding behaviours are active
until it ends. Floods are steered by further commands for their whole length.

Rates are modelling choices, not measurements; they are calibrated so that
bot activity is bursty, fast and command-driven while normal applications
are slow and intermittent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from dcabot.events import (
    COMMUNICATION,
    FILE_ACCESS,
    INBOUND,
    KEYBOARD_STATE,
    OUTBOUND,
    Dataset,
    EventRecord,
    build_dataset,
)

SCENARIOS = ("E1", "E2_1", "E2_2", "E2_3", "E3")
SPY_LIKE = "spy_like"  # SYN flooding variant
SD_LIKE = "sd_like"  # UDP flooding variant

BEHAVIOURS = frozenset(
    {
        "idle_ping",
        "chat",
        "file_transfer",
        "keylog_burst",
        "flood_syn_like",
        "flood_udp_like",
        "editor_keys",
        "file_io",
    }
)
ATTACKS = frozenset({"keylog_burst", "flood_syn_like", "flood_udp_like"})
FLOODS = frozenset({"flood_syn_like", "flood_udp_like"})
INTERACTIVE = frozenset({"chat", "editor_keys", "file_transfer"})

# (lo, hi) pairs are uniform ranges; times in seconds
DEFAULTS: dict[str, dict] = {
    "idle_ping": {"interval": (20.0, 40.0), "latency": (0.02, 0.3)},
    "chat": {
        "send_gap": (25.0, 120.0),
        "reply_latency": (12.0, 60.0),
        "reply_prob": 0.6,
        "incoming_rate": 1 / 40,
        # command-channel mode (bots with attack behaviours)
        "command_gap": (3.0, 8.0),
        "response_latency": (0.5, 5.0),
    },
    "keylog_burst": {
        "poll_fraction": (0.1, 0.4),
        "calls": ("GetAsyncKeyState", "GetKeyboardState"),
    },
    "flood_syn_like": {"gap": (0.001, 0.050)},
    "flood_udp_like": {"gap": (0.001, 0.050)},
    "editor_keys": {
        "session_gap": (20.0, 60.0),
        "session_len": (5.0, 20.0),
        "rate": (0.3, 1.2),
        "calls": ("GetKeyboardState",),
    },
    "file_io": {"interval": (10.0, 60.0), "ops": (1, 3)},
    "file_transfer": {
        "at": (0.3, 0.7),  # fraction of the session
        "size": 10 * 1024,
        "chunk": 4096,
        "chunk_gap": (0.05, 0.2),
    },
}
EPISODES = {"first": (2.0, 10.0), "length": (15.0, 45.0), "rest": (40.0, 120.0)}

PIDS = {"bot": "2104", "IRC": "1880", "cmd": "1012", "Notepad": "2236",
        "Wordpad": "2352", "hook": "1660"}


class ScenarioConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessProfile:
    name: str
    behaviors: tuple[str, ...]
    params: dict[str, dict] = field(default_factory=dict)
    pid: str = ""

    def __post_init__(self) -> None:
        unknown = set(self.behaviors) - BEHAVIOURS
        if unknown:
            raise ScenarioConfigError(f"{self.name}: unknown behaviours {sorted(unknown)}")
        if not self.pid:
            object.__setattr__(self, "pid", PIDS.get(self.name, str(3000 + sum(map(ord, self.name)))))

    def param(self, behavior: str, key: str):
        return self.params.get(behavior, {}).get(key, DEFAULTS[behavior][key])

    @property
    def is_attacker(self) -> bool:
        return bool(ATTACKS & set(self.behaviors))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    duration: float
    processes: tuple[ProcessProfile, ...]
    seed: int = 0
    bot_variant: str = SPY_LIKE
    label: str = ""
    n_p: float = 20.0  # keyboard calls/s at full key-press rate

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ScenarioConfigError(f"unknown scenario {self.scenario!r}")
        if self.duration <= 0:
            raise ScenarioConfigError("duration must be positive")
        if self.seed < 0:
            raise ScenarioConfigError("seed must be non-negative")
        if self.bot_variant not in (SPY_LIKE, SD_LIKE):
            raise ScenarioConfigError(f"unknown bot variant {self.bot_variant!r}")
        names = [p.name for p in self.processes]
        if len(set(names)) != len(names):
            raise ScenarioConfigError("duplicate process names")
        for p in self.processes:
            attacks = ATTACKS & set(p.behaviors)
            if attacks and self.scenario in ("E1", "E3"):
                raise ScenarioConfigError(f"{self.scenario} does not allow attack behaviour ({p.name})")
            if "flood_syn_like" in attacks and self.bot_variant != SPY_LIKE:
                raise ScenarioConfigError("SYN-like flooding needs the spy_like variant")
            if "flood_udp_like" in attacks and self.bot_variant != SD_LIKE:
                raise ScenarioConfigError("UDP-like flooding needs the sd_like variant")
        if self.scenario == "E3" and "bot" in names:
            raise ScenarioConfigError("E3 runs without a bot")
        if self.scenario == "E2_2":
            for p in self.processes:
                if not p.is_attacker and INTERACTIVE & set(p.behaviors):
                    raise ScenarioConfigError(f"E2_2 runs no interactive applications ({p.name})")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "label": self.label,
            "duration": self.duration,
            "seed": self.seed,
            "bot_variant": self.bot_variant,
            "n_p": self.n_p,
            "processes": [
                {"name": p.name, "pid": p.pid, "behaviors": list(p.behaviors), "params": p.params}
                for p in self.processes
            ],
        }


def _p(name: str, *behaviors: str, **params) -> ProcessProfile:
    return ProcessProfile(name, behaviors, params)


_EDITORS = (
    _p("cmd", "editor_keys", "file_io", editor_keys={"calls": ("GetKeyNameText",), "rate": (0.3, 0.8)}),
    _p("Notepad", "editor_keys", "file_io"),
    _p("Wordpad", "editor_keys", "file_io", editor_keys={"calls": ("GetKeyboardState", "GetKeyNameText")}),
)
_QUIET_EDITORS = tuple(
    replace(p, params={**p.params, "editor_keys": {**p.params.get("editor_keys", {}),
                                                   "session_gap": (60.0, 180.0)}})
    for p in _EDITORS
)

# label -> (scenario, variant, duration s, processes)
PRESETS: dict[str, tuple[str, str, float, tuple[ProcessProfile, ...]]] = {
    "E1": ("E1", SPY_LIKE, 600.0, (
        _p("bot", "idle_ping"),
        _p("IRC", "idle_ping", idle_ping={"interval": (45.0, 75.0)}),
        *_QUIET_EDITORS,
    )),
    "E2.1.a": ("E2_1", SD_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "keylog_burst"),
        _p("IRC", "idle_ping", "chat"),
    )),
    "E2.1.b": ("E2_1", SD_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "keylog_burst"),
        _p("IRC", "idle_ping", "chat"),
        *_EDITORS,
    )),
    "E2.2.a": ("E2_2", SPY_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "flood_syn_like"),
        _p("IRC", "idle_ping"),
        _p("cmd", "file_io"),
    )),
    "E2.2.b": ("E2_2", SD_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "flood_udp_like"),
        _p("IRC", "idle_ping"),
    )),
    "E2.3.a": ("E2_3", SPY_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "keylog_burst", "flood_syn_like"),
        _p("IRC", "idle_ping", "chat"),
    )),
    "E2.3.b": ("E2_3", SPY_LIKE, 300.0, (
        _p("bot", "idle_ping", "chat", "keylog_burst", "flood_syn_like"),
        _p("IRC", "idle_ping", "chat"),
        *_EDITORS,
    )),
    "E3": ("E3", SPY_LIKE, 600.0, (
        _p("IRC", "idle_ping", "chat", "file_transfer", idle_ping={"interval": (90.0, 180.0)}),
        *_EDITORS,
        _p("hook", "file_io", file_io={"interval": (5.0, 30.0)}),
    )),
}
ATTACK_SESSIONS = ("E2.1.a", "E2.1.b", "E2.2.a", "E2.2.b", "E2.3.a", "E2.3.b")


def canonical_name(scenario_id: str) -> str:
    """Normalise ``E2_3_b`` / ``e2.3.b`` / ``E2_1`` to a preset label."""
    key = scenario_id.strip().upper().replace("_", ".")
    parts = key.split(".")
    if len(parts) == 3:
        key = f"{parts[0]}.{parts[1]}.{parts[2].lower()}"
    elif len(parts) == 2:
        key = f"{parts[0]}.{parts[1]}.a"
    if key not in PRESETS:
        raise KeyError(f"unknown scenario {scenario_id!r}")
    return key


def preset(scenario_id: str, seed: int = 0, duration: float | None = None) -> ScenarioConfig:
    label = canonical_name(scenario_id)
    scenario, variant, default_duration, procs = PRESETS[label]
    return ScenarioConfig(
        scenario=scenario,
        duration=default_duration if duration is None else duration,
        processes=procs,
        seed=seed,
        bot_variant=variant,
        label=label,
    )


# --- event emission ---------------------------------------------------------

Emitted = list[tuple[float, str, str, str | None]]  # (t, category, call, direction)


def _u(rng: np.random.Generator, bounds) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi))


def _renewal(rng, start: float, end: float, gap) -> np.ndarray:
    """Event times from ``start`` with i.i.d. uniform gaps, strictly before ``end``."""
    lo, hi = gap
    out = []
    t = start
    mean = (lo + hi) / 2
    while t < end:
        n = int((end - t) / mean) + 16
        times = t + np.cumsum(rng.uniform(lo, hi, size=n))
        out.append(times[times < end])
        t = float(times[-1])
    return np.concatenate(out) if out else np.empty(0)


def _poisson(rng, start: float, end: float, rate: float) -> np.ndarray:
    if rate <= 0 or end <= start:
        return np.empty(0)
    n = rng.poisson(rate * (end - start))
    return np.sort(rng.uniform(start, end, size=n))


def _episodes(rng, duration: float) -> list[tuple[float, float]]:
    eps = []
    t = _u(rng, EPISODES["first"])
    while t < duration:
        end = min(duration, t + _u(rng, EPISODES["length"]))
        eps.append((t, end))
        t = end + _u(rng, EPISODES["rest"])
    return eps


def _comm(t: float, call: str) -> tuple[float, str, str, str]:
    direction = INBOUND if call in ("recv", "recvfrom") else OUTBOUND
    return (t, COMMUNICATION, call, direction)


def _idle_ping(prof, rng, cfg, episodes) -> Emitted:
    out: Emitted = []
    start = _u(rng, (0.0, prof.param("idle_ping", "interval")[1]))
    for t in _renewal(rng, start, cfg.duration, prof.param("idle_ping", "interval")):
        out.append(_comm(t, "recv"))  # server PING
        out.append(_comm(t + _u(rng, prof.param("idle_ping", "latency")), "send"))  # PONG
    return out


def _chat(prof, rng, cfg, episodes) -> Emitted:
    out: Emitted = []
    if prof.is_attacker:
        # C&C channel: one command starts each episode; floods are driven by a
        # stream of further commands while they last
        for s, e in episodes:
            times = [s]
            if FLOODS & set(prof.behaviors):
                times.extend(_renewal(rng, s, e, prof.param("chat", "command_gap")))
            for t in times:
                out.append(_comm(t, "recv"))
                out.append(_comm(t + _u(rng, prof.param("chat", "response_latency")), "send"))
        return out
    start = _u(rng, (0.0, prof.param("chat", "send_gap")[0]))
    last = 0.0
    for t in _renewal(rng, start, cfg.duration, prof.param("chat", "send_gap")):
        if rng.random() < prof.param("chat", "reply_prob"):
            r = t - _u(rng, prof.param("chat", "reply_latency"))
            if r > last:
                out.append(_comm(r, "recv"))
        out.append(_comm(t, "send"))
        last = t
    out.extend(_comm(t, "recv") for t in _poisson(rng, 0.0, cfg.duration, prof.param("chat", "incoming_rate")))
    return out


def _keylog_burst(prof, rng, cfg, episodes) -> Emitted:
    out: Emitted = []
    calls = prof.param("keylog_burst", "calls")
    for s, e in episodes:
        rate = _u(rng, prof.param("keylog_burst", "poll_fraction")) * cfg.n_p
        times = _poisson(rng, s, e, rate)
        picks = rng.integers(0, len(calls), size=len(times))
        out.extend((t, KEYBOARD_STATE, calls[i], None) for t, i in zip(times, picks))
    return out


def _flood(prof, rng, cfg, episodes, behavior: str) -> Emitted:
    out: Emitted = []
    for s, e in episodes:
        for t in _renewal(rng, s, e, prof.param(behavior, "gap")):
            if behavior == "flood_syn_like":
                out.append(_comm(t, "socket"))
                out.append(_comm(t, "send"))
            else:
                out.append(_comm(t, "sendto"))
    return out


def _editor_keys(prof, rng, cfg, episodes) -> Emitted:
    out: Emitted = []
    calls = prof.param("editor_keys", "calls")
    start = _u(rng, (0.0, prof.param("editor_keys", "session_gap")[1]))
    for s in _renewal(rng, start, cfg.duration, prof.param("editor_keys", "session_gap")):
        e = min(cfg.duration, s + _u(rng, prof.param("editor_keys", "session_len")))
        times = _poisson(rng, s, e, _u(rng, prof.param("editor_keys", "rate")))
        picks = rng.integers(0, len(calls), size=len(times))
        out.extend((t, KEYBOARD_STATE, calls[i], None) for t, i in zip(times, picks))
    return out


def _file_io(prof, rng, cfg, episodes) -> Emitted:
    out: Emitted = []
    lo, hi = prof.param("file_io", "ops")
    for t in _renewal(rng, _u(rng, prof.param("file_io", "interval")), cfg.duration,
                      prof.param("file_io", "interval")):
        out.append((t, FILE_ACCESS, "CreateFile", None))
        for k in range(int(rng.integers(lo, hi + 1))):
            call = "ReadFile" if rng.random() < 0.5 else "WriteFile"
            out.append((t + 0.01 * (k + 1), FILE_ACCESS, call, None))
    return out


def _file_transfer(prof, rng, cfg, episodes) -> Emitted:
    size = prof.param("file_transfer", "size")
    chunk = prof.param("file_transfer", "chunk")
    t = _u(rng, prof.param("file_transfer", "at")) * cfg.duration
    out: Emitted = [(t, FILE_ACCESS, "OpenFile", None)]
    for _ in range(-(-size // chunk)):
        t += _u(rng, prof.param("file_transfer", "chunk_gap"))
        out.append((t, FILE_ACCESS, "ReadFile", None))
        out.append(_comm(t + 0.001, "send"))
        out.append(_comm(t + 0.002 + _u(rng, (0.01, 0.04)), "recv"))  # ack
    return out


_EMITTERS = {
    "idle_ping": _idle_ping,
    "chat": _chat,
    "keylog_burst": _keylog_burst,
    "flood_syn_like": lambda *a: _flood(*a, behavior="flood_syn_like"),
    "flood_udp_like": lambda *a: _flood(*a, behavior="flood_udp_like"),
    "editor_keys": _editor_keys,
    "file_io": _file_io,
    "file_transfer": _file_transfer,
}


def generate(cfg: ScenarioConfig) -> Dataset:
    """Generate a sorted, validated Dataset; deterministic in ``cfg.seed``."""
    cfg.validate()
    end_ms = int(cfg.duration * 1000)
    rows: list[tuple[int, int, str, str, str, str, str | None]] = []
    order = 0
    for pi, prof in enumerate(cfg.processes):
        ep_rng = np.random.default_rng([cfg.seed, pi, 1000])
        episodes = _episodes(ep_rng, cfg.duration) if prof.is_attacker else []
        for bi, behavior in enumerate(sorted(prof.behaviors)):
            rng = np.random.default_rng([cfg.seed, pi, bi])
            for t, category, call, direction in _EMITTERS[behavior](prof, rng, cfg, episodes):
                ts = int(t * 1000)
                if 0 <= ts < end_ms:
                    rows.append((ts, order, prof.pid, prof.name, category, call, direction))
                    order += 1
    rows.sort(key=lambda r: (r[0], r[1]))
    records = [
        EventRecord(ts, pid, name, category, call, direction, seq)
        for seq, (ts, _, pid, name, category, call, direction) in enumerate(rows)
    ]
    meta = {"scenario": cfg.label or cfg.scenario, "seed": cfg.seed, "sources": ["generated"],
            "config": cfg.to_dict()}
    return build_dataset(records, meta)
