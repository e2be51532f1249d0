import statistics
from collections import defaultdict

import pytest

from dcabot.events import COMMUNICATION, KEYBOARD_STATE, parse_lines, serialize_trace
from dcabot.scenarios import (
    ATTACK_SESSIONS,
    PRESETS,
    ProcessProfile,
    ScenarioConfig,
    ScenarioConfigError,
    canonical_name,
    generate,
    preset,
)
from dcabot.stats import mann_whitney_u


def send_gaps(records, name=None):
    """Per-process gaps (s) between consecutive outbound calls."""
    last, gaps = {}, defaultdict(list)
    for r in records:
        if r.is_outbound and (name is None or r.process_name == name):
            if r.process_id in last:
                gaps[r.process_name].append((r.ts - last[r.process_id]) / 1000)
            last[r.process_id] = r.ts
    return gaps


def test_deterministic():
    a = serialize_trace(generate(preset("E1", seed=42)).records)
    b = serialize_trace(generate(preset("E1", seed=42)).records)
    assert a == b
    assert a != serialize_trace(generate(preset("E1", seed=43)).records)


@pytest.mark.parametrize("label", list(PRESETS))
def test_generated_traces_validate(label):
    ds = generate(preset(label, seed=3, duration=120))
    # re-parsing enforces taxonomy, direction and strictly increasing seq
    assert parse_lines(serialize_trace(ds.records).splitlines()) == ds.records
    ts = [r.ts for r in ds.records]
    assert ts == sorted(ts) and all(0 <= t < 120_000 for t in ts)
    assert ds.meta["scenario"] == label and ds.meta["config"]["seed"] == 3


@pytest.mark.parametrize("seed", range(5))
def test_flood_session_is_dominated_by_bot(seed):
    ds = generate(preset("E2_2", seed=seed, duration=60))
    comm = [r for r in ds.records if r.call_category == COMMUNICATION]
    bot = [r for r in comm if r.process_name == "bot"]
    assert len(bot) / len(comm) > 0.9
    assert statistics.median(send_gaps(ds.records, "bot")["bot"]) < 1.0


@pytest.mark.parametrize("seed", range(5))
def test_normal_session(seed):
    ds = generate(preset("E3", seed=seed))
    assert "bot" not in {r.process_name for r in ds.records}
    assert not any(r.process_name == "bot" and r.call_category == KEYBOARD_STATE for r in ds.records)
    for name, gaps in send_gaps(ds.records).items():
        assert statistics.median(gaps) > 20, name


def test_preset_process_sets():
    assert {p.name for p in preset("E2_3_b").processes} == {"bot", "IRC", "cmd", "Notepad", "Wordpad"}
    assert {p.name for p in preset("E2.1.b").processes} == {"bot", "IRC", "cmd", "Notepad", "Wordpad"}
    assert "bot" not in {p.name for p in preset("E3").processes}
    (bot,) = [p for p in preset("E1").processes if p.name == "bot"]
    assert bot.behaviors == ("idle_ping",)
    for label in ATTACK_SESSIONS:
        (bot,) = [p for p in preset(label).processes if p.name == "bot"]
        assert bot.is_attacker


def test_e2_2_has_no_interactive_apps():
    for label in ("E2.2.a", "E2.2.b"):
        for p in preset(label).processes:
            if p.name != "bot":
                assert not {"chat", "editor_keys", "file_transfer"} & set(p.behaviors)


def test_keylogging_only_from_bot_and_editors():
    ds = generate(preset("E2.3.b", seed=1))
    senders = {r.process_name for r in ds.records if r.call_category == KEYBOARD_STATE}
    assert "IRC" not in senders and "bot" in senders


@pytest.mark.parametrize("name,want", [("E2_3_b", "E2.3.b"), ("e2.1.A", "E2.1.a"), ("E2_1", "E2.1.a"),
                                       ("E1", "E1")])
def test_canonical_name(name, want):
    assert canonical_name(name) == want


def test_unknown_scenario():
    with pytest.raises(KeyError):
        preset("E9")


@pytest.mark.parametrize("cfg", [
    ScenarioConfig("E1", 60, (ProcessProfile("bot", ("keylog_burst",)),)),
    ScenarioConfig("E3", 60, (ProcessProfile("bot", ("idle_ping",)),)),
    ScenarioConfig("E2_2", 60, (ProcessProfile("x", ("flood_syn_like",)), ProcessProfile("y", ("chat",)))),
    ScenarioConfig("E2_1", 60, (ProcessProfile("x", ("flood_syn_like",)),), bot_variant="sd_like"),
    ScenarioConfig("E2_1", 60, (ProcessProfile("x", ("flood_udp_like",)),), bot_variant="spy_like"),
    ScenarioConfig("E2_1", 0, ()),
    ScenarioConfig("E2_1", 60, (), seed=-1),
    ScenarioConfig("E7", 60, ()),
    ScenarioConfig("E1", 60, (ProcessProfile("a", ("idle_ping",)), ProcessProfile("a", ("file_io",)))),
])
def test_invalid_configs(cfg):
    with pytest.raises(ScenarioConfigError):
        generate(cfg)


def test_unknown_behaviour():
    with pytest.raises(ScenarioConfigError):
        ProcessProfile("x", ("teleport",))


def test_flood_gaps_stochastically_smaller_than_chat():
    flooder = ScenarioConfig("E2_2", 300, (ProcessProfile("f", ("flood_udp_like",)),), seed=5,
                             bot_variant="sd_like")
    chatter = ScenarioConfig("E3", 7200, (ProcessProfile("c", ("chat",)),), seed=5)
    flood = send_gaps(generate(flooder).records)["f"]
    chat = send_gaps(generate(chatter).records)["c"]
    assert len(flood) >= 50 and len(chat) >= 50
    flood, chat = flood[:50], chat[:50]
    _, p = mann_whitney_u(flood, chat)
    assert p < 0.05 and statistics.median(flood) < statistics.median(chat)
