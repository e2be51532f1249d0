"""Signal normalisation: event stream -> (PAMP, danger, safe) samples.

* PAMP   - aggregate keyboard-state call rate, linear 0..100 against ``n_p``.
* danger - receive -> next send latency of a process; 0 s maps to 100,
  ``n_d`` and above map to 0.
* safe   - gap between consecutive outbound calls of a process; below
  ``n_s1`` is 0, above ``n_s2`` is 10, linear in between.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterator

from dcabot.events import KEYBOARD_STATE, SIGNAL, Dataset

PAMP_MAX = 100.0
DANGER_MAX = 100.0
SAFE_MAX = 10.0


@dataclass(frozen=True)
class NormalizationConfig:
    n_p: float = 20.0  # keyboard calls / s
    n_d: float = 10.0  # s
    n_s1: float = 5.0  # s
    n_s2: float = 20.0  # s
    window: int = 1000  # ms

    def __post_init__(self) -> None:
        if not self.n_p > 0 or not self.n_d > 0:
            raise ValueError("n_p and n_d must be positive")
        if not 0 < self.n_s1 < self.n_s2:
            raise ValueError("need 0 < n_s1 < n_s2")
        if not self.window > 0:
            raise ValueError("window must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class SignalSample:
    ts: int
    pamp: float
    ds: float
    ss: float

    def as_vector(self) -> tuple[float, float, float]:
        return (self.pamp, self.ds, self.ss)


def compute_pamp(keyboard_call_rate: float, cfg: NormalizationConfig) -> float:
    if keyboard_call_rate < 0:
        raise ValueError("rate must be non-negative")
    return min(PAMP_MAX, PAMP_MAX * keyboard_call_rate / cfg.n_p)


def compute_danger(response_delta: float, cfg: NormalizationConfig) -> float:
    if response_delta < 0:
        raise ValueError("delta must be non-negative")
    if response_delta >= cfg.n_d:
        return 0.0
    return DANGER_MAX * (1.0 - response_delta / cfg.n_d)


def compute_safe(send_gap: float, cfg: NormalizationConfig) -> float:
    if send_gap < 0:
        raise ValueError("gap must be non-negative")
    if send_gap < cfg.n_s1:
        return 0.0
    if send_gap > cfg.n_s2:
        return SAFE_MAX
    return SAFE_MAX * (send_gap - cfg.n_s1) / (cfg.n_s2 - cfg.n_s1)


def iter_signals(dataset: Dataset, cfg: NormalizationConfig) -> Iterator[SignalSample]:
    """Yield one sample per window, from window 0 to the last non-empty one.

    Per window: PAMP from the keyboard-call count, danger from the smallest
    receive->send latency closed in the window (0 if none), safe from the
    latest closed send gap, carried forward across windows (0 before the
    first gap).
    """
    width = cfg.window
    window_s = width / 1000.0
    pending_recv: dict[str, int] = {}
    last_send: dict[str, int] = {}
    last_gap_ms: int | None = None

    current = 0
    keys = 0
    min_delta_ms: int | None = None

    def emit(k: int) -> SignalSample:
        pamp = compute_pamp(keys / window_s, cfg)
        ds = 0.0 if min_delta_ms is None else compute_danger(min_delta_ms / 1000.0, cfg)
        ss = 0.0 if last_gap_ms is None else compute_safe(last_gap_ms / 1000.0, cfg)
        return SignalSample(ts=k * width, pamp=pamp, ds=ds, ss=ss)

    seen_any = False
    for item in dataset.events:
        if item.kind != SIGNAL:
            continue
        rec = item.payload
        k = rec.ts // width
        seen_any = True
        while current < k:
            yield emit(current)
            current += 1
            keys = 0
            min_delta_ms = None

        if rec.call_category == KEYBOARD_STATE:
            keys += 1
        elif rec.is_inbound:
            pending_recv[rec.process_id] = rec.ts
        elif rec.is_outbound:
            pid = rec.process_id
            recv_ts = pending_recv.pop(pid, None)
            if recv_ts is not None:
                delta = rec.ts - recv_ts
                if min_delta_ms is None or delta < min_delta_ms:
                    min_delta_ms = delta
            prev = last_send.get(pid)
            if prev is not None:
                last_gap_ms = rec.ts - prev
            last_send[pid] = rec.ts

    if seen_any:
        yield emit(current)


def extract_signals(dataset: Dataset, cfg: NormalizationConfig) -> list[SignalSample]:
    return list(iter_signals(dataset, cfg))


def signals_to_csv(samples: list[SignalSample]) -> str:
    lines = ["ts_ms,pamp,ds,ss"]
    lines.extend(f"{s.ts},{s.pamp!r},{s.ds!r},{s.ss!r}" for s in samples)
    return "\n".join(lines) + "\n"
