import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dcabot.events import CALL_DIRECTION, CALL_INVENTORY, EventRecord, build_dataset  # noqa: E402

CATEGORY_OF = {call: cat for cat, calls in CALL_INVENTORY.items() for call in calls}
ALL_CALLS = sorted(CATEGORY_OF)


def make_record(ts, call, pid="7", name="proc", seq=0, direction=None):
    return EventRecord(ts, pid, name, CATEGORY_OF[call], call, direction, seq)


def random_records(rng: np.random.Generator, n: int, span_ms: int = 20_000, n_procs: int = 3):
    ts = np.sort(rng.integers(0, span_ms, size=n))
    calls = rng.choice(ALL_CALLS, size=n)
    pids = rng.integers(0, n_procs, size=n)
    out = []
    for seq, (t, c, p) in enumerate(zip(ts, calls, pids)):
        direction = CALL_DIRECTION.get(str(c)) if rng.random() < 0.5 else None
        out.append(EventRecord(int(t), str(100 + p), f"p{p}", CATEGORY_OF[str(c)], str(c), direction, seq))
    return out


def random_dataset(seed: int, n: int | None = None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 400)) if n is None else n
    return build_dataset(random_records(rng, n), {"scenario": "random", "seed": seed})


@pytest.fixture
def rec():
    return make_record
