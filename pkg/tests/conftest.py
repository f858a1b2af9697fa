import numpy as np
import pytest

from lobjump.book import EventKind, LobEvent, Side
from lobjump.ingest import replay
from lobjump.labeler import label_jumps
from lobjump.simulator import SimConfig, simulate

LA, LC, MO = EventKind.LIMIT_ARRIVAL, EventKind.LIMIT_CANCEL, EventKind.MARKET_ORDER
B, A = Side.BID, Side.ASK

PLANTED_BID = (("VB1_0", -0.8), ("BMO_0", 1.5), ("VMO_0", 0.6))
PLANTED_ASK = (("VA1_0", -0.8), ("AMO_0", 1.5), ("VMO_0", 0.6))


def make_events(rows, t0=34_200_000):
    """``[(kind, side, price, size), ...]`` -> events with seq 1.. and 1 ms spacing."""
    return [LobEvent(i + 1, t0 + i, k, s, p, q) for i, (k, s, p, q) in enumerate(rows)]


def book_rows(bids, asks):
    """Limit arrivals that build a book from ``{price: size}`` dicts."""
    rows = [(LA, B, p, q) for p, q in sorted(bids.items(), reverse=True)]
    rows += [(LA, A, p, q) for p, q in sorted(asks.items())]
    return rows


# Four-event walk: a trade-through sell, an ask inside the spread,
# a cancel of the new best bid, then a regular sell at the best bid.
WALK_BIDS = {100: 40, 99: 50, 98: 80, 97: 60, 96: 70, 95: 50}
WALK_ASKS = {102: 30, 103: 60, 104: 40, 105: 50, 106: 70, 107: 30}
WALK_TAIL = [(MO, B, 0, 60), (LA, A, 101, 20), (LC, B, 99, 30), (MO, B, 0, 60)]


@pytest.fixture
def walk_events():
    return make_events(book_rows(WALK_BIDS, WALK_ASKS) + WALK_TAIL)


@pytest.fixture(scope="session")
def zi_session():
    sim = simulate(SimConfig(seed=11, n_events=20_000))
    tape = replay(sim.events)
    return sim, tape, label_jumps(tape)


@pytest.fixture(scope="session")
def planted_session():
    cfg = SimConfig(
        seed=5, n_events=30_000, planted=True, jump_bid=PLANTED_BID, jump_ask=PLANTED_ASK, sign_coef=0.5
    )
    sim = simulate(cfg)
    tape = replay(sim.events)
    return sim, tape, label_jumps(tape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[str, str] = {}


def record(code, ok, detail):
    line = f"{code} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[code] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE[code])
