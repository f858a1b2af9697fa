"""
Rebuilding the book from an event stream
=========================================

A handful of events are replayed on an integer-tick book, then a simulated
session is replayed and checked against the simulator's own book.
"""

import numpy as np

from lobjump.book import EventKind, LobEvent, Side
from lobjump.ingest import replay
from lobjump.simulator import SimConfig, simulate

LA, MO = EventKind.LIMIT_ARRIVAL, EventKind.MARKET_ORDER

# a two-sided book, then a sell market order that clears the best bid
rows = [
    (LA, Side.BID, 100, 40), (LA, Side.BID, 99, 50), (LA, Side.BID, 98, 80),
    (LA, Side.ASK, 102, 30), (LA, Side.ASK, 103, 60), (LA, Side.ASK, 104, 20),
    (MO, Side.BID, 0, 60),
]
events = [LobEvent(i, 34_200_000 + i, k, s, p, v) for i, (k, s, p, v) in enumerate(rows)]
tape = replay(events, depth=3)

# one snapshot row per event; prices are ticks times the tick size
for i in (5, 6):
    print(f"after event {i}: bids {tape.bid_ticks[i]} x {tape.bid_sizes[i]}, asks {tape.ask_ticks[i]} x {tape.ask_sizes[i]}")

# the market order ate 40 at 100 and 20 at 99: a trade-through
print("flags of the last event (BMO AMO BLO ALO BTT ATT):", tape.flags[-1])

# %%
# A simulated session replays to exactly the simulator's book
sim = simulate(SimConfig(seed=1, n_events=20_000))
tape = replay(sim.events)
same = all(np.array_equal(getattr(tape, f), sim.truth[f]) for f in ("bid_ticks", "bid_sizes", "ask_ticks", "ask_sizes"))
print(f"{len(tape)} snapshots, matches simulator book: {same}")
print("median spread (ticks):", np.median(tape.ask_ticks[:, 0] - tape.bid_ticks[:, 0]))
