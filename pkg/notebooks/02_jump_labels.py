"""
Labelling price jumps between trades
====================================

Every market order gets a label for each side: does the next trade print
beyond the current best quote on that side?
"""

import numpy as np

from lobjump.ingest import replay
from lobjump.labeler import label_jumps
from lobjump.simulator import SimConfig, simulate

sim = simulate(SimConfig(seed=2, n_events=30_000))
tape = replay(sim.events)
trades = label_jumps(tape)

for t in trades[:8]:
    print(f"seq {t.t_seq:6d} sign {t.sign:+d} through {t.tt} y_bid {t.y_bid} y_ask {t.y_ask}")

# %%
# Jump frequencies over the session (the last trade carries no label)
y_bid = np.array([t.y_bid for t in trades[:-1]])
y_ask = np.array([t.y_ask for t in trades[:-1]])
print(f"{len(trades)} trades, bid jumps {y_bid.mean():.3f}, ask jumps {y_ask.mean():.3f}")
print("trade-through share:", np.mean([t.tt for t in trades]).round(3))
