"""
Building the design matrix
==========================

Each labelled trade becomes one row: log book shape at several lags, the
trade's own size and price, and event dummies for the events that preceded it.
"""

import numpy as np

from lobjump.features import build_design, w_ratio_series
from lobjump.ingest import replay
from lobjump.labeler import label_jumps
from lobjump.simulator import SimConfig, simulate

sim = simulate(SimConfig(seed=3, n_events=20_000))
tape = replay(sim.events)
d = build_design(tape, label_jumps(tape), m=5, n=5, side="BID")

print(f"{len(d)} rows x {d.features.shape[1]} columns, positives {d.y.mean():.3f}")
print("first columns:", d.feature_names[:6])
print("event dummies at lag 0:", [c for c in d.feature_names if c.endswith("_0")][-6:])

# %%
# W(i) is the log ratio of bid to ask volume over the best i levels; positive means bid heavy
w = w_ratio_series(tape, 1)
print("W(1) quartiles:", [round(float(q), 3) for q in (np.nanquantile(w, [0.25, 0.5, 0.75]))])
