"""
Trade sign against book imbalance
=================================

How often the next trade is a buy, given that the best-level log volume ratio
W(1) exceeds a threshold. The simulator draws signs from a logistic model in
W(1), so the empirical curve can be set against the true conditional mean.
"""

import numpy as np

from lobjump.empirics import pre_trade_w, tradesign_curve
from lobjump.ingest import replay
from lobjump.labeler import label_jumps
from lobjump.simulator import SimConfig, simulate

sim = simulate(SimConfig(seed=7, n_events=50_000, sign_coef=0.5))
tape = replay(sim.events)
trades = label_jumps(tape)
w, sign = pre_trade_w(trades, tape, 1)

c = tradesign_curve(trades, tape, 1, "buy", min_count=500)
print("   x      n   p_hat  true")
for x, n, p in list(zip(c.x, c.n, c.p_hat))[::4]:
    print(f"{x:+.2f} {n:6d}  {p:.3f}  {sim.true_p_buy[w >= x].mean():.3f}")

# %%
# The mirrored sell curve reads the ask-heavy side the same way
s = tradesign_curve(trades, tape, 1, "sell", min_count=500)
print(f"sell curve: {len(s)} points, tail {s.p_hat[-1]:.3f}")
