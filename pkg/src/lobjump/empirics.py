"""Conditional trade-sign probabilities given the bid/ask volume ratio.

For depth ``i`` the buy curve is

    p(x) = P(next trade is a buy | W(i) >= x)

with ``W(i)`` read from the book just before the trade. The sell curve
comes in two readings. ``"mirror"`` (default) conditions on an ask-heavy
book, ``P(sell | W(i) <= -x)``, so both curves read left to right as
"more imbalance". ``"literal"`` conditions on ``W(i) <= x`` over the W grid
itself.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .features import w_ratio_series
from .labeler import LabeledTrade
from .tape import SnapshotTape

logger = logging.getLogger(__name__)

SELL_MODES = ("mirror", "literal")
CURVE_HEADER = ["depth", "x", "n", "p_hat", "side"]


@dataclass(frozen=True)
class CondProbCurve:
    """Thresholds with their conditioning counts and empirical probabilities.

    Only points with ``n >= min_count`` are kept.
    """

    depth: int
    side: str  # "buy" or "sell"
    x: np.ndarray
    n: np.ndarray
    p_hat: np.ndarray
    min_count: int
    sell_mode: str = "mirror"

    def __len__(self):
        return len(self.x)


def pre_trade_w(trades: list[LabeledTrade], tape: SnapshotTape, depth: int):
    """W(depth) just before each trade, and the trade signs.

    Trades without a prior row in the tape or with a book shallower than
    ``depth`` at that row are dropped.
    """
    if not 1 <= depth <= tape.depth:
        raise ValueError(f"depth must lie in 1..{tape.depth}")
    t_seq = np.array([t.t_seq for t in trades], dtype=np.int64)
    sign = np.array([t.sign for t in trades], dtype=np.int64)
    pos = np.searchsorted(tape.seq, t_seq)
    if np.any(pos >= len(tape)) or np.any(tape.seq[np.minimum(pos, len(tape) - 1)] != t_seq):
        raise ValueError("trades do not align with the snapshot tape")
    w_all = w_ratio_series(tape, depth)
    ok = pos >= 1
    w = np.full(len(pos), np.nan)
    w[ok] = w_all[pos[ok] - 1]
    keep = ~np.isnan(w)
    if not keep.all():
        logger.info("skipped %d trades without a complete depth-%d book before them", int((~keep).sum()), depth)
    return w[keep], sign[keep]


def _grid(values, n_points: int = 50) -> np.ndarray:
    if not len(values):
        return np.zeros(0)
    return np.linspace(values.min(), values.max(), n_points)


def tradesign_curve(
    trades: list[LabeledTrade],
    tape: SnapshotTape,
    depth: int,
    side: str = "buy",
    grid=None,
    min_count: int = 50,
    sell_mode: str = "mirror",
) -> CondProbCurve:
    """Empirical trade-sign curve at one depth.

    ``grid`` defaults to 50 evenly spaced points over the range of the
    conditioning statistic (W, or -W for the mirrored sell curve).
    """
    if side not in ("buy", "sell"):
        raise ValueError(f"side must be buy or sell, got {side!r}")
    if sell_mode not in SELL_MODES:
        raise ValueError(f"unknown sell mode {sell_mode!r}")
    w, sign = pre_trade_w(trades, tape, depth)
    if side == "buy":
        stat, hit, upper = w, sign == 1, True
    elif sell_mode == "mirror":
        stat, hit, upper = -w, sign == -1, True
    else:
        stat, hit, upper = w, sign == -1, False
    x = _grid(stat) if grid is None else np.asarray(grid, dtype=float)

    order = np.argsort(stat, kind="mergesort")
    s = stat[order]
    cum_hit = np.r_[0, np.cumsum(hit[order])]
    if upper:
        # rows with stat >= x are the tail starting at searchsorted(left)
        lo = np.searchsorted(s, x, side="left")
        n = len(s) - lo
        k = cum_hit[-1] - cum_hit[lo]
    else:
        hi = np.searchsorted(s, x, side="right")
        n = hi
        k = cum_hit[hi]
    keep = n >= min_count
    if not keep.any():
        logger.warning("depth-%d %s curve: no threshold has %d conditioning trades", depth, side, min_count)
    n = n[keep]
    with np.errstate(invalid="ignore", divide="ignore"):
        p = k[keep] / n
    return CondProbCurve(depth, side, x[keep], n.astype(np.int64), p, min_count, sell_mode)


def tradesign_curves(trades, tape, depths=None, min_count: int = 50, sell_mode: str = "mirror") -> list[CondProbCurve]:
    """Buy and sell curves for every depth (all visible depths by default)."""
    depths = range(1, tape.depth + 1) if depths is None else depths
    out = []
    for d in depths:
        for side in ("buy", "sell"):
            out.append(tradesign_curve(trades, tape, d, side, min_count=min_count, sell_mode=sell_mode))
    return out


def write_curves(path, curves) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for c in curves:
            for x, n, p in zip(c.x, c.n, c.p_hat):
                w.writerow([c.depth, repr(float(x)), int(n), repr(float(p)), c.side])


def read_curves(path) -> list[CondProbCurve]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader) != CURVE_HEADER:
            raise ValueError(f"{path}: unexpected curve header")
        rows = list(reader)
    groups: dict[tuple[int, str], list] = {}
    for d, x, n, p, side in rows:
        groups.setdefault((int(d), side), []).append((float(x), int(n), float(p)))
    out = []
    for (d, side), pts in groups.items():
        a = np.array(pts)
        out.append(CondProbCurve(d, side, a[:, 0], a[:, 1].astype(np.int64), a[:, 2], min_count=0))
    return out
