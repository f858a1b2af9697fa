"""Event dummies, trade signs, trade-throughs and inter-trade jump labels."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .book import BookState, EventKind, ExecutionReport, LobEvent, Side

logger = logging.getLogger(__name__)

# column order of the event-nature vector
R2_FIELDS = ("BMO", "AMO", "BLO", "ALO", "BTT", "ATT")


@dataclass(frozen=True, slots=True)
class EventFlags:
    BLO: int = 0
    ALO: int = 0
    BMO: int = 0
    AMO: int = 0
    BTT: int = 0
    ATT: int = 0

    def as_r2(self) -> tuple[int, ...]:
        return tuple(getattr(self, f) for f in R2_FIELDS)


def classify_event(
    ev: LobEvent, report: ExecutionReport, pre_state: BookState | None = None
) -> EventFlags:
    """Set the six dummies for one event.

    Arrivals and cancellations both count as limit-order events. A market
    order is a trade-through only if its size strictly exceeds the size
    resting at the pre-event best level; an exact match is a regular trade.
    """
    if report.seq != ev.seq or report.kind is not ev.kind or report.side is not ev.side:
        raise ValueError(f"report for seq {report.seq} does not match event {ev.seq}")
    bid = ev.side is Side.BID
    if ev.kind is not EventKind.MARKET_ORDER:
        return EventFlags(BLO=int(bid), ALO=int(not bid))
    if pre_state is not None:
        best = pre_state.best(ev.side)
        best_size = (pre_state.bids if bid else pre_state.asks).get(best, 0)
    else:
        best_size = report.best_size_before
    tt = int(ev.size > best_size)
    if bid:
        return EventFlags(BMO=1, BTT=tt)
    return EventFlags(AMO=1, ATT=tt)


@dataclass(frozen=True, slots=True)
class LabeledTrade:
    """One market order and the jump labels it carries for the *next* trade.

    ``y_bid``/``y_ask`` are ``None`` for the last trade of a session.
    """

    k: int
    t_seq: int
    sign: int
    v_mo_log: float
    tt: int
    y_bid: int | None = None
    y_ask: int | None = None


def label_jumps(tape) -> list[LabeledTrade]:
    """Label every market order in a replayed session.

    Trade ``i`` gets ``y_bid = 1`` when trade ``i+1`` prints strictly below
    the best bid read just after trade ``i``, and ``y_ask = 1`` when it
    prints strictly above the best ask read just after trade ``i``. Prices
    are compared in ticks, which orders identically to log prices.
    """
    pos = np.flatnonzero(tape.kind == 2)
    if len(pos) < 2:
        logger.warning("fewer than 2 trades in session; no jump labels")
        if len(pos) == 0:
            return []
    trades = []
    flags = tape.flags
    for k, i in enumerate(pos):
        sign = 1 if flags[i, 1] else -1
        tt = int(flags[i, 4] or flags[i, 5])
        y_bid = y_ask = None
        if k + 1 < len(pos):
            nxt = tape.trade_ticks[pos[k + 1]]
            bid1 = tape.bid_ticks[i, 0]
            ask1 = tape.ask_ticks[i, 0]
            y_bid = int(bid1 > 0 and nxt < bid1)
            y_ask = int(ask1 > 0 and nxt > ask1)
        trades.append(
            LabeledTrade(
                k=k,
                t_seq=int(tape.seq[i]),
                sign=sign,
                v_mo_log=float(np.log(tape.trade_size[i])),
                tt=tt,
                y_bid=y_bid,
                y_ask=y_ask,
            )
        )
    return trades


TRADE_HEADER = ["k", "t_seq", "sign", "v_mo_log", "tt", "y_bid", "y_ask"]


def write_trades(path, trades: list[LabeledTrade]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRADE_HEADER)
        for t in trades:
            w.writerow(
                [
                    t.k,
                    t.t_seq,
                    t.sign,
                    repr(t.v_mo_log),
                    t.tt,
                    "" if t.y_bid is None else t.y_bid,
                    "" if t.y_ask is None else t.y_ask,
                ]
            )


def read_trades(path) -> list[LabeledTrade]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRADE_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            out.append(
                LabeledTrade(
                    k=int(row[0]),
                    t_seq=int(row[1]),
                    sign=int(row[2]),
                    v_mo_log=float(row[3]),
                    tt=int(row[4]),
                    y_bid=int(row[5]) if row[5] != "" else None,
                    y_ask=int(row[6]) if row[6] != "" else None,
                )
            )
    return out
