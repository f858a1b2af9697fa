"""Full-depth limit order book on an integer tick grid.

Prices are kept as integer ticks; logs are only taken when a snapshot is
read. A :class:`BookState` is mutated in place by :meth:`BookState.apply`
(the fast path used by replay); :func:`apply_event` is the pure variant.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field

import numpy as np


class Side(enum.Enum):
    BID = "B"
    ASK = "A"

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


class EventKind(enum.Enum):
    LIMIT_ARRIVAL = "LA"
    LIMIT_CANCEL = "LC"
    MARKET_ORDER = "MO"


class MalformedEventError(ValueError):
    """An event that cannot be applied to the current book."""

    def __init__(self, seq: int, reason: str):
        super().__init__(f"seq {seq}: {reason}")
        self.seq = seq
        self.reason = reason


@dataclass(frozen=True, slots=True)
class LobEvent:
    """One order-flow event.

    For a market order ``side`` is the book side it consumes, so
    ``Side.BID`` is a sell market order. ``price_ticks`` is 0 for market
    orders.
    """

    seq: int
    timestamp_ms: int
    kind: EventKind
    side: Side
    price_ticks: int
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise MalformedEventError(self.seq, f"size must be >= 1, got {self.size}")
        if self.kind is EventKind.MARKET_ORDER:
            if self.price_ticks != 0:
                raise MalformedEventError(self.seq, "market order must carry price 0")
        elif self.price_ticks < 1:
            raise MalformedEventError(self.seq, f"price must be >= 1 tick, got {self.price_ticks}")


@dataclass(frozen=True, slots=True)
class ExecutionReport:
    """What an event did to the book.

    ``fills`` is only populated for market orders, one ``(price, size)`` per
    level touched. ``best_before``/``best_after`` refer to the side the
    event acted on (0 when that side is empty).
    """

    seq: int
    kind: EventKind
    side: Side
    filled: int = 0
    fills: tuple[tuple[int, int], ...] = ()
    best_before: int = 0
    best_after: int = 0
    best_size_before: int = 0

    @property
    def through(self) -> bool:
        """True when a market order took more than the pre-event best level held."""
        return self.kind is EventKind.MARKET_ORDER and self.filled > self.best_size_before

    @property
    def vwap_ticks(self) -> float:
        if not self.filled:
            return 0.0
        return sum(p * q for p, q in self.fills) / self.filled


class BookState:
    """Aggregated (price level) book, both sides to full depth."""

    __slots__ = ("bids", "asks", "_bid_px", "_ask_px")

    def __init__(self, bids: dict[int, int] | None = None, asks: dict[int, int] | None = None):
        self.bids: dict[int, int] = dict(bids or {})
        self.asks: dict[int, int] = dict(asks or {})
        # both kept ascending; best bid is the last element
        self._bid_px: list[int] = sorted(self.bids)
        self._ask_px: list[int] = sorted(self.asks)
        self.check()

    def copy(self) -> "BookState":
        new = BookState.__new__(BookState)
        new.bids = dict(self.bids)
        new.asks = dict(self.asks)
        new._bid_px = list(self._bid_px)
        new._ask_px = list(self._ask_px)
        return new

    def __eq__(self, other):
        if not isinstance(other, BookState):
            return NotImplemented
        return self.bids == other.bids and self.asks == other.asks

    def __repr__(self):
        return f"BookState(bids={self.levels(Side.BID)}, asks={self.levels(Side.ASK)})"

    @property
    def best_bid(self) -> int:
        return self._bid_px[-1] if self._bid_px else 0

    @property
    def best_ask(self) -> int:
        return self._ask_px[0] if self._ask_px else 0

    def best(self, side: Side) -> int:
        return self.best_bid if side is Side.BID else self.best_ask

    def n_levels(self, side: Side) -> int:
        return len(self._bid_px) if side is Side.BID else len(self._ask_px)

    def depth(self, side: Side) -> int:
        """Total resting size on one side."""
        return sum(self.bids.values()) if side is Side.BID else sum(self.asks.values())

    def levels(self, side: Side, n: int | None = None) -> list[tuple[int, int]]:
        """Best-first ``(price, size)`` pairs, at most ``n`` of them."""
        if side is Side.BID:
            px = self._bid_px[::-1] if n is None else self._bid_px[: -n - 1 : -1]
            book = self.bids
        else:
            px = self._ask_px if n is None else self._ask_px[:n]
            book = self.asks
        return [(p, book[p]) for p in px]

    def check(self) -> None:
        """Raise ``AssertionError`` if a structural invariant is broken."""
        assert all(q >= 1 for q in self.bids.values()), "zero-size bid level"
        assert all(q >= 1 for q in self.asks.values()), "zero-size ask level"
        assert self._bid_px == sorted(self.bids) and self._ask_px == sorted(self.asks)
        if self._bid_px and self._ask_px:
            assert self.best_bid < self.best_ask, "crossed or locked book"

    def apply(self, ev: LobEvent) -> ExecutionReport:
        """Apply ``ev`` in place and return its execution report."""
        if ev.side is Side.BID:
            book, px = self.bids, self._bid_px
        else:
            book, px = self.asks, self._ask_px
        best_before = self.best(ev.side)
        best_size = book[best_before] if best_before else 0

        if ev.kind is EventKind.LIMIT_ARRIVAL:
            p = ev.price_ticks
            if ev.side is Side.BID and self._ask_px and p >= self._ask_px[0]:
                raise MalformedEventError(ev.seq, f"bid at {p} crosses best ask {self._ask_px[0]}")
            if ev.side is Side.ASK and self._bid_px and p <= self._bid_px[-1]:
                raise MalformedEventError(ev.seq, f"ask at {p} crosses best bid {self._bid_px[-1]}")
            if p in book:
                book[p] += ev.size
            else:
                book[p] = ev.size
                insort(px, p)
            fills = ()
            filled = 0

        elif ev.kind is EventKind.LIMIT_CANCEL:
            p = ev.price_ticks
            resting = book.get(p, 0)
            if ev.size > resting:
                raise MalformedEventError(
                    ev.seq, f"cancel of {ev.size} at {p} exceeds resting size {resting}"
                )
            if ev.size == resting:
                del book[p]
                del px[bisect_left(px, p)]
            else:
                book[p] = resting - ev.size
            fills = ()
            filled = 0

        else:
            total = sum(book.values())
            if ev.size > total:
                raise MalformedEventError(
                    ev.seq, f"market order of {ev.size} exceeds visible depth {total}"
                )
            remaining = ev.size
            out = []
            while remaining:
                p = px[-1] if ev.side is Side.BID else px[0]
                q = book[p]
                take = min(q, remaining)
                out.append((p, take))
                remaining -= take
                if take == q:
                    del book[p]
                    px.pop() if ev.side is Side.BID else px.pop(0)
                else:
                    book[p] = q - take
            fills = tuple(out)
            filled = ev.size

        return ExecutionReport(
            seq=ev.seq,
            kind=ev.kind,
            side=ev.side,
            filled=filled,
            fills=fills,
            best_before=best_before,
            best_after=self.best(ev.side),
            best_size_before=best_size,
        )


def apply_event(state: BookState, ev: LobEvent) -> tuple[BookState, ExecutionReport]:
    """Pure version of :meth:`BookState.apply`; ``state`` is left untouched."""
    new = state.copy()
    report = new.apply(ev)
    return new, report


@dataclass(frozen=True)
class BookSnapshot:
    """Top ``L`` levels per side just after one event.

    Raw ticks and sizes are stored; the log quantities used as model
    features are derived properties. Missing levels (incomplete book) carry
    price 0 and size 0.
    """

    seq: int
    timestamp_ms: int
    tick_size: float
    bid_ticks: np.ndarray
    bid_sizes: np.ndarray
    ask_ticks: np.ndarray
    ask_sizes: np.ndarray
    trade_ticks: int = 0
    trade_size: int = 0
    flags: np.ndarray = field(default_factory=lambda: np.zeros(6, dtype=np.int8))

    @property
    def depth(self) -> int:
        return len(self.bid_ticks)

    @property
    def complete(self) -> bool:
        return bool(np.all(self.bid_sizes > 0) and np.all(self.ask_sizes > 0))

    def _log_px(self, ticks):
        with np.errstate(divide="ignore"):
            return np.where(ticks > 0, np.log(ticks * self.tick_size), np.nan)

    @property
    def bid_prices(self) -> np.ndarray:
        return self._log_px(self.bid_ticks)

    @property
    def ask_prices(self) -> np.ndarray:
        return self._log_px(self.ask_ticks)

    @property
    def bid_volumes(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.bid_sizes > 0, np.log(np.maximum(self.bid_sizes, 1)), np.nan)

    @property
    def ask_volumes(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.ask_sizes > 0, np.log(np.maximum(self.ask_sizes, 1)), np.nan)

    @property
    def spread(self) -> float:
        return float(self.ask_prices[0] - self.bid_prices[0])

    @property
    def bid_gaps(self) -> np.ndarray:
        p = self.bid_prices
        return p[:-1] - p[1:]

    @property
    def ask_gaps(self) -> np.ndarray:
        p = self.ask_prices
        return p[1:] - p[:-1]

    @property
    def p_mo(self) -> float:
        """Log trade price, 0 when the event was not a trade."""
        return math.log(self.trade_ticks * self.tick_size) if self.trade_size else 0.0

    @property
    def v_mo(self) -> float:
        """Log trade size, 0 when the event was not a trade."""
        return math.log(self.trade_size) if self.trade_size else 0.0

    def r1(self) -> np.ndarray:
        """Gaps, spread and volumes in the fixed feature order (length 4L-1)."""
        return np.concatenate(
            [
                self.bid_gaps[::-1],
                [self.spread],
                self.ask_gaps,
                self.bid_volumes[::-1],
                self.ask_volumes,
            ]
        )

    def r2(self) -> np.ndarray:
        """Event-nature dummies ``[BMO, AMO, BLO, ALO, BTT, ATT]``."""
        return np.asarray(self.flags, dtype=float)


def snapshot(
    state: BookState,
    depth: int,
    *,
    tick_size: float,
    seq: int = 0,
    timestamp_ms: int = 0,
    trade: ExecutionReport | None = None,
    flags=None,
) -> BookSnapshot:
    """Read the best ``depth`` levels per side of ``state``.

    ``trade`` is the report of the event that produced ``state``; when it is
    a market order, the trade price is the best price of the consumed side
    before the order hit it and the trade size is the total filled.
    """
    bt = np.zeros(depth, dtype=np.int64)
    bs = np.zeros(depth, dtype=np.int64)
    at = np.zeros(depth, dtype=np.int64)
    az = np.zeros(depth, dtype=np.int64)
    for i, (p, q) in enumerate(state.levels(Side.BID, depth)):
        bt[i], bs[i] = p, q
    for i, (p, q) in enumerate(state.levels(Side.ASK, depth)):
        at[i], az[i] = p, q
    trade_ticks = trade_size = 0
    if trade is not None and trade.kind is EventKind.MARKET_ORDER:
        trade_ticks, trade_size = trade.best_before, trade.filled
    return BookSnapshot(
        seq=seq,
        timestamp_ms=timestamp_ms,
        tick_size=tick_size,
        bid_ticks=bt,
        bid_sizes=bs,
        ask_ticks=at,
        ask_sizes=az,
        trade_ticks=trade_ticks,
        trade_size=trade_size,
        flags=np.zeros(6, dtype=np.int8) if flags is None else np.asarray(flags, dtype=np.int8),
    )
