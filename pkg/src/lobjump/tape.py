"""Columnar storage for a session's snapshot sequence.

Replaying 50k events produces 50k snapshots; keeping them as a handful of
integer arrays (one row per event) keeps memory flat and lets the feature
code work vectorised. Indexing a tape yields a :class:`~lobjump.book.BookSnapshot`.
"""

from __future__ import annotations

import io
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .book import BookSnapshot, EventKind, Side

KIND_CODES = {EventKind.LIMIT_ARRIVAL: 0, EventKind.LIMIT_CANCEL: 1, EventKind.MARKET_ORDER: 2}
SIDE_CODES = {Side.BID: 0, Side.ASK: 1}


@dataclass
class SnapshotTape(Sequence):
    tick_size: float
    seq: np.ndarray
    timestamp_ms: np.ndarray
    kind: np.ndarray
    side: np.ndarray
    bid_ticks: np.ndarray  # (T, L)
    bid_sizes: np.ndarray
    ask_ticks: np.ndarray
    ask_sizes: np.ndarray
    bid_levels: np.ndarray  # full-depth level count
    ask_levels: np.ndarray
    bid_depth: np.ndarray  # full-depth total size
    ask_depth: np.ndarray
    trade_ticks: np.ndarray
    trade_size: np.ndarray
    flags: np.ndarray  # (T, 6), BMO AMO BLO ALO BTT ATT

    @classmethod
    def empty(cls, depth: int, tick_size: float) -> "SnapshotTape":
        return cls.allocate(0, depth, tick_size)

    @classmethod
    def allocate(cls, n: int, depth: int, tick_size: float) -> "SnapshotTape":
        i64 = np.int64
        return cls(
            tick_size=tick_size,
            seq=np.zeros(n, i64),
            timestamp_ms=np.zeros(n, i64),
            kind=np.zeros(n, np.int8),
            side=np.zeros(n, np.int8),
            bid_ticks=np.zeros((n, depth), i64),
            bid_sizes=np.zeros((n, depth), i64),
            ask_ticks=np.zeros((n, depth), i64),
            ask_sizes=np.zeros((n, depth), i64),
            bid_levels=np.zeros(n, i64),
            ask_levels=np.zeros(n, i64),
            bid_depth=np.zeros(n, i64),
            ask_depth=np.zeros(n, i64),
            trade_ticks=np.zeros(n, i64),
            trade_size=np.zeros(n, i64),
            flags=np.zeros((n, 6), np.int8),
        )

    @property
    def depth(self) -> int:
        return self.bid_ticks.shape[1]

    def __len__(self) -> int:
        return len(self.seq)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.select(np.arange(len(self))[i])
        return BookSnapshot(
            seq=int(self.seq[i]),
            timestamp_ms=int(self.timestamp_ms[i]),
            tick_size=self.tick_size,
            bid_ticks=self.bid_ticks[i].copy(),
            bid_sizes=self.bid_sizes[i].copy(),
            ask_ticks=self.ask_ticks[i].copy(),
            ask_sizes=self.ask_sizes[i].copy(),
            trade_ticks=int(self.trade_ticks[i]),
            trade_size=int(self.trade_size[i]),
            flags=self.flags[i].copy(),
        )

    def select(self, idx) -> "SnapshotTape":
        """Row subset (fancy index or boolean mask) as a new tape."""
        kw = {name: getattr(self, name)[idx] for name in self._array_fields()}
        return SnapshotTape(tick_size=self.tick_size, **kw)

    @staticmethod
    def _array_fields():
        return [f for f in SnapshotTape.__dataclass_fields__ if f != "tick_size"]

    def __eq__(self, other):
        if not isinstance(other, SnapshotTape):
            return NotImplemented
        return self.tick_size == other.tick_size and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in self._array_fields()
        )

    @property
    def complete(self) -> np.ndarray:
        return (self.bid_sizes > 0).all(axis=1) & (self.ask_sizes > 0).all(axis=1)

    def _log_px(self, ticks):
        out = np.full(ticks.shape, np.nan)
        ok = ticks > 0
        out[ok] = np.log(ticks[ok] * self.tick_size)
        return out

    @property
    def bid_prices(self) -> np.ndarray:
        return self._log_px(self.bid_ticks)

    @property
    def ask_prices(self) -> np.ndarray:
        return self._log_px(self.ask_ticks)

    @staticmethod
    def _log_vol(sizes):
        out = np.full(sizes.shape, np.nan)
        ok = sizes > 0
        out[ok] = np.log(sizes[ok])
        return out

    @property
    def bid_volumes(self) -> np.ndarray:
        return self._log_vol(self.bid_sizes)

    @property
    def ask_volumes(self) -> np.ndarray:
        return self._log_vol(self.ask_sizes)

    @property
    def v_mo(self) -> np.ndarray:
        out = np.zeros(len(self))
        ok = self.trade_size > 0
        out[ok] = np.log(self.trade_size[ok])
        return out

    def r1(self) -> np.ndarray:
        """(T, 4L-1) matrix of gaps, spread and log volumes; NaN where incomplete."""
        pb, pa = self.bid_prices, self.ask_prices
        gb = pb[:, :-1] - pb[:, 1:]
        ga = pa[:, 1:] - pa[:, :-1]
        s = pa[:, :1] - pb[:, :1]
        return np.hstack([gb[:, ::-1], s, ga, self.bid_volumes[:, ::-1], self.ask_volumes])

    def r2(self) -> np.ndarray:
        return self.flags.astype(float)

    # --- text round trip -------------------------------------------------

    def columns(self) -> list[str]:
        L = self.depth
        cols = ["seq", "timestamp_ms", "kind", "side"]
        for pre in ("bid", "ask"):
            cols += [f"{pre}{i}_px" for i in range(1, L + 1)]
            cols += [f"{pre}{i}_sz" for i in range(1, L + 1)]
        cols += ["bid_levels", "ask_levels", "bid_depth", "ask_depth", "trade_px", "trade_sz"]
        cols += ["BMO", "AMO", "BLO", "ALO", "BTT", "ATT"]
        return cols

    def to_matrix(self) -> np.ndarray:
        return np.column_stack(
            [
                self.seq,
                self.timestamp_ms,
                self.kind,
                self.side,
                self.bid_ticks,
                self.bid_sizes,
                self.ask_ticks,
                self.ask_sizes,
                self.bid_levels,
                self.ask_levels,
                self.bid_depth,
                self.ask_depth,
                self.trade_ticks,
                self.trade_size,
                self.flags,
            ]
        ).astype(np.int64)


def write_tape(path, tape: SnapshotTape) -> None:
    """Integer CSV; the first line is ``# tick_size=<x> depth=<L>``."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# tick_size={tape.tick_size!r} depth={tape.depth}\n")
        fh.write(",".join(tape.columns()) + "\n")
        if len(tape):
            np.savetxt(fh, tape.to_matrix(), fmt="%d", delimiter=",")


def read_tape(path) -> SnapshotTape:
    with open(path) as fh:
        meta = fh.readline()
        if not meta.startswith("#"):
            raise ValueError(f"{path}: missing '# tick_size=... depth=...' line")
        kv = dict(tok.split("=") for tok in meta[1:].split())
        tick_size, depth = float(kv["tick_size"]), int(kv["depth"])
        header = fh.readline().strip().split(",")
        body = fh.read()
    data = np.loadtxt(io.StringIO(body), dtype=np.int64, delimiter=",", ndmin=2) if body.strip() else np.zeros((0, 0))
    tape = SnapshotTape.allocate(len(data), depth, tick_size)
    if header != tape.columns():
        raise ValueError(f"{path}: unexpected snapshot header")
    if not len(data):
        return tape
    L = depth
    c = 4
    tape.seq[:] = data[:, 0]
    tape.timestamp_ms[:] = data[:, 1]
    tape.kind[:] = data[:, 2]
    tape.side[:] = data[:, 3]
    for arr in (tape.bid_ticks, tape.bid_sizes, tape.ask_ticks, tape.ask_sizes):
        arr[:] = data[:, c : c + L]
        c += L
    for arr in (tape.bid_levels, tape.ask_levels, tape.bid_depth, tape.ask_depth, tape.trade_ticks, tape.trade_size):
        arr[:] = data[:, c]
        c += 1
    tape.flags[:] = data[:, c : c + 6]
    return tape
