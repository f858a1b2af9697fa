"""Event-file parsing, session windows and replay into snapshots."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

from .book import BookState, EventKind, LobEvent, MalformedEventError, Side
from .labeler import classify_event
from .tape import KIND_CODES, SIDE_CODES, SnapshotTape

logger = logging.getLogger(__name__)

EVENT_HEADER = ["seq", "timestamp_ms", "kind", "side", "price_ticks", "size"]

_KINDS = {k.value: k for k in EventKind}
_SIDES = {s.value: s for s in Side}


def hhmm(h: int, m: int) -> int:
    return (h * 60 + m) * 60_000


@dataclass(frozen=True)
class SessionWindow:
    """Half-open interval ``[start_ms, end_ms)`` of exchange-local time."""

    start_ms: int
    end_ms: int
    name: str = ""

    def __post_init__(self):
        if not self.start_ms < self.end_ms:
            raise ValueError(f"empty session window [{self.start_ms}, {self.end_ms})")

    def __contains__(self, ts: int) -> bool:
        return self.start_ms <= ts < self.end_ms


MORNING = SessionWindow(hhmm(9, 5), hhmm(13, 15), "morning")
AFTERNOON = SessionWindow(hhmm(13, 15), hhmm(17, 25), "afternoon")
ALLDAY = SessionWindow(hhmm(9, 5), hhmm(17, 25), "allday")
WINDOWS = {w.name: w for w in (MORNING, AFTERNOON, ALLDAY)}


class EventFileError(ValueError):
    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.lineno = lineno


@dataclass
class EventStream:
    """Parsed, window-filtered events plus what was dropped on the way."""

    events: list[LobEvent] = field(default_factory=list)
    n_rows: int = 0
    n_out_of_window: int = 0

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]


def parse_events(path, window: SessionWindow | None = None) -> EventStream:
    """Read an event CSV, keeping rows whose timestamp falls in ``window``.

    Raises :class:`EventFileError` (with the 1-based line number) on a bad
    header, a malformed row, or a non-increasing ``seq``.
    """
    out = EventStream()
    last_seq = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVENT_HEADER:
            raise EventFileError(path, 1, f"expected header {','.join(EVENT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise EventFileError(path, lineno, f"expected 6 fields, got {len(row)}")
            try:
                seq, ts, price, size = int(row[0]), int(row[1]), int(row[4]), int(row[5])
                kind, side = _KINDS[row[2]], _SIDES[row[3]]
                ev = LobEvent(seq, ts, kind, side, price, size)
            except (ValueError, KeyError) as exc:
                raise EventFileError(path, lineno, f"malformed row {row!r}: {exc}") from None
            if last_seq is not None and seq <= last_seq:
                raise EventFileError(path, lineno, f"seq {seq} not after {last_seq}")
            last_seq = seq
            out.n_rows += 1
            if window is not None and ts not in window:
                out.n_out_of_window += 1
                continue
            out.events.append(ev)
    if out.n_out_of_window:
        logger.info("%s: dropped %d out-of-window rows", path, out.n_out_of_window)
    return out


def write_events(path, events) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for ev in events:
            w.writerow([ev.seq, ev.timestamp_ms, ev.kind.value, ev.side.value, ev.price_ticks, ev.size])


def replay(events, depth: int = 5, tick_size: float = 0.01, state: BookState | None = None) -> SnapshotTape:
    """Run events through an (initially empty) book, one snapshot per event.

    Each row is read immediately after its event. Trade columns are filled
    only for market orders: the price is the consumed side's best before the
    order, the size is the total filled.
    """
    events = list(events)
    tape = SnapshotTape.allocate(len(events), depth, tick_size)
    book = BookState() if state is None else state
    bid_ticks, bid_sizes = tape.bid_ticks, tape.bid_sizes
    ask_ticks, ask_sizes = tape.ask_ticks, tape.ask_sizes
    for t, ev in enumerate(events):
        try:
            rep = book.apply(ev)
        except MalformedEventError as exc:
            raise MalformedEventError(ev.seq, f"replay failed at event {t}: {exc.reason}") from exc
        tape.seq[t] = ev.seq
        tape.timestamp_ms[t] = ev.timestamp_ms
        tape.kind[t] = KIND_CODES[ev.kind]
        tape.side[t] = SIDE_CODES[ev.side]
        bpx = book._bid_px
        apx = book._ask_px
        nb = min(depth, len(bpx))
        na = min(depth, len(apx))
        for i in range(nb):
            p = bpx[-1 - i]
            bid_ticks[t, i] = p
            bid_sizes[t, i] = book.bids[p]
        for i in range(na):
            p = apx[i]
            ask_ticks[t, i] = p
            ask_sizes[t, i] = book.asks[p]
        tape.bid_levels[t] = len(bpx)
        tape.ask_levels[t] = len(apx)
        tape.bid_depth[t] = sum(book.bids.values())
        tape.ask_depth[t] = sum(book.asks.values())
        if ev.kind is EventKind.MARKET_ORDER:
            tape.trade_ticks[t] = rep.best_before
            tape.trade_size[t] = rep.filled
        tape.flags[t] = classify_event(ev, rep).as_r2()
    return tape
