"""Synthetic order flow with an optional planted jump/sign model.

Two regimes share one generator:

* zero-intelligence: limit arrivals placed uniformly within ``placement_ticks``
  of the opposite best, cancellations of a random part of a random level,
  and market orders with geometric sizes (so trade-throughs arise on their
  own);
* planted: after each trade the simulator evaluates a logistic model on the
  post-trade book and draws whether the *next* trade will print through the
  current best bid (or best ask). The draw is realised by cancelling the
  whole best level right away and forcing the next trade onto that side;
  when no jump is drawn, best levels are never fully cancelled, so the next
  trade cannot print through. Labels recovered by replay therefore follow the
  planted probabilities exactly.

Trade direction follows ``P(buy) = sigmoid(sign_coef * W1 + sign_bias)`` with
``W1`` the depth-1 bid/ask log volume ratio just before the trade, unless a
planted jump forces the side.

The generator keeps its own book (plain dicts, re-sorted on demand) so that
replaying its output through :mod:`lobjump.book` is an independent check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .book import EventKind, LobEvent, Side
from .evaluation import auc
from .features import design_names
from .ingest import hhmm


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_events: int = 50_000
    tick_size: float = 0.01
    depth: int = 5
    start_ms: int = hhmm(9, 5)
    mean_gap_ms: float = 200.0
    init_price_ticks: int = 10_000
    init_levels: int = 10
    limit_size_mean: float = 40.0
    rate_limit: float = 0.5
    rate_cancel: float = 0.4
    rate_market: float = 0.1
    placement_ticks: int = 8
    mo_size_mean: float = 30.0
    planted: bool = False
    jump_bid: tuple = ()  # ((feature name, coefficient), ...)
    jump_bid_intercept: float = -1.5
    jump_ask: tuple = ()
    jump_ask_intercept: float = -1.5
    sign_coef: float = 0.0
    sign_bias: float = 0.0

    @property
    def min_levels(self) -> int:
        return self.depth + 3

    def validate(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.init_levels < self.min_levels:
            raise ValueError(
                f"init_levels={self.init_levels} cannot sustain depth {self.depth}; "
                f"need at least {self.min_levels}"
            )
        if self.rate_limit <= 0 or self.rate_cancel < 0 or self.rate_market < 0:
            raise ValueError("rates must be non-negative and the limit rate positive")
        if self.placement_ticks < 1 or self.mo_size_mean < 1 or self.limit_size_mean < 1:
            raise ValueError("placement_ticks and size means must be >= 1")
        if self.init_price_ticks <= self.init_levels + 1:
            raise ValueError("initial price too close to zero for the initial book")
        allowed = set(planted_feature_names(self.depth))
        for name, _ in tuple(self.jump_bid) + tuple(self.jump_ask):
            if name not in allowed:
                raise ValueError(f"planted feature {name!r} is not a lag-0 design column")


def planted_feature_names(depth: int) -> list[str]:
    """Design columns a planted model may use: those readable at the trade itself."""
    return [n for n in design_names(depth, 1, 1)[1:] if n not in ("BLO_0", "ALO_0")]


@dataclass
class SimOutput:
    config: SimConfig
    events: list[LobEvent]
    # ground-truth book after every event: top-L and full-depth summaries
    truth: dict[str, np.ndarray]
    trade_seq: np.ndarray
    true_p_buy: np.ndarray
    true_p_jump_bid: np.ndarray  # NaN outside planted mode
    true_p_jump_ask: np.ndarray
    drawn_jump_bid: np.ndarray  # -1 outside planted mode
    drawn_jump_ask: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def planted(self) -> bool:
        return self.config.planted


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class _Generator:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.bids: dict[int, int] = {}
        self.asks: dict[int, int] = {}
        self.events: list[LobEvent] = []
        self.t_ms = cfg.start_ms
        n, L = cfg.n_events, cfg.depth
        self.truth = {
            "bid_ticks": np.zeros((n, L), np.int64),
            "bid_sizes": np.zeros((n, L), np.int64),
            "ask_ticks": np.zeros((n, L), np.int64),
            "ask_sizes": np.zeros((n, L), np.int64),
            "bid_levels": np.zeros(n, np.int64),
            "ask_levels": np.zeros(n, np.int64),
            "bid_depth": np.zeros(n, np.int64),
            "ask_depth": np.zeros(n, np.int64),
        }
        self.trades: list[tuple] = []
        # pending planted outcome: None, "bid" or "ask"; reference bests at the last trade
        self.mode = None
        self.ref_bid = 0
        self.ref_ask = 0
        self.jb = [(n, float(c)) for n, c in cfg.jump_bid]
        self.ja = [(n, float(c)) for n, c in cfg.jump_ask]

    # --- primitives ---------------------------------------------------------

    @property
    def full(self) -> bool:
        return len(self.events) >= self.cfg.n_events

    def best_bid(self) -> int:
        return max(self.bids)

    def best_ask(self) -> int:
        return min(self.asks)

    def lsize(self, mean: float) -> int:
        return int(self.rng.geometric(1.0 / mean))

    def emit(self, kind: EventKind, side: Side, price: int, size: int) -> None:
        if self.full:
            return
        self.t_ms += int(round(self.rng.exponential(self.cfg.mean_gap_ms)))
        seq = len(self.events) + 1
        self.events.append(LobEvent(seq, self.t_ms, kind, side, price, size))
        book = self.bids if side is Side.BID else self.asks
        if kind is EventKind.LIMIT_ARRIVAL:
            book[price] = book.get(price, 0) + size
        elif kind is EventKind.LIMIT_CANCEL:
            left = book[price] - size
            if left:
                book[price] = left
            else:
                del book[price]
        else:
            prices = sorted(book, reverse=side is Side.BID)
            remaining = size
            for p in prices:
                take = min(book[p], remaining)
                remaining -= take
                if take == book[p]:
                    del book[p]
                else:
                    book[p] -= take
                if not remaining:
                    break
        self._record(seq - 1)

    def _record(self, t: int) -> None:
        L = self.cfg.depth
        tr = self.truth
        bp = sorted(self.bids, reverse=True)[:L]
        ap = sorted(self.asks)[:L]
        tr["bid_ticks"][t, : len(bp)] = bp
        tr["bid_sizes"][t, : len(bp)] = [self.bids[p] for p in bp]
        tr["ask_ticks"][t, : len(ap)] = ap
        tr["ask_sizes"][t, : len(ap)] = [self.asks[p] for p in ap]
        tr["bid_levels"][t] = len(self.bids)
        tr["ask_levels"][t] = len(self.asks)
        tr["bid_depth"][t] = sum(self.bids.values())
        tr["ask_depth"][t] = sum(self.asks.values())

    def replenish(self) -> None:
        need = self.cfg.min_levels
        while len(self.bids) < need and not self.full:
            p = max(min(self.bids) - int(self.rng.integers(1, 3)), 1)
            self.emit(EventKind.LIMIT_ARRIVAL, Side.BID, p, self.lsize(self.cfg.limit_size_mean))
        while len(self.asks) < need and not self.full:
            p = max(self.asks) + int(self.rng.integers(1, 3))
            self.emit(EventKind.LIMIT_ARRIVAL, Side.ASK, p, self.lsize(self.cfg.limit_size_mean))

    # --- order flow ---------------------------------------------------------

    def initial_book(self) -> None:
        cfg = self.cfg
        p0 = cfg.init_price_ticks
        for i in range(cfg.init_levels):
            self.emit(EventKind.LIMIT_ARRIVAL, Side.BID, p0 - i, self.lsize(cfg.limit_size_mean))
            self.emit(EventKind.LIMIT_ARRIVAL, Side.ASK, p0 + 2 + i, self.lsize(cfg.limit_size_mean))

    def limit_arrival(self) -> None:
        cfg = self.cfg
        K = cfg.placement_ticks
        u = int(self.rng.integers(1, K + 1))
        size = self.lsize(cfg.limit_size_mean)
        if self.rng.random() < 0.5:
            price = self.best_ask() - u
            if self.mode == "bid" and price >= self.ref_bid:
                price = self.ref_bid - u
            price = max(min(price, self.best_ask() - 1), 1)
            self.emit(EventKind.LIMIT_ARRIVAL, Side.BID, price, size)
        else:
            price = self.best_bid() + u
            if self.mode == "ask" and price <= self.ref_ask:
                price = self.ref_ask + u
            price = max(price, self.best_bid() + 1)
            self.emit(EventKind.LIMIT_ARRIVAL, Side.ASK, price, size)

    def cancel(self) -> None:
        side = Side.BID if self.rng.random() < 0.5 else Side.ASK
        book = self.bids if side is Side.BID else self.asks
        prices = sorted(book, reverse=side is Side.BID)
        i = int(self.rng.integers(len(prices)))
        p = prices[i]
        q = book[p]
        size = int(self.rng.integers(1, q + 1))
        if size == q and i == 0 and self.cfg.planted:
            # a best level may only vanish through a planted jump or a trade
            size = q - 1
            if size == 0:
                return
        self.emit(EventKind.LIMIT_CANCEL, side, p, size)

    def market_order(self) -> None:
        cfg = self.cfg
        if self.mode == "bid":
            buy, p_buy = False, 0.0
        elif self.mode == "ask":
            buy, p_buy = True, 1.0
        else:
            w1 = math.log(self.bids[self.best_bid()] / self.asks[self.best_ask()])
            p_buy = _sigmoid(cfg.sign_coef * w1 + cfg.sign_bias)
            buy = self.rng.random() < p_buy
        side = Side.ASK if buy else Side.BID
        book = self.asks if buy else self.bids
        prices = sorted(book, reverse=not buy)
        # leave at least depth + 1 untouched levels behind
        cap = sum(book[p] for p in prices[: len(prices) - cfg.depth - 1])
        best_size = book[prices[0]]
        size = min(self.lsize(cfg.mo_size_mean), cap)
        self.emit(EventKind.MARKET_ORDER, side, 0, size)
        seq = len(self.events)
        through = size > best_size
        p_bid = p_ask = math.nan
        d_bid = d_ask = -1
        self.mode = None
        if cfg.planted and not self.full:
            x = self._lag0_features(buy, size, through)
            p_bid = _sigmoid(cfg.jump_bid_intercept + sum(c * x[n] for n, c in self.jb))
            q_ask = _sigmoid(cfg.jump_ask_intercept + sum(c * x[n] for n, c in self.ja))
            p_ask = (1.0 - p_bid) * q_ask
            d_bid = int(self.rng.random() < p_bid)
            d_ask = 0 if d_bid else int(self.rng.random() < q_ask)
            self.ref_bid, self.ref_ask = self.best_bid(), self.best_ask()
            self.mode = "bid" if d_bid else "ask" if d_ask else None
        self.trades.append((seq, p_buy, p_bid, p_ask, d_bid, d_ask))
        self.replenish()
        if self.mode == "bid":
            self.emit(EventKind.LIMIT_CANCEL, Side.BID, self.ref_bid, self.bids[self.ref_bid])
        elif self.mode == "ask":
            self.emit(EventKind.LIMIT_CANCEL, Side.ASK, self.ref_ask, self.asks[self.ref_ask])

    def _lag0_features(self, buy: bool, size: int, through: bool) -> dict[str, float]:
        L = self.cfg.depth
        ts = self.cfg.tick_size
        bp = sorted(self.bids, reverse=True)[:L]
        ap = sorted(self.asks)[:L]
        lbp = [math.log(p * ts) for p in bp]
        lap = [math.log(p * ts) for p in ap]
        x = {"VMO_0": math.log(size), "S_0": lap[0] - lbp[0]}
        for j in range(1, L + 1):
            x[f"VB{j}_0"] = math.log(self.bids[bp[j - 1]])
            x[f"VA{j}_0"] = math.log(self.asks[ap[j - 1]])
        for j in range(1, L):
            x[f"GB{j}_0"] = lbp[j - 1] - lbp[j]
            x[f"GA{j}_0"] = lap[j] - lap[j - 1]
        x["BMO_0"] = float(not buy)
        x["AMO_0"] = float(buy)
        x["BTT_0"] = float(through and not buy)
        x["ATT_0"] = float(through and buy)
        return x

    def run(self) -> None:
        cfg = self.cfg
        total = cfg.rate_limit + cfg.rate_cancel + cfg.rate_market
        p_la = cfg.rate_limit / total
        p_lc = p_la + cfg.rate_cancel / total
        self.initial_book()
        while not self.full:
            u = self.rng.random()
            if u < p_la:
                self.limit_arrival()
            elif u < p_lc:
                self.cancel()
            else:
                self.market_order()
            self.replenish()


def simulate(cfg: SimConfig) -> SimOutput:
    """Generate ``cfg.n_events`` events; deterministic in ``cfg.seed``."""
    cfg.validate()
    gen = _Generator(cfg)
    gen.run()
    tr = np.array(gen.trades, dtype=float).reshape(-1, 6)
    n_mo = len(tr)
    return SimOutput(
        config=cfg,
        events=gen.events,
        truth=gen.truth,
        trade_seq=tr[:, 0].astype(np.int64),
        true_p_buy=tr[:, 1],
        true_p_jump_bid=tr[:, 2],
        true_p_jump_ask=tr[:, 3],
        drawn_jump_bid=tr[:, 4].astype(np.int64),
        drawn_jump_ask=tr[:, 5].astype(np.int64),
        stats={"n_events": len(gen.events), "n_trades": n_mo},
    )


def bayes_auc(sim: SimOutput, side: str = "BID", seqs=None) -> float:
    """AUC of the planted jump probabilities against the realised jumps.

    Only trades followed by another trade carry a realised label. ``seqs``
    restricts the evaluation to the given trade seqs (e.g. a test segment).
    """
    if not sim.planted:
        raise ValueError("bayes_auc needs a planted-mode simulation")
    side = side.upper()
    probs = sim.true_p_jump_bid if side == "BID" else sim.true_p_jump_ask
    drawn = sim.drawn_jump_bid if side == "BID" else sim.drawn_jump_ask
    keep = np.zeros(len(sim.trade_seq), dtype=bool)
    keep[:-1] = True
    if seqs is not None:
        keep &= np.isin(sim.trade_seq, np.asarray(seqs))
    return auc(probs[keep], drawn[keep])


TRUTH_HEADER = ["seq", "true_p_jump_bid", "true_p_jump_ask", "true_p_buy"]


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_truth(path, sim: SimOutput) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for s, pb, pa, pbuy in zip(sim.trade_seq, sim.true_p_jump_bid, sim.true_p_jump_ask, sim.true_p_buy):
            w.writerow([int(s), _fmt(pb), _fmt(pa), _fmt(pbuy)])


def read_truth(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader) != TRUTH_HEADER:
            raise ValueError(f"{path}: unexpected truth header")
        rows = list(reader)
    conv = lambda v: float(v) if v != "" else math.nan  # noqa: E731
    return {
        "seq": np.array([int(r[0]) for r in rows], dtype=np.int64),
        "true_p_jump_bid": np.array([conv(r[1]) for r in rows]),
        "true_p_jump_ask": np.array([conv(r[2]) for r in rows]),
        "true_p_buy": np.array([conv(r[3]) for r in rows]),
    }
