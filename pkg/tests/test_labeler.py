import math

import numpy as np
import pytest

from lobjump.book import BookState, LobEvent
from lobjump.ingest import replay
from lobjump.labeler import EventFlags, classify_event, label_jumps, read_trades, write_trades
from conftest import LA, LC, MO, A, B, book_rows, make_events
from oracles import brute_force_labels, random_stream


def _classify(book, ev):
    pre = book.copy()
    rep = book.apply(ev)
    return classify_event(ev, rep, pre)


def test_trade_through_sell():
    book = BookState({100: 40, 99: 50}, {102: 30})
    assert _classify(book, LobEvent(1, 0, MO, B, 0, 60)) == EventFlags(BMO=1, BTT=1)


def test_exact_size_is_regular_trade():
    book = BookState({100: 40, 99: 50}, {102: 30})
    assert _classify(book, LobEvent(1, 0, MO, A, 0, 30)) == EventFlags(AMO=1)


def test_limit_events():
    book = BookState({100: 40}, {102: 30})
    assert _classify(book, LobEvent(1, 0, LA, A, 101, 20)) == EventFlags(ALO=1)
    assert _classify(book, LobEvent(2, 0, LC, B, 100, 5)) == EventFlags(BLO=1)


def test_report_without_pre_state_agrees():
    book = BookState({100: 40, 99: 50}, {102: 30})
    ev = LobEvent(1, 0, MO, B, 0, 45)
    pre = book.copy()
    rep = book.apply(ev)
    assert classify_event(ev, rep) == classify_event(ev, rep, pre)


def test_mismatched_report_rejected():
    book = BookState({100: 40}, {102: 30})
    rep = book.apply(LobEvent(1, 0, LA, B, 99, 1))
    with pytest.raises(ValueError):
        classify_event(LobEvent(2, 0, LA, B, 99, 1), rep)


def test_walk_golden(walk_events):
    tape = replay(walk_events, depth=3)
    trades = label_jumps(tape)
    assert len(trades) == 2
    first, second = trades
    assert first.sign == -1 and first.tt == 1
    # next trade prints at 98, below the post-trade best bid 99
    assert first.y_bid == 1 and first.y_ask == 0
    assert first.v_mo_log == pytest.approx(math.log(60))
    assert second.tt == 0 and second.y_bid is None and second.y_ask is None


def _two_trades(first, second_rows):
    rows = book_rows({100: 40, 99: 50, 98: 30}, {102: 30, 103: 40})
    return make_events(rows + [first] + second_rows)


def test_jump_two_ticks_below():
    ev = _two_trades((MO, A, 0, 5), [(LC, B, 100, 40), (LC, B, 99, 50), (MO, B, 0, 10)])
    (t0, _) = label_jumps(replay(ev, depth=2))
    assert t0.y_bid == 1


def test_next_trade_at_best_bid_is_not_a_jump():
    ev = _two_trades((MO, A, 0, 5), [(LA, A, 101, 3), (MO, B, 0, 10)])
    (t0, _) = label_jumps(replay(ev, depth=2))
    assert t0.y_bid == 0 and t0.y_ask == 0


def test_ask_jump():
    ev = _two_trades((MO, B, 0, 5), [(LC, A, 102, 30), (MO, A, 0, 4)])
    (t0, _) = label_jumps(replay(ev, depth=2))
    assert t0.y_ask == 1 and t0.y_bid == 0


def test_fewer_than_two_trades(caplog):
    assert label_jumps(replay(make_events(book_rows({100: 1}, {101: 1})))) == []
    one = label_jumps(replay(make_events(book_rows({100: 5}, {101: 1}) + [(MO, B, 0, 2)])))
    assert len(one) == 1 and one[0].y_bid is None
    assert "fewer than 2 trades" in caplog.text


def _check_against_oracle(events, depth):
    tape = replay(events, depth=depth)
    trades = label_jumps(tape)
    flags, ref = brute_force_labels(events)
    np.testing.assert_array_equal(tape.flags, flags)
    got = [(t.t_seq, t.sign, t.tt, t.y_bid, t.y_ask) for t in trades]
    assert got == ref
    return trades


def test_oracle_on_handcrafted_stream(rng):
    events = random_stream(rng, 1000)
    trades = _check_against_oracle(events, depth=3)
    assert len(trades) > 50
    assert any(t.tt for t in trades) and any(t.y_bid for t in trades[:-1])


def test_oracle_on_simulated_stream(zi_session):
    sim = zi_session[0]
    _check_against_oracle(sim.events[:1000], depth=5)


def test_labels_ignore_interleaved_limit_events(rng):
    # padding far from the touch leaves trades and post-trade quotes unchanged
    events = random_stream(rng, 400)
    padded, seq = [], 0
    for ev in events:
        seq += 1
        padded.append(LobEvent(seq, ev.timestamp_ms, ev.kind, ev.side, ev.price_ticks, ev.size))
        if ev.kind is MO:
            seq += 1
            padded.append(LobEvent(seq, ev.timestamp_ms, LA, A, 10_000, 1))
    a = [(t.sign, t.tt, t.y_bid, t.y_ask) for t in label_jumps(replay(events, depth=1))]
    b = [(t.sign, t.tt, t.y_bid, t.y_ask) for t in label_jumps(replay(padded, depth=1))]
    assert a == b


def test_session_invariants(zi_session):
    _, tape, trades = zi_session
    f = tape.flags
    assert np.all(f[:, :4].sum(axis=1) == 1)
    assert f[:, 4].sum() <= f[:, 0].sum() and f[:, 5].sum() <= f[:, 1].sum()
    assert np.all(f[:, 4] <= f[:, 0]) and np.all(f[:, 5] <= f[:, 1])
    for t in trades[:-1]:
        assert t.y_bid * t.y_ask == 0
    assert all((t.sign == 1) == bool(f[np.searchsorted(tape.seq, t.t_seq), 1]) for t in trades)


def test_trades_csv_round_trip(tmp_path, zi_session):
    trades = zi_session[2]
    p = tmp_path / "trades.csv"
    write_trades(p, trades)
    assert read_trades(p) == trades
    assert p.read_text().splitlines()[0] == "k,t_seq,sign,v_mo_log,tt,y_bid,y_ask"
