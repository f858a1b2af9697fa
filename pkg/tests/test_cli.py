import subprocess
import sys

import numpy as np
import pytest

from lobjump.cli import main
from lobjump.config import ConfigError, RunConfig, load_config, parse_config
from lobjump.empirics import tradesign_curve, write_curves
from lobjump.evaluation import backtest
from lobjump.features import build_design
from lobjump.ingest import parse_events, replay
from lobjump.labeler import read_trades
from lobjump.tape import read_tape

SMALL = """\
# small planted run
n_events = 12000     # events per session
planted = true
jump_bid = VB1_0:-0.8, BMO_0:1.5, VMO_0:0.6
jump_ask = VA1_0:-0.8, AMO_0:1.5, VMO_0:0.6
sign_coef = 0.5
n_lambda = 30
folds = 5
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL)
    return p


def run(*args):
    return main([str(a) for a in args])


def test_config_grammar():
    cfg = parse_config(SMALL)
    assert cfg.n_events == 12000 and cfg.planted is True
    assert cfg.jump_bid == (("VB1_0", -0.8), ("BMO_0", 1.5), ("VMO_0", 0.6))
    assert (cfg.depth, cfg.m, cfg.n) == (5, 5, 5)
    assert parse_config(cfg.dumps()) == cfg
    sim = cfg.replace(seed=4).sim_config()
    assert sim.seed == 4 and sim.n_events == 12000 and sim.jump_ask == cfg.jump_ask
    fit = cfg.fit_config()
    assert fit.n_lambda == 30 and fit.folds == 5 and fit.seed == cfg.seed


@pytest.mark.parametrize(
    "text, msg",
    [
        ("depht = 5", "unknown key"),
        ("depth 5", "expected 'key = value'"),
        ("depth = five", "bad value"),
        ("planted = maybe", "bad value"),
        ("window = evening", "unknown window"),
        ("sides = BID,MID", "sides"),
        ("jump_bid = VB1_0", "bad value"),
    ],
)
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_load_config(cfg_file):
    assert load_config(cfg_file) == parse_config(SMALL)
    assert RunConfig().window == "allday"


def test_label_count_equals_market_orders(tmp_path, cfg_file):
    wd = tmp_path / "w"
    for stage in ("simulate", "replay", "label"):
        assert run(stage, "-w", wd, "--config", cfg_file, "--set", "n_events=10000") == 0
    events = parse_events(wd / "events.csv").events
    n_mo = sum(e.kind.value == "MO" for e in events)
    trades = read_trades(wd / "trades.csv")
    assert len(trades) == n_mo
    assert sum(t.y_bid is not None for t in trades) == n_mo - 1


def test_missing_input_message(tmp_path, capsys):
    assert run("label", "-w", tmp_path) == 3
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1
    assert err.startswith("lobjump: error stage=label code=missing-input")
    assert "run stage replay first" in err
    assert run("report", "-w", tmp_path) == 3
    assert "run stage fit first" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    assert run("simulate", "-w", tmp_path, "--set", "nope=1") == 2
    assert "code=config" in capsys.readouterr().err
    assert run("simulate", "-w", tmp_path, "--config", tmp_path / "absent.cfg") == 2


def test_bad_event_file(tmp_path, capsys):
    (tmp_path / "events.csv").write_text("seq,timestamp_ms,kind,side,price_ticks,size\n1,0,ZZ,B,1,1\n")
    assert run("replay", "-w", tmp_path) == 1
    assert "code=bad-input" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    wd = tmp_path_factory.mktemp("pipe")
    cfg = wd / "run.cfg"
    cfg.write_text(SMALL)
    for stage in ("simulate", "replay", "label", "featurize", "fit", "evaluate", "report"):
        assert main([stage, "-w", str(wd), "--config", str(cfg), "--seed", "3"]) == 0, stage
    return wd, cfg


def test_pipeline_artifacts(pipeline):
    wd, _ = pipeline
    names = {p.name for p in wd.iterdir()}
    for side in ("bid", "ask"):
        assert {f"design_{side}.csv", f"path_{side}.csv", f"fit_{side}.json", f"roc_{side}.csv"} <= names
    assert {"events.csv", "truth.csv", "tape.csv", "trades.csv", "auc.csv", "selection.csv"} <= names
    assert (wd / "auc.csv").read_text().splitlines()[0] == "instrument,session,side,auc,n_train,n_test,lambda"


def test_pipeline_matches_library_backtest(pipeline):
    wd, cfg = pipeline
    rc = load_config(cfg).replace(seed=3)
    tape = read_tape(wd / "tape.csv")
    d = build_design(tape, read_trades(wd / "trades.csv"))
    bt = backtest(d, rc.split, rc.fit_config())
    row = (wd / "auc.csv").read_text().splitlines()[1].split(",")
    assert row[2] == "BID"
    assert float(row[3]) == bt.auc and int(row[5]) == bt.n_test and float(row[6]) == bt.fit.lambda_
    sel = (wd / "selection.csv").read_text()
    assert f"1,{bt.selection_order[0]},1" in sel


def test_stages_are_idempotent(pipeline):
    wd, cfg = pipeline
    before = {p.name: p.read_bytes() for p in wd.iterdir() if p.is_file()}
    for stage in ("replay", "label", "featurize", "fit", "evaluate", "report"):
        assert main([stage, "-w", str(wd), "--config", str(cfg), "--seed", "3"]) == 0
    after = {p.name: p.read_bytes() for p in wd.iterdir() if p.is_file()}
    assert before == after


def test_curve_matches_library(pipeline, tmp_path):
    wd, cfg = pipeline
    assert main(["curve", "-w", str(wd), "--config", str(cfg), "--depth", "1", "--out", "c1.csv"]) == 0
    tape = read_tape(wd / "tape.csv")
    trades = read_trades(wd / "trades.csv")
    ref = tmp_path / "ref.csv"
    write_curves(ref, [tradesign_curve(trades, tape, 1, s) for s in ("buy", "sell")])
    assert (wd / "c1.csv").read_bytes() == ref.read_bytes()


def test_report_over_directory(pipeline, tmp_path):
    wd, cfg = pipeline
    out = tmp_path / "sel.csv"
    assert main(["report", "-w", str(tmp_path), "--fits", str(wd), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rank,variable,count"
    rank1 = [l for l in lines[1:] if l.startswith("1,")]
    assert sum(int(l.rsplit(",", 1)[1]) for l in rank1) == 2  # one bid fit, one ask fit


def test_replay_respects_window(tmp_path):
    wd = tmp_path
    assert run("simulate", "-w", wd, "--set", "n_events=3000", "--set", "start_ms=48000000") == 0
    assert run("replay", "-w", wd, "--set", "window=morning") == 0
    assert len(read_tape(wd / "tape.csv")) == 0
    assert run("replay", "-w", wd, "--set", "window=afternoon", "--set", "depth=3") == 0
    tape = read_tape(wd / "tape.csv")
    assert tape == replay(parse_events(wd / "events.csv").events, depth=3)
    assert len(tape) == 3000


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "lobjump", "label", "-w", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 3 and "stage=label" in r.stderr
    r = subprocess.run([sys.executable, "-m", "lobjump", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for stage in ("simulate", "replay", "label", "featurize", "fit", "evaluate", "curve", "report"):
        assert stage in r.stdout
