"""File-based pipeline: simulate, replay, label, featurize, fit, evaluate, curve, report.

Every stage reads and writes CSV/JSON artifacts in one work directory, so a
run can be resumed or inspected stage by stage. On failure a single line

    lobjump: error stage=<stage> code=<code> msg="<detail>"

goes to stderr and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_overrides
from .empirics import tradesign_curve, tradesign_curves, write_curves
from .evaluation import (
    auc,
    aggregate_selection,
    roc_curve,
    split_rows,
    write_auc_summary,
    write_roc,
    write_selection_report,
)
from .features import build_design, read_design, write_design
from .glm import cross_validate, write_fit_meta, write_path
from .ingest import WINDOWS, EventFileError, parse_events, replay, write_events
from .labeler import label_jumps, read_trades, write_trades
from .simulator import simulate, write_truth
from .tape import read_tape, write_tape

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_MISSING = 3

# which stage produces each artifact, for "run stage X first" messages
PRODUCER = {
    "tape.csv": "replay",
    "trades.csv": "label",
    "design_bid.csv": "featurize",
    "design_ask.csv": "featurize",
    "fit_bid.json": "fit",
    "fit_ask.json": "fit",
}


class StageError(Exception):
    def __init__(self, code: str, msg: str, status: int = EXIT_FAIL):
        super().__init__(msg)
        self.code = code
        self.msg = msg
        self.status = status


class Run:
    def __init__(self, cfg: RunConfig, workdir: Path, stage: str):
        self.cfg = cfg
        self.wd = workdir
        self.stage = stage

    def path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.wd / p

    def need(self, name: str, producer: str | None = None) -> Path:
        p = self.path(name)
        if not p.exists():
            producer = producer or PRODUCER.get(Path(name).name, "?")
            raise StageError("missing-input", f"{p} not found; run stage {producer} first", EXIT_MISSING)
        return p

    def wrote(self, p: Path) -> None:
        print(p)


def cmd_simulate(run: Run, args) -> None:
    sim = simulate(run.cfg.sim_config())
    ev = run.path(run.cfg.events)
    write_events(ev, sim.events)
    run.wrote(ev)
    tr = run.path("truth.csv")
    write_truth(tr, sim)
    run.wrote(tr)


def cmd_replay(run: Run, args) -> None:
    src = run.need(run.cfg.events, "simulate")
    stream = parse_events(src, WINDOWS[run.cfg.window])
    tape = replay(stream.events, depth=run.cfg.depth, tick_size=run.cfg.tick_size)
    out = run.path("tape.csv")
    write_tape(out, tape)
    run.wrote(out)


def cmd_label(run: Run, args) -> None:
    tape = read_tape(run.need("tape.csv"))
    out = run.path("trades.csv")
    write_trades(out, label_jumps(tape))
    run.wrote(out)


def cmd_featurize(run: Run, args) -> None:
    cfg = run.cfg
    tape = read_tape(run.need("tape.csv"))
    trades = read_trades(run.need("trades.csv"))
    for side in cfg.side_list:
        d = build_design(tape, trades, cfg.m, cfg.n, side, cfg.r1_groups)
        out = run.path(f"design_{side.lower()}.csv")
        write_design(out, d)
        rows = run.path(f"design_{side.lower()}_rows.csv")
        with open(rows, "w") as fh:
            fh.write("t_seq\n")
            fh.writelines(f"{int(s)}\n" for s in d.t_seq)
        run.wrote(out)
        run.wrote(rows)


def _split(cfg: RunConfig, n: int):
    return split_rows(n, cfg.split, cfg.shuffle_split, cfg.seed)


def cmd_fit(run: Run, args) -> None:
    cfg = run.cfg
    fcfg = cfg.fit_config()
    for side in cfg.side_list:
        s = side.lower()
        d = read_design(run.need(f"design_{s}.csv"), side)
        train, test = _split(cfg, len(d))
        fit = cross_validate(d.features[train], d.y[train], fcfg, names=d.feature_names)
        fit.n_test = len(test)
        p = run.path(f"path_{s}.csv")
        write_path(p, fit.path, fit.cv_mean)
        meta = run.path(f"fit_{s}.json")
        extra = {"instrument": cfg.instrument, "session": cfg.window, "side": side, "split": cfg.split}
        write_fit_meta(meta, fit, fcfg, extra)
        run.wrote(p)
        run.wrote(meta)


def cmd_evaluate(run: Run, args) -> None:
    cfg = run.cfg
    rows = []
    for side in cfg.side_list:
        s = side.lower()
        d = read_design(run.need(f"design_{s}.csv"), side)
        with open(run.need(f"fit_{s}.json")) as fh:
            meta = json.load(fh)
        if meta["names"] != d.feature_names:
            raise StageError("stale-input", f"fit_{s}.json does not match design_{s}.csv; rerun stage fit")
        _, test = _split(cfg, len(d))
        yte = d.y[test]
        if len(test) == 0 or yte.min() == yte.max():
            raise StageError("degenerate", f"{side} test segment holds a single class")
        scores = meta["intercept"] + d.features[test] @ np.asarray(meta["coef"], dtype=float)
        out = run.path(f"roc_{s}.csv")
        write_roc(out, roc_curve(scores, yte))
        run.wrote(out)
        rows.append((cfg.instrument, cfg.window, side, auc(scores, yte), meta["n_train"], len(test), meta["lambda"]))
    out = run.path("auc.csv")
    write_auc_summary(out, rows)
    run.wrote(out)


def cmd_curve(run: Run, args) -> None:
    cfg = run.cfg
    tape = read_tape(run.need("tape.csv"))
    trades = read_trades(run.need("trades.csv"))
    kw = dict(min_count=cfg.curve_min_count, sell_mode=cfg.sell_mode)
    if args.depth is None:
        curves = tradesign_curves(trades, tape, **kw)
    else:
        curves = [tradesign_curve(trades, tape, args.depth, side, **kw) for side in ("buy", "sell")]
    out = run.path(args.out)
    write_curves(out, curves)
    run.wrote(out)


def cmd_report(run: Run, args) -> None:
    root = Path(args.fits) if args.fits else run.wd
    metas = sorted(root.rglob("fit_*.json"))
    if not metas:
        raise StageError("missing-input", f"no fit_*.json under {root}; run stage fit first", EXIT_MISSING)
    orders = []
    for p in metas:
        with open(p) as fh:
            orders.append(json.load(fh)["selection_order"])
    report = aggregate_selection(orders, ranks=args.ranks)
    out = run.path(args.out)
    write_selection_report(out, report, top=args.top)
    run.wrote(out)


COMMANDS = {
    "simulate": (cmd_simulate, "generate a synthetic event file and ground truth"),
    "replay": (cmd_replay, "rebuild the book and write the snapshot tape"),
    "label": (cmd_label, "write labelled trades from the tape"),
    "featurize": (cmd_featurize, "write the per-side design matrices"),
    "fit": (cmd_fit, "cross-validated lasso path on the training segment"),
    "evaluate": (cmd_evaluate, "score the test segment: ROC points and AUC summary"),
    "curve": (cmd_curve, "trade-sign curves against the bid/ask volume ratio"),
    "report": (cmd_report, "aggregate selection ranks across fit outputs"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-w", "--workdir", default=".", help="directory holding stage artifacts")
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")

    ap = argparse.ArgumentParser(prog="lobjump", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    parsers = {}
    for name, (_, help_) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_)
    parsers["curve"].add_argument("--depth", type=int, help="one depth (default: every visible depth)")
    parsers["curve"].add_argument("--out", default="curve.csv")
    parsers["report"].add_argument("--fits", help="directory searched for fit_*.json (default: workdir)")
    parsers["report"].add_argument("--out", default="selection.csv")
    parsers["report"].add_argument("--ranks", type=int, default=5)
    parsers["report"].add_argument("--top", type=int, default=5)
    return ap


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = parse_overrides(enumerate(args.set, 1), "--set")
    if args.seed is not None:
        over["seed"] = args.seed
    return cfg.replace(**over) if over else cfg


def _fail(stage: str, code: str, msg: str, status: int) -> int:
    one_line = " ".join(str(msg).split())
    print(f"lobjump: error stage={stage} code={code} msg={json.dumps(one_line)}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        cfg = _config(args)
        wd = Path(args.workdir)
        os.makedirs(wd, exist_ok=True)
        COMMANDS[stage][0](Run(cfg, wd, stage), args)
    except StageError as e:
        return _fail(stage, e.code, e.msg, e.status)
    except (ConfigError, FileNotFoundError) as e:
        return _fail(stage, "config", e, EXIT_USAGE)
    except EventFileError as e:
        return _fail(stage, "bad-input", e, EXIT_FAIL)
    except ValueError as e:
        return _fail(stage, "invalid", e, EXIT_FAIL)
    return 0


if __name__ == "__main__":
    sys.exit(main())
