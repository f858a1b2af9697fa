"""Out-of-sample scoring (ROC/AUC) and variable-selection frequency tables."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .glm import FitConfig, FitResult, cross_validate


def _split_classes(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in shape")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    n_pos = int((labels == 1).sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"AUC undefined with {n_pos} positives and {n_neg} negatives")
    return scores, labels == 1, n_pos, n_neg


def auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative (ties count 1/2).

    Rank form: ``(sum of positive midranks - n+(n+ + 1)/2) / (n+ n-)``.
    """
    scores, pos, n_pos, n_neg = _split_classes(scores, labels)
    ranks = rankdata(scores)  # midranks for ties
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    """ROC points from (0, 0) to (1, 1), one per distinct score threshold."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def auc(self) -> float:
        """Trapezoidal area under the points."""
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2))


def roc_curve(scores, labels) -> RocCurve:
    scores, pos, n_pos, n_neg = _split_classes(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    tp = np.cumsum(pos[order])
    fp = np.cumsum(~pos[order])
    # one point per block of tied scores
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    fpr = np.r_[0.0, fp[last] / n_neg]
    tpr = np.r_[0.0, tp[last] / n_pos]
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=np.r_[np.inf, s[last]])


def write_roc(path, roc: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for f, t in zip(roc.fpr, roc.tpr):
            w.writerow([repr(float(f)), repr(float(t))])


@dataclass
class BacktestResult:
    fit: FitResult
    roc: RocCurve
    selection_order: list[str]
    auc: float
    n_train: int
    n_test: int
    test_rows: np.ndarray
    test_scores: np.ndarray


def split_rows(n: int, split: float, shuffle: bool = False, seed: int = 0):
    """Train/test row indices: first ``split`` fraction in time order, or a random split."""
    if not 0 < split < 1:
        raise ValueError("split must lie in (0, 1)")
    n_train = int(np.floor(split * n))
    idx = np.arange(n)
    if shuffle:
        idx = np.sort(np.random.default_rng(seed).permutation(n)[:n_train])
        test = np.setdiff1d(np.arange(n), idx)
        return idx, test
    return idx[:n_train], idx[n_train:]


def backtest(design, split: float = 0.7, cfg: FitConfig | None = None, shuffle: bool = False) -> BacktestResult:
    """Fit on the first ``split`` of the rows (by lambda CV), score the rest.

    ``design`` is a :class:`~lobjump.features.DesignMatrix`.
    """
    cfg = cfg or FitConfig()
    train, test = split_rows(len(design), split, shuffle, cfg.seed)
    Xf = design.features
    yte = design.y[test]
    if len(test) == 0 or yte.min() == yte.max():
        raise ValueError(
            f"test segment is class-degenerate: {len(test)} rows, {int(yte.sum())} positives"
        )
    fit = cross_validate(Xf[train], design.y[train], cfg, names=design.feature_names)
    fit.n_test = len(test)
    scores = fit.decision_function(Xf[test])
    return BacktestResult(
        fit=fit,
        roc=roc_curve(scores, yte),
        selection_order=list(fit.path.selection_order),
        auc=auc(scores, yte),
        n_train=len(train),
        n_test=len(test),
        test_rows=test,
        test_scores=scores,
    )


AUC_HEADER = ["instrument", "session", "side", "auc", "n_train", "n_test", "lambda"]


def write_auc_summary(path, rows) -> None:
    """``rows``: iterables of (instrument, session, side, auc, n_train, n_test, lambda)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AUC_HEADER)
        for inst, sess, side, a, ntr, nte, lam in rows:
            w.writerow([inst, sess, side, repr(float(a)), int(ntr), int(nte), repr(float(lam))])


@dataclass
class SelectionReport:
    """How often each variable was the k-th to enter a lasso path."""

    counts: list[Counter] = field(default_factory=list)
    n_backtests: int = 0

    def table(self, rank: int, top: int = 5) -> list[tuple[str, int]]:
        """Most frequent variables at a 1-based ``rank``: count desc, then name."""
        c = self.counts[rank - 1]
        return sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))[:top]


def aggregate_selection(orders, ranks: int = 5) -> SelectionReport:
    orders = [list(o) for o in orders]
    counts = [Counter() for _ in range(ranks)]
    for order in orders:
        for k, name in enumerate(order[:ranks]):
            counts[k][name] += 1
    return SelectionReport(counts=counts, n_backtests=len(orders))


def write_selection_report(path, report: SelectionReport, top: int = 5) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "variable", "count"])
        for k in range(1, len(report.counts) + 1):
            for name, count in report.table(k, top):
                w.writerow([k, name, count])
