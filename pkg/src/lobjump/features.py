"""Per-event feature vectors, the bid-ask volume ratio and lagged design matrices."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .labeler import R2_FIELDS, LabeledTrade
from .tape import SnapshotTape

logger = logging.getLogger(__name__)

R1_GROUPS = ("gaps", "volumes")


def r1_names(depth: int, lag: int, fields=R1_GROUPS) -> list[str]:
    """Column names of the book-shape vector at one lag, in vector order."""
    L = depth
    names = []
    if "gaps" in fields:
        names += [f"GB{j}_{lag}" for j in range(L - 1, 0, -1)]
        names += [f"S_{lag}"]
        names += [f"GA{j}_{lag}" for j in range(1, L)]
    if "volumes" in fields:
        names += [f"VB{j}_{lag}" for j in range(L, 0, -1)]
        names += [f"VA{j}_{lag}" for j in range(1, L + 1)]
    return names


def r2_names(lag: int) -> list[str]:
    return [f"{f}_{lag}" for f in R2_FIELDS]


def design_names(depth: int, m: int, n: int, fields=R1_GROUPS) -> list[str]:
    names = ["intercept", "VMO_0"]
    for lag in range(m):
        names += r1_names(depth, lag, fields)
    for lag in range(n):
        names += r2_names(lag)
    return names


def _r1_columns(depth: int, fields) -> np.ndarray:
    """Indices of the requested groups inside the full 4L-1 vector."""
    n_gap = 2 * depth - 1
    idx = []
    if "gaps" in fields:
        idx += list(range(n_gap))
    if "volumes" in fields:
        idx += list(range(n_gap, n_gap + 2 * depth))
    return np.asarray(idx, dtype=int)


def w_ratio(snapshot, depth: int) -> float | None:
    """Log of cumulative bid size over cumulative ask size down to ``depth``.

    Computed from the log volumes as ``logsumexp(V_bid) - logsumexp(V_ask)``.
    Returns ``None`` when either side has fewer than ``depth`` levels.
    """
    vb = snapshot.bid_volumes[:depth]
    va = snapshot.ask_volumes[:depth]
    if len(vb) < depth or np.isnan(vb).any() or np.isnan(va).any():
        return None
    return float(logsumexp(vb) - logsumexp(va))


def w_ratio_series(tape: SnapshotTape, depth: int) -> np.ndarray:
    """:func:`w_ratio` for every row of a tape (NaN where incomplete)."""
    vb = tape.bid_volumes[:, :depth]
    va = tape.ask_volumes[:, :depth]
    with np.errstate(invalid="ignore"):
        return logsumexp(vb, axis=1) - logsumexp(va, axis=1)


@dataclass
class DesignMatrix:
    """Rows ``[1, VMO_0, R1 lags..., R2 lags...]`` with binary labels.

    ``X`` includes the intercept column. ``t_seq`` is the seq of the trade
    each row was built at; rows are in trade (time) order.
    """

    X: np.ndarray
    y: np.ndarray
    names: list[str]
    t_seq: np.ndarray
    n_dropped: int = 0
    side: str = "BID"

    def __post_init__(self):
        if self.X.shape[1] != len(self.names):
            raise ValueError("column count does not match names")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate column names")

    @property
    def features(self) -> np.ndarray:
        """X without the intercept column."""
        return self.X[:, 1:]

    @property
    def feature_names(self) -> list[str]:
        return self.names[1:]

    def __len__(self):
        return len(self.y)

    def rows(self, idx) -> "DesignMatrix":
        return DesignMatrix(self.X[idx], self.y[idx], list(self.names), self.t_seq[idx], 0, self.side)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]


def build_design(
    tape: SnapshotTape,
    trades: list[LabeledTrade],
    m: int = 5,
    n: int = 5,
    side: str = "BID",
    r1_fields=R1_GROUPS,
) -> DesignMatrix:
    """Assemble one design row per labelled trade with a full lag history.

    Lags count events of every kind. A row is dropped (and counted) when
    fewer than ``max(m, n) - 1`` events precede the trade in the tape or any
    snapshot in its R1 lag window is incomplete.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    side = side.upper()
    if side not in ("BID", "ASK"):
        raise ValueError(f"side must be BID or ASK, got {side}")
    L = tape.depth
    names = design_names(L, m, n, r1_fields)
    labelled = [t for t in trades if t.y_bid is not None]
    if not labelled:
        return DesignMatrix(np.zeros((0, len(names))), np.zeros(0, np.int8), names, np.zeros(0, np.int64), 0, side)

    t_seq = np.array([t.t_seq for t in labelled], dtype=np.int64)
    y = np.array([t.y_bid if side == "BID" else t.y_ask for t in labelled], dtype=np.int8)
    pos = np.searchsorted(tape.seq, t_seq)
    if np.any(pos >= len(tape)) or np.any(tape.seq[np.minimum(pos, len(tape) - 1)] != t_seq):
        raise ValueError("labelled trades do not align with the snapshot tape")

    # incomplete snapshots inside the R1 window, via a running count
    bad = np.concatenate([[0], np.cumsum(~tape.complete)])
    has_history = pos >= max(m, n) - 1
    lo = np.maximum(pos - m + 1, 0)
    clean = (bad[pos + 1] - bad[lo]) == 0
    keep = has_history & clean
    n_dropped = int((~keep).sum())
    if n_dropped:
        logger.info("dropped %d of %d trades lacking a complete %d/%d-event history", n_dropped, len(pos), m, n)
    pos, y, t_seq = pos[keep], y[keep], t_seq[keep]

    r1 = tape.r1()[:, _r1_columns(L, r1_fields)]
    r2 = tape.r2()
    blocks = [np.ones((len(pos), 1)), tape.v_mo[pos][:, None]]
    blocks += [r1[pos - lag] for lag in range(m)]
    blocks += [r2[pos - lag] for lag in range(n)]
    X = np.hstack(blocks) if len(pos) else np.zeros((0, len(names)))
    if not len(pos):
        logger.warning("no trade has a full lag history")
    return DesignMatrix(X, y, names, t_seq, n_dropped, side)


def write_design(path, design: DesignMatrix) -> None:
    """CSV with header ``y,intercept,<features...>``; floats at full precision."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["y"] + design.names) + "\n")
        if len(design):
            data = np.column_stack([design.y, design.X])
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_design(path, side: str = "BID") -> DesignMatrix:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if header[:2] != ["y", "intercept"]:
        raise ValueError(f"{path}: design header must start with y,intercept")
    if body.strip():
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        data = np.zeros((0, len(header)))
    return DesignMatrix(
        X=data[:, 1:],
        y=data[:, 0].astype(np.int8),
        names=header[1:],
        t_seq=np.arange(len(data), dtype=np.int64),
        side=side,
    )
