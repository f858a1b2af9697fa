"""L1-penalised logistic regression along a regularisation path.

The fitted objective is the mean negative log-likelihood plus an L1
penalty on the slopes (never the intercept)::

    (1/N) * sum_i [log(1 + exp(b.x_i)) - y_i b.x_i] + lam * sum_j w_j |b_j|

with ``w_j`` the column standard deviation when ``standardize`` is on (the
penalty is then uniform in standardised units) and 1 otherwise.

Each grid point is solved by iteratively reweighted least squares whose
inner problem is handled by cyclic coordinate descent (see ``_cd``), warm
started from the previous grid point, with step halving on the true
objective so it never increases.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from ._cd import cd_gram, cd_wls

logger = logging.getLogger(__name__)

_W_FLOOR = 1e-5
# switch to covariance updates once this many slopes are nonzero
_GRAM_MIN_ACTIVE = 12


class ConvergenceWarning(UserWarning):
    pass


def _check_binary(y):
    y = np.asarray(y)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return y.astype(float)


def nll(beta, X, y) -> float:
    """Negative log-likelihood ``sum log(1+e^eta) - y*eta`` (X carries the 1s column)."""
    y = _check_binary(y)
    eta = np.asarray(X) @ np.asarray(beta)
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def grad_nll(beta, X, y) -> np.ndarray:
    """Gradient of :func:`nll`: ``sum (sigmoid(eta) - y) x``."""
    y = _check_binary(y)
    X = np.asarray(X)
    return X.T @ (expit(X @ np.asarray(beta)) - y)


@dataclass(frozen=True)
class FitConfig:
    n_lambda: int = 100
    lambda_ratio: float = 1e-3
    folds: int = 10
    tol: float = 1e-7  # relative objective change
    kkt_tol: float = 1e-7
    max_iter: int = 100  # IRLS steps per grid point
    max_sweeps: int = 200_000
    standardize: bool = True
    seed: int = 0
    cv: str = "stratified"  # or "chrono"
    cv_rule: str = "1se"  # or "min"

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be >= 1")
        if not 0 < self.lambda_ratio < 1:
            raise ValueError("lambda_ratio must lie in (0, 1)")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.cv not in ("stratified", "chrono"):
            raise ValueError(f"unknown cv scheme {self.cv!r}")
        if self.cv_rule not in ("1se", "min"):
            raise ValueError(f"unknown cv rule {self.cv_rule!r}")


@dataclass
class RegPath:
    """Solutions over a descending lambda grid, on the original column scale."""

    lambdas: np.ndarray
    intercepts: np.ndarray
    coefs: np.ndarray  # (n_lambda, p)
    objective: np.ndarray
    deviance: np.ndarray  # 2 * mean nll on the fitted rows
    converged: np.ndarray
    names: list[str]
    penalty_factor: np.ndarray
    selection_order: list[str] = field(default_factory=list)
    entry_index: dict = field(default_factory=dict)

    @property
    def n_nonzero(self) -> np.ndarray:
        return (self.coefs != 0).sum(axis=1)

    def beta(self, k: int) -> np.ndarray:
        """Intercept-first coefficient vector at grid point ``k``."""
        return np.concatenate([[self.intercepts[k]], self.coefs[k]])

    def decision_function(self, X, k: int) -> np.ndarray:
        return self.intercepts[k] + np.asarray(X) @ self.coefs[k]


@dataclass
class FitResult:
    lambda_: float
    lambda_index: int
    intercept: float
    coef: np.ndarray
    cv_mean: np.ndarray
    cv_folds: np.ndarray  # (folds, n_lambda)
    path: RegPath
    n_train: int
    n_test: int = 0
    foldid: np.ndarray | None = None

    @property
    def beta(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.coef])

    def decision_function(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X) @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    @property
    def selected(self) -> list[str]:
        return [n for n, c in zip(self.path.names, self.coef) if c != 0]


def _aliased(X, usable, tol=1e-9):
    """Columns that are an affine copy (up to sign) of an earlier usable column.

    The lasso cannot tell such columns apart; the first of each group
    carries the coefficient and the rest are held at zero, which is one of
    the (non-unique) optimal solutions.
    """
    idx = np.flatnonzero(usable)
    out = np.zeros(X.shape[1], dtype=bool)
    if len(idx) < 2:
        return out
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.corrcoef(X[:, idx], rowvar=False)
    C = np.nan_to_num(np.atleast_2d(C))
    dup = np.triu(np.abs(C) > 1 - tol, k=1)
    out[idx] = dup.any(axis=0)
    return out


class _Problem:
    """Internal (possibly standardised) copy of the data."""

    def __init__(self, X, y, standardize: bool):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        self.y = _check_binary(y)
        N, p = X.shape
        if N != len(self.y):
            raise ValueError("X and y lengths differ")
        self.N, self.p = N, p
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        scale = np.maximum(np.abs(mu), 1.0)
        varying = sd > 1e-10 * scale
        self.standardize = standardize
        if standardize:
            self.mu = mu
            self.sd = np.where(varying, sd, 1.0)
            Xs = (X - mu) / self.sd
            Xs[:, ~varying] = 0.0
        else:
            self.mu = np.zeros(p)
            self.sd = np.ones(p)
            Xs = X.copy()
        self.Xs = np.asfortranarray(Xs)
        # columns the solver may move: varying and not an alias of an earlier column
        self.usable = varying & ~_aliased(Xs, varying)
        # weight of each slope in the original-scale penalty
        self.penalty_factor = np.where(varying, sd if standardize else 1.0, 0.0)

    def loss(self, eta):
        return float(np.mean(np.logaddexp(0.0, eta) - self.y * eta))

    def objective(self, b0, beta, lam):
        eta = b0 + self.Xs @ beta
        return self.loss(eta) + lam * np.abs(beta).sum(), eta

    def grad(self, eta):
        resid = expit(eta) - self.y
        return resid.mean(), self.Xs.T @ resid / self.N

    def kkt(self, b0, beta, lam) -> float:
        """Largest KKT violation, measured per unit of penalty weight."""
        g0, g = self.grad(b0 + self.Xs @ beta)
        g = g[self.usable]
        b = beta[self.usable]
        res = np.where(b == 0, np.maximum(np.abs(g) - lam, 0.0), np.abs(g + lam * np.sign(b)))
        return float(max(abs(g0), res.max(initial=0.0)))

    def null_intercept(self):
        ybar = self.y.mean()
        if ybar in (0.0, 1.0):
            raise ValueError("need both classes to fit")
        return float(np.log(ybar / (1 - ybar)))

    def lambda_max(self) -> float:
        b0 = self.null_intercept()
        _, g = self.grad(np.full(self.N, b0))
        return float(np.abs(g[self.usable]).max(initial=0.0))

    def to_original(self, b0, beta):
        coef = np.where(self.usable, beta / self.sd, 0.0)
        if self.standardize:
            b0 = b0 - coef @ self.mu
        return b0, coef


def _gram_step(prob: _Problem, w, r, eta, beta, pen, thresh, max_sweeps):
    """Weighted least-squares step in covariance mode; the intercept is profiled out."""
    sw = w.sum()
    z = eta + r
    xbar = w @ prob.Xs / sw
    Xc = prob.Xs - xbar
    Xw = Xc * w[:, None]
    G = Xw.T @ Xc / prob.N
    c = Xw.T @ (z - w @ z / sw) / prob.N
    q = c - G @ beta
    sweeps = cd_gram(G, q, beta, pen, prob.usable, thresh, max_sweeps)
    b0 = (w @ z) / sw - xbar @ beta
    return b0, sweeps


def _solve(prob: _Problem, b0, beta, lam, cfg: FitConfig):
    """IRLS + coordinate descent at one lambda. Returns (b0, beta, obj, converged)."""
    obj, eta = prob.objective(b0, beta, lam)
    pen = np.where(prob.usable, lam, 0.0)
    thresh = 1e-16
    for _ in range(cfg.max_iter):
        p = expit(eta)
        w = np.maximum(p * (1 - p), _W_FLOOR)
        r = (prob.y - p) / w
        new_beta = beta.copy()
        if np.count_nonzero(beta) >= _GRAM_MIN_ACTIVE or prob.p <= _GRAM_MIN_ACTIVE:
            new_b0, sweeps = _gram_step(prob, w, r, eta, new_beta, pen, thresh, cfg.max_sweeps)
        else:
            new_b0, sweeps = cd_wls(prob.Xs, w, r, new_beta, b0, pen, prob.usable, thresh, cfg.max_sweeps)
        if sweeps >= cfg.max_sweeps:
            logger.debug("inner solver hit max_sweeps at lambda=%g", lam)
        step = 1.0
        while True:
            cand_beta = beta + step * (new_beta - beta)
            cand_b0 = b0 + step * (new_b0 - b0)
            cand_obj, cand_eta = prob.objective(cand_b0, cand_beta, lam)
            if cand_obj <= obj or step < 1e-10:
                break
            if cand_obj - obj <= 1e-14 * abs(obj):
                break
            step *= 0.5
        if cand_obj > obj:
            # no descent left at float precision
            return b0, beta, obj, prob.kkt(b0, beta, lam) <= cfg.kkt_tol
        rel = (obj - cand_obj) / max(abs(cand_obj), 1e-300)
        b0, beta, obj, eta = cand_b0, cand_beta, cand_obj, cand_eta
        if rel < cfg.tol and prob.kkt(b0, beta, lam) <= cfg.kkt_tol:
            return b0, beta, obj, True
    return b0, beta, obj, prob.kkt(b0, beta, lam) <= cfg.kkt_tol


def lambda_grid(lam_max: float, cfg: FitConfig) -> np.ndarray:
    if cfg.n_lambda == 1:
        return np.array([lam_max])
    return lam_max * cfg.lambda_ratio ** (np.arange(cfg.n_lambda) / (cfg.n_lambda - 1))


def fit_path(X, y, cfg: FitConfig | None = None, names=None, lambdas=None) -> RegPath:
    """Fit the penalised model at every lambda of a descending grid.

    ``X`` holds the features only; the intercept is always fitted and never
    penalised. Without explicit ``lambdas`` the grid runs log-spaced from
    the smallest lambda that zeroes every slope down to
    ``lambda_ratio`` times it.
    """
    cfg = cfg or FitConfig()
    prob = _Problem(X, y, cfg.standardize)
    if prob.N < 10:
        raise ValueError(f"need at least 10 rows, got {prob.N}")
    names = list(names) if names is not None else [f"x{j}" for j in range(prob.p)]
    if len(names) != prob.p:
        raise ValueError("names do not match column count")
    lam_max = prob.lambda_max()
    lambdas = lambda_grid(lam_max, cfg) if lambdas is None else np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) > 0):
        raise ValueError("lambda grid must be non-increasing")

    K, p = len(lambdas), prob.p
    intercepts = np.zeros(K)
    coefs = np.zeros((K, p))
    objective = np.zeros(K)
    deviance = np.zeros(K)
    converged = np.ones(K, dtype=bool)
    b0 = prob.null_intercept()
    beta = np.zeros(p)
    null_g = np.abs(prob.grad(np.full(prob.N, b0))[1])
    prev_g = null_g
    first_seen = np.full(p, -1)
    order: list[int] = []

    for k, lam in enumerate(lambdas):
        if lam >= lam_max:
            # the intercept-only model satisfies the optimality conditions exactly
            b0, beta = prob.null_intercept(), np.zeros(p)
            obj, eta = prob.objective(b0, beta, lam)
            ok = True
        else:
            b0, beta, obj, ok = _solve(prob, b0, beta, lam, cfg)
            eta = b0 + prob.Xs @ beta
        converged[k] = ok
        objective[k] = obj
        deviance[k] = 2 * prob.loss(eta)
        intercepts[k], coefs[k] = prob.to_original(b0, beta)
        new = np.flatnonzero((beta != 0) & (first_seen < 0))
        if len(new):
            # ties on one grid point: larger |gradient| just before, then column index
            new = sorted(new, key=lambda j: (-prev_g[j], j))
            first_seen[new] = k
            order.extend(new)
        prev_g = np.abs(prob.grad(eta)[1])

    if not converged.all():
        bad = np.flatnonzero(~converged)
        warnings.warn(
            f"solver did not converge at {len(bad)} grid point(s), first lambda={lambdas[bad[0]]:.3g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    nnz = (coefs != 0).sum(axis=1)
    if np.any(np.diff(nnz) < 0):
        logger.debug("active set shrank along the path (legal for the lasso)")
    return RegPath(
        lambdas=lambdas,
        intercepts=intercepts,
        coefs=coefs,
        objective=objective,
        deviance=deviance,
        converged=converged,
        names=names,
        penalty_factor=prob.penalty_factor,
        selection_order=[names[j] for j in order],
        entry_index={names[j]: int(first_seen[j]) for j in order},
    )


def kkt_residuals(X, y, intercept, coef, lam, penalty_factor) -> np.ndarray:
    """Per-coordinate KKT violation of an original-scale solution.

    Entry 0 is the intercept's gradient; entry ``j`` is the violation for
    slope ``j`` divided by its penalty weight. Columns with zero weight
    (constant columns) are reported as 0.
    """
    X = np.asarray(X, dtype=float)
    y = _check_binary(y)
    resid = expit(intercept + X @ coef) - y
    g = X.T @ resid / len(y)
    out = np.zeros(len(coef) + 1)
    out[0] = abs(resid.mean())
    pf = np.asarray(penalty_factor, dtype=float)
    for j, (gj, bj, wj) in enumerate(zip(g, coef, pf), start=1):
        if wj == 0:
            continue
        if bj == 0:
            out[j] = max(abs(gj) - lam * wj, 0.0) / wj
        else:
            out[j] = abs(gj + lam * wj * np.sign(bj)) / wj
    return out


def make_folds(y, cfg: FitConfig) -> np.ndarray:
    """Fold id per row: class-stratified shuffled, or contiguous in time."""
    y = np.asarray(y)
    N, k = len(y), cfg.folds
    n_pos = int((y == 1).sum())
    n_neg = N - n_pos
    if cfg.cv == "chrono":
        foldid = np.minimum(np.arange(N) * k // N, k - 1)
        for f in range(k):
            yf = y[foldid == f]
            if yf.min() == yf.max():
                raise ValueError(
                    f"chronological fold {f} holds a single class "
                    f"({len(yf)} rows, {int(yf.sum())} positives)"
                )
        return foldid
    if n_pos < k or n_neg < k:
        raise ValueError(
            f"cannot stratify {k} folds with {n_pos} positives and {n_neg} negatives"
        )
    rng = np.random.default_rng(cfg.seed)
    foldid = np.empty(N, dtype=int)
    start = 0
    for cls in (1, 0):
        idx = rng.permutation(np.flatnonzero(y == cls))
        foldid[idx] = (start + np.arange(len(idx))) % k
        start = (start + len(idx)) % k
    return foldid


def choose_lambda(cv_folds, rule: str = "1se") -> int:
    """Grid index picked from per-fold held-out deviances.

    ``"min"`` takes the lowest mean deviance (largest lambda on ties).
    ``"1se"`` takes the largest lambda whose mean deviance is within one
    standard error of that minimum.
    """
    cv_folds = np.asarray(cv_folds)
    mean = cv_folds.mean(axis=0)
    k = int(np.argmin(mean))
    if rule == "min":
        return k
    se = cv_folds[:, k].std(ddof=1) / np.sqrt(cv_folds.shape[0])
    return int(np.flatnonzero(mean <= mean[k] + se)[0])


def cross_validate(X, y, cfg: FitConfig | None = None, names=None, foldid=None) -> FitResult:
    """Choose lambda by k-fold held-out deviance, then take the full-data fit there.

    The lambda grid comes from the full data and is shared by every fold;
    ``cfg.cv_rule`` decides how the curve is read (see :func:`choose_lambda`).
    ``foldid`` overrides the fold assignment.
    """
    cfg = cfg or FitConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    path = fit_path(X, y, cfg, names=names)
    foldid = make_folds(y, cfg) if foldid is None else np.asarray(foldid)
    folds = np.unique(foldid)
    cv = np.zeros((len(folds), len(path.lambdas)))
    for i, f in enumerate(folds):
        test = foldid == f
        ytr = y[~test]
        if ytr.min() == ytr.max():
            raise ValueError(f"training part of fold {f} holds a single class")
        fp = fit_path(X[~test], ytr, cfg, names=path.names, lambdas=path.lambdas)
        eta = fp.intercepts[None, :] + X[test] @ fp.coefs.T
        yt = y[test][:, None]
        cv[i] = 2 * np.mean(np.logaddexp(0.0, eta) - yt * eta, axis=0)
    cv_mean = cv.mean(axis=0)
    k = choose_lambda(cv, cfg.cv_rule)
    return FitResult(
        lambda_=float(path.lambdas[k]),
        lambda_index=k,
        intercept=float(path.intercepts[k]),
        coef=path.coefs[k].copy(),
        cv_mean=cv_mean,
        cv_folds=cv,
        path=path,
        n_train=len(y),
        foldid=foldid,
    )


def write_path(path, reg: RegPath, cv_mean=None) -> None:
    """CSV: ``lambda,deviance,nonzeros[,cv_deviance],intercept,<coef per column>``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["lambda", "deviance", "nonzeros"]
        if cv_mean is not None:
            head.append("cv_deviance")
        w.writerow(head + ["intercept"] + list(reg.names))
        for k in range(len(reg.lambdas)):
            row = [repr(float(reg.lambdas[k])), repr(float(reg.deviance[k])), int(reg.n_nonzero[k])]
            if cv_mean is not None:
                row.append(repr(float(cv_mean[k])))
            row.append(repr(float(reg.intercepts[k])))
            row += [repr(float(c)) for c in reg.coefs[k]]
            w.writerow(row)


def write_fit_meta(path, fit: FitResult, cfg: FitConfig, extra: dict | None = None) -> None:
    """Flat JSON: chosen lambda, coefficients, selection order and a config echo."""
    meta = {
        "lambda": fit.lambda_,
        "lambda_index": fit.lambda_index,
        "n_train": fit.n_train,
        "n_test": fit.n_test,
        "intercept": fit.intercept,
        "names": fit.path.names,
        "coef": [float(c) for c in fit.coef],
        "selection_order": fit.path.selection_order,
        "config": asdict(cfg),
    }
    meta.update(extra or {})
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
