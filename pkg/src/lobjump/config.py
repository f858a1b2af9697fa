"""Flat ``key = value`` run configuration shared by every pipeline stage."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .glm import FitConfig
from .ingest import WINDOWS, hhmm
from .simulator import SimConfig


class ConfigError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def parse_coefs(v: str) -> tuple[tuple[str, float], ...]:
    """``"VB1_0:-0.8, BMO_0:1.5"`` -> ``(("VB1_0", -0.8), ("BMO_0", 1.5))``."""
    out = []
    for item in v.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, coef = item.partition(":")
        if not sep:
            raise ValueError(f"expected name:coef, got {item!r}")
        out.append((name.strip(), float(coef)))
    return tuple(out)


def format_coefs(coefs) -> str:
    return ", ".join(f"{n}:{c!r}" for n, c in coefs)


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a pipeline run. Defaults: depth 5, five lags of each kind."""

    seed: int = 0
    instrument: str = "SIM"
    tick_size: float = 0.01
    depth: int = 5
    m: int = 5
    n: int = 5
    window: str = "allday"
    split: float = 0.7
    shuffle_split: bool = False
    sides: str = "BID,ASK"
    r1_fields: str = "gaps,volumes"
    curve_min_count: int = 50
    sell_mode: str = "mirror"
    # file names, relative to the work directory unless absolute
    events: str = "events.csv"
    # lasso fit
    n_lambda: int = 100
    lambda_ratio: float = 1e-3
    folds: int = 10
    tol: float = 1e-7
    kkt_tol: float = 1e-7
    max_iter: int = 100
    max_sweeps: int = 200_000
    standardize: bool = True
    cv: str = "stratified"
    cv_rule: str = "1se"
    # simulator
    n_events: int = 50_000
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
    jump_bid: tuple = ()
    jump_bid_intercept: float = -1.5
    jump_ask: tuple = ()
    jump_ask_intercept: float = -1.5
    sign_coef: float = 0.0
    sign_bias: float = 0.0

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown window {self.window!r}; choose from {sorted(WINDOWS)}")
        bad = [s for s in self.side_list if s not in ("BID", "ASK")]
        if bad or not self.side_list:
            raise ConfigError(f"sides must list BID and/or ASK, got {self.sides!r}")
        if not 0 < self.split < 1:
            raise ConfigError("split must lie in (0, 1)")
        if self.depth < 1 or self.m < 1 or self.n < 1:
            raise ConfigError("depth, m and n must be >= 1")

    @property
    def side_list(self) -> list[str]:
        return [s.strip().upper() for s in self.sides.split(",") if s.strip()]

    @property
    def r1_groups(self) -> tuple[str, ...]:
        return tuple(s.strip() for s in self.r1_fields.split(",") if s.strip())

    def fit_config(self) -> FitConfig:
        kw = {f.name: getattr(self, f.name) for f in fields(FitConfig) if f.name != "seed"}
        return FitConfig(seed=self.seed, **kw)

    def sim_config(self) -> SimConfig:
        shared = {f.name for f in fields(SimConfig)} & {f.name for f in fields(self)}
        return SimConfig(**{k: getattr(self, k) for k in shared})

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def dumps(self) -> str:
        """Text form readable by :func:`parse_config`."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = format_coefs(v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    default = _FIELDS[key].default
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return parse_coefs(raw)
    return raw


def parse_overrides(pairs, source: str = "<override>") -> dict:
    """``[(lineno, "key = value"), ...]`` -> typed dict; unknown keys rejected."""
    out = {}
    for lineno, line in pairs:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(key, raw)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {e}") from None
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    return RunConfig(**parse_overrides(enumerate(text.splitlines(), 1), source))


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))
