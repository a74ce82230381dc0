"""Experiment orchestration: configs, CSV emission, scaling-exponent fits.

A config is flat key=value text (``#`` comments).  Each (seed, eps) pair
becomes one optimizer run and one CSV row; rows are sorted canonically
(eps descending, seed ascending) and formatted locale-free, so identical
configs produce byte-identical CSV bodies.  Wall-clock times are only
recorded when explicitly requested (``timings = true``), keeping the
default output deterministic.

``scaling_sweep`` averages the primary query counter per eps over seeds
and fits an ordinary least-squares line through (log(1/eps),
log(queries)); the fitted slope is the measured complexity exponent that
the acceptance criteria compare against the theoretical rates (3 for the
plain method, 7/3 for the variance-reduced ones).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .algorithms import (
    DEFAULT_BUDGET,
    RunResult,
    derive_params_qgfm,
    derive_params_qgfm_plus,
    derive_params_qgm_plus,
    qgfm,
    qgfm_plus,
    qgm_plus,
)
from .objectives import CATALOG_NAMES, ObjectiveSpec, catalog_make
from .oracles import CostModel
from .smoothing import SmoothingParams

__all__ = [
    "ALGORITHMS",
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "RunRow",
    "SlopeFit",
    "config_from_mapping",
    "fit_loglog",
    "parse_config",
    "rows_to_csv",
    "run_experiment",
    "scaling_sweep",
    "write_csv",
]

ALGORITHMS = ("qgfm", "qgfm_plus", "qgm_plus")

CSV_COLUMNS = (
    "algorithm", "problem", "d", "L", "delta", "eps", "seed", "T", "p",
    "uf_queries", "classical_queries", "grad_oracle_queries",
    "residual_est", "residual_halfwidth", "verdict", "wall_ms",
)


class ConfigError(ValueError):
    """Invalid configuration (maps to CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    algorithm: str
    problem: str
    d: int
    eps_grid: tuple[float, ...]
    seeds: tuple[int, ...]
    delta: float = 0.0
    noise_scale: float = 0.0
    noise_kind: str | None = None
    cost: CostModel = None  # type: ignore[assignment]
    trace: bool = False
    out_path: str = ""
    budget: int = DEFAULT_BUDGET
    residual_n: int = 20000
    residual_confidence: float = 0.95
    timings: bool = False

    def __post_init__(self) -> None:
        if self.cost is None:
            self.cost = CostModel()
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.problem not in CATALOG_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError("d must be a positive integer")
        if not self.eps_grid:
            raise ConfigError("at least one eps value is required")
        for e in self.eps_grid:
            if not e > 0 or not math.isfinite(e):
                raise ConfigError("eps values must be positive and finite")
        if len(set(self.eps_grid)) != len(self.eps_grid):
            raise ConfigError("eps values must be distinct")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for s in self.seeds:
            if not isinstance(s, int) or s < 0:
                raise ConfigError("seeds must be non-negative integers")
        if self.algorithm != "qgm_plus" and not self.delta > 0:
            raise ConfigError(f"{self.algorithm} requires delta > 0")
        if self.budget < 1:
            raise ConfigError("budget must be positive")


# ---------------------------------------------------------------------------
# config text


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_bool(key: str, raw: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key} must be a boolean, got {raw!r}") from None


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def parse_config(text: str) -> dict[str, str]:
    """key=value lines with # comments; duplicate keys rejected."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = body.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in mapping:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


_KNOWN_KEYS = {
    "algorithm", "problem", "d", "noise_scale", "noise_kind", "delta", "eps",
    "eps_grid", "seeds", "cost_mode", "c_q", "log_factor_policy", "log_k",
    "trace", "out", "budget", "residual_n", "residual_confidence", "timings",
}


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    unknown = set(mapping) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("algorithm", "problem", "d", "seeds"):
        if key not in mapping:
            raise ConfigError(f"missing required key {key!r}")
    if ("eps" in mapping) == ("eps_grid" in mapping):
        raise ConfigError("exactly one of eps / eps_grid is required")

    if "eps" in mapping:
        eps_grid = (_parse_float("eps", mapping["eps"]),)
    else:
        eps_grid = tuple(_parse_float("eps_grid", tok)
                         for tok in mapping["eps_grid"].split(",") if tok.strip())
    seeds = tuple(_parse_int("seeds", tok)
                  for tok in mapping["seeds"].split(",") if tok.strip())

    try:
        cost = CostModel(
            mode=mapping.get("cost_mode", "quantum"),
            c_q=_parse_float("c_q", mapping["c_q"]) if "c_q" in mapping else 1.0,
            log_factor_policy=mapping.get("log_factor_policy", "ignored"),
            log_k=_parse_int("log_k", mapping["log_k"]) if "log_k" in mapping else 0,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(
        algorithm=mapping["algorithm"],
        problem=mapping["problem"],
        d=_parse_int("d", mapping["d"]),
        eps_grid=eps_grid,
        seeds=seeds,
        delta=_parse_float("delta", mapping["delta"]) if "delta" in mapping else 0.0,
        noise_scale=_parse_float("noise_scale", mapping["noise_scale"]) if "noise_scale" in mapping else 0.0,
        noise_kind=mapping.get("noise_kind"),
        cost=cost,
        trace=_parse_bool("trace", mapping["trace"]) if "trace" in mapping else False,
        out_path=mapping.get("out", ""),
        budget=_parse_int("budget", mapping["budget"]) if "budget" in mapping else DEFAULT_BUDGET,
        residual_n=_parse_int("residual_n", mapping["residual_n"]) if "residual_n" in mapping else 20000,
        residual_confidence=_parse_float("residual_confidence", mapping["residual_confidence"])
        if "residual_confidence" in mapping else 0.95,
        timings=_parse_bool("timings", mapping["timings"]) if "timings" in mapping else False,
    )


# ---------------------------------------------------------------------------
# running


@dataclass
class RunRow:
    algorithm: str
    problem: str
    d: int
    L: float
    delta: float
    eps: float
    seed: int
    T: int
    p: float | None
    uf_queries: int
    classical_queries: int
    grad_oracle_queries: int
    residual_est: float
    residual_halfwidth: float
    verdict: str
    wall_ms: int

    def values(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def build_spec(config: ExperimentConfig) -> ObjectiveSpec:
    return catalog_make(config.problem, config.d, config.noise_scale, config.noise_kind)


def _verdict(result: RunResult, eps: float) -> str:
    if result.budget_exceeded:
        return "budget_exceeded"
    r = result.residual
    if r.estimate + r.half_width <= eps:
        return "accepted"
    if r.estimate - r.half_width > eps:
        return "rejected"
    return "inconclusive"


def run_one(config: ExperimentConfig, spec: ObjectiveSpec, eps: float, seed: int) -> RunRow:
    """Derive the schedule, run, classify the residual against eps."""
    t0 = time.perf_counter()
    if config.algorithm == "qgfm":
        params = derive_params_qgfm(spec.d, spec.L, config.delta, eps, spec.delta_0)
        result = qgfm(spec, spec.x0, params, SmoothingParams(config.delta), config.cost, seed,
                      trace=config.trace, budget=config.budget, residual_n=config.residual_n,
                      residual_confidence=config.residual_confidence)
        p = None
    elif config.algorithm == "qgfm_plus":
        params = derive_params_qgfm_plus(spec.d, spec.L, config.delta, eps, spec.delta_0)
        result = qgfm_plus(spec, spec.x0, params, SmoothingParams(config.delta), config.cost, seed,
                           trace=config.trace, budget=config.budget, residual_n=config.residual_n,
                           residual_confidence=config.residual_confidence)
        p = params.p
    else:
        if spec.smooth_params is None:
            raise ConfigError(f"{config.problem} has no smooth gradient oracle")
        l, sigma = spec.smooth_params
        params = derive_params_qgm_plus(l, sigma, eps, spec.delta_0, spec.d)
        result = qgm_plus(spec, spec.x0, params, config.cost, seed,
                          trace=config.trace, budget=config.budget)
        p = params.p
    wall_ms = int(round((time.perf_counter() - t0) * 1000.0)) if config.timings else 0
    led = result.ledger
    return RunRow(
        algorithm=config.algorithm,
        problem=config.problem,
        d=spec.d,
        L=spec.L,
        delta=config.delta,
        eps=eps,
        seed=seed,
        T=result.T,
        p=p,
        uf_queries=led.uf_queries,
        classical_queries=led.classical_queries,
        grad_oracle_queries=led.grad_oracle_queries,
        residual_est=result.residual.estimate,
        residual_halfwidth=result.residual.half_width,
        verdict=_verdict(result, eps),
        wall_ms=wall_ms,
    )


def run_experiment(config: ExperimentConfig) -> list[RunRow]:
    """One run per (seed, eps); rows in canonical order (eps desc, seed asc)."""
    spec = build_spec(config)
    rows = [run_one(config, spec, eps, seed)
            for eps in config.eps_grid for seed in config.seeds]
    rows.sort(key=lambda r: (-r.eps, r.seed))
    return rows


def rows_to_csv(rows: list[RunRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(row.values()) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(rows: list[RunRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


# ---------------------------------------------------------------------------
# scaling fits


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def fit_loglog(points) -> SlopeFit:
    """OLS line through already-log-transformed (abscissa, ordinate) pairs."""
    pts = tuple((float(a), float(b)) for a, b in points)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if len(set(xs.tolist())) < 2:
        raise ValueError("need at least 2 distinct abscissae")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_res = float(resid @ resid)
    centered = ys - ys.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    r_squared=min(1.0, max(0.0, r2)), points=pts)


def primary_queries(row: RunRow, config: ExperimentConfig) -> int:
    """The costed counter: gradient-oracle calls on the smooth track,
    otherwise the active cost mode's function-value counter."""
    if config.algorithm == "qgm_plus":
        return row.grad_oracle_queries
    return row.uf_queries if config.cost.mode == "quantum" else row.classical_queries


def scaling_sweep(config: ExperimentConfig, rows: list[RunRow] | None = None) -> SlopeFit:
    """Fit the measured query exponent over the config's eps grid."""
    eps_vals = sorted(set(config.eps_grid), reverse=True)
    if len(eps_vals) < 3:
        raise ConfigError("sweep needs at least 3 distinct eps values")
    if max(eps_vals) / min(eps_vals) < 4.0:
        raise ConfigError("sweep eps grid must span at least a 4x ratio")
    if rows is None:
        rows = run_experiment(config)
    points = []
    for eps in eps_vals:
        qs = [primary_queries(r, config) for r in rows if r.eps == eps]
        if not qs:
            raise ConfigError(f"no rows for eps={eps}")
        points.append((math.log(1.0 / eps), math.log(sum(qs) / len(qs))))
    return fit_loglog(points)


def apply_overrides(
    config: ExperimentConfig,
    *,
    seed: int | None = None,
    out: str | None = None,
    cost_mode: str | None = None,
    timings: bool | None = None,
) -> ExperimentConfig:
    """CLI-level overrides on top of a parsed config."""
    if seed is not None:
        config = replace(config, seeds=(seed,))
    if out is not None:
        config = replace(config, out_path=out)
    if cost_mode is not None:
        config = replace(config, cost=replace(config.cost, mode=cost_mode))
    if timings is not None:
        config = replace(config, timings=timings)
    return config
