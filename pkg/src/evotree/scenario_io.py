"""Scenario path ingestion and GARCH(1,1) simulation.

The on-disk format is comma-separated text: one row per scenario path,
one column per stage ``2..T``, optionally followed by a trailing
probability column.  Simulated and externally supplied scenario files are
interchangeable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadProbabilitiesError,
    InvalidCountError,
    MalformedRowError,
    NonFiniteValueError,
    NonStationaryParamsError,
)
from .trees import PROB_TOL, ScenarioPaths

LOAD_PROB_TOL = 1e-9


@dataclass(frozen=True)
class GarchParams:
    """GARCH(1,1) return model: r_t = mu + sigma_t z_t with
    sigma^2_{t+1} = omega + alpha (r_t - mu)^2 + beta sigma^2_t.

    ``sigma0`` is the initial conditional standard deviation; when omitted
    the recursion starts at the stationary level sqrt(omega / (1 - alpha
    - beta)).  Stationarity (alpha + beta < 1) is enforced unless
    ``check_stationarity`` is switched off.
    """

    mu: float
    omega: float
    alpha: float
    beta: float
    sigma0: float | None = None
    check_stationarity: bool = True

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")
        if self.sigma0 is not None and self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        if self.alpha + self.beta >= 1.0:
            if self.check_stationarity:
                raise NonStationaryParamsError(
                    f"alpha + beta = {self.alpha + self.beta} >= 1"
                )
            if self.sigma0 is None:
                raise NonStationaryParamsError(
                    "non-stationary parameters need an explicit sigma0"
                )

    @property
    def initial_variance(self) -> float:
        if self.sigma0 is not None:
            return self.sigma0 ** 2
        return self.omega / (1.0 - self.alpha - self.beta)


def simulate_garch(
    params: GarchParams, n_paths: int, horizon: int, seed: int
) -> ScenarioPaths:
    """Simulate scenario return paths with standard-normal innovations.

    Each path's random stream is derived from (seed, path index), so
    per-path simulation could run concurrently without changing output;
    identical inputs always give bit-identical matrices.
    """
    if n_paths < 1 or horizon < 1:
        raise InvalidCountError("need at least one path and one period")
    z = np.empty((n_paths, horizon))
    for i in range(n_paths):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        z[i] = rng.standard_normal(horizon)
    returns = np.empty((n_paths, horizon))
    var = np.full(n_paths, params.initial_variance)
    for t in range(horizon):
        shock = np.sqrt(var) * z[:, t]
        returns[:, t] = params.mu + shock
        var = params.omega + params.alpha * shock ** 2 + params.beta * var
    return ScenarioPaths(returns)


def load_scenarios(path, probs_column: bool = False) -> ScenarioPaths:
    """Read a scenario CSV; uniform probabilities unless the file carries a
    trailing probability column flagged by ``probs_column``."""
    rows: list[list[float]] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise MalformedRowError(f"line {lineno}: {exc}") from exc
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise MalformedRowError(
                    f"line {lineno}: expected {len(rows[0])} columns, "
                    f"got {len(rows[-1])}"
                )
    if not rows:
        raise MalformedRowError(f"{path}: no scenario rows")
    table = np.array(rows)
    min_cols = 2 if probs_column else 1
    if table.shape[1] < min_cols:
        raise MalformedRowError(f"{path}: too few columns")
    probs = None
    if probs_column:
        probs = table[:, -1]
        table = table[:, :-1]
        if not np.all(np.isfinite(probs)):
            raise NonFiniteValueError("probabilities must be finite")
        if np.any(probs < 0.0):
            raise BadProbabilitiesError("probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > LOAD_PROB_TOL:
            raise BadProbabilitiesError(f"probabilities sum to {total}, not 1")
        if abs(total - 1.0) > PROB_TOL:
            probs = probs / total
    if not np.all(np.isfinite(table)):
        raise NonFiniteValueError("scenario values must be finite")
    return ScenarioPaths(table, probs)


def save_scenarios(paths: ScenarioPaths, destination, probs_column: bool = False) -> None:
    """Write a scenario CSV; floats keep full precision so load/save
    round-trips exactly."""
    with open(destination, "w", encoding="utf-8") as fh:
        for i in range(paths.n_paths):
            cells = [repr(float(v)) for v in paths.values[i]]
            if probs_column:
                cells.append(repr(float(paths.probs[i])))
            fh.write(",".join(cells) + "\n")
