"""Repeated-run convergence experiments over operator mixes.

For every operator mix the evolutionary run is repeated with seeds
``base_seed, base_seed + 1, ...`` and the per-iteration best and
population-mean objectives are aggregated to mean/min/max across the
repetitions, yielding plot-ready convergence tables.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .evolution import EvolutionConfig, OperatorStructure, evolve
from .trees import ConvergenceLog, ScenarioPaths, TreeStructure

AGGREGATE_HEADER = (
    "iter,best_mean,best_min,best_max,popmean_mean,popmean_min,popmean_max"
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Operator mixes to compare, a shared run configuration (its seed is
    the base seed) and the repetition count per mix."""

    operator_mixes: tuple[OperatorStructure, ...]
    config: EvolutionConfig
    repetitions: int = 10

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")
        if len(self.operator_mixes) == 0:
            raise ValueError("need at least one operator mix")
        object.__setattr__(self, "operator_mixes", tuple(self.operator_mixes))


@dataclass(frozen=True)
class AggregateRow:
    iteration: int
    best_mean: float
    best_min: float
    best_max: float
    popmean_mean: float
    popmean_min: float
    popmean_max: float


@dataclass(frozen=True)
class OperatorMixSummary:
    operators: OperatorStructure
    rows: tuple[AggregateRow, ...]

    @property
    def final_best_mean(self) -> float:
        return self.rows[-1].best_mean

    def to_csv(self) -> str:
        lines = [AGGREGATE_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.iteration},{r.best_mean!r},{r.best_min!r},{r.best_max!r},"
                f"{r.popmean_mean!r},{r.popmean_min!r},{r.popmean_max!r}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def aggregate_logs(logs: Sequence[ConvergenceLog]) -> tuple[AggregateRow, ...]:
    """Collapse equally long convergence logs to per-iteration statistics."""
    best = np.stack([log.best_series for log in logs])
    mean = np.stack([log.mean_series for log in logs])
    rows = []
    for i in range(best.shape[1]):
        rows.append(
            AggregateRow(
                iteration=i,
                best_mean=float(best[:, i].mean()),
                best_min=float(best[:, i].min()),
                best_max=float(best[:, i].max()),
                popmean_mean=float(mean[:, i].mean()),
                popmean_min=float(mean[:, i].min()),
                popmean_max=float(mean[:, i].max()),
            )
        )
    return tuple(rows)


def run_experiment(
    paths: ScenarioPaths,
    structure: TreeStructure | Sequence[int],
    spec: ExperimentSpec,
) -> list[OperatorMixSummary]:
    """Run ``repetitions`` seeded runs per operator mix and aggregate.

    Repetition ``r`` uses seed ``config.seed + r``, so repetitions are
    independent and could execute concurrently without changing output.
    """
    summaries = []
    for mix in spec.operator_mixes:
        logs = []
        for rep in range(spec.repetitions):
            cfg = replace(spec.config, operators=mix, seed=spec.config.seed + rep)
            logs.append(evolve(paths, structure, cfg).log)
        summaries.append(OperatorMixSummary(mix, aggregate_logs(logs)))
    return summaries


def mix_slug(ops: OperatorStructure) -> str:
    """Filename-safe identifier for an operator mix, e.g.
    ``20-10-10-20-10-10-20-10-30``."""
    parts = []
    for v in ops.as_tuple():
        parts.append(str(int(v)) if float(v).is_integer() else repr(float(v)))
    return "-".join(parts)
