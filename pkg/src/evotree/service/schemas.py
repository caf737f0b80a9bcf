"""Pydantic request/response models for the HTTP service, plus the
converters that bridge them to the core domain types."""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from ..evolution import EvolutionConfig, OperatorStructure
from ..experiments import AggregateRow, ExperimentSpec, OperatorMixSummary
from ..genotype import CenterStrategy, DistanceWeighting
from ..scenario_io import GarchParams
from ..trees import ConvergenceLog, ScenarioPaths, ScenarioTree

StrategyName = Literal["mean", "median", "extreme", "mixture", "random"]
WeightingName = Literal["unweighted", "probability"]

DEFAULT_OPERATORS = [20.0, 10.0, 10.0, 20.0, 10.0, 10.0, 20.0, 10.0, 30.0]


class ScenarioMatrixModel(BaseModel):
    """Scenario paths: one row per path, one column per stage 2..T."""

    values: list[list[float]]
    probs: list[float] | None = None

    @classmethod
    def from_paths(cls, paths: ScenarioPaths) -> "ScenarioMatrixModel":
        return cls(values=paths.values.tolist(), probs=paths.probs.tolist())

    def to_paths(self) -> ScenarioPaths:
        probs = None if self.probs is None else np.asarray(self.probs)
        return ScenarioPaths(np.asarray(self.values, dtype=np.float64), probs)


class SimulateRequest(BaseModel):
    paths: int = Field(ge=1)
    horizon: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    mu: float = 0.0
    omega: float
    alpha: float = 0.0
    beta: float = 0.0
    sigma0: float | None = None
    allow_nonstationary: bool = False

    def to_params(self) -> GarchParams:
        return GarchParams(
            mu=self.mu,
            omega=self.omega,
            alpha=self.alpha,
            beta=self.beta,
            sigma0=self.sigma0,
            check_stationarity=not self.allow_nonstationary,
        )


class TreeNodeModel(BaseModel):
    id: int
    stage: int
    parent: int | None
    value: float
    prob: float


class TreeModel(BaseModel):
    """Same shape as the tree JSON file format."""

    stages: int
    structure: list[int]
    nodes: list[TreeNodeModel]

    @classmethod
    def from_tree(cls, tree: ScenarioTree) -> "TreeModel":
        return cls(**tree.to_dict())

    def to_tree(self) -> ScenarioTree:
        return ScenarioTree.from_dict(self.model_dump())


class ConvergenceRowModel(BaseModel):
    iteration: int
    best: float
    mean: float
    invalid_discarded: int

    @classmethod
    def from_log(cls, log: ConvergenceLog) -> list["ConvergenceRowModel"]:
        return [
            cls(
                iteration=r.iteration,
                best=r.best,
                mean=r.mean,
                invalid_discarded=r.invalid_discarded,
            )
            for r in log
        ]


class EvolutionSettings(BaseModel):
    """Run parameters shared by /generate and /experiment."""

    initial_population: int = Field(default=1000, ge=1)
    population: int = Field(default=300, ge=1)
    iterations: int = Field(default=300, ge=1)
    mutation_genes: int = Field(default=2, ge=1)
    strategy: StrategyName = "mean"
    weighting: WeightingName = "unweighted"
    seed: int = Field(default=0, ge=0)
    max_invalid_retries: int | None = None

    def to_config(self, operators: OperatorStructure) -> EvolutionConfig:
        return EvolutionConfig(
            initial_population=self.initial_population,
            population=self.population,
            iterations=self.iterations,
            mutation_genes=self.mutation_genes,
            operators=operators,
            strategy=CenterStrategy.parse(self.strategy, seed=self.seed),
            weighting=DistanceWeighting.parse(self.weighting),
            seed=self.seed,
            max_invalid_retries=self.max_invalid_retries,
        )


class GenerateRequest(EvolutionSettings):
    scenarios: ScenarioMatrixModel
    structure: list[int]
    operators: list[float] = Field(default_factory=lambda: list(DEFAULT_OPERATORS))


class GenerateResponse(BaseModel):
    objective: float
    tree: TreeModel
    log: list[ConvergenceRowModel]


class EmitLpRequest(BaseModel):
    tree: TreeModel
    kappa: float = Field(ge=0.0)
    budget: list[float]
    riskfree_rate: float = 0.0
    note: str = ""


class EmitLpResponse(BaseModel):
    lp: str
    variables: int
    constraints: int


class ExperimentRequest(EvolutionSettings):
    scenarios: ScenarioMatrixModel
    structure: list[int]
    operator_mixes: list[list[float]]
    repetitions: int = Field(default=10, ge=1)

    def to_spec(self) -> ExperimentSpec:
        mixes = tuple(OperatorStructure.from_sequence(m) for m in self.operator_mixes)
        template = self.to_config(mixes[0])
        return ExperimentSpec(mixes, template, self.repetitions)


class AggregateRowModel(BaseModel):
    iteration: int
    best_mean: float
    best_min: float
    best_max: float
    popmean_mean: float
    popmean_min: float
    popmean_max: float

    @classmethod
    def from_row(cls, row: AggregateRow) -> "AggregateRowModel":
        return cls(**row.__dict__)


class MixSummaryModel(BaseModel):
    operators: list[float]
    rows: list[AggregateRowModel]

    @classmethod
    def from_summary(cls, summary: OperatorMixSummary) -> "MixSummaryModel":
        return cls(
            operators=list(summary.operators.as_tuple()),
            rows=[AggregateRowModel.from_row(r) for r in summary.rows],
        )


class ExperimentResponse(BaseModel):
    results: list[MixSummaryModel]


class HealthResponse(BaseModel):
    status: str
    version: str
