"""FastAPI service exposing the scenario-tree workflow over HTTP.

Thin wrappers around the core package: simulate GARCH scenarios, evolve a
scenario tree, aggregate convergence experiments, and emit the
deterministic-equivalent LP.  Domain errors surface as 422 responses with
the error class named in the detail string.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import EvoTreeError
from ..evolution import OperatorStructure, evolve
from ..experiments import run_experiment
from ..lp import ModelConfig, build_program, render_lp
from ..scenario_io import simulate_garch
from .schemas import (
    ConvergenceRowModel,
    EmitLpRequest,
    EmitLpResponse,
    ExperimentRequest,
    ExperimentResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    MixSummaryModel,
    ScenarioMatrixModel,
    SimulateRequest,
    TreeModel,
)

app = FastAPI(
    title="evotree",
    description="Evolutionary multi-stage scenario tree generation service",
    version=__version__,
)


@app.exception_handler(EvoTreeError)
async def domain_error_handler(_: Request, exc: EvoTreeError) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"detail": f"{type(exc).__name__}: {exc}"},
    )


@app.exception_handler(ValueError)
async def value_error_handler(_: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=ScenarioMatrixModel)
def simulate(request: SimulateRequest) -> ScenarioMatrixModel:
    paths = simulate_garch(
        request.to_params(), request.paths, request.horizon, request.seed
    )
    return ScenarioMatrixModel.from_paths(paths)


@app.post("/generate", response_model=GenerateResponse)
def generate(request: GenerateRequest) -> GenerateResponse:
    paths = request.scenarios.to_paths()
    config = request.to_config(OperatorStructure.from_sequence(request.operators))
    result = evolve(paths, tuple(request.structure), config)
    return GenerateResponse(
        objective=result.objective,
        tree=TreeModel.from_tree(result.tree),
        log=ConvergenceRowModel.from_log(result.log),
    )


@app.post("/experiment", response_model=ExperimentResponse)
def experiment(request: ExperimentRequest) -> ExperimentResponse:
    paths = request.scenarios.to_paths()
    summaries = run_experiment(paths, tuple(request.structure), request.to_spec())
    return ExperimentResponse(
        results=[MixSummaryModel.from_summary(s) for s in summaries]
    )


@app.post("/emit-lp", response_model=EmitLpResponse)
def emit_lp_endpoint(request: EmitLpRequest) -> EmitLpResponse:
    tree = request.tree.to_tree()
    config = ModelConfig(
        kappa=request.kappa,
        budget=tuple(request.budget),
        riskfree_rate=request.riskfree_rate,
    )
    program = build_program(tree, config, request.note)
    return EmitLpResponse(
        lp=render_lp(program),
        variables=program.n_variables,
        constraints=program.n_constraints,
    )
