"""evotree: evolutionary generation of multi-stage scenario trees for
stochastic programming, plus GARCH(1,1) scenario simulation and
deterministic-equivalent LP emission for a mean-risk asset-allocation
model."""

__version__ = "0.1.0"

from . import errors
from .evolution import (
    EvolutionConfig,
    EvolutionResult,
    OperatorStructure,
    crossover_intermediate,
    crossover_npoint,
    evolve,
    mutate_flip,
    mutate_random,
    random_chromosome,
)
from .experiments import ExperimentSpec, OperatorMixSummary, run_experiment
from .genotype import (
    EXTREME,
    MEAN,
    MEDIAN,
    MIXTURE,
    CenterStrategy,
    ChromosomeEvaluator,
    DistanceWeighting,
    bin_index,
    build_tree,
    decode,
    node_value,
    objective,
)
from .lp import LinearProgram, ModelConfig, build_program, emit_lp, parse_lp, render_lp
from .scenario_io import GarchParams, load_scenarios, save_scenarios, simulate_garch
from .trees import (
    Chromosome,
    ConvergenceLog,
    ConvergenceRecord,
    NodePartition,
    ScenarioPaths,
    ScenarioTree,
    TreeNode,
    TreeStructure,
    chromosome_length,
    load_tree,
    save_tree,
    validate_structure,
)

__all__ = [
    "__version__",
    "errors",
    "ScenarioPaths",
    "TreeStructure",
    "Chromosome",
    "NodePartition",
    "ScenarioTree",
    "TreeNode",
    "ConvergenceLog",
    "ConvergenceRecord",
    "validate_structure",
    "chromosome_length",
    "save_tree",
    "load_tree",
    "GarchParams",
    "simulate_garch",
    "load_scenarios",
    "save_scenarios",
    "CenterStrategy",
    "DistanceWeighting",
    "MEAN",
    "MEDIAN",
    "EXTREME",
    "MIXTURE",
    "bin_index",
    "decode",
    "node_value",
    "build_tree",
    "objective",
    "ChromosomeEvaluator",
    "OperatorStructure",
    "EvolutionConfig",
    "EvolutionResult",
    "random_chromosome",
    "crossover_npoint",
    "crossover_intermediate",
    "mutate_flip",
    "mutate_random",
    "evolve",
    "ExperimentSpec",
    "OperatorMixSummary",
    "run_experiment",
    "ModelConfig",
    "LinearProgram",
    "build_program",
    "render_lp",
    "parse_lp",
    "emit_lp",
]
