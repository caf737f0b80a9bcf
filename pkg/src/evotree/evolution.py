"""Population management, variation operators and the generation loop.

Reproducibility contract: every random draw comes from a stream derived
deterministically from ``(seed, iteration, slot)`` where ``slot`` is the
position of the produced member within its iteration (iteration 0 is the
initial population).  Results are therefore independent of evaluation
order and thread count, and identical seeds give identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadMError, LengthMismatchError, TooManyInvalidError
from .genotype import (
    MEAN,
    CenterStrategy,
    ChromosomeEvaluator,
    DistanceWeighting,
    build_tree,
    decode,
)
from .trees import (
    Chromosome,
    ConvergenceLog,
    ConvergenceRecord,
    ScenarioPaths,
    ScenarioTree,
    TreeStructure,
    chromosome_length,
    validate_structure,
)


def _stream(seed: int, iteration: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, iteration, slot)))


# consecutive invalid draws in one production slot before coverage repair
REPAIR_AFTER = 5


def _repair_chromosome(
    genes: np.ndarray, counts: tuple[int, ...], s: int, rng: np.random.Generator
) -> np.ndarray:
    """Make a chromosome valid by moving members of crowded bins into empty
    ones, stage by stage.

    Demanding structures (many required nodes relative to the scenario
    count) make uniformly sampled chromosomes valid too rarely for
    rejection alone; this repair touches only genes of reassigned members
    and keeps every moved gene strictly inside its new bin.
    """
    child = genes.copy()

    def fill_empty_bins(values: np.ndarray, k: int, gene_offset: int) -> None:
        bins = np.minimum((values * k).astype(np.int64), k - 1)
        occupancy = np.bincount(bins, minlength=k)
        for target in np.flatnonzero(occupancy == 0):
            donor = int(np.argmax(occupancy))
            members = np.flatnonzero(bins == donor)
            pick = int(members[int(rng.integers(members.size))])
            bins[pick] = target
            # keep the new gene away from bin edges so the decode floor
            # cannot round it out of the target bin
            child[gene_offset + pick] = (target + 0.1 + 0.8 * rng.random()) / k
            occupancy[donor] -= 1
            occupancy[target] += 1

    fill_empty_bins(child[:s], counts[-1], 0)
    offset = s
    for j in range(len(counts) - 1, 0, -1):
        k_cur, k_prev = counts[j], counts[j - 1]
        fill_empty_bins(child[offset : offset + k_cur], k_prev, offset)
        offset += k_cur
    return child


def _genes(chromosome) -> np.ndarray:
    if isinstance(chromosome, Chromosome):
        return chromosome.genes
    return np.asarray(chromosome, dtype=np.float64)


def random_chromosome(length: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh genotype with i.i.d. uniform genes on [0, 1)."""
    if length < 1:
        raise ValueError("length must be positive")
    return rng.random(int(length))


def crossover_npoint(p1, p2, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """N-point crossover: alternate parent segments split at N interior cuts."""
    a, b = _genes(p1), _genes(p2)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatchError("parents must share one length")
    length = a.shape[0]
    if not 1 <= n_points < length:
        raise ValueError(f"need 1 <= n_points < {length}")
    cuts = np.sort(rng.choice(length - 1, size=n_points, replace=False) + 1)
    child = a.copy()
    bounds = [0, *cuts.tolist(), length]
    for i in range(1, len(bounds) - 1, 2):
        child[bounds[i] : bounds[i + 1]] = b[bounds[i] : bounds[i + 1]]
    return child


def crossover_intermediate(p1, p2, rng: np.random.Generator) -> np.ndarray:
    """Blend crossover: one mixing weight per child, drawn uniformly."""
    a, b = _genes(p1), _genes(p2)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatchError("parents must share one length")
    lam = rng.random()
    return lam * a + (1.0 - lam) * b


def mutate_flip(chromosome, m: int, rng: np.random.Generator) -> np.ndarray:
    """Replace m distinct genes g by 1 - g."""
    genes = _genes(chromosome)
    if not 1 <= m <= genes.shape[0]:
        raise BadMError(f"m must be in 1..{genes.shape[0]}")
    idx = rng.choice(genes.shape[0], size=m, replace=False)
    child = genes.copy()
    child[idx] = 1.0 - child[idx]
    return child


def mutate_random(chromosome, m: int, rng: np.random.Generator) -> np.ndarray:
    """Resample m distinct genes uniformly on [0, 1)."""
    genes = _genes(chromosome)
    if not 1 <= m <= genes.shape[0]:
        raise BadMError(f"m must be in 1..{genes.shape[0]}")
    idx = rng.choice(genes.shape[0], size=m, replace=False)
    child = genes.copy()
    child[idx] = rng.random(m)
    return child


@dataclass(frozen=True)
class OperatorStructure:
    """Share of each new population produced by every operator, plus the
    percentile pools that parents are drawn from.

    The seven production shares are percentages and must sum to 100.
    ``crossover_pool`` is the top percentile one crossover parent comes
    from (the other parent is drawn from the whole population);
    ``mutation_pool`` is the top percentile mutation parents come from.
    """

    elitist: float = 20.0
    one_point: float = 10.0
    two_point: float = 10.0
    intermediate: float = 20.0
    flip_mutation: float = 10.0
    random_mutation: float = 10.0
    random_addition: float = 20.0
    crossover_pool: float = 10.0
    mutation_pool: float = 30.0

    def __post_init__(self):
        shares = self.shares
        if any(x < 0 for x in shares):
            raise ValueError("operator shares must be non-negative")
        if abs(sum(shares) - 100.0) > 1e-9:
            raise ValueError(f"operator shares must sum to 100, got {sum(shares)}")
        for pool in (self.crossover_pool, self.mutation_pool):
            if not 0.0 < pool <= 100.0:
                raise ValueError("parent pools must lie in (0, 100]")

    @property
    def shares(self) -> tuple[float, ...]:
        return (
            self.elitist,
            self.one_point,
            self.two_point,
            self.intermediate,
            self.flip_mutation,
            self.random_mutation,
            self.random_addition,
        )

    def as_tuple(self) -> tuple[float, ...]:
        return (*self.shares, self.crossover_pool, self.mutation_pool)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "OperatorStructure":
        values = tuple(float(v) for v in values)
        if len(values) != 9:
            raise ValueError(f"expected 9 operator values, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True)
class EvolutionConfig:
    """Run parameters for the evolutionary tree generator."""

    initial_population: int = 1000
    population: int = 300
    iterations: int = 300
    mutation_genes: int = 2
    operators: OperatorStructure = field(default_factory=OperatorStructure)
    strategy: CenterStrategy = MEAN
    weighting: DistanceWeighting = DistanceWeighting.UNWEIGHTED
    seed: int = 0
    max_invalid_retries: int | None = None
    repair_invalid: bool = True

    def __post_init__(self):
        if self.population < 1 or self.initial_population < self.population:
            raise ValueError("need initial_population >= population >= 1")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.mutation_genes < 1:
            raise BadMError("mutation gene count must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.max_invalid_retries is not None and self.max_invalid_retries < 1:
            raise ValueError("max_invalid_retries must be positive")


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    tree: ScenarioTree
    chromosome: Chromosome
    objective: float
    log: ConvergenceLog


def _operator_counts(ops: OperatorStructure, population: int) -> list[int]:
    """Members produced per operator: floor of each share, rounding residue
    filled by extra elitist copies."""
    counts = [math.floor(share * population / 100.0) for share in ops.shares]
    counts[0] += population - sum(counts)
    return counts


def _pool_size(percent: float, population: int) -> int:
    return max(1, math.floor(percent * population / 100.0))


def evolve(
    paths: ScenarioPaths,
    structure: TreeStructure | Sequence[int],
    config: EvolutionConfig = EvolutionConfig(),
) -> EvolutionResult:
    """Run the evolutionary search and return the best tree found.

    Generation 0 draws ``initial_population`` random chromosomes and keeps
    the best ``population``.  Every iteration then rebuilds the population
    from the configured operator mix: elitist copies of the current best,
    crossovers (one parent from the top crossover pool, one from anywhere),
    mutations of top-pool parents, and fresh random chromosomes.  Children
    decoding to an invalid tree are discarded and retried; a per-phase
    retry budget guards against structures the scenario set cannot fill.
    With ``repair_invalid`` (the default) a slot that keeps producing
    invalid children falls back to coverage repair after ``REPAIR_AFTER``
    discards, so demanding structures such as wide terminal stages still
    complete; switch it off for pure discard-and-retry behaviour.
    """
    structure = validate_structure(structure, paths.n_paths)
    evaluator = ChromosomeEvaluator(paths, structure, config.strategy, config.weighting)
    length = chromosome_length(structure, paths.n_paths)
    if config.mutation_genes > length:
        raise BadMError(
            f"mutation gene count {config.mutation_genes} exceeds "
            f"chromosome length {length}"
        )
    pop_size = config.population
    counts = _operator_counts(config.operators, pop_size)
    cross_pool = _pool_size(config.operators.crossover_pool, pop_size)
    mut_pool = _pool_size(config.operators.mutation_pool, pop_size)
    m = config.mutation_genes

    def budget(phase_size: int) -> int:
        if config.max_invalid_retries is not None:
            return config.max_invalid_retries
        return 10 * phase_size

    # --- generation 0: random sampling, truncated to the best ------------
    genes_list: list[np.ndarray] = []
    fits: list[float] = []
    discarded = 0
    limit = budget(config.initial_population)
    for slot in range(config.initial_population):
        rng = _stream(config.seed, 0, slot)
        attempts = 0
        while True:
            genes = rng.random(length)
            fit = evaluator.fitness(genes)
            if fit is not None:
                break
            discarded += 1
            if discarded > limit:
                raise TooManyInvalidError(
                    f"more than {limit} invalid chromosomes while sampling the "
                    f"initial population; structure {structure.counts} is too "
                    f"demanding for {paths.n_paths} scenarios"
                )
            attempts += 1
            if config.repair_invalid and attempts >= REPAIR_AFTER:
                genes = _repair_chromosome(genes, structure.counts, paths.n_paths, rng)
                fit = evaluator.fitness(genes)
                assert fit is not None
                break
        genes_list.append(genes)
        fits.append(fit)
    order = np.argsort(np.asarray(fits), kind="stable")[:pop_size]
    population = [genes_list[i] for i in order]
    pop_fits = [fits[i] for i in order]
    best_genes, best_fit = population[0], pop_fits[0]
    records = [
        ConvergenceRecord(0, pop_fits[0], float(np.mean(pop_fits)), discarded)
    ]

    # --- generation loop --------------------------------------------------
    for iteration in range(1, config.iterations + 1):
        new_genes = [population[i] for i in range(counts[0])]
        new_fits = [pop_fits[i] for i in range(counts[0])]
        discarded = 0
        limit = budget(pop_size)
        slot = 0
        for op_index in range(1, 7):
            for _ in range(counts[op_index]):
                rng = _stream(config.seed, iteration, slot)
                slot += 1
                attempts = 0
                while True:
                    if op_index in (1, 2, 3):
                        p1 = population[int(rng.integers(cross_pool))]
                        p2 = population[int(rng.integers(pop_size))]
                        if op_index == 1:
                            child = crossover_npoint(p1, p2, 1, rng)
                        elif op_index == 2:
                            child = crossover_npoint(p1, p2, 2, rng)
                        else:
                            child = crossover_intermediate(p1, p2, rng)
                    elif op_index == 4:
                        parent = population[int(rng.integers(mut_pool))]
                        child = mutate_flip(parent, m, rng)
                    elif op_index == 5:
                        parent = population[int(rng.integers(mut_pool))]
                        child = mutate_random(parent, m, rng)
                    else:
                        child = rng.random(length)
                    fit = evaluator.fitness(child)
                    if fit is not None:
                        break
                    discarded += 1
                    if discarded > limit:
                        raise TooManyInvalidError(
                            f"more than {limit} invalid chromosomes in "
                            f"iteration {iteration}; structure {structure.counts} "
                            f"is too demanding for {paths.n_paths} scenarios"
                        )
                    attempts += 1
                    if config.repair_invalid and attempts >= REPAIR_AFTER:
                        child = _repair_chromosome(
                            child, structure.counts, paths.n_paths, rng
                        )
                        fit = evaluator.fitness(child)
                        assert fit is not None
                        break
                new_genes.append(child)
                new_fits.append(fit)
        order = np.argsort(np.asarray(new_fits), kind="stable")
        population = [new_genes[i] for i in order]
        pop_fits = [new_fits[i] for i in order]
        if pop_fits[0] < best_fit:
            best_genes, best_fit = population[0], pop_fits[0]
        records.append(
            ConvergenceRecord(
                iteration, pop_fits[0], float(np.mean(pop_fits)), discarded
            )
        )

    best_chromosome = Chromosome(best_genes)
    partition = decode(best_chromosome, structure, paths.n_paths)
    tree = build_tree(partition, paths, config.strategy)
    return EvolutionResult(tree, best_chromosome, best_fit, ConvergenceLog(tuple(records)))
