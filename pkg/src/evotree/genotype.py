"""Chromosome decoding, node-value strategies and the l1 objective.

A chromosome is decoded in two steps.  Genes ``1..s`` drop each scenario
into one of the ``n_T`` terminal bins; after that, one block of ``n_t``
genes per stage ``t = T..3`` drops each stage-``t`` node into one of the
``n_{t-1}`` bins of the stage below.  Chaining those maps yields a nested
partition of the scenarios for every stage, so the branching structure of
the tree falls out of the encoding for free.  A chromosome is invalid
whenever some required node ends up empty; invalid chromosomes are simply
discarded by the evolutionary engine.

Node values are picked from the member returns by a configurable center
strategy (mean, median, extreme, mixture, random).  The approximation
quality of a partition is the sum over stages and nodes of absolute
deviations of member returns from their node center, optionally weighted
by node probability.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyNodeSetError,
    InvalidTreeError,
    LengthMismatchError,
)
from .trees import (
    Chromosome,
    NodePartition,
    ScenarioPaths,
    ScenarioTree,
    TreeNode,
    TreeStructure,
    chromosome_length,
    validate_structure,
)

CENTER_KINDS = ("mean", "median", "extreme", "mixture", "random")


@dataclass(frozen=True)
class CenterStrategy:
    """How a node-set of returns is collapsed to a single node value.

    * ``mean`` — probability-weighted arithmetic mean of the members.
    * ``median`` — middle member; even counts average the two middles.
    * ``extreme`` — lowest member if the node-set mean is below the stage
      mean, highest otherwise (ties pick the highest).
    * ``mixture`` — the stage value range is split into three equal-width
      sections; node-sets whose mean falls in the lowest/highest section
      use their min/max, the middle section falls back to the median.
    * ``random`` — a uniformly drawn member; reproducible because the
      draw is seeded by (strategy seed, stage, node id).
    """

    kind: str
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in CENTER_KINDS:
            raise ValueError(f"unknown center strategy {self.kind!r}")
        if self.kind == "random":
            if self.seed is None or int(self.seed) < 0:
                raise ValueError("random strategy needs a non-negative seed")
            object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def parse(cls, name: str, seed: int | None = None) -> "CenterStrategy":
        name = name.strip().lower()
        return cls(name, seed if name == "random" else None)


MEAN = CenterStrategy("mean")
MEDIAN = CenterStrategy("median")
EXTREME = CenterStrategy("extreme")
MIXTURE = CenterStrategy("mixture")


class DistanceWeighting(enum.Enum):
    """Whether per-node l1 distances are scaled by node probability.

    ``PROBABILITY`` multiplies each node's distance by ``prob * n_t``;
    the ``n_t`` factor normalizes the weights so that equal node
    probabilities reproduce the unweighted objective.
    """

    UNWEIGHTED = "unweighted"
    PROBABILITY = "probability"

    @classmethod
    def parse(cls, name: str) -> "DistanceWeighting":
        return cls(name.strip().lower())


def bin_index(g: float, k: int) -> int:
    """Map a unit-interval gene to a 1-based bin index in ``1..k``.

    ``min(floor(g * k), k - 1) + 1``; the upper edge ``g = 1`` lands in
    bin ``k``.
    """
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"gene {g} outside [0, 1]")
    if k < 1:
        raise ValueError("bin count must be positive")
    return min(int(g * k), k - 1) + 1


def _as_genes(chromosome) -> np.ndarray:
    if isinstance(chromosome, Chromosome):
        return chromosome.genes
    return np.asarray(chromosome, dtype=np.float64)


def _decode_assignments(
    genes: np.ndarray, counts: tuple[int, ...], s: int
) -> list[np.ndarray] | None:
    """Decode genes into 0-based per-stage scenario assignments.

    Returns None when any stage leaves a required node empty.
    """
    n_term = counts[-1]
    cur = np.minimum((genes[:s] * n_term).astype(np.int64), n_term - 1)
    if np.bincount(cur, minlength=n_term).min() == 0:
        return None
    assigns = [cur]
    offset = s
    for j in range(len(counts) - 1, 0, -1):
        k_cur, k_prev = counts[j], counts[j - 1]
        block = genes[offset : offset + k_cur]
        offset += k_cur
        node_map = np.minimum((block * k_prev).astype(np.int64), k_prev - 1)
        cur = node_map[cur]
        if np.bincount(cur, minlength=k_prev).min() == 0:
            return None
        assigns.append(cur)
    assigns.reverse()
    return assigns


def decode(
    chromosome, structure: TreeStructure | Sequence[int], n_scenarios: int
) -> NodePartition:
    """Decode a chromosome into a nested node partition.

    Raises LengthMismatchError for a chromosome of the wrong length and
    InvalidTreeError when the decoded partition leaves a node empty (the
    caller should discard the chromosome).
    """
    structure = validate_structure(structure, n_scenarios)
    genes = _as_genes(chromosome)
    expected = chromosome_length(structure, n_scenarios)
    if genes.shape[0] != expected:
        raise LengthMismatchError(
            f"chromosome has {genes.shape[0]} genes, problem needs {expected}"
        )
    assigns = _decode_assignments(genes, structure.counts, n_scenarios)
    if assigns is None:
        raise InvalidTreeError("decoded partition leaves a required node empty")
    return NodePartition(structure, tuple(a + 1 for a in assigns))


def node_value(
    members,
    strategy: CenterStrategy,
    stage_values,
    probs=None,
    stage: int | None = None,
    node: int | None = None,
) -> float:
    """Collapse a node-set of returns to its center value.

    ``stage_values`` are all input returns of the node's stage (needed by
    the extreme/mixture rules).  ``probs`` are the member path
    probabilities (mean strategy only; None means uniform).  ``stage`` and
    ``node`` identify the node for the random strategy's seeded draw.
    """
    members = np.asarray(members, dtype=np.float64)
    if members.size == 0:
        raise EmptyNodeSetError("node value requested for an empty node-set")
    kind = strategy.kind
    if kind == "mean":
        return float(np.average(members, weights=probs))
    if kind == "median":
        return float(np.median(members))
    stage_values = np.asarray(stage_values, dtype=np.float64)
    if kind == "extreme":
        if float(members.mean()) < float(stage_values.mean()):
            return float(members.min())
        return float(members.max())
    if kind == "mixture":
        lo, hi = float(stage_values.min()), float(stage_values.max())
        width = (hi - lo) / 3.0
        m = float(members.mean())
        if m < lo + width:
            return float(members.min())
        if m > hi - width:
            return float(members.max())
        return float(np.median(members))
    # random
    if stage is None or node is None:
        raise ValueError("random strategy needs the stage and node id")
    rng = np.random.default_rng(np.random.SeedSequence((strategy.seed, stage, node)))
    return float(members[int(rng.integers(members.size))])


def _node_probabilities(
    assign0: np.ndarray, k: int, probs: np.ndarray, uniform: bool
) -> np.ndarray:
    """Per-node probabilities: sum of member path probabilities.

    The uniform case is computed as member-count over path-count so that
    ratios like 6/10 come out as exact floats rather than sums of 1/s.
    """
    if uniform:
        return np.bincount(assign0, minlength=k) / assign0.shape[0]
    return np.bincount(assign0, weights=probs, minlength=k)


class ChromosomeEvaluator:
    """Vectorized decode + objective for one (scenarios, structure,
    strategy, weighting) problem; the evolutionary engine's hot path.

    All methods are pure and safe to call concurrently.
    """

    def __init__(
        self,
        paths: ScenarioPaths,
        structure: TreeStructure | Sequence[int],
        strategy: CenterStrategy = MEAN,
        weighting: DistanceWeighting = DistanceWeighting.UNWEIGHTED,
    ):
        self.paths = paths
        self.structure = validate_structure(structure, paths.n_paths)
        self.strategy = strategy
        self.weighting = weighting
        self.counts = self.structure.counts
        self.s = paths.n_paths
        self.length = chromosome_length(self.structure, self.s)
        self.probs = paths.probs
        self.uniform = paths.uniform
        self._cols = [
            np.ascontiguousarray(paths.values[:, j]) for j in range(len(self.counts))
        ]
        self._pv = [self.probs * col for col in self._cols]
        self._stage_mean = [float(col.mean()) for col in self._cols]
        self._stage_lo = [float(col.min()) for col in self._cols]
        self._stage_hi = [float(col.max()) for col in self._cols]
        # global node ids: root 0, then stage by stage in node order
        offsets = [1]
        for k in self.counts[:-1]:
            offsets.append(offsets[-1] + k)
        self._id_offset = offsets

    def decode_genes(self, genes: np.ndarray) -> list[np.ndarray] | None:
        """0-based per-stage assignments, or None for an invalid chromosome."""
        return _decode_assignments(genes, self.counts, self.s)

    def stage_centers(self, j: int, assign0: np.ndarray) -> np.ndarray:
        """Node center values for stage ``j + 2`` under this strategy."""
        k = self.counts[j]
        vals = self._cols[j]
        kind = self.strategy.kind
        if kind == "mean":
            if self.uniform:
                # plain mean; exact for singleton and constant node-sets,
                # where the weighted quotient can be one ulp off
                sums = np.bincount(assign0, weights=vals, minlength=k)
                return sums / np.bincount(assign0, minlength=k)
            wsum = np.bincount(assign0, weights=self._pv[j], minlength=k)
            w = np.bincount(assign0, weights=self.probs, minlength=k)
            return wsum / w
        if kind == "random":
            centers = np.empty(k)
            for node in range(k):
                members = vals[assign0 == node]
                seq = np.random.SeedSequence(
                    (self.strategy.seed, j + 2, self._id_offset[j] + node)
                )
                rng = np.random.default_rng(seq)
                centers[node] = members[int(rng.integers(members.size))]
            return centers
        order = np.lexsort((vals, assign0))
        sv = vals[order]
        sizes = np.bincount(assign0, minlength=k)
        ends = np.cumsum(sizes)
        starts = ends - sizes
        if kind == "median":
            return (sv[starts + (sizes - 1) // 2] + sv[starts + sizes // 2]) * 0.5
        mins = sv[starts]
        maxs = sv[ends - 1]
        means = np.bincount(assign0, weights=vals, minlength=k) / sizes
        if kind == "extreme":
            return np.where(means < self._stage_mean[j], mins, maxs)
        # mixture
        med = (sv[starts + (sizes - 1) // 2] + sv[starts + sizes // 2]) * 0.5
        width = (self._stage_hi[j] - self._stage_lo[j]) / 3.0
        centers = med.copy()
        low = means < self._stage_lo[j] + width
        high = means > self._stage_hi[j] - width
        centers[low] = mins[low]
        centers[high] = maxs[high]
        return centers

    def objective_of(self, assigns0: Sequence[np.ndarray]) -> float:
        """l1 objective of a decoded (0-based) assignment list."""
        total = 0.0
        for j, k in enumerate(self.counts):
            assign0 = assigns0[j]
            vals = self._cols[j]
            centers = self.stage_centers(j, assign0)
            dist = np.abs(vals - centers[assign0])
            if self.weighting is DistanceWeighting.UNWEIGHTED:
                total += float(dist.sum())
            else:
                node_d = np.bincount(assign0, weights=dist, minlength=k)
                node_p = _node_probabilities(assign0, k, self.probs, self.uniform)
                total += float(node_d @ (node_p * k))
        return total

    def fitness(self, genes: np.ndarray) -> float | None:
        """Objective of a raw gene vector; None marks an invalid tree."""
        assigns = _decode_assignments(genes, self.counts, self.s)
        if assigns is None:
            return None
        return self.objective_of(assigns)


def objective(
    partition: NodePartition,
    paths: ScenarioPaths,
    strategy: CenterStrategy = MEAN,
    weighting: DistanceWeighting = DistanceWeighting.UNWEIGHTED,
) -> float:
    """l1 approximation objective of a partition; lower is better.

    Per stage and node the distance is the plain sum of absolute
    deviations of member returns from the node center; probability
    weighting scales each node's distance by ``prob * n_t``.
    """
    ev = ChromosomeEvaluator(paths, partition.structure, strategy, weighting)
    if partition.n_scenarios != paths.n_paths:
        raise ValueError("partition and scenario set disagree on path count")
    return ev.objective_of([a - 1 for a in partition.assignments])


def build_tree(
    partition: NodePartition, paths: ScenarioPaths, strategy: CenterStrategy = MEAN
) -> ScenarioTree:
    """Materialize the scenario tree induced by a valid partition.

    Node probability is the sum of member path probabilities; node value
    applies the center strategy to the members' stage returns.
    """
    if partition.n_scenarios != paths.n_paths:
        raise ValueError("partition and scenario set disagree on path count")
    structure = partition.structure
    counts = structure.counts
    uniform = paths.uniform
    nodes = [TreeNode(id=0, stage=1, parent=None, value=0.0, prob=1.0)]
    id_offset = [1]
    for k in counts[:-1]:
        id_offset.append(id_offset[-1] + k)
    for j, k in enumerate(counts):
        stage = j + 2
        assign1 = partition.assignments[j]
        vals = paths.values[:, j]
        node_p = _node_probabilities(assign1 - 1, k, paths.probs, uniform)
        for node in range(1, k + 1):
            member_idx = np.flatnonzero(assign1 == node)
            node_id = id_offset[j] + node - 1
            if j == 0:
                parent = 0
            else:
                prev = partition.assignments[j - 1]
                parent = id_offset[j - 1] + int(prev[member_idx[0]]) - 1
            value = node_value(
                vals[member_idx],
                strategy,
                vals,
                probs=None if uniform else paths.probs[member_idx],
                stage=stage,
                node=node_id,
            )
            nodes.append(
                TreeNode(
                    id=node_id,
                    stage=stage,
                    parent=parent,
                    value=value,
                    prob=float(node_p[node - 1]),
                )
            )
    return ScenarioTree(structure, tuple(nodes))
