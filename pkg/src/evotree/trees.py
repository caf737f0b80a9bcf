"""Core domain types: scenario paths, tree structures, chromosomes,
partitions and scenario trees.

Conventions used throughout the package:

* Stages are numbered ``t = 1..T``; stage 1 is the single deterministic
  root node.  A problem with ``T`` stages has ``T - 1`` stochastic stages.
* Returns are stored as simple per-period returns ``r`` (0.017 means
  +1.7%).  Gross multipliers ``1 + r`` are only formed where needed (LP
  emission).
* Node indices within a stage are 1-based (``1..n_t``), matching the
  partition vectors printed by :func:`evotree.genotype.decode`.

All types are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EmptyStructureError,
    NonMonotoneStructureError,
    TerminalExceedsScenariosError,
    TreeFormatError,
)

PROB_TOL = 1e-12


def _frozen_array(values, dtype=np.float64, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScenarioPaths:
    """A matrix of input scenario return paths plus per-path probabilities.

    ``values[i, j]`` is the simple return of path ``i`` at stage ``j + 2``
    (columns cover stages ``2..T``).  Probabilities default to uniform
    ``1/s``.
    """

    values: np.ndarray
    probs: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        values = _frozen_array(self.values, ndim=2)
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("scenario matrix must be at least 1 x 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("scenario values must be finite")
        s = values.shape[0]
        if self.probs is None:
            probs = np.full(s, 1.0 / s)
            probs.setflags(write=False)
        else:
            probs = _frozen_array(self.probs, ndim=1)
            if probs.shape[0] != s:
                raise ValueError("one probability per path required")
            if np.any(probs < 0.0):
                raise ValueError("probabilities must be non-negative")
            if abs(float(probs.sum()) - 1.0) > PROB_TOL:
                raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_stages(self) -> int:
        """Total number of stages T, including the deterministic root."""
        return self.values.shape[1] + 1

    @property
    def uniform(self) -> bool:
        """True when every path carries the canonical probability 1/s."""
        return bool(np.all(self.probs == 1.0 / self.n_paths))

    def stage_returns(self, stage: int) -> np.ndarray:
        """Return the column of stage-``stage`` returns (stage in 2..T)."""
        if not 2 <= stage <= self.n_stages:
            raise ValueError(f"stage must be in 2..{self.n_stages}")
        return self.values[:, stage - 2]


@dataclass(frozen=True)
class TreeStructure:
    """Required node counts per stochastic stage.

    ``counts[j]`` is the number of nodes at stage ``j + 2``; the root
    stage is implicit.  Counts must be non-decreasing (every node owns at
    least one child) and the terminal count may not exceed the number of
    input scenarios it will be validated against.
    """

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) == 0:
            raise EmptyStructureError("tree structure needs at least one stage")
        if any(c < 1 for c in counts):
            raise EmptyStructureError("every stage needs at least one node")
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise NonMonotoneStructureError(
                f"node counts must be non-decreasing, got {counts}"
            )
        object.__setattr__(self, "counts", counts)

    @property
    def n_stages(self) -> int:
        return len(self.counts) + 1

    @property
    def terminal_count(self) -> int:
        return self.counts[-1]

    def count_at(self, stage: int) -> int:
        """Node count at ``stage``; stage 1 is the root."""
        if stage == 1:
            return 1
        return self.counts[stage - 2]


def validate_structure(structure: TreeStructure | Sequence[int], n_scenarios: int) -> TreeStructure:
    """Check a node-count vector against the number of input scenarios.

    Monotonicity and positivity are enforced by :class:`TreeStructure`
    itself; this adds the ``n_T <= s`` feasibility bound and returns the
    validated structure.
    """
    if not isinstance(structure, TreeStructure):
        structure = TreeStructure(tuple(structure))
    if structure.terminal_count > n_scenarios:
        raise TerminalExceedsScenariosError(
            f"{structure.terminal_count} terminal nodes cannot be filled by "
            f"{n_scenarios} scenarios"
        )
    return structure


def chromosome_length(structure: TreeStructure | Sequence[int], n_scenarios: int) -> int:
    """Genotype length for a given problem.

    One gene per scenario (terminal-bin assignment) plus, for every stage
    ``t = 3..T``, one gene per stage-``t`` node (assignment of that node to
    a stage-``t-1`` bin).  Two-stage problems therefore use ``s + n_T``
    genes.
    """
    structure = validate_structure(structure, n_scenarios)
    return n_scenarios + sum(structure.counts[1:])


@dataclass(frozen=True, eq=False)
class Chromosome:
    """Real-valued genotype; every gene lies in the unit interval."""

    genes: np.ndarray

    def __post_init__(self):
        genes = _frozen_array(self.genes, ndim=1)
        if genes.shape[0] < 1:
            raise ValueError("chromosome must have at least one gene")
        if np.any(genes < 0.0) or np.any(genes > 1.0):
            raise ValueError("genes must lie in [0, 1]")
        object.__setattr__(self, "genes", genes)

    def __len__(self) -> int:
        return self.genes.shape[0]

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "Chromosome":
        return cls(rng.random(int(length)))


@dataclass(frozen=True, eq=False)
class NodePartition:
    """Nested assignment of scenarios to tree nodes, one vector per stage.

    ``assignments[j][i]`` is the 1-based node index of scenario ``i`` at
    stage ``j + 2``.  Construction verifies that every required node has a
    member and that stage assignments nest (two scenarios sharing a node
    at stage t+1 also share one at stage t).
    """

    structure: TreeStructure
    assignments: tuple[np.ndarray, ...]

    def __post_init__(self):
        counts = self.structure.counts
        if len(self.assignments) != len(counts):
            raise ValueError("one assignment vector per stochastic stage required")
        frozen = []
        s = None
        for j, (assign, k) in enumerate(zip(self.assignments, counts)):
            a = _frozen_array(assign, dtype=np.int64, ndim=1)
            if s is None:
                s = a.shape[0]
            elif a.shape[0] != s:
                raise ValueError("assignment vectors must share one length")
            if np.any(a < 1) or np.any(a > k):
                raise ValueError(f"stage {j + 2} assignment outside 1..{k}")
            if np.bincount(a - 1, minlength=k).min() == 0:
                raise ValueError(f"stage {j + 2} leaves a required node empty")
            frozen.append(a)
        # nesting: the stage-t node of a scenario must be a function of its
        # stage-(t+1) node
        for j in range(len(frozen) - 1):
            coarse, fine = frozen[j], frozen[j + 1]
            pairs = np.unique(np.stack([fine, coarse], axis=1), axis=0)
            if pairs.shape[0] != np.unique(fine).shape[0]:
                raise ValueError(
                    f"stage {j + 2} assignment does not coarsen stage {j + 3}"
                )
        object.__setattr__(self, "assignments", tuple(frozen))

    @property
    def n_scenarios(self) -> int:
        return self.assignments[0].shape[0]

    def stage_assignment(self, stage: int) -> np.ndarray:
        if not 2 <= stage <= self.structure.n_stages:
            raise ValueError(f"stage must be in 2..{self.structure.n_stages}")
        return self.assignments[stage - 2]

    def members(self, stage: int, node: int) -> np.ndarray:
        """Scenario indices (0-based) assigned to ``node`` at ``stage``."""
        return np.flatnonzero(self.stage_assignment(stage) == node)


@dataclass(frozen=True)
class TreeNode:
    id: int
    stage: int
    parent: int | None
    value: float
    prob: float


@dataclass(frozen=True)
class ScenarioTree:
    """Staged tree with parent links, node return values and probabilities.

    Node ids are deterministic: the root is 0, stage-2 nodes are
    ``1..n_2`` in node order, and so on stage by stage.
    """

    structure: TreeStructure
    nodes: tuple[TreeNode, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        by_id = {n.id: n for n in nodes}
        if len(by_id) != len(nodes):
            raise ValueError("node ids must be unique")
        roots = [n for n in nodes if n.stage == 1]
        if len(roots) != 1 or roots[0].parent is not None:
            raise ValueError("tree needs exactly one parentless root at stage 1")
        if abs(roots[0].prob - 1.0) > PROB_TOL:
            raise ValueError("root probability must be 1")
        child_ids: dict[int, list[int]] = {n.id: [] for n in nodes}
        T = self.structure.n_stages
        for t in range(2, T + 1):
            stage_nodes = [n for n in nodes if n.stage == t]
            if len(stage_nodes) != self.structure.count_at(t):
                raise ValueError(
                    f"stage {t} holds {len(stage_nodes)} nodes, structure "
                    f"requires {self.structure.count_at(t)}"
                )
            if abs(math.fsum(n.prob for n in stage_nodes) - 1.0) > PROB_TOL:
                raise ValueError(f"stage {t} probabilities do not sum to 1")
            for n in stage_nodes:
                parent = by_id.get(n.parent) if n.parent is not None else None
                if parent is None or parent.stage != t - 1:
                    raise ValueError(
                        f"node {n.id} needs a parent at stage {t - 1}"
                    )
                child_ids[parent.id].append(n.id)
        for n in nodes:
            if n.stage < T:
                child_prob = math.fsum(by_id[c].prob for c in child_ids[n.id])
                if abs(child_prob - n.prob) > PROB_TOL:
                    raise ValueError(
                        f"node {n.id} probability differs from its children's sum"
                    )
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_child_ids", child_ids)

    @property
    def n_stages(self) -> int:
        return self.structure.n_stages

    @property
    def root(self) -> TreeNode:
        return next(n for n in self.nodes if n.stage == 1)

    def node(self, node_id: int) -> TreeNode:
        return self._by_id[node_id]

    def nodes_at(self, stage: int) -> list[TreeNode]:
        return [n for n in self.nodes if n.stage == stage]

    @property
    def leaves(self) -> list[TreeNode]:
        return self.nodes_at(self.n_stages)

    def children(self, node_id: int) -> list[TreeNode]:
        return [self._by_id[c] for c in self._child_ids[node_id]]

    def to_dict(self) -> dict:
        return {
            "stages": self.n_stages,
            "structure": list(self.structure.counts),
            "nodes": [
                {
                    "id": n.id,
                    "stage": n.stage,
                    "parent": n.parent,
                    "value": n.value,
                    "prob": n.prob,
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ScenarioTree":
        try:
            structure = TreeStructure(tuple(payload["structure"]))
            stages = int(payload["stages"])
            nodes = tuple(
                TreeNode(
                    id=int(n["id"]),
                    stage=int(n["stage"]),
                    parent=None if n["parent"] is None else int(n["parent"]),
                    value=float(n["value"]),
                    prob=float(n["prob"]),
                )
                for n in payload["nodes"]
            )
        except (KeyError, TypeError) as exc:
            raise TreeFormatError(f"tree document missing field: {exc}") from exc
        if stages != structure.n_stages:
            raise TreeFormatError(
                f"'stages' is {stages} but structure implies {structure.n_stages}"
            )
        try:
            return cls(structure, nodes)
        except ValueError as exc:
            raise TreeFormatError(str(exc)) from exc


def save_tree(tree: ScenarioTree, path) -> None:
    """Write a tree as JSON; floats keep full precision so the round-trip
    is exact."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree.to_dict(), fh, indent=1)
        fh.write("\n")


def load_tree(path) -> ScenarioTree:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TreeFormatError(f"not a JSON tree document: {exc}") from exc
    return ScenarioTree.from_dict(payload)


@dataclass(frozen=True)
class ConvergenceRecord:
    iteration: int
    best: float
    mean: float
    invalid_discarded: int


@dataclass(frozen=True)
class ConvergenceLog:
    """Per-iteration best/mean objective plus invalid-chromosome discards."""

    records: tuple[ConvergenceRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def best_series(self) -> np.ndarray:
        return np.array([r.best for r in self.records])

    @property
    def mean_series(self) -> np.ndarray:
        return np.array([r.mean for r in self.records])

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    def to_csv(self) -> str:
        lines = ["iter,best,mean,invalid_discarded"]
        for r in self.records:
            lines.append(
                f"{r.iteration},{float(r.best)!r},{float(r.mean)!r},{r.invalid_discarded}"
            )
        return "\n".join(lines) + "\n"
