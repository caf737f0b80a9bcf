"""Deterministic-equivalent LP emission for the multi-stage
asset-allocation model over a scenario tree.

Model.  Two assets are traded: the tree's risky asset (node returns) and
a deterministic cash asset earning the risk-free rate each period.  Per
node ``v`` and asset ``a`` the holding ``b_a_v`` evolves under purchases
``p`` and sales ``s``; purchases per stage are limited by sales plus the
stage budget.  Terminal wealth ``W`` is scored by expectation minus
``kappa`` times expected lower semideviation, linearized with one
deviation variable ``d`` per leaf:

    maximize    sum_leaf prob * W_leaf  -  kappa * sum_leaf prob * d_leaf
    subject to  sum_a b_a_root                              =  B[1]
                b_a_v <= V_a_v * b_a_parent + p_a_v - s_a_v     (stages 2..T-1)
                sum_a p_a_v <= sum_a s_a_v + B[stage]           (stages 2..T-1)
                b_a_leaf <= V_a_leaf * b_a_parent               (stage T)
                W_leaf = sum_a b_a_leaf
                d_leaf >= sum_l prob_l * W_l - W_leaf
                all variables >= 0

with gross returns ``V = 1 + r``.

Text format.  Four sections, ``Maximize`` / ``Subject To`` / ``Bounds`` /
``End``; comment lines start with a backslash.  A constraint is
``name: term .. term <sense> rhs`` where a term is ``[+|-] [coef] var``
and unit coefficients are omitted; long expressions wrap onto indented
continuation lines (a new constraint always starts with ``name:``).
Numbers are written with ``repr`` so parsing them back is exact, and
:func:`parse_lp` restores a structurally identical model.

Counts.  With ``N`` nodes overall, ``I`` interior nodes (stages 2..T-1)
and ``L`` leaves, the document has ``2N + 4I + 2L`` variables and
``1 + 3I + 4L`` constraints.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import BadConfigError, DegenerateTreeError
from .trees import ScenarioTree

RISKY = "risky"
CASH = "cash"


@dataclass(frozen=True)
class ModelConfig:
    """Risk aversion, per-stage budgets B[1..T-1] and the cash return."""

    kappa: float
    budget: tuple[float, ...]
    riskfree_rate: float = 0.0

    def __post_init__(self):
        budget = tuple(float(b) for b in self.budget)
        if len(budget) == 0:
            raise BadConfigError("budget needs one entry per stage 1..T-1")
        if budget[0] <= 0.0:
            raise BadConfigError("the root budget must be positive")
        if any(b < 0.0 for b in budget):
            raise BadConfigError("budgets must be non-negative")
        if self.kappa < 0.0:
            raise BadConfigError("kappa must be non-negative")
        if not np.isfinite(self.kappa) or not all(np.isfinite(b) for b in budget):
            raise BadConfigError("model parameters must be finite")
        object.__setattr__(self, "budget", budget)


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[float, str], ...]
    sense: str  # "<=", "=" or ">="
    rhs: float


@dataclass(frozen=True)
class LinearProgram:
    """Maximization LP: objective terms, constraints and non-negative
    variable bounds.  Comments are annotations, not model content."""

    objective: tuple[tuple[float, str], ...]
    constraints: tuple[Constraint, ...]
    variables: tuple[str, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def variable_count(tree: ScenarioTree) -> int:
    """Closed-form variable count of the emitted LP."""
    n_nodes = len(tree.nodes)
    n_interior = sum(1 for n in tree.nodes if 2 <= n.stage <= tree.n_stages - 1)
    n_leaves = tree.structure.terminal_count
    return 2 * n_nodes + 4 * n_interior + 2 * n_leaves


def constraint_count(tree: ScenarioTree) -> int:
    """Closed-form constraint count of the emitted LP."""
    n_interior = sum(1 for n in tree.nodes if 2 <= n.stage <= tree.n_stages - 1)
    n_leaves = tree.structure.terminal_count
    return 1 + 3 * n_interior + 4 * n_leaves


def build_program(tree: ScenarioTree, config: ModelConfig, note: str = "") -> LinearProgram:
    """Assemble the deterministic equivalent of the allocation model."""
    T = tree.n_stages
    if T < 2:
        raise DegenerateTreeError("tree needs at least one stochastic stage")
    if len(config.budget) != T - 1:
        raise BadConfigError(
            f"budget needs {T - 1} entries for a {T}-stage tree, "
            f"got {len(config.budget)}"
        )
    interior = [n for n in tree.nodes if 2 <= n.stage <= T - 1]
    leaves = tree.leaves
    assets = (RISKY, CASH)

    def gross(asset: str, node) -> float:
        return 1.0 + (node.value if asset == RISKY else config.riskfree_rate)

    variables: list[str] = []
    for n in tree.nodes:
        variables.extend(f"b_{a}_{n.id}" for a in assets)
    for n in interior:
        variables.extend(f"p_{a}_{n.id}" for a in assets)
        variables.extend(f"s_{a}_{n.id}" for a in assets)
    variables.extend(f"W_{n.id}" for n in leaves)
    variables.extend(f"d_{n.id}" for n in leaves)

    objective: list[tuple[float, str]] = [(n.prob, f"W_{n.id}") for n in leaves]
    if config.kappa != 0.0:
        objective.extend((-config.kappa * n.prob, f"d_{n.id}") for n in leaves)

    constraints: list[Constraint] = []
    root = tree.root
    constraints.append(
        Constraint(
            "budget_root",
            tuple((1.0, f"b_{a}_{root.id}") for a in assets),
            "=",
            config.budget[0],
        )
    )
    for n in interior:
        for a in assets:
            constraints.append(
                Constraint(
                    f"rebal_{a}_{n.id}",
                    (
                        (1.0, f"b_{a}_{n.id}"),
                        (-gross(a, n), f"b_{a}_{n.parent}"),
                        (-1.0, f"p_{a}_{n.id}"),
                        (1.0, f"s_{a}_{n.id}"),
                    ),
                    "<=",
                    0.0,
                )
            )
    for n in interior:
        terms = [(1.0, f"p_{a}_{n.id}") for a in assets]
        terms += [(-1.0, f"s_{a}_{n.id}") for a in assets]
        constraints.append(
            Constraint(f"cash_{n.id}", tuple(terms), "<=", config.budget[n.stage - 1])
        )
    for n in leaves:
        for a in assets:
            constraints.append(
                Constraint(
                    f"term_{a}_{n.id}",
                    ((1.0, f"b_{a}_{n.id}"), (-gross(a, n), f"b_{a}_{n.parent}")),
                    "<=",
                    0.0,
                )
            )
    for n in leaves:
        terms = [(1.0, f"W_{n.id}")] + [(-1.0, f"b_{a}_{n.id}") for a in assets]
        constraints.append(Constraint(f"wealth_{n.id}", tuple(terms), "=", 0.0))
    for n in leaves:
        terms = [(1.0, f"d_{n.id}")]
        for leaf in leaves:
            coef = -leaf.prob + (1.0 if leaf.id == n.id else 0.0)
            terms.append((coef, f"W_{leaf.id}"))
        constraints.append(Constraint(f"sdev_{n.id}", tuple(terms), ">=", 0.0))

    comments = []
    if note:
        comments.append(" ".join(note.split()))
    comments.append(
        f"variables: {len(variables)}  constraints: {len(constraints)}"
    )
    lp = LinearProgram(
        tuple(objective), tuple(constraints), tuple(variables), tuple(comments)
    )
    assert lp.n_variables == variable_count(tree)
    assert lp.n_constraints == constraint_count(tree)
    return lp


def _format_terms(terms) -> list[str]:
    chunks = []
    for i, (coef, var) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1.0 else f"{mag!r} {var}"
        if i == 0:
            chunks.append(body if coef >= 0 else f"- {body}")
        else:
            chunks.append(f"{sign} {body}")
    return chunks


def _wrap(prefix: str, chunks: list[str], suffix: str = "", width: int = 78) -> list[str]:
    lines = []
    line = prefix
    for chunk in chunks:
        if len(line) + len(chunk) + 1 > width and line.strip():
            lines.append(line)
            line = "      " + chunk
        else:
            line = f"{line} {chunk}"
    if suffix:
        line = f"{line} {suffix}"
    lines.append(line)
    return lines


def render_lp(lp: LinearProgram) -> str:
    lines = [f"\\ {c}" for c in lp.comments]
    lines.append("Maximize")
    lines.extend(_wrap(" obj:", _format_terms(lp.objective)))
    lines.append("Subject To")
    for c in lp.constraints:
        suffix = f"{c.sense} {float(c.rhs)!r}"
        lines.extend(_wrap(f" {c.name}:", _format_terms(c.terms), suffix))
    lines.append("Bounds")
    lines.extend(f" {v} >= 0" for v in lp.variables)
    lines.append("End")
    return "\n".join(lines) + "\n"


def emit_lp(tree: ScenarioTree, config: ModelConfig, note: str = "") -> str:
    """Build and render the deterministic-equivalent LP document."""
    return render_lp(build_program(tree, config, note))


_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sign>[+-])"
)


def _parse_terms(text: str) -> tuple[tuple[float, str], ...]:
    terms = []
    sign = 1.0
    coef = None
    for match in _TOKEN.finditer(text):
        kind = match.lastgroup
        tok = match.group()
        if kind == "sign":
            sign = -1.0 if tok == "-" else 1.0
        elif kind == "num":
            coef = float(tok)
        else:
            terms.append((sign * (1.0 if coef is None else coef), tok))
            sign, coef = 1.0, None
    return tuple(terms)


def parse_lp(text: str) -> LinearProgram:
    """Parse a document produced by :func:`render_lp` back into a
    structurally identical model (comments are dropped)."""
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.rstrip()
        if not line or line.lstrip().startswith("\\"):
            continue
        if line in ("Maximize", "Subject To", "Bounds", "End"):
            current = line
            sections[current] = []
            continue
        if current is None:
            raise ValueError(f"content before any section header: {line!r}")
        sections[current].append(line)

    def records(lines: list[str]) -> list[str]:
        recs: list[str] = []
        for line in lines:
            if re.match(r"^\s*[A-Za-z_]\w*:", line):
                recs.append(line.strip())
            else:
                recs[-1] += " " + line.strip()
        return recs

    objective_records = records(sections.get("Maximize", []))
    if len(objective_records) != 1:
        raise ValueError("expected exactly one objective row")
    objective = _parse_terms(objective_records[0].split(":", 1)[1])

    constraints = []
    for rec in records(sections.get("Subject To", [])):
        name, body = rec.split(":", 1)
        parts = re.split(r"(<=|>=|=)", body)
        if len(parts) != 3:
            raise ValueError(f"constraint {name!r} needs exactly one relation")
        constraints.append(
            Constraint(name.strip(), _parse_terms(parts[0]), parts[1], float(parts[2]))
        )

    variables = []
    for line in sections.get("Bounds", []):
        match = re.match(r"^\s*([A-Za-z_]\w*)\s*>=\s*0\s*$", line)
        if not match:
            raise ValueError(f"unsupported bound line: {line!r}")
        variables.append(match.group(1))

    return LinearProgram(objective, tuple(constraints), tuple(variables))
