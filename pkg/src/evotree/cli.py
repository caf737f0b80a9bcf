"""Command-line front end: simulate scenarios, generate trees, run
convergence experiments, emit deterministic-equivalent LPs, and serve the
HTTP API.

Exit codes: 0 success, 2 invalid flags or malformed input files, 3 the
evolutionary run exhausted its invalid-chromosome retry budget.
"""

from __future__ import annotations

import functools
import json
import time
from pathlib import Path

import click

from .errors import EvoTreeError, TooManyInvalidError
from .evolution import EvolutionConfig, OperatorStructure, evolve
from .experiments import ExperimentSpec, mix_slug, run_experiment
from .genotype import CenterStrategy, DistanceWeighting
from .lp import ModelConfig, build_program, render_lp
from .scenario_io import GarchParams, load_scenarios, save_scenarios, simulate_garch
from .trees import load_tree, save_tree

STRATEGIES = ("mean", "median", "extreme", "mixture", "random")
WEIGHTINGS = ("unweighted", "probability")


class GenerationFailed(click.ClickException):
    exit_code = 3


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TooManyInvalidError as exc:
            raise GenerationFailed(str(exc)) from exc
        except (EvoTreeError, OSError, ValueError) as exc:
            raise click.UsageError(str(exc)) from exc

    return wrapper


def _parse_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise click.UsageError(f"{what} must be comma-separated integers") from exc


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise click.UsageError(f"{what} must be comma-separated numbers") from exc


def _parse_ops(text: str) -> OperatorStructure:
    return OperatorStructure.from_sequence(_parse_floats(text, "--ops"))


@click.group()
def main():
    """Evolutionary multi-stage scenario tree toolkit."""


@main.command()
@click.option("--s", "n_paths", type=int, required=True, help="Number of scenario paths.")
@click.option("--horizon", type=int, required=True, help="Periods per path (stages 2..T).")
@click.option("--mu", type=float, default=0.0, show_default=True, help="Mean return per period.")
@click.option("--omega", type=float, required=True, help="Variance intercept.")
@click.option("--alpha", type=float, default=0.0, show_default=True, help="ARCH coefficient.")
@click.option("--beta", type=float, default=0.0, show_default=True, help="GARCH coefficient.")
@click.option("--sigma0", type=float, default=None, help="Initial conditional std dev (default: stationary level).")
@click.option("--allow-nonstationary", is_flag=True, help="Skip the alpha+beta<1 check (requires --sigma0).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Output CSV path.")
@_domain_errors
def simulate(n_paths, horizon, mu, omega, alpha, beta, sigma0, allow_nonstationary, seed, out):
    """Simulate GARCH(1,1) scenario return paths to a CSV file."""
    params = GarchParams(
        mu=mu,
        omega=omega,
        alpha=alpha,
        beta=beta,
        sigma0=sigma0,
        check_stationarity=not allow_nonstationary,
    )
    paths = simulate_garch(params, n_paths, horizon, seed)
    save_scenarios(paths, out)
    click.echo(f"s={paths.n_paths} horizon={horizon} seed={seed} -> {out}")


def _evolution_options(fn):
    fn = click.option(
        "--max-invalid-retries", type=int, default=None,
        help="Per-phase budget of discarded invalid chromosomes "
             "(default: 10 x phase size).",
    )(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option(
        "--weighting", type=click.Choice(WEIGHTINGS), default="unweighted", show_default=True
    )(fn)
    fn = click.option(
        "--strategy", type=click.Choice(STRATEGIES), default="mean", show_default=True,
        help="Node-value strategy.",
    )(fn)
    fn = click.option("--m", "mutation_genes", type=int, default=2, show_default=True,
                      help="Genes touched per mutation.")(fn)
    fn = click.option("--iterations", type=int, default=300, show_default=True)(fn)
    fn = click.option("--population", type=int, default=300, show_default=True)(fn)
    fn = click.option("--initial-population", type=int, default=1000, show_default=True)(fn)
    fn = click.option(
        "--probs-column", is_flag=True,
        help="Scenario CSV carries a trailing probability column.",
    )(fn)
    fn = click.option(
        "--structure", default="10,40", show_default=True,
        help="Node counts per stage 2..T, comma-separated.",
    )(fn)
    fn = click.option(
        "--scenarios", type=click.Path(exists=True, dir_okay=False, path_type=Path),
        required=True, help="Scenario CSV produced by `simulate` or external.",
    )(fn)
    return fn


def _build_config(initial_population, population, iterations, mutation_genes,
                  strategy, weighting, seed, ops, max_invalid_retries) -> EvolutionConfig:
    return EvolutionConfig(
        initial_population=initial_population,
        population=population,
        iterations=iterations,
        mutation_genes=mutation_genes,
        operators=ops,
        strategy=CenterStrategy.parse(strategy, seed=seed),
        weighting=DistanceWeighting.parse(weighting),
        seed=seed,
        max_invalid_retries=max_invalid_retries,
    )


@main.command()
@_evolution_options
@click.option("--ops", default="20,10,10,20,10,10,20,10,30", show_default=True,
              help="Nine operator values: seven production shares summing to 100, "
                   "then the crossover and mutation parent pools.")
@click.option("--tree-out", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("tree.json"), show_default=True)
@click.option("--log-out", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("convergence.csv"), show_default=True)
@_domain_errors
def generate(scenarios, structure, probs_column, initial_population, population,
             iterations, mutation_genes, strategy, weighting, seed,
             max_invalid_retries, ops, tree_out, log_out):
    """Evolve a scenario tree from a scenario CSV."""
    paths = load_scenarios(scenarios, probs_column=probs_column)
    counts = _parse_ints(structure, "--structure")
    config = _build_config(
        initial_population, population, iterations, mutation_genes,
        strategy, weighting, seed, _parse_ops(ops), max_invalid_retries,
    )
    started = time.perf_counter()
    result = evolve(paths, counts, config)
    elapsed = time.perf_counter() - started
    save_tree(result.tree, tree_out)
    result.log.write_csv(log_out)
    click.echo(f"best objective: {result.objective!r}")
    click.echo(f"wall time: {elapsed:.2f} s")
    click.echo(f"tree -> {tree_out}")
    click.echo(f"log -> {log_out}")


@main.command()
@_evolution_options
@click.option("--ops", "ops_list", multiple=True,
              help="Operator mix to compare; repeat the flag for several mixes.")
@click.option("--repetitions", type=int, default=10, show_default=True)
@click.option("--spec", "spec_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="JSON experiment spec; its keys override flags.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("experiment"), show_default=True)
@_domain_errors
def experiment(scenarios, structure, probs_column, initial_population, population,
               iterations, mutation_genes, strategy, weighting, seed,
               max_invalid_retries, ops_list, repetitions, spec_file, out_dir):
    """Run repeated seeded runs per operator mix and write aggregate CSVs."""
    settings = {
        "structure": _parse_ints(structure, "--structure"),
        "initial_population": initial_population,
        "population": population,
        "iterations": iterations,
        "mutation_genes": mutation_genes,
        "strategy": strategy,
        "weighting": weighting,
        "base_seed": seed,
        "max_invalid_retries": max_invalid_retries,
        "repetitions": repetitions,
        "operator_mixes": [list(_parse_ops(o).as_tuple()) for o in ops_list],
    }
    if spec_file is not None:
        with open(spec_file, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(settings)
        if unknown:
            raise click.UsageError(f"unknown spec keys: {sorted(unknown)}")
        settings.update(overrides)
    if not settings["operator_mixes"]:
        raise click.UsageError("give at least one --ops mix or a spec file")
    mixes = tuple(
        OperatorStructure.from_sequence(m) for m in settings["operator_mixes"]
    )
    config = _build_config(
        settings["initial_population"], settings["population"],
        settings["iterations"], settings["mutation_genes"],
        settings["strategy"], settings["weighting"], settings["base_seed"],
        mixes[0], settings["max_invalid_retries"],
    )
    spec = ExperimentSpec(mixes, config, settings["repetitions"])
    paths = load_scenarios(scenarios, probs_column=probs_column)
    out_dir.mkdir(parents=True, exist_ok=True)
    for summary in run_experiment(paths, tuple(settings["structure"]), spec):
        target = out_dir / f"convergence_{mix_slug(summary.operators)}.csv"
        summary.write_csv(target)
        click.echo(
            f"ops {mix_slug(summary.operators)}: "
            f"final best mean {summary.final_best_mean!r} -> {target}"
        )


@main.command("emit-lp")
@click.option("--tree", "tree_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Tree JSON produced by `generate`.")
@click.option("--kappa", type=float, default=0.0, show_default=True, help="Risk-aversion weight.")
@click.option("--budget", required=True,
              help="Per-stage budgets B[1..T-1], comma-separated.")
@click.option("--riskfree", "riskfree_rate", type=float, default=0.0, show_default=True,
              help="Per-period cash return.")
@click.option("--note", default="", help="Annotation embedded as a comment.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Output path (default: standard output).")
@_domain_errors
def emit_lp(tree_file, kappa, budget, riskfree_rate, note, out):
    """Emit the deterministic-equivalent LP of the allocation model."""
    tree = load_tree(tree_file)
    config = ModelConfig(
        kappa=kappa,
        budget=_parse_floats(budget, "--budget"),
        riskfree_rate=riskfree_rate,
    )
    program = build_program(tree, config, note)
    document = render_lp(program)
    counts = f"variables={program.n_variables} constraints={program.n_constraints}"
    if out is None:
        click.echo(document, nl=False)
        click.echo(counts, err=True)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(document)
        click.echo(counts)
        click.echo(f"lp -> {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("evotree.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
