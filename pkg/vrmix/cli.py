"""CLI interface for vrmix."""

import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .config import APP_NAME, APP_VERSION, LOG_LEVEL, load_config_file, output_dir
from .exceptions import InvalidInputError
from .experiments import run_experiment
from .models import (
    AdversaryKind,
    CliConfig,
    ExperimentConfig,
    ExperimentKind,
    LearnerKind,
    OracleDomain,
    RegretSimConfig,
    RegretSimResult,
    RestrictedSimplexSpec,
    RunResult,
    RunStatus,
    SamplerKind,
)
from .regret import export_ledger_csv
from .run_service import run_service
from .runner import SeedOutcome, run_seeds
from .simplex import grid_projection, proj_restricted
from .simulation import growth_summary, run_regret_sim
from .utils import (
    aggregate_results,
    ensure_output_dir,
    parse_float_list,
    parse_int_list,
    parse_seed_list,
    write_config_sidecar,
    write_json,
    write_result_csv,
    write_rows_csv,
)

app = typer.Typer(help="vrmix - online variance reduction with mixtures")
console = Console()
logger = logging.getLogger(__name__)

USAGE_ERROR = 2
LIST_KEYS = {
    "seeds": parse_seed_list,
    "horizons": parse_int_list,
    "dpp_regularizers": parse_float_list,
    "trunc": lambda text: tuple(parse_float_list(text)),
    "tune_betas": parse_float_list,
    "tune_gammas": parse_float_list,
}


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log per-round detail"),
) -> None:
    """Adaptive mixture importance sampling: regret simulations and experiments."""
    level = "DEBUG" if verbose else LOG_LEVEL
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
        force=True,
    )


@app.command()
def version() -> None:
    """Print the version."""
    console.print(f"{APP_NAME} {APP_VERSION}")


# Config resolution
def _usage_error(message: str) -> typer.Exit:
    console.print(f"[red]Error: {message}[/red]")
    return typer.Exit(USAGE_ERROR)


def _merge_config(config_file: Optional[Path], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """File values first, then every flag that was given."""
    values: Dict[str, Any] = {}
    if config_file is not None:
        try:
            raw = load_config_file(config_file)
        except FileNotFoundError as e:
            raise _usage_error(str(e))
        for key, text in raw.items():
            key = "horizons" if key == "t" else key
            parse = LIST_KEYS.get(key)
            try:
                values[key] = parse(text) if parse else text
            except InvalidInputError as e:
                raise _usage_error(f"{config_file}: {key}: {e}")
    values.update({key: value for key, value in overrides.items() if value is not None})
    return values


def _parse_flag(parse: Callable[[str], Any], text: Optional[str], flag: str) -> Any:
    if text is None:
        return None
    try:
        return parse(text)
    except InvalidInputError as e:
        raise _usage_error(f"{flag}: {e}")


def _output_dir(output: Optional[Path], subcommand: str) -> Path:
    try:
        return ensure_output_dir(output if output is not None else output_dir() / subcommand)
    except InvalidInputError as e:
        raise _usage_error(str(e))


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console,
    )


def _report_failures(outcomes: Sequence[SeedOutcome]) -> None:
    failed = [o for o in outcomes if not o.ok]
    for outcome in failed:
        console.print(f"[red]Seed {outcome.seed} failed: {outcome.error}[/red]")
    if failed:
        raise typer.Exit(1)


# Regret simulation
@app.command("regret-sim")
def regret_sim(
    horizons: Optional[str] = typer.Option(None, "--T", "-T", help="Horizon(s), e.g. 1000 or 5000,20000,80000"),
    adversary: Optional[AdversaryKind] = typer.Option(None, "--adversary", "-a", help="Loss sequence"),
    learner: Optional[LearnerKind] = typer.Option(None, "--learner", "-l", help="Online learner"),
    seeds: Optional[str] = typer.Option(None, "--seeds", "--seed", "-s", help="Seeds, e.g. 7, 1..10 or 1,4"),
    instance: Optional[str] = typer.Option(None, "--instance", help="delta (n=2, k=2) or random"),
    n: Optional[int] = typer.Option(None, "--n", help="Atoms of the random instance"),
    k: Optional[int] = typer.Option(None, "--k", help="Components of the random instance"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Uniform-weight floor"),
    beta: Optional[float] = typer.Option(None, "--beta", help="ONS step parameter per unit n^2 L"),
    eps: Optional[float] = typer.Option(None, "--eps", help="ONS regularizer per unit n^2 L"),
    oracle_domain: Optional[OracleDomain] = typer.Option(None, "--oracle-domain", help="Comparator set of the regret curve"),
    checkpoints: Optional[int] = typer.Option(None, "--checkpoints", help="Points on the regret curve"),
    phase_length: Optional[int] = typer.Option(None, "--phase-length", help="Rounds per phase (piecewise adversary)"),
    component_switch: Optional[int] = typer.Option(None, "--component-switch", help="Round at which components change"),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="INI file with a [vrmix] section"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Artifact directory"),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Seeds run in parallel"),
) -> None:
    """Play a learner against an adversary and measure its regret."""
    overrides = {
        "horizons": _parse_flag(parse_int_list, horizons, "--T"),
        "adversary": adversary,
        "learner": learner,
        "seeds": _parse_flag(parse_seed_list, seeds, "--seeds"),
        "instance": instance,
        "n": n,
        "k": k,
        "gamma": gamma,
        "beta": beta,
        "eps": eps,
        "oracle_domain": oracle_domain,
        "checkpoints": checkpoints,
        "phase_length": phase_length,
        "component_switch": component_switch,
    }
    values = _merge_config(config_file, overrides)
    if "horizons" not in values:
        raise _usage_error("Missing option '--T' (or 'horizons' in the config file)")
    try:
        cfg = RegretSimConfig(**values)
    except ValidationError as e:
        raise _usage_error(f"Invalid configuration:\n{e}")

    out_dir = _output_dir(output, "regret-sim")
    cli_cfg = CliConfig(
        subcommand="regret-sim",
        config_file=str(config_file) if config_file else None,
        output_dir=str(out_dir),
        seeds=cfg.seeds,
        overrides={key: value for key, value in overrides.items() if value is not None},
    )
    resolved = {"cli": cli_cfg.model_dump(mode="json"), "config": cfg.model_dump(mode="json")}
    config_json = json.dumps(resolved)
    single = len(cfg.horizons) == 1 and len(cfg.seeds) == 1

    outcomes: List[SeedOutcome] = []
    with _progress() as progress:
        for T in cfg.horizons:
            task = progress.add_task(f"T={T}", total=len(cfg.seeds))

            def _write(seed: int, result: Any, T: int = T) -> Path:
                sim, ledger = result
                name = "ledger.csv" if single else f"ledger_T{T}_seed{seed}.csv"
                path = export_ledger_csv(ledger, out_dir / name)
                write_config_sidecar(path, {**resolved, "T": T, "seed": seed})
                return path

            outcomes += asyncio.run(
                run_seeds(
                    "regret-sim",
                    cfg.learner.value,
                    cfg.seeds,
                    lambda seed, T=T: run_regret_sim(cfg, T, seed),
                    _write,
                    config_json,
                    jobs=jobs,
                    registry=run_service,
                    on_done=lambda _, task=task: progress.advance(task),
                )
            )

    results: List[RegretSimResult] = [o.result[0] for o in outcomes if o.ok]
    curve_rows = [
        {"T": r.T, "seed": r.seed, "t": t, "regret": value}
        for r in results
        for t, value in zip(r.curve_t, r.curve_regret)
    ]
    write_config_sidecar(write_rows_csv(curve_rows, out_dir / "curve.csv"), resolved)
    summary = growth_summary(results) if results else {}
    write_json(
        {
            "cli": cli_cfg.model_dump(mode="json"),
            "config": cfg.model_dump(mode="json"),
            "runs": [r.model_dump(mode="json", exclude={"curve_t", "curve_regret"}) for r in results],
            "failed_seeds": [o.seed for o in outcomes if not o.ok],
            **summary,
        },
        out_dir / "summary.json",
    )

    table = Table(title="Regret")
    for column in ("T", "Seed", "Regret", "Restricted", "Excess", "Oracle", "Certified"):
        table.add_column(column, justify="right")
    for r in results:
        table.add_row(
            str(r.T),
            str(r.seed),
            f"{r.regret:.4g}",
            f"{r.regret_restricted:.4g}",
            f"{r.restriction_excess:.4g}",
            f"{r.oracle_value:.6g}",
            "yes" if r.oracle_certified else "[yellow]no[/yellow]",
        )
    console.print(table)
    if summary.get("slope") is not None:
        console.print(f"[blue]Fitted regret growth exponent: {summary['slope']:.3f}[/blue]")
    console.print(f"[green]Artifacts written to {out_dir}[/green]")
    _report_failures(outcomes)


# Experiments
def _run_experiment_command(
    kind: ExperimentKind,
    config_file: Optional[Path],
    output: Optional[Path],
    jobs: int,
    overrides: Dict[str, Any],
) -> None:
    values = _merge_config(config_file, overrides)
    try:
        cfg = ExperimentConfig.for_experiment(kind, **values)
    except ValidationError as e:
        raise _usage_error(f"Invalid configuration:\n{e}")

    out_dir = _output_dir(output, kind.value)
    cli_cfg = CliConfig(
        subcommand=kind.value,
        config_file=str(config_file) if config_file else None,
        output_dir=str(out_dir),
        seeds=cfg.seeds,
        overrides={key: value for key, value in overrides.items() if value is not None},
    )
    resolved = {"cli": cli_cfg.model_dump(mode="json"), "config": cfg.model_dump(mode="json")}
    config_json = json.dumps(resolved)

    def _write(seed: int, result: RunResult) -> Path:
        path = write_result_csv(result, out_dir / f"result_{seed}.csv")
        write_config_sidecar(path, {**resolved, "seed": seed})
        return path

    with _progress() as progress:
        task = progress.add_task(f"{kind.value} ({cfg.sampler.value})", total=len(cfg.seeds))
        outcomes = asyncio.run(
            run_seeds(
                kind.value,
                cfg.sampler.value,
                cfg.seeds,
                lambda seed: run_experiment(cfg, seed),
                _write,
                config_json,
                jobs=jobs,
                registry=run_service,
                on_done=lambda _: progress.advance(task),
            )
        )

    results: List[RunResult] = [o.result for o in outcomes if o.ok]
    aggregate = aggregate_results(results)
    write_config_sidecar(write_rows_csv(aggregate, out_dir / "aggregate.csv"), resolved)
    write_json(
        {
            "cli": cli_cfg.model_dump(mode="json"),
            "config": cfg.model_dump(mode="json"),
            "unbiased": cfg.unbiased,
            "metric": results[0].metric_name if results else None,
            "runs": [
                {
                    "seed": r.seed,
                    "final_weights": r.final_weights,
                    "final_metric": r.metric[-1] if r.metric else None,
                    "wall_time": r.wall_time,
                    "learner_time": r.learner_time,
                    "clip_count": r.clip_count,
                    "extra": r.extra,
                }
                for r in results
            ],
            "failed_seeds": [o.seed for o in outcomes if not o.ok],
            "aggregate": aggregate,
        },
        out_dir / "summary.json",
    )

    table = Table(title=f"{kind.value} ({cfg.sampler.value})")
    table.add_column("Seed", justify="right", style="cyan")
    table.add_column(results[0].metric_name if results else "metric", justify="right", style="green")
    table.add_column("Final weights", style="magenta")
    table.add_column("Wall time", justify="right")
    for r in results:
        table.add_row(
            str(r.seed),
            f"{r.metric[-1]:.6g}" if r.metric else "N/A",
            np.array2string(np.asarray(r.final_weights), precision=3, max_line_width=60),
            f"{r.wall_time:.1f}s",
        )
    console.print(table)
    console.print(f"[green]Artifacts written to {out_dir}[/green]")
    _report_failures(outcomes)


def _common_overrides(
    sampler: Optional[SamplerKind],
    seeds: Optional[str],
    n: Optional[int],
    iterations: Optional[int],
    epochs: Optional[int],
    batch_size: Optional[int],
    step_size: Optional[float],
    gamma: Optional[float],
    beta: Optional[float],
    eps: Optional[float],
    loss_bound: Optional[float],
    eval_every: Optional[int],
    uniform_only: Optional[bool],
    tune: Optional[bool],
    tune_betas: Optional[str],
    tune_gammas: Optional[str],
) -> Dict[str, Any]:
    return {
        "sampler": sampler,
        "seeds": _parse_flag(parse_seed_list, seeds, "--seeds"),
        "n": n,
        "iterations": iterations,
        "epochs": epochs,
        "batch_size": batch_size,
        "step_size": step_size,
        "gamma": gamma,
        "beta": beta,
        "eps": eps,
        "L": loss_bound,
        "eval_every": eval_every,
        "uniform_only": uniform_only or None,
        "tune": tune or None,
        "tune_betas": _parse_flag(parse_float_list, tune_betas, "--tune-betas"),
        "tune_gammas": _parse_flag(parse_float_list, tune_gammas, "--tune-gammas"),
    }


SAMPLER_OPT = typer.Option(None, "--sampler", help="vrm, uniform or ogd")
SEEDS_OPT = typer.Option(None, "--seeds", "--seed", "-s", help="Seeds, e.g. 1..5")
N_OPT = typer.Option(None, "--n", help="Dataset size")
ITERATIONS_OPT = typer.Option(None, "--iterations", help="Rounds (overrides epochs)")
EPOCHS_OPT = typer.Option(None, "--epochs", help="Passes over the data")
BATCH_OPT = typer.Option(None, "--batch-size", "-b", help="Minibatch size")
STEP_OPT = typer.Option(None, "--step-size", help="Optimizer step constant (divided by sqrt(t))")
GAMMA_OPT = typer.Option(None, "--gamma", help="Uniform-weight floor")
BETA_OPT = typer.Option(None, "--beta", help="ONS step parameter per unit n^2 L")
EPS_OPT = typer.Option(None, "--eps", help="ONS regularizer per unit n^2 L")
L_OPT = typer.Option(None, "--L", help="Loss bound; calibrated when omitted")
EVAL_OPT = typer.Option(None, "--eval-every", help="Iterations between metric evaluations")
UNIFORM_ONLY_OPT = typer.Option(False, "--uniform-only", help="Learner over the uniform component alone")
TUNE_OPT = typer.Option(False, "--tune", help="Grid-search beta and gamma on an inner 80/20 split of the training data")
TUNE_BETAS_OPT = typer.Option(None, "--tune-betas", help="Beta grid for --tune, per unit n^2 L, e.g. 0.1,1,10")
TUNE_GAMMAS_OPT = typer.Option(None, "--tune-gammas", help="Gamma grid for --tune, e.g. 0.05,0.1,0.3")
CONFIG_OPT = typer.Option(None, "--config", "-c", help="INI file with a [vrmix] section")
OUTPUT_OPT = typer.Option(None, "--output", "-o", help="Artifact directory")
JOBS_OPT = typer.Option(1, "--jobs", "-j", min=1, help="Seeds run in parallel")


@app.command("svm-blobs")
def svm_blobs(
    blobs: Optional[int] = typer.Option(None, "--blobs", help="Number of blobs"),
    separation: Optional[float] = typer.Option(None, "--separation", help="Distance between neighbouring blob means"),
    eps_mass: Optional[float] = typer.Option(None, "--eps-mass", help="Out-of-blob mass of each component"),
    sampler: Optional[SamplerKind] = SAMPLER_OPT,
    seeds: Optional[str] = SEEDS_OPT,
    n: Optional[int] = N_OPT,
    iterations: Optional[int] = ITERATIONS_OPT,
    epochs: Optional[int] = EPOCHS_OPT,
    batch_size: Optional[int] = BATCH_OPT,
    step_size: Optional[float] = STEP_OPT,
    gamma: Optional[float] = GAMMA_OPT,
    beta: Optional[float] = BETA_OPT,
    eps: Optional[float] = EPS_OPT,
    loss_bound: Optional[float] = L_OPT,
    eval_every: Optional[int] = EVAL_OPT,
    uniform_only: bool = UNIFORM_ONLY_OPT,
    tune: bool = TUNE_OPT,
    tune_betas: Optional[str] = TUNE_BETAS_OPT,
    tune_gammas: Optional[str] = TUNE_GAMMAS_OPT,
    config_file: Optional[Path] = CONFIG_OPT,
    output: Optional[Path] = OUTPUT_OPT,
    jobs: int = JOBS_OPT,
) -> None:
    """Online SVM on Gaussian blobs, one component per blob."""
    overrides = _common_overrides(
        sampler, seeds, n, iterations, epochs, batch_size, step_size,
        gamma, beta, eps, loss_bound, eval_every, uniform_only,
        tune, tune_betas, tune_gammas,
    )
    overrides.update({"blob_count": blobs, "separation": separation, "eps_mass": eps_mass})
    _run_experiment_command(ExperimentKind.SVM_BLOBS, config_file, output, jobs, overrides)


@app.command("linreg-dpp")
def linreg_dpp(
    trunc: Optional[str] = typer.Option(None, "--trunc", help="Soft truncation a,b of r' = a r + b; 1.0,0.0 is unbiased"),
    regularizers: Optional[str] = typer.Option(None, "--regularizers", help="k-DPP kernel regularizers, e.g. 1,10,100"),
    scaled_points: Optional[int] = typer.Option(None, "--scaled-points", help="Rows scaled up"),
    scale: Optional[float] = typer.Option(None, "--scale", help="Scale factor of those rows"),
    d: Optional[int] = typer.Option(None, "--d", help="Feature dimension"),
    sampler: Optional[SamplerKind] = SAMPLER_OPT,
    seeds: Optional[str] = SEEDS_OPT,
    n: Optional[int] = N_OPT,
    iterations: Optional[int] = ITERATIONS_OPT,
    epochs: Optional[int] = EPOCHS_OPT,
    batch_size: Optional[int] = BATCH_OPT,
    step_size: Optional[float] = STEP_OPT,
    gamma: Optional[float] = GAMMA_OPT,
    beta: Optional[float] = BETA_OPT,
    eps: Optional[float] = EPS_OPT,
    loss_bound: Optional[float] = L_OPT,
    eval_every: Optional[int] = EVAL_OPT,
    uniform_only: bool = UNIFORM_ONLY_OPT,
    tune: bool = TUNE_OPT,
    tune_betas: Optional[str] = TUNE_BETAS_OPT,
    tune_gammas: Optional[str] = TUNE_GAMMAS_OPT,
    config_file: Optional[Path] = CONFIG_OPT,
    output: Optional[Path] = OUTPUT_OPT,
    jobs: int = JOBS_OPT,
) -> None:
    """Minibatch SGD for least squares with k-DPP batch components."""
    trunc_pair = _parse_flag(parse_float_list, trunc, "--trunc")
    if trunc_pair is not None and len(trunc_pair) != 2:
        raise _usage_error("--trunc takes exactly two numbers, e.g. 0.8,0.2")
    overrides = _common_overrides(
        sampler, seeds, n, iterations, epochs, batch_size, step_size,
        gamma, beta, eps, loss_bound, eval_every, uniform_only,
        tune, tune_betas, tune_gammas,
    )
    overrides.update(
        {
            "trunc": tuple(trunc_pair) if trunc_pair is not None else None,
            "dpp_regularizers": _parse_flag(parse_float_list, regularizers, "--regularizers"),
            "scaled_points": scaled_points,
            "scale": scale,
            "d": d,
        }
    )
    _run_experiment_command(ExperimentKind.LINREG_DPP, config_file, output, jobs, overrides)


@app.command()
def kmeans(
    clusters: Optional[int] = typer.Option(None, "--clusters", help="Number of centers"),
    components: Optional[int] = typer.Option(None, "--components", help="Distance components"),
    points: Optional[Path] = typer.Option(None, "--points", help="CSV of points; synthetic clusters when omitted"),
    d: Optional[int] = typer.Option(None, "--d", help="Dimension of synthetic points"),
    sampler: Optional[SamplerKind] = SAMPLER_OPT,
    seeds: Optional[str] = SEEDS_OPT,
    n: Optional[int] = N_OPT,
    iterations: Optional[int] = ITERATIONS_OPT,
    epochs: Optional[int] = EPOCHS_OPT,
    batch_size: Optional[int] = BATCH_OPT,
    step_size: Optional[float] = STEP_OPT,
    gamma: Optional[float] = GAMMA_OPT,
    beta: Optional[float] = BETA_OPT,
    eps: Optional[float] = EPS_OPT,
    loss_bound: Optional[float] = L_OPT,
    eval_every: Optional[int] = EVAL_OPT,
    uniform_only: bool = UNIFORM_ONLY_OPT,
    tune: bool = TUNE_OPT,
    tune_betas: Optional[str] = TUNE_BETAS_OPT,
    tune_gammas: Optional[str] = TUNE_GAMMAS_OPT,
    config_file: Optional[Path] = CONFIG_OPT,
    output: Optional[Path] = OUTPUT_OPT,
    jobs: int = JOBS_OPT,
) -> None:
    """Minibatch k-means with distance-based components."""
    if points is not None and not points.exists():
        raise _usage_error(f"Points file does not exist: {points}")
    overrides = _common_overrides(
        sampler, seeds, n, iterations, epochs, batch_size, step_size,
        gamma, beta, eps, loss_bound, eval_every, uniform_only,
        tune, tune_betas, tune_gammas,
    )
    overrides.update(
        {
            "n_clusters": clusters,
            "n_components": components,
            "points_path": str(points) if points is not None else None,
            "d": d,
        }
    )
    _run_experiment_command(ExperimentKind.KMEANS, config_file, output, jobs, overrides)


# Projection self-test
@app.command("project-test")
def project_test(
    trials: int = typer.Option(1000, "--trials", min=1, help="Random inputs"),
    seed: int = typer.Option(0, "--seed", "-s", help="Seed"),
    step: float = typer.Option(1e-3, "--step", help="Grid resolution of the oracle"),
    tolerance: float = typer.Option(2e-3, "--tolerance", help="Allowed distance to the oracle"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Artifact directory"),
) -> None:
    """Check the restricted-simplex projection against a grid-search oracle."""
    out_dir = _output_dir(output, "project-test")
    rng = np.random.default_rng(seed)
    rows: List[Dict[str, Any]] = []
    with _progress() as progress:
        task = progress.add_task("projections", total=trials)
        for trial in range(trials):
            k = int(rng.choice([2, 3, 4]))
            gamma = float(rng.choice([0.05, 0.2, 0.5]))
            spec = RestrictedSimplexSpec(k=k, gamma=gamma)
            w = rng.normal(scale=2.0, size=k)
            x = proj_restricted(w, spec)
            oracle = grid_projection(w, spec, step=step)
            rows.append(
                {
                    "trial": trial,
                    "k": k,
                    "gamma": gamma,
                    "distance": float(np.linalg.norm(x - oracle)),
                    "idempotent": bool(np.array_equal(proj_restricted(x, spec), x)),
                }
            )
            progress.advance(task)

    worst = max(row["distance"] for row in rows)
    failures = [row for row in rows if row["distance"] > tolerance or not row["idempotent"]]
    resolved = {
        "cli": {"subcommand": "project-test", "output_dir": str(out_dir)},
        "config": {"trials": trials, "seed": seed, "step": step, "tolerance": tolerance},
    }
    write_config_sidecar(write_rows_csv(rows, out_dir / "project_test.csv"), resolved)
    write_json(
        {**resolved["config"], "cli": resolved["cli"], "max_distance": worst, "failures": len(failures)},
        out_dir / "summary.json",
    )
    console.print(f"Max distance to oracle: [blue]{worst:.3g}[/blue] over {trials} inputs")
    if failures:
        console.print(f"[red]{len(failures)} projections disagree with the oracle[/red]")
        raise typer.Exit(1)
    console.print("[green]All projections match the oracle and are idempotent[/green]")


# Run registry
@app.command()
def runs(
    action: str = typer.Argument(..., help="Action: list, show, clear"),
    run_id: Optional[str] = typer.Argument(None, help="Run ID (or unique prefix) for 'show'"),
    status_filter: Optional[str] = typer.Option(None, "--status", help="Filter by status: queued, running, completed, failed"),
    kind: Optional[str] = typer.Option(None, "--kind", help="Filter by subcommand"),
    days_old: int = typer.Option(30, "--days", "-d", help="Days old for 'clear' action"),
) -> None:
    """Manage recorded runs."""
    if action == "list":
        _list_runs(status_filter, kind)
    elif action == "show":
        if not run_id:
            raise _usage_error("Run ID is required for 'show' action")
        _show_run(run_id)
    elif action == "clear":
        _clear_runs(days_old)
    else:
        raise _usage_error(f"Unknown action '{action}'. Use: list, show, clear")


def _list_runs(status_filter: Optional[str], kind: Optional[str]) -> None:
    status_enum = None
    if status_filter:
        try:
            status_enum = RunStatus(status_filter.lower())
        except ValueError:
            raise _usage_error(
                f"Invalid status '{status_filter}'. Valid options: queued, running, completed, failed"
            )

    try:
        runs_db = run_service.get_runs(status=status_enum, kind=kind, limit=100)
    except Exception as e:
        console.print(f"[red]Error listing runs: {e}[/red]")
        raise typer.Exit(1)

    if not runs_db:
        console.print("[yellow]No runs found.[/yellow]")
        return

    table = Table(title="Runs")
    table.add_column("ID", style="cyan", width=12)
    table.add_column("Kind", style="blue")
    table.add_column("Sampler", style="magenta")
    table.add_column("Seed", justify="right")
    table.add_column("Status", width=10)
    table.add_column("Created", style="white", width=16)
    table.add_column("Duration", style="white", width=10)

    for run in runs_db:
        status_color = {
            RunStatus.QUEUED: "yellow",
            RunStatus.RUNNING: "blue",
            RunStatus.COMPLETED: "green",
            RunStatus.FAILED: "red",
        }.get(run.status, "white")
        duration = "N/A"
        if run.start_time and run.end_time:
            duration = str(run.end_time - run.start_time).split(".")[0]
        table.add_row(
            str(run.id)[:8] + "...",
            run.kind,
            run.sampler,
            str(run.seed),
            f"[{status_color}]{run.status.value}[/{status_color}]",
            run.created_at.strftime("%Y-%m-%d %H:%M"),
            duration,
        )
    console.print(table)


def _show_run(run_id: str) -> None:
    run = run_service.find_run(run_id)
    if not run:
        console.print(f"[red]Error: Run not found: {run_id}[/red]")
        raise typer.Exit(1)

    console.print(f"\n[bold]Run Details: {run.id}[/bold]")
    console.print(f"Kind: [blue]{run.kind}[/blue]  Sampler: [magenta]{run.sampler}[/magenta]  Seed: {run.seed}")
    console.print(f"Status: [green]{run.status.value}[/green]")
    console.print(f"Created: [yellow]{run.created_at.strftime('%Y-%m-%d %H:%M:%S')}[/yellow]")
    if run.start_time:
        console.print(f"Started: [yellow]{run.start_time.strftime('%Y-%m-%d %H:%M:%S')}[/yellow]")
    if run.end_time:
        console.print(f"Completed: [yellow]{run.end_time.strftime('%Y-%m-%d %H:%M:%S')}[/yellow]")
    if run.output_file:
        console.print(f"Output: [cyan]{run.output_file}[/cyan]")
    if run.log:
        console.print(f"Log: [white]{run.log}[/white]")
    console.print_json(json.dumps(run_service.config_of(run)))


def _clear_runs(days_old: int) -> None:
    try:
        deleted_count = run_service.clear_old_runs(days_old)
    except Exception as e:
        console.print(f"[red]Error clearing runs: {e}[/red]")
        raise typer.Exit(1)
    console.print(f"[green]Cleared {deleted_count} runs older than {days_old} days[/green]")


if __name__ == "__main__":
    app()
