"""Command-line interface: teleport-noise chain | bounds | foliate | verify | threshold."""
import functools
import json
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from teleport_noise import __version__
from teleport_noise.config.settings import settings
from teleport_noise.core.bounds import bounds_table, epsilon_of
from teleport_noise.core.chain import chain_table
from teleport_noise.core.densesim import verify_pauli_replacement
from teleport_noise.core.foliation import convert_noise_model
from teleport_noise.core.schemas import (
    ChainConfig,
    FoliationConfig,
    RunConfig,
    ThresholdInputs,
)
from teleport_noise.core.threshold import threshold_report
from teleport_noise.utils.exceptions import (
    ConfigurationError,
    InputValidationError,
    TeleportNoiseError,
)
from teleport_noise.utils.logger import log, setup_logger
from teleport_noise.utils.serialization import dataframe_to_csv, dumps_json, write_text

console = Console(stderr=True)


# ============================================================
# INPUT HANDLING
# ============================================================

def load_payload(source: str) -> Dict[str, Any]:
    """Parse inline JSON (starting with '{') or the JSON file at ``source``."""
    text = source
    if not source.lstrip().startswith("{"):
        path = Path(source)
        if not path.is_file():
            raise InputValidationError(f"input file not found: {source}")
        text = path.read_text(encoding="utf-8")
    payload = json.loads(text)
    if not isinstance(payload, dict):
        raise InputValidationError("input must be a JSON object")
    return payload


def parse_tolerances(items: Tuple[str, ...]) -> Dict[str, float]:
    tolerances: Dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputValidationError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            tolerances[name.strip()] = float(value)
        except ValueError as e:
            raise InputValidationError(f"--tol {name}: {value!r} is not a number") from e
    return tolerances


def _validation_message(error: ValidationError) -> str:
    lines = []
    for issue in error.errors():
        location = ".".join(str(part) for part in issue["loc"]) or "<root>"
        lines.append(f"{location}: {issue['msg']}")
    return "invalid input\n  " + "\n  ".join(lines)


def handle_errors(func: Callable) -> Callable:
    """Map parse failures to exit status 2 and computational failures to exit status 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except json.JSONDecodeError as e:
            raise click.UsageError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}")
        except ValidationError as e:
            raise click.UsageError(_validation_message(e))
        except (InputValidationError, ConfigurationError) as e:
            raise click.UsageError(str(e))
        except TeleportNoiseError as e:
            log.error(f"{type(e).__name__}: {e}")
            raise click.ClickException(f"{type(e).__name__}: {e}")

    return wrapper


def common_options(func: Callable) -> Callable:
    options = [
        click.option("--input", "input_", help="JSON file path or inline JSON object"),
        click.option("--output", default=None, help="Output path (default: stdout)"),
        click.option("--seed", type=int, default=None, help="Random seed for sampling"),
        click.option(
            "--tol",
            multiple=True,
            help="Tolerance override NAME=VALUE (equality, completeness, imaginary, purity)",
        ),
        click.option("--log-level", default=None, help="Log level (default from settings)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_run_config(
    subcommand: str,
    input_: Optional[str],
    output: Optional[str],
    seed: Optional[int],
    tol: Tuple[str, ...],
    log_level: Optional[str],
    input_required: bool = True,
) -> RunConfig:
    setup_logger(log_level or settings.log_level, settings.log_file)
    if input_required and input_ is None:
        raise InputValidationError(f"{subcommand} needs --input")
    return RunConfig(
        subcommand=subcommand,
        input=input_,
        output=output,
        seed=settings.default_seed if seed is None else seed,
        tolerances=parse_tolerances(tol),
    )


def _summary(title: str, rows: Dict[str, Any], run: RunConfig) -> None:
    if run.output is None or run.output == "-":
        return
    table = Table(title=title)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in rows.items():
        table.add_row(key, str(value))
    table.add_row("output", run.output)
    console.print(table)


# ============================================================
# COMMANDS
# ============================================================

@click.group()
@click.version_option(__version__, prog_name="teleport-noise")
def cli():
    """Coherent noise under teleportation: chains, bounds, foliated codes."""


@cli.command()
@common_options
@click.option("--samples", type=int, default=None, help="Monte Carlo samples (overrides input)")
@click.option("--workers", type=int, default=None, help="Monte Carlo worker lanes")
@handle_errors
def chain(input_, output, seed, tol, log_level, samples, workers):
    """Per-step infidelities of a teleportation chain (CSV)."""
    run = build_run_config("chain", input_, output, seed, tol, log_level)
    config = ChainConfig.model_validate(load_payload(run.input))
    spec = config.to_chain_spec(run.settings_overrides())
    samples = config.samples if samples is None else samples
    table = chain_table(spec, samples=samples, seed=run.seed, workers=workers)
    write_text(dataframe_to_csv(table), run.output)
    _summary(
        "Teleportation chain",
        {"T": spec.T, "r_exact(T)": f"{table['r_exact'].iloc[-1]:.6g}", "samples": samples},
        run,
    )


@cli.command()
@common_options
@handle_errors
def bounds(input_, output, seed, tol, log_level):
    """Exact infidelity with second- and third-order bands (CSV)."""
    run = build_run_config("bounds", input_, output, seed, tol, log_level)
    config = ChainConfig.model_validate(load_payload(run.input))
    spec = config.to_chain_spec(run.settings_overrides())
    report = epsilon_of(spec)
    log.info(f"epsilon = {report.epsilon:.6g} at {report.worst_location}")
    table = bounds_table(spec, config.rotation_schedule())
    write_text(dataframe_to_csv(table), run.output)
    _summary("Error-growth bounds", {"T": spec.T, "epsilon": f"{report.epsilon:.6g}"}, run)


@cli.command()
@common_options
@click.option("--csv-output", default=None, help="Flat CSV (gamma, t, w, axis, p)")
@handle_errors
def foliate(input_, output, seed, tol, log_level, csv_output):
    """Pauli replacement of a pure Z-coherent foliation noise model (JSON)."""
    run = build_run_config("foliate", input_, output, seed, tol, log_level)
    config = FoliationConfig.model_validate(load_payload(run.input))
    model = _build_model(config)
    replacement = convert_noise_model(model, run.settings_overrides().get("purity_tol"))
    above_half = [
        {"gamma": loc.gamma, "t": loc.t, "w": loc.w} for loc in replacement.above_half()
    ]
    if above_half:
        log.warning(f"{len(above_half)} locations have a replacement probability above 1/2")
    payload = {
        "locations": replacement.to_rows(),
        "operation_count": replacement.operation_count,
        "above_half": above_half,
    }
    write_text(dumps_json(payload), run.output)
    if csv_output is not None:
        write_text(dataframe_to_csv(replacement.to_frame()), csv_output)
    _summary(
        "Foliation conversion",
        {
            "locations": len(replacement.probs),
            "operations": replacement.operation_count,
            "above 1/2": len(above_half),
        },
        run,
    )


@cli.command()
@common_options
@click.option("--include-raw", is_flag=True, help="Also compare per raw syndrome")
@handle_errors
def verify(input_, output, seed, tol, log_level, include_raw):
    """Dense-simulation check that the Pauli replacement gives the same logical channels."""
    run = build_run_config("verify", input_, output, seed, tol, log_level)
    config = FoliationConfig.model_validate(load_payload(run.input))
    model = _build_model(config)
    report = verify_pauli_replacement(
        model.code,
        model.L,
        model,
        include_raw=include_raw,
        purity_tol=run.settings_overrides().get("purity_tol"),
    )
    write_text(dumps_json(report.to_dict()), run.output)
    _summary(
        "Replacement verification",
        {"groups": len(report.groups), "max_deviation": f"{report.max_deviation:.3g}"},
        run,
    )


@cli.command()
@common_options
@click.option("--B", "B", type=int, default=None, help="Max decoding-graph neighbour count")
@click.option("--p-th", "p_th", type=float, default=None, help="Numeric Pauli threshold")
@click.option("--n-locations", type=int, default=None, help="Spacetime locations per qubit")
@handle_errors
def threshold(input_, output, seed, tol, log_level, B, p_th, n_locations):
    """Threshold bound and threshold angle (JSON)."""
    run = build_run_config("threshold", input_, output, seed, tol, log_level, False)
    payload = load_payload(run.input) if run.input is not None else {}
    overrides = {"B": B, "p_th_numeric": p_th, "n_locations": n_locations}
    payload.update({key: value for key, value in overrides.items() if value is not None})
    if "B" not in payload:
        raise InputValidationError("threshold needs --B (or B in the input)")
    inputs = ThresholdInputs.model_validate(payload)
    write_text(dumps_json(threshold_report(inputs)), run.output)


def _build_model(config: FoliationConfig):
    """Code and noise model from a validated config; content errors count as input errors."""
    try:
        code = config.code.to_code()
    except TeleportNoiseError as e:
        raise InputValidationError(f"code: {e}") from e
    try:
        return config.noise.to_model(code, config.L)
    except TeleportNoiseError as e:
        raise InputValidationError(f"noise: {e}") from e


if __name__ == "__main__":
    cli()
