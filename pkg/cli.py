"""
Command-line interface for the coordination runtime
Scenario runs, gain curves, traffic overhead, message validation and activation histograms
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click

from config import Config, MessageKinds, Modes
from contracts.codec import parse, serialize
from contracts.validation import validate as validate_message
from errors import ContractViolation, DomainError, InvalidInputError, MessageParseError
from sim.experiments import (
    ACTIVATION_COLUMNS,
    GAIN_COLUMNS,
    OVERHEAD_COLUMNS,
    activation_experiment,
    gain_experiment,
    overhead_experiment,
)
from sim.report import write_csv
from sim.scenario import load_scenario, run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_INPUT = 2
EXIT_CONTRACT = 3

MODE_CHOICES = ["ctha", "unconstrained", "single-scale"]


def _emit(text: str, out: Optional[str]) -> None:
    """Write to a file when --out is given, else to standard output"""
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
        logger.info(f"Wrote {out}")
    else:
        click.echo(text, nl=False)


def _lines(records) -> str:
    return "".join(serialize(r).decode() + "\n" for r in records)


@click.group()
def cli():
    """Constrained temporal hierarchy: runtime and experiment harness"""


@cli.command()
@click.argument("scenario")
@click.option("--mode", type=click.Choice(MODE_CHOICES), default="ctha", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report file (default: stdout)")
@click.option("--seed", type=int, default=None, help="Override the scenario seed (scenarios default to 42)")
@click.option("--csv", "as_csv", is_flag=True, help="Per-step table instead of line-delimited traces")
def run(scenario: str, mode: str, out: Optional[str], seed: Optional[int], as_csv: bool):
    """Run a scenario file and write its report"""
    script = load_scenario(scenario)
    if seed is not None:
        script = script.model_copy(update={"seed": seed})
    report = run_scenario(script, mode)
    if not report.is_consistent():
        raise ContractViolation("Report aggregates do not match its traces")
    _emit(report.to_csv() if as_csv else report.to_jsonl().decode(), out)


@cli.command()
@click.option("--depth", type=click.IntRange(min=1), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=lambda: Config.DEFAULT_SEED, show_default="42")
@click.option("--n", "n", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--low", type=float, default=0.0, show_default=True)
@click.option("--high", type=float, default=1.5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "as_csv", is_flag=True)
def gain(depth: int, trials: int, seed: int, n: int, low: float, high: float, out: Optional[str], as_csv: bool):
    """Composite gain per depth, unconstrained against projected chains"""
    curve = gain_experiment(depth, trials, seed, n=n, low=low, high=high)
    if as_csv:
        _emit(write_csv(curve.rows(), GAIN_COLUMNS), out)
    else:
        _emit(_lines([curve.model_dump()]), out)


@cli.command()
@click.option("--n-max", type=click.IntRange(min=1), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "as_csv", is_flag=True)
def overhead(n_max: int, out: Optional[str], as_csv: bool):
    """Messages and comparisons of one all-active step for n = 1..N"""
    rows = overhead_experiment(range(1, n_max + 1))
    records = [r.model_dump(include=set(OVERHEAD_COLUMNS)) for r in rows]
    _emit(write_csv(records, OVERHEAD_COLUMNS) if as_csv else _lines(records), out)
    mismatched = [r for r in rows if not r.matches]
    if mismatched:
        raise ContractViolation(f"Traffic differs from the closed forms for {len(mismatched)} rows")


@cli.command()
@click.argument("message_file")
@click.option("--kind", type=click.Choice(list(MessageKinds.ALL)), required=True)
def validate(message_file: str, kind: str):
    """Check a message file against its contract"""
    try:
        data = Path(message_file).read_bytes()
    except OSError as e:
        raise InvalidInputError(f"Cannot read {message_file}: {e}") from e
    outcome = validate_message(parse(data, kind), kind)
    click.echo(outcome.status)
    if outcome.status != "valid":
        for problem in outcome.diagnostics:
            click.echo(f"  {problem}", err=True)
        click.echo(serialize(outcome.message).decode())
        raise InvalidInputError(f"{message_file} is not a valid {kind} message")


@cli.command()
@click.argument("scenario")
@click.option("--horizon", type=click.IntRange(min=1), default=None, help="Override the scenario horizon")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "as_csv", is_flag=True)
def activation(scenario: str, horizon: Optional[int], out: Optional[str], as_csv: bool):
    """Histogram of active layers per step"""
    histogram = activation_experiment(load_scenario(scenario), horizon)
    rows = [{"active_layers": k, "steps": v} for k, v in histogram.items()]
    _emit(write_csv(rows, ACTIVATION_COLUMNS) if as_csv else _lines(rows), out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes"""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="ctha", standalone_mode=False)
    except (click.UsageError, DomainError) as e:
        message = e.format_message() if isinstance(e, click.UsageError) else str(e)
        click.echo(f"Error: {message}", err=True)
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except (InvalidInputError, MessageParseError) as e:
        click.echo(f"Invalid input: {e}", err=True)
        return EXIT_INVALID_INPUT
    except ContractViolation as e:
        click.echo(f"Contract violation: {e}", err=True)
        return EXIT_CONTRACT
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
