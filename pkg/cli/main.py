"""
Command Line Interface for the Freshness Toolkit.

Subcommands analyze, pmf, simulate, sweep and plan read a JSON scenario (or
planning flags), run the library and print a table, a JSON envelope or CSV.
Exit codes: 0 success, 2 invalid input, 3 internal inconsistency,
4 insufficient simulation samples.
"""

import functools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError

# Add project root to Python path for imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from cli.scenario import ScenarioFile, SlaBlock, load_scenario  # noqa: E402
from src.analytic import (  # noqa: E402
    avg_aoi_closed_form,
    avg_penalty,
    decompose,
    mean_cycle,
    peak_violation,
    pmf_values,
    tail_probability,
)
from src.model import SystemParams  # noqa: E402
from src.oracle import pmf_dp, statistic_trunc  # noqa: E402
from src.plan import (  # noqa: E402
    ChannelSpec,
    SweepResult,
    capacity,
    linear_grid,
    log_grid,
    sweep_capacity,
    sweep_gamma_ratio,
    sweep_load,
    sweep_peak_ccdf,
)
from src.sim import SimMode, compare_with_analytic, peak_violation_name, run_replications  # noqa: E402
from src.utils.config_loader import config_loader  # noqa: E402
from src.utils.errors import FreshnessToolkitError, InsufficientHorizonError  # noqa: E402
from src.utils.formatters import OutputFormat, formatter  # noqa: E402

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVEL_ENV = "FRESHNESS_LOG_LEVEL"
LOG_FILE_ENV = "FRESHNESS_LOG_FILE"
ORACLE_TAIL_TOLERANCE = 1e-30
DEFAULT_GAMMA_GRID = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)

logger = logging.getLogger(__name__)


def configure_logging(log_level: Optional[str]) -> None:
    """Flag, then FRESHNESS_LOG_LEVEL, then the configured level; always to stderr."""
    level_name = log_level or os.getenv(LOG_LEVEL_ENV) or config_loader.get_configuration_value(
        "logging.level", "WARNING"
    )
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv(LOG_FILE_ENV)
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, str(level_name).upper(), logging.WARNING),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def output_options(command: Callable) -> Callable:
    """Attach --format with its --json/--csv shortcuts."""
    command = click.option("--csv", "as_csv", is_flag=True, help="Shortcut for --format csv")(command)
    command = click.option("--json", "as_json", is_flag=True, help="Shortcut for --format json")(command)
    command = click.option(
        "--format",
        "output_format",
        type=click.Choice([f.value for f in OutputFormat]),
        default=OutputFormat.TABLE.value,
        show_default=True,
        help="Output format",
    )(command)
    return command


def _resolve_format(output_format: str, as_json: bool, as_csv: bool) -> OutputFormat:
    if as_json and as_csv:
        raise click.UsageError("--json and --csv are mutually exclusive")
    if as_json:
        return OutputFormat.JSON
    if as_csv:
        return OutputFormat.CSV
    return OutputFormat(output_format)


def handle_errors(command: Callable) -> Callable:
    """Convert toolkit and validation errors to messages and exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        fmt = _resolve_format(
            kwargs.get("output_format", OutputFormat.TABLE.value),
            kwargs.get("as_json", False),
            kwargs.get("as_csv", False),
        )
        try:
            return command(*args, fmt=fmt, **kwargs)
        except FreshnessToolkitError as e:
            exit_code = e.exit_code
            error: Exception = e
        except ValueError as e:
            # pydantic.ValidationError is a ValueError
            exit_code = 2
            error = e
        logger.debug("Command failed", exc_info=error)
        if fmt is OutputFormat.JSON:
            click.echo(formatter.format_to_json(formatter.create_error_response(error, exit_code)))
        else:
            click.echo(f"Error: {error}", err=True)
        sys.exit(exit_code)

    return wrapper


def emit(
    fmt: OutputFormat,
    data: Any,
    rows: Sequence[Dict[str, Any]],
    metadata: Dict[str, Any],
    title: str,
    message: Optional[str] = None,
    headers: Optional[List[str]] = None,
) -> None:
    """Print a result as a JSON envelope, CSV with metadata headers, or a rich table."""
    if fmt is OutputFormat.JSON:
        click.echo(formatter.format_to_json(formatter.create_success_response(data, message, metadata)))
    elif fmt is OutputFormat.CSV:
        click.echo(formatter.format_rows_as_csv(rows, headers, metadata), nl=False)
    else:
        click.echo(formatter.render(formatter.format_data_as_table(rows, headers, title=title)), nl=False)


def emit_record(fmt: OutputFormat, record: Dict[str, Any], metadata: Dict[str, Any], title: str) -> None:
    """Print a flat record: quantity/value rows in CSV and on the console, the mapping itself in JSON."""
    if fmt is OutputFormat.TABLE:
        click.echo(formatter.render(formatter.format_record_as_table(record, title=title)), nl=False)
        return
    rows = [{"quantity": key, "value": value} for key, value in record.items()]
    emit(fmt, record, rows, metadata, title=title)


def _scenario_metadata(path: str, scenario: ScenarioFile) -> Dict[str, Any]:
    return {"scenario_path": str(path), "scenario": scenario.model_dump(mode="json", exclude_none=True)}


@click.group()
@click.option("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ERROR)")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Alternative defaults file",
)
def cli(log_level: Optional[str], config_path: Optional[str]) -> None:
    """Freshness statistics for slotted ALOHA over Gilbert-Elliot channels."""
    if config_path:
        config_loader.use_file(config_path)
    configure_logging(log_level)


scenario_option = click.option(
    "--scenario",
    "scenario_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Scenario JSON file",
)


def _oracle_report(params: SystemParams, decomp, orders: List[int], theta: Optional[float]) -> Dict[str, Any]:
    table = pmf_dp(params, tail_tol=ORACLE_TAIL_TOLERANCE)
    ys = np.arange(1, table.horizon + 1)
    deviation = float(np.max(np.abs(pmf_values(decomp, ys) - table.first_passage[1:])))
    report: Dict[str, Any] = {"oracle_horizon": table.horizon, "oracle_pmf_max_deviation": deviation}
    unresolved: List[str] = []

    def checked(name: str, weight: Callable, degree: int) -> Optional[float]:
        try:
            return statistic_trunc(table, weight, growth_degree=degree)
        except InsufficientHorizonError as e:
            logger.warning(f"Oracle cannot resolve {name}: {e}")
            unresolved.append(name)
            return None

    deviations = [deviation]
    oracle_mean = checked("mean_cycle", lambda y: y.astype(float), 1)
    if oracle_mean is not None:
        report["oracle_mean_cycle"] = oracle_mean
        deviations.append(abs(oracle_mean - mean_cycle(decomp)) / max(1.0, abs(oracle_mean)))
    for m in orders:
        name = f"avg_penalty[m={m}]"
        moment = checked(name, lambda y, p=m + 1: y.astype(float) ** p, m + 1)
        if moment is None or oracle_mean is None:
            continue
        value = moment / ((m + 1) * oracle_mean)
        report[f"oracle_{name}"] = value
        deviations.append(abs(value - avg_penalty(decomp, m)) / max(1.0, abs(value)))
        if theta is not None:
            name = peak_violation_name(m, theta)
            exceed = checked(name, lambda y, m=m: (y.astype(float) ** m > theta).astype(float), 0)
            if exceed is not None:
                report[f"oracle_{name}"] = exceed
                deviations.append(abs(exceed - peak_violation(decomp, m, theta)))
    report["oracle_max_deviation"] = max(deviations)
    if unresolved:
        report["oracle_unresolved"] = ", ".join(unresolved)
    return report


@cli.command()
@scenario_option
@click.option("--oracle", is_flag=True, help="Cross-check against the dynamic-programming oracle")
@output_options
@handle_errors
def analyze(
    scenario_path: str,
    oracle: bool,
    fmt: OutputFormat,
    output_format: str,
    as_json: bool,
    as_csv: bool,
) -> None:
    """Closed-form statistics of a scenario."""
    scenario = load_scenario(scenario_path)
    params = scenario.params()
    decomp = decompose(params)

    report: Dict[str, Any] = {
        **params.record(),
        "branch": decomp.branch,
        "degenerate": decomp.degenerate,
        "mean_cycle": mean_cycle(decomp),
    }
    for m in scenario.orders:
        report[f"avg_penalty[m={m}]"] = avg_penalty(decomp, m)
    report["avg_aoi_closed_form"] = avg_aoi_closed_form(params)
    if scenario.theta is not None:
        for m in scenario.orders:
            report[peak_violation_name(m, scenario.theta)] = peak_violation(decomp, m, scenario.theta)
    if oracle:
        report.update(_oracle_report(params, decomp, scenario.orders, scenario.theta))

    emit_record(fmt, report, _scenario_metadata(scenario_path, scenario), title="Analysis")


@cli.command()
@scenario_option
@click.option("--ymax", type=click.IntRange(min=0), default=20, show_default=True, help="Largest cycle length")
@output_options
@handle_errors
def pmf(
    scenario_path: str,
    ymax: int,
    fmt: OutputFormat,
    output_format: str,
    as_json: bool,
    as_csv: bool,
) -> None:
    """Probability mass function and CCDF of the inter-update time."""
    scenario = load_scenario(scenario_path)
    decomp = decompose(scenario.params())
    ys = np.arange(ymax + 1)
    masses = pmf_values(decomp, ys)
    rows = [
        {"y": int(y), "pmf": float(mass), "ccdf": tail_probability(decomp, int(y))}
        for y, mass in zip(ys, masses)
    ]
    metadata = {**_scenario_metadata(scenario_path, scenario), "ymax": ymax}
    emit(fmt, rows, rows, metadata, title="Inter-update time", headers=["y", "pmf", "ccdf"])


@cli.command()
@scenario_option
@click.option("--mode", type=click.Choice([m.value for m in SimMode]), default=None, help="Simulated system")
@click.option("--slots", type=click.IntRange(min=1), default=None, help="Slot budget (full mode)")
@click.option("--cycles", type=click.IntRange(min=1), default=None, help="Cycle budget (decoupled mode)")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None, help="Base seed")
@click.option("--warmup", type=click.IntRange(min=0), default=None, help="Warmup slots (full mode)")
@click.option("--pmf-to", "track_pmf_to", type=click.IntRange(min=0), default=None, help="Track P{Y=y} up to y")
@click.option("--replications", type=click.IntRange(min=1), default=None, help="Independent replications")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes")
@output_options
@handle_errors
def simulate(
    scenario_path: str,
    mode: Optional[str],
    slots: Optional[int],
    cycles: Optional[int],
    seed: Optional[int],
    warmup: Optional[int],
    track_pmf_to: Optional[int],
    replications: Optional[int],
    workers: int,
    fmt: OutputFormat,
    output_format: str,
    as_json: bool,
    as_csv: bool,
) -> None:
    """Monte Carlo estimates next to the closed forms."""
    scenario = load_scenario(scenario_path)
    params = scenario.params()
    block = scenario.simulation_block(
        mode=mode,
        slots=slots,
        cycles=cycles,
        seed=seed,
        warmup=warmup,
        track_pmf_to=track_pmf_to,
        replications=replications,
    )
    default_seed = int(config_loader.get_configuration_value("simulation.default_seed", 1))
    config = scenario.sim_config(default_seed, block)

    bundle = run_replications(params, config, replications=block.replications, workers=workers)
    rows = [row.model_dump() for row in compare_with_analytic(bundle)]
    summary = {
        "mode": config.mode.value,
        "seed": config.seed,
        "replications": len(bundle.replications),
        "cycles": bundle.cycles,
        "elapsed_slots": bundle.elapsed_slots,
        "warmup_slots": bundle.warmup_slots,
    }
    metadata = {**_scenario_metadata(scenario_path, scenario), **summary}
    emit(
        fmt,
        {"comparison": rows, "bundle": summary},
        rows,
        metadata,
        title=f"Simulation ({config.mode.value}, {bundle.cycles} cycles)",
        headers=["statistic", "simulated", "std_error", "analytic", "z_score"],
    )


def _sweep_summary(result: SweepResult) -> List[Dict[str, Any]]:
    rows = []
    for name, values in result.series.items():
        if not values:
            continue
        rows.append({"series": name, "min": float(np.min(values)), "argmin": result.argmin(name)})
    return rows


@cli.command()
@click.argument("kind", type=click.Choice(["load", "gamma-ratio", "peak-ccdf", "capacity"]))
@scenario_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Output file")
@click.option("--load-start", type=float, default=None, help="First load of the grid")
@click.option("--load-stop", type=float, default=None, help="Last load of the grid")
@click.option("--load-step", type=float, default=None, help="Load grid spacing")
@click.option("--pi-g", type=float, default=None, help="Good-state probability held fixed")
@click.option("--load", "fixed_load", type=float, default=None, help="Channel load held fixed")
@click.option("--gamma", "gammas", type=float, multiple=True, help="Gamma values (repeatable)")
@click.option("--m", "m_list", type=int, multiple=True, help="Penalty orders (repeatable)")
@click.option("--theta-start", type=float, default=None, help="First threshold decade")
@click.option("--theta-stop", type=float, default=None, help="Last threshold decade")
@click.option("--points-per-decade", type=click.IntRange(min=1), default=None, help="Threshold grid density")
@output_options
@handle_errors
def sweep(
    kind: str,
    scenario_path: str,
    out_path: str,
    load_start: Optional[float],
    load_stop: Optional[float],
    load_step: Optional[float],
    pi_g: Optional[float],
    fixed_load: Optional[float],
    gammas: Sequence[float],
    m_list: Sequence[int],
    theta_start: Optional[float],
    theta_stop: Optional[float],
    points_per_decade: Optional[int],
    fmt: OutputFormat,
    output_format: str,
    as_json: bool,
    as_csv: bool,
) -> None:
    """Parameter sweep written to a CSV or JSON file."""
    scenario = load_scenario(scenario_path)
    block = scenario.sweep
    settings: Dict[str, Any] = block.model_dump() if block else {}

    def pick(flag: Any, key: str, default: Any) -> Any:
        if flag not in (None, ()):
            return flag
        return settings.get(key) if settings.get(key) is not None else default

    params = scenario.params()
    orders = list(pick(tuple(m_list), "m_list", scenario.orders))

    def theta_grid() -> List[float]:
        return log_grid(
            pick(theta_start, "theta_start_decade", 0.0),
            pick(theta_stop, "theta_stop_decade", 4.0),
            pick(points_per_decade, "theta_points_per_decade", None),
        )

    if kind == "load":
        bounds = [pick(load_start, "load_start", None), pick(load_stop, "load_stop", None)]
        step = pick(load_step, "load_step", None)
        grid = None
        if any(value is not None for value in (*bounds, step)):
            configured = config_loader.get_configuration_value("plan.load_grid", {}) or {}
            grid = linear_grid(
                bounds[0] if bounds[0] is not None else float(configured.get("start", 0.05)),
                bounds[1] if bounds[1] is not None else float(configured.get("stop", 3.0)),
                step if step is not None else float(configured.get("step", 0.01)),
            )
        channel = ChannelSpec(beta=scenario.beta, gamma=scenario.gamma)
        result = sweep_load(scenario.n, channel, orders[0], grid)
    elif kind == "gamma-ratio":
        result = sweep_gamma_ratio(
            scenario.n,
            pick(pi_g, "pi_g", params.pi_g),
            pick(fixed_load, "load", params.load),
            list(pick(tuple(gammas), "gammas", DEFAULT_GAMMA_GRID)),
            orders,
        )
    elif kind == "peak-ccdf":
        result = sweep_peak_ccdf(
            scenario.n,
            pick(pi_g, "pi_g", params.pi_g),
            pick(fixed_load, "load", params.load),
            list(pick(tuple(gammas), "gammas", (scenario.gamma,))),
            orders[0],
            theta_grid(),
        )
    else:
        if scenario.sla is None:
            raise click.UsageError("A capacity sweep needs an 'sla' block in the scenario")
        result = sweep_capacity(scenario.sla.to_sla(), scenario.beta, scenario.gamma, theta_grid())

    file_format = OutputFormat.JSON if fmt is OutputFormat.JSON else OutputFormat.CSV
    written = formatter.write_sweep(result, out_path, file_format)
    summary = _sweep_summary(result)
    metadata = {"kind": kind, "out": str(written), "points": len(result.x_values)}
    if fmt is OutputFormat.TABLE:
        click.echo(f"Wrote {written}")
    emit(fmt, {"out": str(written), "summary": summary}, summary, metadata, title=f"{kind} sweep")


@cli.command()
@click.option("--slot-ms", type=float, required=True, help="Slot duration in milliseconds")
@click.option("--period-s", type=float, required=True, help="Mean update period in seconds")
@click.option("--theta", "thetas", type=float, multiple=True, required=True, help="Staleness bound in seconds")
@click.option("--epsilon", type=float, required=True, help="Allowed violation probability")
@click.option("--m", type=int, default=1, show_default=True, help="Penalty order")
@click.option("--beta", type=float, default=None, help="Good-to-bad transition probability")
@click.option("--gamma", type=float, default=1.0, show_default=True, help="Bad-to-good transition probability")
@click.option("--pi-g", type=float, default=None, help="Good-state probability (sets beta from gamma)")
@output_options
@handle_errors
def plan(
    slot_ms: float,
    period_s: float,
    thetas: Sequence[float],
    epsilon: float,
    m: int,
    beta: Optional[float],
    gamma: float,
    pi_g: Optional[float],
    fmt: OutputFormat,
    output_format: str,
    as_json: bool,
    as_csv: bool,
) -> None:
    """Largest population meeting a peak-staleness agreement."""
    if beta is not None and pi_g is not None:
        raise click.UsageError("--beta and --pi-g are mutually exclusive")
    channel = ChannelSpec.from_pi_g(pi_g, gamma) if pi_g is not None else ChannelSpec(beta=beta or 0.0, gamma=gamma)

    rows = []
    conversions = {}
    for theta in thetas:
        sla = SlaBlock(slot_ms=slot_ms, period_s=period_s, theta_s=theta, epsilon=epsilon, m=m).to_sla()
        outcome = capacity(sla, channel.beta, channel.gamma)
        conversions[f"theta={theta:g}"] = outcome.conversion
        rows.append(
            {
                "theta_s": theta,
                "theta_slots": outcome.theta_slots,
                "n_star": outcome.n_star,
                "feasible": outcome.feasible,
                "violation_at_n_star": outcome.violation_at_n_star,
                "violation_above": outcome.violation_above,
                "cap_reached": outcome.cap_reached,
            }
        )

    metadata = {
        "slot_ms": slot_ms,
        "period_s": period_s,
        "epsilon": epsilon,
        "m": m,
        "beta": channel.beta,
        "gamma": channel.gamma,
        "alpha": slot_ms / 1000.0 / period_s,
        "conversion": conversions,
    }
    if fmt is OutputFormat.TABLE:
        for theta, trail in conversions.items():
            click.echo(f"{theta}: " + "; ".join(trail))
    emit(fmt, rows, rows, metadata, title="Capacity")


if __name__ == "__main__":
    cli()
