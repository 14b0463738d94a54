"""
Command-line entry point: ``kv-lab <command> [options]``.

Commands write their artifacts under ``--output-dir`` with fixed file names and
exit with 0 on success, 1 on usage errors, 2 on computation failures and 3 when
``verify`` finds a failing criterion.
"""

import argparse
import os
import sys
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from src import __version__
from src.core.analysis import (
    build_comparison_table,
    hardy_sweep,
    render_comparison_text,
    write_comparison_csv,
    write_hardy_csv,
)
from src.core.discretization import Mesh, SystemMatrices, assemble, build_mesh, dump_matrices
from src.core.evolution import (
    default_fit_window,
    fit_decay_exponent,
    make_initial_data,
    simulate,
    write_trace_csv,
)
from src.core.model import make_profile, predict_rates
from src.core.resolvent import envelope_scan, fit_report, fit_theta, scan, write_scan_csv
from src.core.spectral import (
    SpectrumResult,
    compute_spectrum,
    trace_branches,
    write_branches_csv,
    write_spectrum_csv,
)
from src.core.verification import run_acceptance, summarize
from src.middleware.artifact_formatter import format_report, serialize_json, write_json, write_text
from src.middleware.config_validator import build_config
from src.middleware.error_handler import EXIT_OK, AcceptanceFailure, ErrorHandler, UsageError
from src.models.config import FitSampling, InitialDataKind, RunConfig, Spacing, SpectrumMode
from src.utils.logger import clear_run_id, get_lab_logger, set_run_id, setup_logging

logger = get_lab_logger(__name__)

# flag dest -> RunConfig field
FIELD_FLAGS: Dict[str, str] = {
    "output_dir": "output_dir",
    "threads": "threads",
    "seed": "seed",
    "alpha": "alpha",
    "n": "n_elements",
    "grading": "grading",
    "dt": "dt",
    "t_final": "t_final",
    "omega_min": "omega_min",
    "omega_max": "omega_max",
    "points": "omega_points",
    "spacing": "spacing",
    "fit_sampling": "fit_sampling",
    "cap_divisor": "cap_divisor",
    "sample_every": "sample_every",
    "kind": "initial_data",
    "t_lo": "t_lo",
    "t_hi": "t_hi",
    "omega_lo": "omega_lo",
    "omega_hi": "omega_hi",
    "mode": "spectrum_mode",
    "k_max": "k_max",
    "alphas": "alphas",
    "betas": "betas",
    "hardy_alphas": "hardy_alphas",
    "n_random": "n_random",
}


@dataclass(frozen=True)
class Command:
    """A parsed subcommand with its validated configuration."""

    name: str
    config: RunConfig
    config_path: Optional[str] = None
    log_level: Optional[str] = None
    branches: bool = False
    dump_matrices: bool = False
    quick: bool = False


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports errors as UsageError instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def parse_float_list(text: str) -> List[float]:
    """Comma-separated reals, e.g. ``0,0.25,0.5``."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number list: {text!r}")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", help="JSON file with RunConfig fields")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", dest="log_level",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)

    run = common.add_argument_group("run parameters")
    run.add_argument("--alpha", type=float)
    run.add_argument("--n", type=int, help="number of elements (even)")
    run.add_argument("--grading", type=float)
    run.add_argument("--dt", type=float)
    run.add_argument("--t-final", dest="t_final", type=float)
    run.add_argument("--omega-min", dest="omega_min", type=float)
    run.add_argument("--omega-max", dest="omega_max", type=float)
    run.add_argument("--points", type=int)
    run.add_argument("--spacing", choices=[s.value for s in Spacing])
    run.add_argument("--fit-sampling", dest="fit_sampling", choices=[f.value for f in FitSampling])
    run.add_argument("--cap-divisor", dest="cap_divisor", type=float)
    run.add_argument("--sample-every", dest="sample_every", type=int)
    run.add_argument("--kind", choices=[k.value for k in InitialDataKind])
    run.add_argument("--t-lo", dest="t_lo", type=float)
    run.add_argument("--t-hi", dest="t_hi", type=float)
    run.add_argument("--omega-lo", dest="omega_lo", type=float)
    run.add_argument("--omega-hi", dest="omega_hi", type=float)
    run.add_argument("--mode", choices=[m.value for m in SpectrumMode])
    run.add_argument("--k-max", dest="k_max", type=int)
    run.add_argument("--alphas", type=parse_float_list)
    run.add_argument("--betas", type=parse_float_list)
    run.add_argument("--hardy-alphas", dest="hardy_alphas", type=parse_float_list)
    run.add_argument("--n-random", dest="n_random", type=int)
    return common


def build_parser() -> LabArgumentParser:
    parser = LabArgumentParser(
        prog="kv-lab",
        description="Numerical laboratory for the string with degenerate Kelvin-Voigt damping",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command",
                                       parser_class=LabArgumentParser)
    subparsers.required = True
    common = _common_options()

    subparsers.add_parser("simulate", parents=[common], help="time-step and fit the energy decay")
    spectrum = subparsers.add_parser("spectrum", parents=[common], help="pencil eigenvalues")
    spectrum.add_argument("--branches", action="store_true", help="also trace branches over --alphas")
    spectrum.add_argument("--dump-matrices", dest="dump_matrices", action="store_true")
    subparsers.add_parser("resolvent", parents=[common], help="scan sigma_min and fit theta")
    subparsers.add_parser("hardy", parents=[common], help="weighted Hardy inequality sweep")
    subparsers.add_parser("table", parents=[common], help="rate comparison table")
    verify = subparsers.add_parser("verify", parents=[common], help="acceptance suite")
    verify.add_argument("--quick", action="store_true", help="small-mesh and oracle checks only")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Command:
    """
    Parse a command line into a Command.

    Raises:
        UsageError: Unknown flag, malformed value or missing required field
        InvalidConfigError: Values violating the RunConfig invariants
    """
    namespace = build_parser().parse_args(argv)
    options = vars(namespace)
    overrides = {field: options.get(flag) for flag, field in FIELD_FLAGS.items()}
    config = build_config(namespace.command, overrides, options.get("config_path"))
    return Command(
        name=namespace.command,
        config=config,
        config_path=options.get("config_path"),
        log_level=options.get("log_level"),
        branches=bool(options.get("branches", False)),
        dump_matrices=bool(options.get("dump_matrices", False)),
        quick=bool(options.get("quick", False)),
    )


def _assemble(config: RunConfig) -> Tuple[Mesh, SystemMatrices]:
    mesh = build_mesh(config.n_elements, config.grading)
    return mesh, assemble(mesh, make_profile(config.alpha))


def _spectrum(config: RunConfig, matrices: SystemMatrices) -> SpectrumResult:
    shifts = np.linspace(0.0, config.omega_max, 5)
    return compute_spectrum(matrices, config.spectrum_mode, shifts=shifts,
                            k_per_shift=max(2 * config.k_max, 10))


def run_simulate(command: Command, out: Path) -> int:
    config = command.config
    mesh, matrices = _assemble(config)
    initial = make_initial_data(mesh, config.initial_data, matrices)
    trace = simulate(matrices, initial, config.t_final, config.dt, config.sample_every)
    write_trace_csv(trace, out / "energy.csv")

    # the abscissa only bounds the default upper end
    abscissa = _spectrum(config, matrices).abscissa if config.t_hi is None else None
    default = default_fit_window(trace, abscissa)
    window = (
        config.t_lo if config.t_lo is not None else default[0],
        config.t_hi if config.t_hi is not None else default[1],
    )
    fit = fit_decay_exponent(trace, *window)
    prediction = predict_rates(config.alpha)
    report = {
        "alpha": config.alpha,
        "n_elements": config.n_elements,
        "slope_energy": fit.slope,
        "slope_predicted": prediction.energy_slope,
        "prior_slope": prediction.prior_energy_slope,
        "residual": fit.residual,
        "window": list(fit.window),
    }
    write_json(out / "decay.json", report)
    print(serialize_json(report), end="")
    return EXIT_OK


def run_spectrum(command: Command, out: Path) -> int:
    config = command.config
    _, matrices = _assemble(config)
    result = _spectrum(config, matrices)
    write_spectrum_csv(result, out / "spectrum.csv")
    if command.branches:
        points = trace_branches(config.alphas, config.n_elements, config.k_max,
                                grading=config.grading, threads=config.threads)
        write_branches_csv(points, out / "branches.csv")
    if command.dump_matrices:
        dump_matrices(matrices, out / "matrices")
    print(f"abscissa={result.abscissa!r} axis_gap={result.axis_gap!r} "
          f"n_eigenvalues={result.eigenvalues.shape[0]}")
    return EXIT_OK


def run_resolvent(command: Command, out: Path) -> int:
    config = command.config
    _, matrices = _assemble(config)
    result = scan(matrices, config.omega_min, config.omega_max, config.omega_points,
                  spacing=config.spacing, cap_divisor=config.cap_divisor,
                  threads=config.threads, seed=config.seed)
    write_scan_csv(result, out / "resolvent.csv")
    lo = config.omega_lo if config.omega_lo is not None else config.omega_min
    hi = config.omega_hi if config.omega_hi is not None else config.omega_max
    if config.fit_sampling is FitSampling.ENVELOPE:
        result = envelope_scan(matrices, lo, hi, cap_divisor=config.cap_divisor,
                               threads=config.threads, seed=config.seed)
        write_scan_csv(result, out / "peaks.csv")
    report = fit_report(result, fit_theta(result, lo, hi))
    write_json(out / "fit.json", report)
    print(serialize_json(report), end="")
    return EXIT_OK


def run_hardy(command: Command, out: Path) -> int:
    config = command.config
    cases = hardy_sweep(config.hardy_alphas, config.betas, config.n_random,
                        seed=config.seed, threads=config.threads)
    write_hardy_csv(cases, out / "hardy.csv")
    for case in cases:
        print(f"alpha={case.alpha!r} beta={case.beta!r} ratio={case.ratio!r} growth={case.growth!r}")
    return EXIT_OK


def run_table(command: Command, out: Path) -> int:
    rows = build_comparison_table(command.config.alphas)
    write_comparison_csv(rows, out / "table.csv")
    text = render_comparison_text(rows)
    write_text(out / "table.txt", text)
    print(text, end="")
    return EXIT_OK


def run_verify(command: Command, out: Path) -> int:
    config = command.config
    results = run_acceptance(quick=command.quick, threads=config.threads, seed=config.seed)
    for result in results:
        print(format_report(result.name, result.passed, result.detail))
    write_json(out / "verify.json", summarize(results, command.quick))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise AcceptanceFailure(failed)
    return EXIT_OK


HANDLERS: Dict[str, Callable[[Command, Path], int]] = {
    "simulate": run_simulate,
    "spectrum": run_spectrum,
    "resolvent": run_resolvent,
    "hardy": run_hardy,
    "table": run_table,
    "verify": run_verify,
}


def run(command: Command) -> int:
    """Execute a parsed command and return its exit status."""
    out = Path(command.config.output_dir)
    start = time.perf_counter()
    logger.log_run_start(command.name, command.config.model_dump(mode="json"))
    status = HANDLERS[command.name](command, out)
    logger.log_run_complete(command.name, time.perf_counter() - start)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console-script entry point."""
    load_dotenv()
    setup_logging()
    handler = ErrorHandler(debug=os.getenv("KV_LAB_DEBUG", "false").lower() == "true")
    set_run_id(str(uuid.uuid4()))
    context: Dict[str, Any] = {}
    try:
        command = parse_args(argv)
        if command.log_level:
            setup_logging(command.log_level)
        context = {"command": command.name}
        return run(command)
    except Exception as e:
        status, payload = handler.handle_error(e, context)
        print(payload["error"]["message"], file=sys.stderr)
        return status
    finally:
        clear_run_id()


if __name__ == "__main__":
    sys.exit(main())
