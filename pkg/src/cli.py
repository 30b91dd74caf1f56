"""
Command-line front end.

Subcommands:
    build           synthesize the optimal estimator and write it to a file
    eval            worst-case error of an estimator file
    compare-plugin  optimal error against the plug-in estimator
    verify          consistency report of an estimator (or the optimal one)
    dump-program    write the synthesis program in the conic text format

Result lines (key=value) go to stdout, diagnostics go to stderr. Exit codes:
0 ok, 1 input error, 2 infeasible, 3 numerical trouble, 4 verification failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from src import __version__
from src.conic import dump_program
from src.data_access import DataAccessService
from src.errors import InfeasibleProgramError, NumericalTroubleError, RecoveryError, VerificationFailedError
from src.export_service import ExportService
from src.recovery import compare_plugin
from src.settings import Settings
from src.synthesis import EstimatorSynthesizer
from src.verification import VerificationOracle


logger = logging.getLogger(__name__)

DEFAULT_NOISE_RADII = "0,0.1,0.5"


def _format(value: float) -> str:
    return format(float(value), ".17g")


def _radii(text: str) -> List[float]:
    try:
        radii = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"noise radii must be comma-separated numbers, got {text!r}")
    if any(radius < 0 for radius in radii):
        raise argparse.ArgumentTypeError("noise radii must be nonnegative")
    return radii


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for all subcommands."""
    parser = argparse.ArgumentParser(prog="optrec", description="Optimal recovery of sup-type functionals")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-8)")

    exports = argparse.ArgumentParser(add_help=False)
    exports.add_argument("--emit-csv", metavar="PATH", help="write the result table as CSV")
    exports.add_argument("--emit-xlsx", metavar="PATH", help="write the result table as Excel")
    exports.add_argument("--emit-html", metavar="PATH", help="write the result figure as HTML")

    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", parents=[common, exports], help="synthesize the optimal estimator")
    build.add_argument("problem")
    build.add_argument("--out", help="estimator file (default <problem>.estimator.json)")
    build.add_argument("--seed", type=int, default=0, help="seed recorded in the estimator metadata")
    build.add_argument("--noise-radii", type=_radii, default=_radii(DEFAULT_NOISE_RADII),
                       help="radii of the exported noise sweep")

    evaluate = sub.add_parser("eval", parents=[common], help="worst-case error of an estimator")
    evaluate.add_argument("problem")
    evaluate.add_argument("estimator")
    evaluate.add_argument("--force", action="store_true", help="ignore a problem hash mismatch")

    plugin = sub.add_parser("compare-plugin", parents=[common, exports], help="optimal vs plug-in error")
    plugin.add_argument("problems", nargs="+")

    verify = sub.add_parser("verify", parents=[common], help="consistency report")
    verify.add_argument("problem")
    verify.add_argument("estimator", nargs="?")
    verify.add_argument("--samples", type=int, default=10 ** 4)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--report", help="report file (default next to the estimator or problem)")
    verify.add_argument("--force", action="store_true", help="ignore a problem hash mismatch")

    dump = sub.add_parser("dump-program", parents=[common], help="write the synthesis program")
    dump.add_argument("problem")
    dump.add_argument("--out", help="output file (default stdout)")
    return parser


def _write(path: str, content: bytes) -> None:
    Path(path).write_bytes(content)
    logger.info("Wrote %s", path)


def _emit_tables(args: argparse.Namespace, frame, figure_builder, exporter: ExportService) -> None:
    if args.emit_csv:
        _write(args.emit_csv, exporter.export_to_csv(frame, args.emit_csv))
    if args.emit_xlsx:
        _write(args.emit_xlsx, exporter.export_to_excel(frame, args.emit_xlsx))
    if args.emit_html:
        _write(args.emit_html, exporter.export_figure_to_html(figure_builder(frame), args.emit_html))


def cmd_build(args: argparse.Namespace, settings: Settings, out=sys.stdout) -> int:
    service = DataAccessService(settings)
    loaded = service.load_problem(args.problem)
    synthesizer = EstimatorSynthesizer(settings)
    result = synthesizer.synthesize(loaded.problem)
    out_path = args.out or str(Path(args.problem).with_suffix(".estimator.json"))
    service.save_estimator(out_path, result.estimator, result.e_hat, loaded.problem_hash, seed=args.seed)
    print(f"e_hat={_format(result.e_hat)}", file=out)

    if args.emit_csv or args.emit_xlsx or args.emit_html:
        exporter = ExportService()
        frame = exporter.noise_sweep_frame(synthesizer.noise_sweep(loaded.problem, args.noise_radii))
        _emit_tables(args, frame, exporter.noise_sweep_figure, exporter)
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings, out=sys.stdout) -> int:
    service = DataAccessService(settings)
    loaded = service.load_problem(args.problem)
    estimator, _ = service.load_estimator(args.estimator, loaded.problem_hash, force=args.force)
    problem = loaded.problem
    value = EstimatorSynthesizer(settings).eval_error_fixed(problem.model, problem.observations,
                                                             problem.target, estimator, problem.noise)
    print(f"e_delta={_format(value)}", file=out)
    return 0


def cmd_compare_plugin(args: argparse.Namespace, settings: Settings, out=sys.stdout) -> int:
    service = DataAccessService(settings)
    rows = []
    for path in args.problems:
        loaded = service.load_problem(path)
        comparison = compare_plugin(loaded.problem, settings)
        prefix = f"problem={loaded.problem.name} " if len(args.problems) > 1 else ""
        print(f"{prefix}e_opt={_format(comparison.e_opt)} e_plug={_format(comparison.e_plug)} "
              f"gap={_format(comparison.gap)}", file=out)
        rows.append((loaded.problem.name, comparison))

    if args.emit_csv or args.emit_xlsx or args.emit_html:
        exporter = ExportService()
        _emit_tables(args, exporter.plugin_gap_frame(rows), exporter.plugin_gap_figure, exporter)
    return 0


def cmd_verify(args: argparse.Namespace, settings: Settings, out=sys.stdout) -> int:
    service = DataAccessService(settings)
    loaded = service.load_problem(args.problem)
    estimator = None
    if args.estimator:
        estimator, _ = service.load_estimator(args.estimator, loaded.problem_hash, force=args.force)
    report = VerificationOracle(settings).consistency_report(loaded.problem, estimator,
                                                             n_samples=args.samples, seed=args.seed)
    anchor = Path(args.estimator or args.problem)
    report_path = args.report or str(anchor.with_suffix(".report.json"))
    service.save_report(report_path, report, loaded.problem_hash)

    for check in report.checks:
        state = "info" if check.informational else ("pass" if check.passed else "FAIL")
        print(f"{check.name}={state} value={_format(check.value)} bound={_format(check.bound)}", file=out)
    if not report.passed:
        names = ", ".join(report.failed_checks)
        raise VerificationFailedError(f"verification failed: {names}", report.failed_checks)
    print(f"passed=true report={report_path}", file=out)
    return 0


def cmd_dump_program(args: argparse.Namespace, settings: Settings, out=sys.stdout) -> int:
    loaded = DataAccessService(settings).load_problem(args.problem)
    program = EstimatorSynthesizer(settings).assemble_synthesis_program(loaded.problem)
    text = dump_program(program)
    if args.out:
        _write(args.out, text.encode("utf-8"))
    else:
        out.write(text)
    return 0


COMMANDS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "compare-plugin": cmd_compare_plugin,
    "verify": cmd_verify,
    "dump-program": cmd_dump_program,
}


def _report_error(exc: Exception) -> None:
    print(f"error: {exc}", file=sys.stderr)
    if isinstance(exc, InfeasibleProgramError):
        if exc.branch is not None:
            print(f"infeasible branch: {exc.branch}", file=sys.stderr)
        if exc.direction is not None:
            print(f"support direction: {[_format(v) for v in exc.direction]}", file=sys.stderr)
    elif isinstance(exc, NumericalTroubleError) and exc.residuals:
        details = " ".join(f"{key}={_format(value)}" for key, value in sorted(exc.residuals.items()))
        print(f"residuals: {details}", file=sys.stderr)
    elif isinstance(exc, VerificationFailedError):
        for name in exc.failed_checks:
            print(f"failed check: {name}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name. Defaults to sys.argv[1:].

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are input errors; exit code 2 is reserved for infeasibility
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        settings = Settings.from_env().with_overrides(tol=args.tol)
        return COMMANDS[args.command](args, settings, out=sys.stdout)
    except RecoveryError as exc:
        _report_error(exc)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        _report_error(exc)
        return 1
