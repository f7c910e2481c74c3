#!/usr/bin/env python3
"""
QuFTI simulator command line
============================
Exact oracles, single-point estimates, fringe scans, noise sweeps and
contour-radius sweeps.

Usage:
    python cli.py conjecture --M 100 --phi 0
    python cli.py exact --M 6 --phi 0.05
    python cli.py estimate --method qcp --M 10 --phi 0.05 --L1 200 --L2 10000
    python cli.py fringe --method qcp --M 100 --points 41 --seed 7 -o fringe.csv
    python cli.py noise-sweep --method qcp --M 20 --noise-levels 0,0.1,0.2 -o noise.csv
    python cli.py r-sweep --M 20 --phi 0.03 --r-values 0.1,0.3,0.5,1.0

Exit codes: 0 success, 1 invalid input, 2 numeric or I/O failure,
3 size guard refusal.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

from config import (
    get_default_realizations,
    get_default_seed,
    get_fringe_points,
    get_noise_levels,
    get_worker_count,
)
from experiments import (
    METHODS,
    SAMPLED_METHODS,
    ScanResult,
    ScanSpec,
    combine_results,
    fringe_scan,
    noise_sweep,
    r_sweep,
)
from networks import fourier_sensitivity_period
from services.results_writer import FORMATS, ResultsWriteError, ResultsWriter, write_table
from services.validation import NumericFailureError, SizeLimitError, ValidationError
from utils.helpers import parse_float_list, parse_int_list, parse_seed, symmetric_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2
EXIT_SIZE = 3


class UsageError(Exception):
    """Raised for a flag combination argparse cannot reject on its own"""
    pass


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the invalid-input code"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_model_args(parser: argparse.ArgumentParser, method_choices: Optional[Sequence[str]] = None):
    parser.add_argument('--M', type=int, required=True, help='Mode count')
    if method_choices:
        parser.add_argument('--method', choices=method_choices, default=method_choices[0],
                            help='Estimator (default: %(default)s)')
    parser.add_argument('--N', '--order', dest='order', type=int, help='Correlation order (default: M)')
    parser.add_argument('--outputs', help='0-based output modes, e.g. 0,1,2 (default: first N)')
    parser.add_argument('--r', type=float, help='VCP contour radius (default: 0.1 max order, 0.8 otherwise)')
    parser.add_argument('--d', type=int, help='QCP phase-circle cardinality (default: 2)')
    parser.add_argument('--L1', type=int, help='Subensembles')
    parser.add_argument('--L2', type=int, help='Samples per subensemble')
    parser.add_argument('--noise-sigma', type=float, default=0.0, help='Phase noise std dev (radians)')
    parser.add_argument('--realizations', type=int, help='Noise realizations averaged per point')
    parser.add_argument('--seed', help="Master seed, or 'random'")


def _add_grid_args(parser: argparse.ArgumentParser):
    parser.add_argument('--phi-values', help='Explicit phi list, e.g. -0.1,0,0.1')
    parser.add_argument('--phi-min', type=float, help='Grid start (with --phi-max)')
    parser.add_argument('--phi-max', type=float, help='Grid end (with --phi-min)')
    parser.add_argument('--points', type=int, help='Grid points (default from config)')


def _add_output_args(parser: argparse.ArgumentParser):
    parser.add_argument('--output', '-o', help='Result file (default: stdout)')
    parser.add_argument('--format', choices=FORMATS, default='csv', help='Result format')
    parser.add_argument('--record-timing', action='store_true', help='Fill the wall_time_s column')


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment"""
    parser = CliParser(prog='qufti', description='Complex-P simulator for QuFTI boson sampling')
    parser.add_argument('--workers', type=int, help='Worker threads (default: QUFTI_WORKERS or config)')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='Log level on stderr')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    exact = commands.add_parser('exact', help='Exact count rate or correlation')
    _add_model_args(exact)
    exact.add_argument('--phi', type=float, default=0.0, help='Phase gradient (radians)')
    _add_output_args(exact)

    conjecture = commands.add_parser('conjecture', help='Analytic maximum-order count rate')
    conjecture.add_argument('--M', type=int, required=True, help='Mode count')
    conjecture.add_argument('--phi', type=float, default=0.0, help='Phase gradient (radians)')
    conjecture.add_argument('--seed', help="Master seed, or 'random'")
    _add_output_args(conjecture)

    estimate = commands.add_parser('estimate', help='Sampled correlation at one phi')
    _add_model_args(estimate, SAMPLED_METHODS)
    estimate.add_argument('--phi', type=float, default=0.0, help='Phase gradient (radians)')
    _add_output_args(estimate)

    fringe = commands.add_parser('fringe', help='Correlation against phi')
    _add_model_args(fringe, METHODS)
    _add_grid_args(fringe)
    _add_output_args(fringe)

    sweep = commands.add_parser('noise-sweep', help='Fringe scans at several noise levels')
    _add_model_args(sweep, METHODS)
    _add_grid_args(sweep)
    sweep.add_argument('--noise-levels', help='Noise std devs, e.g. 0,0.1,0.2 (default from config)')
    _add_output_args(sweep)

    radius = commands.add_parser('r-sweep', help='VCP error against contour radius')
    radius.add_argument('--M', type=int, required=True, help='Mode count')
    radius.add_argument('--phi', type=float, default=0.0, help='Phase gradient (radians)')
    radius.add_argument('--N', '--order', dest='order', type=int, help='Correlation order (default: M)')
    radius.add_argument('--outputs', help='0-based output modes (default: first N)')
    radius.add_argument('--r-values', required=True, help='Radii, e.g. 0.1,0.3,0.5,1.0')
    radius.add_argument('--L1', type=int, help='Subensembles')
    radius.add_argument('--L2', type=int, help='Samples per subensemble')
    radius.add_argument('--seed', help="Master seed, or 'random'")
    radius.add_argument('--output', '-o', help='Result CSV (default: stdout)')
    return parser


def resolve_grid(args) -> List[float]:
    """phi grid from --phi-values, --phi-min/--phi-max, or symmetric about 0"""
    points = args.points if args.points is not None else get_fringe_points()
    if args.phi_values is not None:
        return parse_float_list(args.phi_values)
    if (args.phi_min is None) != (args.phi_max is None):
        raise UsageError('--phi-min and --phi-max must be given together')
    if points < 1:
        raise UsageError('--points must be >= 1')
    if args.phi_min is not None:
        return [float(x) for x in np.linspace(args.phi_min, args.phi_max, points)]
    # half a fringe period either side of the peak
    return symmetric_grid(fourier_sensitivity_period(args.M) / 2, points)


def build_spec(args, method: str, grid: Sequence[float]) -> ScanSpec:
    """ScanSpec from parsed flags; unset flags resolve to config defaults"""
    outputs = getattr(args, 'outputs', None)
    return ScanSpec(
        M=args.M,
        phi_grid=tuple(grid),
        method=method,
        order=getattr(args, 'order', None),
        r=getattr(args, 'r', None),
        d=getattr(args, 'd', None),
        L1=getattr(args, 'L1', None),
        L2=getattr(args, 'L2', None),
        noise_sigma=getattr(args, 'noise_sigma', 0.0),
        realizations=getattr(args, 'realizations', None),
        seed=parse_seed(args.seed, get_default_seed()),
        outputs=tuple(parse_int_list(outputs)) if outputs else None,
    )


def _emit(result: ScanResult, args) -> None:
    writer = ResultsWriter(args.format, args.record_timing)
    if args.output:
        writer.write(result, args.output)
    elif args.format == 'csv':
        sys.stdout.write(writer.to_csv_text(result))
    else:
        sys.stdout.write(writer.to_jsonl_text(result))


def _run_point(args, method: str, workers: int) -> ScanResult:
    spec = build_spec(args, method, [args.phi])
    return fringe_scan(spec, workers)


def cmd_scalar(args, method: str, workers: int) -> None:
    """exact / conjecture: print Q or write a one-row table"""
    result = _run_point(args, method, workers)
    if args.output:
        _emit(result, args)
    else:
        print(repr(float(result.rows['Q_mean'].iloc[0])))


def cmd_estimate(args, workers: int) -> None:
    result = _run_point(args, args.method, workers)
    if args.output:
        _emit(result, args)
    else:
        row = result.rows.iloc[0]
        print(f"{float(row['Q_mean'])!r} {float(row['Q_stderr'])!r} {float(row['Q_imag'])!r}")


def cmd_fringe(args, workers: int) -> None:
    spec = build_spec(args, args.method, resolve_grid(args))
    _emit(fringe_scan(spec, workers), args)


def cmd_noise_sweep(args, workers: int) -> None:
    levels = parse_float_list(args.noise_levels) if args.noise_levels else get_noise_levels()
    if args.realizations is None:
        args.realizations = get_default_realizations()
    spec = build_spec(args, args.method, resolve_grid(args))
    _emit(combine_results(noise_sweep(spec, levels, workers)), args)


def cmd_r_sweep(args, workers: int) -> None:
    # ScanSpec resolves the ensemble defaults and the output subset
    spec = build_spec(args, 'vcp', [args.phi])
    table = r_sweep(spec.M, args.phi, spec.order, parse_float_list(args.r_values),
                    spec.L1, spec.L2, spec.seed, spec.outputs, workers)
    if args.output:
        write_table(table, args.output)
    else:
        sys.stdout.write(table.to_csv(index=False, float_format='%.17g'))


def run(argv: Sequence[str]) -> int:
    """
    Execute one CLI invocation

    Args:
        argv: Arguments without the program name

    Returns:
        Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    workers = args.workers if args.workers is not None else get_worker_count()

    try:
        if workers < 1:
            raise UsageError('--workers must be >= 1')
        if args.command in ('exact', 'conjecture'):
            cmd_scalar(args, args.command, workers)
        elif args.command == 'estimate':
            cmd_estimate(args, workers)
        elif args.command == 'fringe':
            cmd_fringe(args, workers)
        elif args.command == 'noise-sweep':
            cmd_noise_sweep(args, workers)
        else:
            cmd_r_sweep(args, workers)
    except (UsageError, ValidationError, ValueError) as e:
        parser.print_usage(sys.stderr)
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID
    except SizeLimitError as e:
        logger.error(f"Refused: {e}")
        return EXIT_SIZE
    except (NumericFailureError, ResultsWriteError) as e:
        logger.error(f"Failed: {e}")
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
