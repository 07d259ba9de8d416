"""
Command-line entry point for hand-eye calibration
Subcommands: calibrate (solve a dataset), simulate (write a synthetic dataset),
benchmark (run the sample-count or noise-sweep experiment to CSV)
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from calibration_errors import (
    CalibrationError,
    DegenerateMotion,
    DimensionMismatch,
    InfeasibleSolver,
    InsufficientMeasurements,
    InvariantViolation,
    OutputError,
    ParseError,
    UsageError,
)
from calibration_types import CalibrationResult, Problem
from config import configure_logging
from dataset_io import DatasetFile, ResultFile, read_dataset, save_dataset, save_result, write_curve_csv
from pipeline import available_solvers, resolve_solver, rotation_error, solve, translation_error
from se3_core import RigidTransform, axis_angle, rotation_to_quat
from simulation import (
    CONVERGENCE_SOLVERS,
    MIN_SAMPLES,
    NOISE_SWEEP_SOLVERS,
    NoiseConfig,
    ScenarioConfig,
    inject_noise,
    run_convergence_experiment,
    run_noise_sweep,
    sample_measurement,
    sample_scenario,
    to_point_samples,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_OUTPUT = 5

VALIDATION_ERRORS = (InvariantViolation, DimensionMismatch, InsufficientMeasurements, DegenerateMotion,
                     InfeasibleSolver)

NOISE_PRESETS = {
    'none': NoiseConfig.zero,
    'standard': NoiseConfig.standard,
    'high': NoiseConfig.sweep_final,
}


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if number <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def _report(message: str, to_stderr: bool) -> None:
    print(message, file=sys.stderr if to_stderr else sys.stdout)


def _describe(name: str, transform: Optional[RigidTransform]) -> str:
    if transform is None:
        return f"{name}: not estimated"
    q = rotation_to_quat(transform.rotation).as_array()
    _, angle = axis_angle(transform.rotation)
    return (f"{name}: q(w,x,y,z)=[{', '.join(f'{c:.9f}' for c in q)}] "
            f"angle={np.rad2deg(angle):.6f} deg "
            f"t=[{', '.join(f'{c:.9f}' for c in transform.translation)}] m")


def _self_check(result: CalibrationResult, x_gt: Optional[RigidTransform],
                y_gt: Optional[RigidTransform]) -> List[str]:
    lines = []
    for name, estimate, truth in (("X", result.x, x_gt), ("Y", result.y, y_gt)):
        if estimate is None or truth is None:
            continue
        lines.append(f"self-check {name}: rotation error {rotation_error(estimate.rotation, truth.rotation):.3e} rad, "
                     f"translation error {translation_error(estimate.translation, truth.translation):.3e} m")
    return lines


def cmd_calibrate(args) -> int:
    """Solve a dataset with one named solver and write the result file"""
    try:
        spec = resolve_solver(args.method)
    except InfeasibleSolver:
        raise UsageError(f"unknown method {args.method!r}; available: {', '.join(available_solvers())}")

    dataset, digest = read_dataset(args.input)
    samples = dataset.to_samples()
    quiet = args.output == "-"

    if args.window:
        if args.window > len(samples):
            raise InsufficientMeasurements(f"window of {args.window} exceeds the {len(samples)} samples")
        for start in range(len(samples) - args.window + 1):
            result = solve(samples[start:start + args.window], spec)
            estimate = result.x if spec.problem == Problem.AXXB else result.y
            _report(f"window {start}-{start + args.window - 1}: "
                    + _describe("X" if spec.problem == Problem.AXXB else "Y", estimate), quiet)
    else:
        result = solve(samples, spec)

    _report(f"solver {spec.name} ({spec.problem.value}, {spec.representation.value}, {spec.form.value})", quiet)
    _report(_describe("X", result.x), quiet)
    _report(_describe("Y", result.y), quiet)
    for line in _self_check(result, *dataset.ground_truth_transforms()):
        _report(line, quiet)

    if args.output:
        save_result(ResultFile.from_result(result, digest), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Write a synthetic dataset with embedded ground truth"""
    cfg = ScenarioConfig(seed=args.seed)
    scenario = sample_scenario(cfg)
    samples = [sample_measurement(scenario, cfg) for _ in range(args.samples)]
    noise_rng = np.random.default_rng([args.seed, 1])
    noise = NOISE_PRESETS[args.noise]()
    samples = [inject_noise(s, noise, noise_rng) for s in samples]
    if args.points:
        samples = to_point_samples(samples)

    save_dataset(DatasetFile.from_samples(samples, x=scenario.x, y=scenario.y), args.output)
    logger.info(f"Wrote {len(samples)} samples (seed {args.seed}, noise {args.noise}) to {args.output}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    """Run one experiment and write the tidy CSV"""
    if args.max_samples < MIN_SAMPLES:
        raise UsageError(f"--max-samples must be at least {MIN_SAMPLES}, got {args.max_samples}")
    cfg = ScenarioConfig(seed=args.seed)
    if args.solvers:
        names = [name.strip() for name in args.solvers.split(",") if name.strip()]
    else:
        names = CONVERGENCE_SOLVERS if args.experiment == 1 else NOISE_SWEEP_SOLVERS
    try:
        specs = [resolve_solver(name) for name in names]
    except InfeasibleSolver as e:
        raise UsageError(f"{e}; available: {', '.join(available_solvers())}")

    if args.experiment == 1:
        curve = run_convergence_experiment(specs, cfg, NoiseConfig.standard(), max_samples=args.max_samples,
                                           rounds=args.rounds or 30)
    else:
        curve = run_noise_sweep(specs, cfg, steps=args.steps, rounds=args.rounds or 40, samples=args.max_samples)

    table = curve.summary()
    write_curve_csv(table[["solver", "x_value", "metric", "mean", "stddev"]], args.out)

    final = table[(table["x_value"] == curve.x_axis[-1]) & (table["metric"] == "rotation_error")]
    ordering = final.sort_values("mean", na_position="last")
    quiet = args.out == "-"
    _report(f"final {curve.x_label}={curve.x_axis[-1]} mean rotation error:", quiet)
    for _, row in ordering.iterrows():
        _report(f"  {row['solver']:<10} {row['mean']:.6e} rad", quiet)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="handeye", description="Closed-form hand-eye calibration for AX=XB and AX=YB")
    subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
    subparsers.required = True

    calibrate = subparsers.add_parser("calibrate", help="estimate X and/or Y from a dataset")
    calibrate.add_argument("input", nargs="?", default="-", help="dataset JSON ('-' for stdin)")
    calibrate.add_argument("--method", required=True, help="solver name, e.g. YQuatT' or YKronRT")
    calibrate.add_argument("--output", help="result JSON path ('-' for stdout)")
    calibrate.add_argument("--window", type=_positive_int,
                           help="re-solve on every window of N consecutive samples")
    calibrate.set_defaults(handler=cmd_calibrate)

    simulate = subparsers.add_parser("simulate", help="write a synthetic dataset")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--samples", type=_positive_int, default=20)
    simulate.add_argument("--noise", choices=sorted(NOISE_PRESETS), default="none")
    simulate.add_argument("--points", action="store_true", help="store marker positions only")
    simulate.add_argument("--output", default="-", help="dataset path ('-' for stdout)")
    simulate.set_defaults(handler=cmd_simulate)

    benchmark = subparsers.add_parser("benchmark", help="run a benchmark experiment")
    benchmark.add_argument("--experiment", type=int, choices=[1, 2], required=True)
    benchmark.add_argument("--rounds", type=_positive_int)
    benchmark.add_argument("--seed", type=int, default=0)
    benchmark.add_argument("--solvers", help="comma-separated solver names")
    benchmark.add_argument("--max-samples", type=_positive_int, default=70)
    benchmark.add_argument("--steps", type=_positive_int, default=70)
    benchmark.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    benchmark.set_defaults(handler=cmd_benchmark)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except VALIDATION_ERRORS as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OutputError as e:
        print(f"output error: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    except CalibrationError as e:
        logger.error(f"Solver failed: {e}")
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
