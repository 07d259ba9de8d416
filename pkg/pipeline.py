"""
Dataset preparation and solver orchestration: pose samples, relative and
absolute measurement construction, the named solver registry, validation,
dispatch and error metrics.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from calibration_errors import (
    DegenerateMotion,
    InfeasibleSolver,
    InsufficientMeasurements,
    InvariantViolation,
    MissingEstimate,
)
from calibration_types import (
    FEASIBLE,
    ROTATION_FORMS,
    CalibrationResult,
    Form,
    Measurement,
    MotionPair,
    PointObservation,
    Problem,
    SolverSpec,
)
from recovery import chordal_mean, numerical_rank, recover_translations
from se3_core import RigidTransform, Rotation3, axis_angle, compose, inverse
from solvers import (
    ROTATION_SOLVERS,
    check_motion_diversity,
    required_measurements,
    solve_simultaneous,
    solve_translation_only,
    solve_y_kron_t_prime,
    solve_y_quat_t_prime,
    y_kron_t_prime_system,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PoseSample:
    """
    One synchronized reading: robot pose T_R->E and either the full marker
    pose T_C->M or only the marker position in the sensor frame.
    """
    robot_pose: RigidTransform
    sensor_pose: Optional[RigidTransform] = None
    sensor_point: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.sensor_pose is None) == (self.sensor_point is None):
            raise InvariantViolation("a sample needs exactly one of sensor_pose and sensor_point")
        if self.sensor_point is not None:
            point = np.array(self.sensor_point, dtype=float)
            if point.shape != (3,) or not np.all(np.isfinite(point)):
                raise InvariantViolation("sensor point must be a finite 3-vector")
            point.setflags(write=False)
            object.__setattr__(self, "sensor_point", point)

    @property
    def has_full_pose(self) -> bool:
        return self.sensor_pose is not None

    @property
    def sensor_position(self) -> np.ndarray:
        return self.sensor_pose.translation if self.has_full_pose else self.sensor_point


@dataclass
class ErrorReport:
    """Errors of an estimate against ground truth (radians, meters, meters^2)"""
    rotation_error: float
    translation_error: float
    reprojection_error: Optional[float] = None

    def __post_init__(self):
        values = [self.rotation_error, self.translation_error]
        if self.reprojection_error is not None:
            values.append(self.reprojection_error)
        if any(v < 0 for v in values):
            raise InvariantViolation("error metrics must be non-negative")


# ---------------------------------------------------------------------------
# Measurement construction
# ---------------------------------------------------------------------------

def make_relative_pairs(samples: Sequence[PoseSample], target: Union[str, Problem] = "x") -> List[MotionPair]:
    """
    Consecutive relative motions. target "x" gives (A_{i+1}^-1 A_i, B_{i+1}^-1 B_i)
    with A'X = XB'; target "y" gives (A_i A_{i+1}^-1, B_i B_{i+1}^-1) with A'Y = YB'.
    A Problem is accepted as target: AXXB selects the X form, AXYB the Y form.
    """
    if isinstance(target, Problem):
        target = "x" if target == Problem.AXXB else "y"
    if target not in ("x", "y"):
        raise ValueError(f"target must be 'x' or 'y', got {target!r}")
    if len(samples) < 2:
        raise InsufficientMeasurements(f"relative motions need at least 2 samples, got {len(samples)}")
    if not all(s.has_full_pose for s in samples):
        raise InvariantViolation("relative motions need full sensor poses")

    pairs = []
    for current, following in zip(samples[:-1], samples[1:]):
        if target == "x":
            a = compose(inverse(following.robot_pose), current.robot_pose)
            b = compose(inverse(following.sensor_pose), current.sensor_pose)
        else:
            a = compose(current.robot_pose, inverse(following.robot_pose))
            b = compose(current.sensor_pose, inverse(following.sensor_pose))
        pairs.append(MotionPair(a, b))
    return pairs


def make_absolute_pairs(samples: Sequence[PoseSample]) -> List[Measurement]:
    """(A_i, B_i) for AX=YB, point observations where only the marker position is known"""
    return [MotionPair(s.robot_pose, s.sensor_pose) if s.has_full_pose
            else PointObservation(s.robot_pose, s.sensor_point)
            for s in samples]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _build_registry() -> Dict[str, SolverSpec]:
    specs = [SolverSpec(*row) for row in FEASIBLE]
    return {spec.name: spec for spec in sorted(specs, key=lambda s: (s.problem.value, s.name))}


SOLVER_REGISTRY: Dict[str, SolverSpec] = _build_registry()

ALIASES: Dict[str, str] = {
    'Tsai': 'XAxisR',
    'Park': 'XAxisRX',
    'Chou': 'XQuatR',
    'Liang': 'XKronR',
    'Daniilidis': 'XQuatRT',
    'Lu': 'XQuatRT',
    'Andreff': 'XKronRT',
    'Zhuang': 'YAxisR',
    'Dornaika': 'YQuatR*',
    'Shah': 'YKronR*',
    'Li': 'YKronRT',
}


def available_solvers() -> List[str]:
    return list(SOLVER_REGISTRY)


def resolve_solver(name: Union[str, SolverSpec]) -> SolverSpec:
    """Look up a solver by systematic name or author alias"""
    if isinstance(name, SolverSpec):
        return name
    if name in SOLVER_REGISTRY:
        return SOLVER_REGISTRY[name]
    if name in ALIASES:
        return SOLVER_REGISTRY[ALIASES[name]]
    lowered = {key.lower(): key for key in list(SOLVER_REGISTRY) + list(ALIASES)}
    if name.lower() in lowered:
        return resolve_solver(lowered[name.lower()])
    raise InfeasibleSolver(f"unknown solver {name!r}")


def minimum_measurements(spec: SolverSpec) -> int:
    """At least three measurements, more where the solver has more unknowns per row"""
    return max(3, required_measurements(spec))


# ---------------------------------------------------------------------------
# Validation and dispatch
# ---------------------------------------------------------------------------

def prepare(items: Sequence[Union[PoseSample, Measurement]], spec: SolverSpec) -> List[Measurement]:
    """Turn pose samples into the measurements the solver consumes; measurements pass through"""
    items = list(items)
    if not items or not isinstance(items[0], PoseSample):
        return items
    if spec.problem == Problem.AXXB:
        return make_relative_pairs(items, target="x")
    return make_absolute_pairs(items)


def validate(measurements: Sequence[Measurement], spec: SolverSpec) -> None:
    """
    Check the measurement count and motion diversity for a solver.

    Raises:
        InsufficientMeasurements: fewer measurements than the solver needs
        DegenerateMotion: rotation axes not diverse, or point system rank deficient
        InvariantViolation: point observations given to a full-pose solver
    """
    minimum = minimum_measurements(spec)
    if len(measurements) < minimum:
        raise InsufficientMeasurements(
            f"{spec.name} needs at least {minimum} measurements, got {len(measurements)}")

    if spec.form == Form.TRANSLATION_ONLY_POINT:
        coefficients, _ = y_kron_t_prime_system(measurements)
        columns = coefficients.shape[1]
        rank = numerical_rank(np.linalg.svd(coefficients, compute_uv=False), columns)
        if rank < columns:
            raise DegenerateMotion(f"single-point system has rank {rank} < {columns}")
        return

    if not all(isinstance(m, MotionPair) for m in measurements):
        raise InvariantViolation(f"{spec.name} needs full sensor poses")
    check_motion_diversity(measurements, spec.problem)


def _solve_sequential(measurements: Sequence[MotionPair], spec: SolverSpec) -> CalibrationResult:
    estimate = ROTATION_SOLVERS[spec.form](measurements, spec.problem, spec.representation)
    t_x, t_y, translation_diagnostics = recover_translations(
        measurements, estimate.r_x, estimate.r_y, spec.problem)
    diagnostics = estimate.diagnostics
    diagnostics.extras['translation_residual'] = translation_diagnostics.residual
    x = RigidTransform(estimate.r_x, t_x)
    y = RigidTransform(estimate.r_y, t_y) if spec.problem == Problem.AXYB else None
    return CalibrationResult(x=x, y=y, diagnostics=diagnostics)


def solve(items: Sequence[Union[PoseSample, Measurement]], spec: Union[str, SolverSpec]) -> CalibrationResult:
    """Validate and run one solver on pose samples or ready-made measurements"""
    spec = resolve_solver(spec)
    measurements = prepare(items, spec)
    validate(measurements, spec)

    if spec.form in ROTATION_FORMS:
        result = _solve_sequential(measurements, spec)
    elif spec.form == Form.SIMULTANEOUS:
        result = solve_simultaneous(measurements, spec.problem, spec.representation)
    elif spec.form == Form.TRANSLATION_ONLY:
        result = solve_translation_only(measurements, spec.problem, spec.representation)
    elif spec.form == Form.TRANSLATION_ONLY_PRIME:
        result = solve_y_quat_t_prime(measurements)
    else:
        result = solve_y_kron_t_prime(measurements)

    result.spec = spec
    logger.debug(f"{spec.name} solved from {len(measurements)} measurements, "
                 f"residual {result.diagnostics.residual:.3e}")
    return result


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------

def rotation_error(r_est: Union[Rotation3, np.ndarray], r_gt: Union[Rotation3, np.ndarray]) -> float:
    """Geodesic angle of R_gt^T R_est in radians"""
    m_est = r_est.m if isinstance(r_est, Rotation3) else np.asarray(r_est, dtype=float)
    m_gt = r_gt.m if isinstance(r_gt, Rotation3) else np.asarray(r_gt, dtype=float)
    return axis_angle(m_gt.T @ m_est)[1]


def translation_error(t_est, t_gt) -> float:
    return float(np.linalg.norm(np.asarray(t_est, dtype=float) - np.asarray(t_gt, dtype=float)))


def reprojection_error(samples: Sequence[PoseSample], x: Optional[RigidTransform],
                       y: Optional[RigidTransform]) -> float:
    """Mean squared distance between the marker positions predicted by A_i X and Y B_i"""
    if x is None or y is None:
        raise MissingEstimate("reprojection error needs both X and Y")
    errors = [np.sum((s.robot_pose.apply(x.translation) - y.apply(s.sensor_position)) ** 2)
              for s in samples]
    return float(np.mean(errors))


def complete_transforms(samples: Sequence[PoseSample], result: CalibrationResult
                        ) -> Tuple[Optional[RigidTransform], Optional[RigidTransform]]:
    """
    Fill in the transform a solver did not estimate by averaging the closed
    chain over the samples: Y_i = A_i X B_i^-1 or X_i = A_i^-1 Y B_i.
    Needs full sensor poses; otherwise the missing transform stays None.
    """
    x, y = result.x, result.y
    if x is not None and y is not None:
        return x, y
    full = [s for s in samples if s.has_full_pose]
    if not full:
        return x, y
    if y is None:
        chain = [compose(compose(s.robot_pose, x), inverse(s.sensor_pose)) for s in full]
    else:
        chain = [compose(compose(inverse(s.robot_pose), y), s.sensor_pose) for s in full]
    averaged = RigidTransform(chordal_mean([t.rotation for t in chain]),
                              np.mean([t.translation for t in chain], axis=0))
    return (x, averaged) if y is None else (averaged, y)


def evaluate(samples: Sequence[PoseSample], result: CalibrationResult,
             x_gt: RigidTransform, y_gt: RigidTransform) -> ErrorReport:
    """
    Errors of a result against ground truth. AX=XB solvers are scored on X,
    AX=YB solvers on Y; reprojection uses completed estimates when possible.
    """
    problem = result.spec.problem if result.spec is not None else (
        Problem.AXXB if result.y is None else Problem.AXYB)
    estimate, truth = (result.x, x_gt) if problem == Problem.AXXB else (result.y, y_gt)
    x, y = complete_transforms(samples, result)
    try:
        reprojection = reprojection_error(samples, x, y)
    except MissingEstimate:
        reprojection = None
    return ErrorReport(rotation_error=rotation_error(estimate.rotation, truth.rotation),
                       translation_error=translation_error(estimate.translation, truth.translation),
                       reprojection_error=reprojection)
