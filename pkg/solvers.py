"""
Closed-form hand-eye solvers for AX=XB and AX=YB.

Every solver is an instance of one general scheme: map the rotation
equation R_A R_X = R_Y R_B into a linear system through the Omega mapping
(quaternion multiplication matrices or Kronecker products) and solve it
directly, through the SVD of a summed matrix or as an orthogonal Procrustes
problem. Translation is either recovered afterwards, stacked with the
rotation rows or, for the translation-only solvers, the only equation used.

The stacked-matrix builders are public so that the formulations can be
checked against ground truth independently of the solving logic.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from calibration_errors import (
    DegenerateMotion,
    DimensionMismatch,
    InfeasibleSolver,
    InsufficientMeasurements,
    NullspaceAnomaly,
    UnsupportedRepresentation,
)
from calibration_types import (
    CalibrationResult,
    Diagnostics,
    Form,
    Measurement,
    MotionPair,
    PointObservation,
    Problem,
    RotationEstimate,
    SolverSpec,
)
from config import get_settings
from recovery import (
    BlockLayout,
    combine_nullspace,
    extract_translation,
    numerical_rank,
    recover_translations,
    reorthonormalize,
    secondary_block,
    solve_least_squares,
)
from se3_core import (
    Representation,
    RigidTransform,
    Rotation3,
    axis_angle,
    log_map,
    omega_dimension,
    omega_left,
    omega_right,
    quat_left_matrix,
    quat_right_matrix,
    quat_to_rotation,
    rotation_to_quat,
    unvec,
    vec,
)

logger = logging.getLogger(__name__)

I3 = np.eye(3)
I4 = np.eye(4)

# rank a Procrustes cross-covariance needs for a unique proper orthogonal solution
_PROCRUSTES_RANK = {
    Representation.AXIS_ANGLE: 2,
    Representation.QUATERNION: 3,
    Representation.KRONECKER: 8,
}


def required_measurements(spec: SolverSpec) -> int:
    """
    Smallest number of measurements for which the solver's system can reach
    full rank. AX=XB solvers count relative pairs, AX=YB solvers absolute
    samples.
    """
    if spec.form == Form.TRANSLATION_ONLY_POINT:
        return 5
    if spec.form == Form.TRANSLATION_ONLY:
        if spec.representation == Representation.KRONECKER:
            return 4
        return 4 if spec.problem == Problem.AXYB else 2
    if spec.form == Form.ROTATION_PROCRUSTES:
        return {Representation.AXIS_ANGLE: 2,
                Representation.QUATERNION: 3,
                Representation.KRONECKER: 8}[spec.representation]
    return 3 if spec.problem == Problem.AXYB else 2


def _require(measurements: Sequence, count: int, what: str) -> None:
    if len(measurements) < count:
        raise InsufficientMeasurements(f"{what} needs at least {count} measurements, got {len(measurements)}")


def _full_poses(measurements: Sequence[Measurement], what: str) -> List[MotionPair]:
    for m in measurements:
        if not isinstance(m, MotionPair):
            raise DimensionMismatch(f"{what} needs full sensor poses, got a point observation")
    return list(measurements)


def _as_points(measurements: Sequence[Measurement]) -> List[PointObservation]:
    return [m if isinstance(m, PointObservation) else PointObservation(m.a, m.b.translation)
            for m in measurements]


def _pure(t: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], t))


def aligned_quaternions(pairs: Sequence[MotionPair], problem: Problem) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quaternions of R_A and R_B with signs made consistent across pairs.

    For AX=XB canonical signs already agree (conjugate rotations share their
    scalar part). For AX=YB every a_i is moved to the hemisphere of a_0 and
    every b_i to that of b_0, so a_i * x = s * y * b_i with one global s.
    """
    qa = np.array([rotation_to_quat(p.a.rotation).as_array() for p in pairs])
    qb = np.array([rotation_to_quat(p.b.rotation).as_array() for p in pairs])
    if Problem(problem) == Problem.AXYB:
        qa *= np.where(qa @ qa[0] < 0, -1.0, 1.0)[:, None]
        qb *= np.where(qb @ qb[0] < 0, -1.0, 1.0)[:, None]
    return qa, qb


def check_motion_diversity(measurements: Sequence[Measurement], problem: Problem,
                           tolerance: float = None) -> None:
    """
    Raise DegenerateMotion unless two motion axes are separated by more than
    `tolerance` radians. AX=XB looks at the relative rotations R_A directly,
    AX=YB at R_A0^T R_Ai.
    """
    tolerance = get_settings().axis_separation if tolerance is None else tolerance
    if Problem(problem) == Problem.AXXB:
        rotations = [m.a.rotation.m for m in measurements]
    else:
        reference = measurements[0].a.rotation.m
        rotations = [reference.T @ m.a.rotation.m for m in measurements[1:]]

    axes = []
    for rotation in rotations:
        axis, angle = axis_angle(rotation)
        if angle > tolerance:
            axes.append(axis)
    if len(axes) < 2:
        raise DegenerateMotion(f"only {len(axes)} measurement(s) with a non-trivial rotation")

    first = axes[0]
    separation = max(np.arctan2(np.linalg.norm(np.cross(first, e)), abs(first @ e)) for e in axes[1:])
    if separation <= tolerance:
        raise DegenerateMotion(f"all rotation axes are parallel (largest separation {separation:.2e} rad)")
    logger.debug(f"Motion diversity ok: {len(axes)} axes, largest separation {separation:.3f} rad")


def _null_vectors(matrix: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Right singular vectors of the `count` smallest singular values, padded singular values, nullity"""
    columns = matrix.shape[1]
    _, s, vt = np.linalg.svd(matrix)
    padded = np.concatenate([s, np.zeros(columns - s.size)])
    nullity = columns - numerical_rank(s, columns)
    return vt[columns - count:], padded, nullity


def _rotation_from_block(block: np.ndarray, representation: Representation) -> Rotation3:
    if representation == Representation.QUATERNION:
        return quat_to_rotation(block)
    mat = unvec(block, 3, 3)
    if np.linalg.det(mat) < 0:
        mat = -mat
    return reorthonormalize(mat)


def rotation_residual(pairs: Sequence[MotionPair], r_x: Rotation3, r_y: Optional[Rotation3] = None) -> float:
    """Frobenius residual of R_A R_X - R_Y R_B over all pairs (R_Y = R_X when absent)"""
    r_y = r_x if r_y is None else r_y
    return float(np.sqrt(sum(np.sum((p.a.rotation.m @ r_x.m - r_y.m @ p.b.rotation.m) ** 2)
                             for p in pairs)))


# ---------------------------------------------------------------------------
# Stacked systems
# ---------------------------------------------------------------------------

def rotation_system(pairs: Sequence[MotionPair], problem: Problem,
                    representation: Representation) -> np.ndarray:
    """
    Rotation equation in Omega form, one block per pair: [M+(A)  -M-(B)]
    acting on [r_X; r_Y]. For AX=XB the two column blocks are folded onto r_X.
    """
    problem = Problem(problem)
    representation = Representation(representation)
    omega_dimension(representation)
    if representation == Representation.QUATERNION:
        qa, qb = aligned_quaternions(pairs, problem)
        lefts = [quat_left_matrix(a) for a in qa]
        rights = [quat_right_matrix(b) for b in qb]
    else:
        lefts = [omega_left(p.a.rotation, representation) for p in pairs]
        rights = [omega_right(p.b.rotation, representation) for p in pairs]
    if problem == Problem.AXXB:
        return np.vstack([left - right for left, right in zip(lefts, rights)])
    return np.vstack([np.hstack([left, -right]) for left, right in zip(lefts, rights)])


def quaternion_translation_system(pairs: Sequence[MotionPair], problem: Problem) -> np.ndarray:
    """
    Translation equation in quaternion form,
    Q+(t_A)Q+(a) x + Q+(a) w_X - Q-(b)Q-(t_B) y - Q-(b) w_Y = 0,
    unknowns [x; w_X; y; w_Y] with w = Q-(q) t'. AX=XB folds y onto x.
    """
    problem = Problem(problem)
    qa, qb = aligned_quaternions(pairs, problem)
    blocks = []
    for pair, a, b in zip(pairs, qa, qb):
        left_a = quat_left_matrix(a)
        right_b = quat_right_matrix(b)
        rotated_a = quat_left_matrix(_pure(pair.a.translation)) @ left_a
        rotated_b = right_b @ quat_right_matrix(_pure(pair.b.translation))
        if problem == Problem.AXXB:
            blocks.append(np.hstack([rotated_a - rotated_b, left_a - right_b]))
        else:
            blocks.append(np.hstack([rotated_a, left_a, -rotated_b, -right_b]))
    return np.vstack(blocks)


def quaternion_simultaneous_system(pairs: Sequence[MotionPair], problem: Problem) -> np.ndarray:
    """Rotation rows (zero on the translation blocks) stacked on the quaternion translation rows"""
    problem = Problem(problem)
    rotation = rotation_system(pairs, problem, Representation.QUATERNION)
    zeros = np.zeros((rotation.shape[0], 4))
    if problem == Problem.AXXB:
        rotation_rows = np.hstack([rotation, zeros])
    else:
        rotation_rows = np.hstack([rotation[:, :4], zeros, rotation[:, 4:], zeros])
    return np.vstack([rotation_rows, quaternion_translation_system(pairs, problem)])


def kronecker_translation_system(pairs: Sequence[Measurement]) -> Tuple[np.ndarray, np.ndarray]:
    """AX=XB translation equation [t_B^T (x) I | I - R_A][vec R_X; t_X] = t_A"""
    rows, rhs = [], []
    for m in pairs:
        rows.append(np.hstack([np.kron(m.b_position[None, :], I3), I3 - m.a.rotation.m]))
        rhs.append(m.a.translation)
    return np.vstack(rows), np.concatenate(rhs)


def kronecker_simultaneous_system(pairs: Sequence[MotionPair], problem: Problem) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rotation and translation rows in Kronecker form.

    AX=XB unknowns [vec R_X; t_X]; AX=YB unknowns [vec R_X; vec R_Y; t_X; t_Y].
    """
    problem = Problem(problem)
    rows, rhs = [], []
    for p in pairs:
        ra, rb = p.a.rotation.m, p.b.rotation.m
        kron_tb = np.kron(p.b.translation[None, :], I3)
        if problem == Problem.AXXB:
            rows.append(np.hstack([np.kron(I3, ra) - np.kron(rb.T, I3), np.zeros((9, 3))]))
            rows.append(np.hstack([kron_tb, I3 - ra]))
        else:
            rows.append(np.hstack([np.kron(I3, ra), -np.kron(rb.T, I3), np.zeros((9, 6))]))
            rows.append(np.hstack([np.zeros((3, 9)), kron_tb, -ra, I3]))
        rhs.append(np.zeros(9))
        rhs.append(p.a.translation)
    return np.vstack(rows), np.concatenate(rhs)


def y_quat_t_prime_system(pairs: Sequence[MotionPair]) -> np.ndarray:
    """
    Reduced quaternion translation system without an explicit x:
    [Q-(t_B) - Q+(t_A) | I | -Q-(b)^T Q+(a)] acting on [y; w_Y; w_X].
    """
    qa, qb = aligned_quaternions(pairs, Problem.AXYB)
    blocks = []
    for pair, a, b in zip(pairs, qa, qb):
        blocks.append(np.hstack([
            quat_right_matrix(_pure(pair.b.translation)) - quat_left_matrix(_pure(pair.a.translation)),
            I4,
            -quat_right_matrix(b).T @ quat_left_matrix(a),
        ]))
    return np.vstack(blocks)


def y_kron_t_prime_system(observations: Sequence[Measurement]) -> Tuple[np.ndarray, np.ndarray]:
    """Single-point system [t_B^T (x) I | I | -R_A][vec R_Y; t_Y; t_X] = t_A; never reads R_B"""
    rows, rhs = [], []
    for obs in _as_points(observations):
        rows.append(np.hstack([np.kron(obs.b_point[None, :], I3), I3, -obs.a.rotation.m]))
        rhs.append(obs.a.translation)
    return np.vstack(rows), np.concatenate(rhs)


def procrustes_vectors(pairs: Sequence[MotionPair], representation: Representation) -> Tuple[np.ndarray, np.ndarray]:
    """Columns v_A, v_B with v_A = W v_B for the AX=XB Procrustes form"""
    representation = Representation(representation)
    if representation == Representation.AXIS_ANGLE:
        va = [log_map(p.a.rotation) for p in pairs]
        vb = [log_map(p.b.rotation) for p in pairs]
    elif representation == Representation.QUATERNION:
        va = [rotation_to_quat(p.a.rotation).as_array() for p in pairs]
        vb = [rotation_to_quat(p.b.rotation).as_array() for p in pairs]
    else:
        va = [vec(p.a.rotation.m) for p in pairs]
        vb = [vec(p.b.rotation.m) for p in pairs]
    return np.array(va).T, np.array(vb).T


# ---------------------------------------------------------------------------
# Rotation solvers
# ---------------------------------------------------------------------------

def _solve_rotation_gibbs(pairs: Sequence[MotionPair], problem: Problem) -> RotationEstimate:
    """Quaternion rotation system dehomogenized with x_w = 1 (Rodrigues/Gibbs unknowns)"""
    qa, qb = aligned_quaternions(pairs, problem)
    if problem == Problem.AXXB:
        matrix = np.vstack([quat_left_matrix(a) - quat_right_matrix(b) for a, b in zip(qa, qb)])
    else:
        matrix = np.vstack([np.hstack([quat_left_matrix(a), -quat_right_matrix(b)]) for a, b in zip(qa, qb)])
    solution, diagnostics = solve_least_squares(matrix[:, 1:], -matrix[:, 0], "axis-angle rotation system")
    r_x = quat_to_rotation(np.concatenate(([1.0], solution[:3])))
    r_y = quat_to_rotation(solution[3:7]) if problem == Problem.AXYB else None
    diagnostics.residual = rotation_residual(pairs, r_x, r_y)
    return RotationEstimate(r_x, r_y, diagnostics)


def solve_rotation_direct(pairs: Sequence[MotionPair], problem: Problem,
                          representation: Representation) -> RotationEstimate:
    """
    Rotation from the null vector of the stacked [M+(A)  -M-(B)] system.

    The axis-angle variant fixes the scalar part of x to one and solves for
    the remaining (Rodrigues) components by least squares.

    Raises:
        InsufficientMeasurements: too few pairs
        DegenerateMotion: null space larger than one
    """
    problem = Problem(problem)
    representation = Representation(representation)
    pairs = _full_poses(pairs, "rotation solver")
    _require(pairs, 2 if problem == Problem.AXXB else 3, "rotation solver")
    if representation == Representation.AXIS_ANGLE:
        return _solve_rotation_gibbs(pairs, problem)

    matrix = rotation_system(pairs, problem, representation)
    vectors, singular_values, nullity = _null_vectors(matrix, 1)
    logger.debug(f"Rotation system {matrix.shape}: nullity {nullity}, "
                 f"smallest singular values {singular_values[-3:]}")
    if nullity > 1:
        raise DegenerateMotion(f"rotation system has nullity {nullity}")

    v = vectors[0]
    dim = omega_dimension(representation)
    r_x = _rotation_from_block(v[:dim], representation)
    r_y = _rotation_from_block(v[dim:], representation) if problem == Problem.AXYB else None
    diagnostics = Diagnostics(singular_values=singular_values,
                              residual=rotation_residual(pairs, r_x, r_y),
                              nullspace_dim=nullity)
    return RotationEstimate(r_x, r_y, diagnostics)


def solve_rotation_svd_sum(pairs: Sequence[MotionPair], problem: Problem,
                           representation: Representation) -> RotationEstimate:
    """
    Rotation from K = sum M-(B)^T M+(A). For AX=YB r_X is the right and r_Y
    the left singular vector of the largest singular value; for AX=XB r_X
    maximizes x^T K x, the top eigenvector of the symmetric part of K.
    """
    problem = Problem(problem)
    representation = Representation(representation)
    if representation == Representation.AXIS_ANGLE:
        raise UnsupportedRepresentation("the SVD-sum form needs a linear Omega mapping")
    pairs = _full_poses(pairs, "rotation solver")
    _require(pairs, 2 if problem == Problem.AXXB else 3, "rotation solver")
    tol = get_settings().rank_tolerance

    if representation == Representation.QUATERNION:
        qa, qb = aligned_quaternions(pairs, problem)
        k = sum(quat_right_matrix(b).T @ quat_left_matrix(a) for a, b in zip(qa, qb))
    else:
        k = sum(omega_right(p.b.rotation, representation).T @ omega_left(p.a.rotation, representation)
                for p in pairs)

    u, singular_values, vt = np.linalg.svd(k)
    if problem == Problem.AXYB:
        top = singular_values
        r_x = _rotation_from_block(vt[0], representation)
        r_y = _rotation_from_block(u[:, 0], representation)
    else:
        eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (k + k.T))
        top = eigenvalues[::-1]
        r_x = _rotation_from_block(eigenvectors[:, -1], representation)
        r_y = None

    if top[0] - top[1] < tol * abs(top[0]):
        raise DegenerateMotion(f"largest value of the summed matrix is not unique ({top[0]:.6g}, {top[1]:.6g})")
    multiplicity = int(np.count_nonzero(top[0] - top < tol * abs(top[0])))
    diagnostics = Diagnostics(singular_values=singular_values,
                              residual=rotation_residual(pairs, r_x, r_y),
                              nullspace_dim=multiplicity)
    return RotationEstimate(r_x, r_y, diagnostics)


def _kronecker_factor(w: np.ndarray) -> Rotation3:
    """R from W ~ R (x) R via the rank-1 rearrangement vec(R) vec(R)^T"""
    rearranged = np.empty((9, 9))
    for i in range(3):
        for j in range(3):
            rearranged[i + 3 * j] = vec(w[3 * i:3 * i + 3, 3 * j:3 * j + 3])
    u, _, vt = np.linalg.svd(rearranged)
    left = unvec(u[:, 0], 3, 3)
    right = unvec(vt[0], 3, 3)
    if np.linalg.det(left) < 0:
        left = -left
    if np.linalg.det(right) < 0:
        right = -right
    return reorthonormalize(left + right)


def solve_rotation_procrustes(pairs: Sequence[MotionPair], problem: Problem,
                              representation: Representation) -> RotationEstimate:
    """
    AX=XB as the orthogonal Procrustes problem min |W V_B - V_A| with
    W = R_X on log-map vectors, W = diag(1, R_X) on quaternions and
    W = R_X (x) R_X on vectorized matrices.

    Raises:
        InfeasibleSolver: called for AX=YB
        DegenerateMotion: cross-covariance rank too low for a unique W
    """
    problem = Problem(problem)
    representation = Representation(representation)
    if problem != Problem.AXXB:
        raise InfeasibleSolver("the Procrustes form is only defined for AX=XB")
    pairs = _full_poses(pairs, "rotation solver")
    spec = SolverSpec(problem, representation, Form.ROTATION_PROCRUSTES)
    _require(pairs, required_measurements(spec), spec.name)

    va, vb = procrustes_vectors(pairs, representation)
    u, singular_values, vt = np.linalg.svd(va @ vb.T)
    dim = va.shape[0]
    rank = numerical_rank(singular_values, dim)
    if rank < _PROCRUSTES_RANK[representation]:
        raise DegenerateMotion(f"Procrustes cross-covariance has rank {rank}")

    correction = np.ones(dim)
    correction[-1] = np.sign(np.linalg.det(u @ vt))
    w = u @ np.diag(correction) @ vt
    if representation == Representation.AXIS_ANGLE:
        r_x = reorthonormalize(w)
    elif representation == Representation.QUATERNION:
        r_x = reorthonormalize(w[1:, 1:])
    else:
        r_x = _kronecker_factor(w)

    diagnostics = Diagnostics(singular_values=singular_values,
                              residual=rotation_residual(pairs, r_x),
                              nullspace_dim=dim - rank)
    return RotationEstimate(r_x, None, diagnostics)


ROTATION_SOLVERS = {
    Form.ROTATION_DIRECT: solve_rotation_direct,
    Form.ROTATION_SVD_SUM: solve_rotation_svd_sum,
    Form.ROTATION_PROCRUSTES: solve_rotation_procrustes,
}


# ---------------------------------------------------------------------------
# Simultaneous and translation-only solvers
# ---------------------------------------------------------------------------

def _solve_quaternion_homogeneous(matrix: np.ndarray, problem: Problem, what: str) -> CalibrationResult:
    """Nullity-2 recovery of the quaternion systems with unknowns [x; w_X(; y; w_Y)]"""
    vectors, singular_values, nullity = _null_vectors(matrix, 2)
    logger.debug(f"{what} {matrix.shape}: nullity {nullity}")
    if nullity > 2:
        raise NullspaceAnomaly(f"{what} has nullity {nullity}, expected 2")

    v = combine_nullspace(vectors[0], vectors[1], BlockLayout(slice(0, 4), slice(4, 8)))
    x = RigidTransform(quat_to_rotation(v[0:4]), extract_translation(v[0:4], v[4:8]))
    y = None
    if problem == Problem.AXYB:
        qy, t_y = secondary_block(v, BlockLayout(slice(8, 12), slice(12, 16)))
        y = RigidTransform(quat_to_rotation(qy), t_y)

    diagnostics = Diagnostics(singular_values=singular_values,
                              residual=float(np.linalg.norm(matrix @ v)),
                              nullspace_dim=nullity)
    return CalibrationResult(x=x, y=y, diagnostics=diagnostics)


def _kronecker_result(measurements: Sequence[Measurement], solution_diagnostics: Diagnostics,
                      r_x: Optional[Rotation3], r_y: Optional[Rotation3], problem: Problem) -> CalibrationResult:
    """Recompute translations with the reorthonormalized rotations fixed"""
    t_x, t_y, translation_diagnostics = recover_translations(measurements, r_x, r_y, problem)
    solution_diagnostics.extras['translation_residual'] = translation_diagnostics.residual
    x = RigidTransform(r_x, t_x) if r_x is not None else None
    y = RigidTransform(r_y, t_y) if r_y is not None else None
    if x is None:
        solution_diagnostics.extras['t_x'] = [float(c) for c in t_x]
    return CalibrationResult(x=x, y=y, diagnostics=solution_diagnostics)


def solve_simultaneous(pairs: Sequence[MotionPair], problem: Problem,
                       representation: Representation) -> CalibrationResult:
    """
    Rotation and translation equations stacked into one system: homogeneous
    with nullity-2 recovery for quaternions, inhomogeneous least squares
    followed by reorthonormalization and a translation re-solve for Kronecker.
    """
    problem = Problem(problem)
    representation = Representation(representation)
    pairs = _full_poses(pairs, "simultaneous solver")
    _require(pairs, 2 if problem == Problem.AXXB else 3, "simultaneous solver")

    if representation == Representation.QUATERNION:
        check_motion_diversity(pairs, problem)
        return _solve_quaternion_homogeneous(quaternion_simultaneous_system(pairs, problem), problem,
                                             "quaternion simultaneous system")
    if representation != Representation.KRONECKER:
        raise UnsupportedRepresentation(f"no simultaneous form for {representation.value}")

    coefficients, rhs = kronecker_simultaneous_system(pairs, problem)
    solution, diagnostics = solve_least_squares(coefficients, rhs, "Kronecker simultaneous system")
    r_x = reorthonormalize(unvec(solution[:9], 3, 3))
    r_y = reorthonormalize(unvec(solution[9:18], 3, 3)) if problem == Problem.AXYB else None
    return _kronecker_result(pairs, diagnostics, r_x, r_y, problem)


def solve_translation_only(pairs: Sequence[Measurement], problem: Problem,
                           representation: Representation) -> CalibrationResult:
    """
    Solve the equation of translation alone. Quaternion systems use nullity-2
    recovery; the Kronecker AX=XB system is linear in [vec R_X; t_X].
    """
    problem = Problem(problem)
    representation = Representation(representation)
    if representation == Representation.KRONECKER and problem == Problem.AXYB:
        return solve_y_kron_t_prime(pairs)
    spec = SolverSpec(problem, representation, Form.TRANSLATION_ONLY)
    _require(pairs, required_measurements(spec), spec.name)

    if representation == Representation.QUATERNION:
        pairs = _full_poses(pairs, spec.name)
        check_motion_diversity(pairs, problem)
        return _solve_quaternion_homogeneous(quaternion_translation_system(pairs, problem), problem,
                                             "quaternion translation system")

    coefficients, rhs = kronecker_translation_system(pairs)
    solution, diagnostics = solve_least_squares(coefficients, rhs, "Kronecker translation system")
    r_x = reorthonormalize(unvec(solution[:9], 3, 3))
    return _kronecker_result(pairs, diagnostics, r_x, None, problem)


def solve_y_quat_t_prime(pairs: Sequence[MotionPair]) -> CalibrationResult:
    """
    Y from the reduced quaternion translation system, without solving for x.

    The null space is spanned by [y; w_Y; w_X] and [0; y; x]; the combination
    with |y| = 1 and y . w_Y = 0 gives q_Y and t_Y. X is not returned.
    """
    pairs = _full_poses(pairs, "YQuatT'")
    _require(pairs, 3, "YQuatT'")
    check_motion_diversity(pairs, Problem.AXYB)

    matrix = y_quat_t_prime_system(pairs)
    vectors, singular_values, nullity = _null_vectors(matrix, 2)
    logger.debug(f"Reduced quaternion system {matrix.shape}: nullity {nullity}")
    if nullity > 2:
        raise NullspaceAnomaly(f"reduced quaternion system has nullity {nullity}, expected 2")

    v = combine_nullspace(vectors[0], vectors[1])
    y = RigidTransform(quat_to_rotation(v[0:4]), extract_translation(v[0:4], v[4:8]))
    diagnostics = Diagnostics(singular_values=singular_values,
                              residual=float(np.linalg.norm(matrix @ v)),
                              nullspace_dim=nullity)
    return CalibrationResult(x=None, y=y, diagnostics=diagnostics)


def solve_y_kron_t_prime(observations: Sequence[Measurement]) -> CalibrationResult:
    """
    Y from single-point observations: solve [t_B^T (x) I | I | -R_A] for
    [vec R_Y; t_Y; t_X], reorthonormalize R_Y and re-solve the translations.
    Only the position of B is used, so full poses are accepted and their
    orientation ignored. t_X is reported in the diagnostics.
    """
    points = _as_points(observations)
    _require(points, 5, "YKronT'")
    coefficients, rhs = y_kron_t_prime_system(points)
    solution, diagnostics = solve_least_squares(coefficients, rhs, "single-point translation system")
    r_y = reorthonormalize(unvec(solution[:9], 3, 3))
    return _kronecker_result(points, diagnostics, None, r_y, Problem.AXYB)
