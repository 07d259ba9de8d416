"""Tests for the stacked formulations and the closed-form solvers."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as ScipyRotation

from calibration_errors import (
    DegenerateMotion,
    DimensionMismatch,
    InfeasibleSolver,
    InsufficientMeasurements,
    UnsupportedRepresentation,
)
from calibration_types import Form, MotionPair, PointObservation, Problem, SolverSpec
from conftest import noise_free_data
from pipeline import (
    available_solvers,
    make_absolute_pairs,
    make_relative_pairs,
    resolve_solver,
    rotation_error,
    solve,
    translation_error,
)
from se3_core import (
    Representation,
    RigidTransform,
    Rotation3,
    exp_map,
    inverse,
    compose,
    quat_right_matrix,
    rotation_to_quat,
    vec,
)
from solvers import (
    ROTATION_SOLVERS,
    kronecker_simultaneous_system,
    kronecker_translation_system,
    quaternion_simultaneous_system,
    quaternion_translation_system,
    required_measurements,
    rotation_system,
    solve_rotation_direct,
    solve_rotation_procrustes,
    solve_rotation_svd_sum,
    solve_simultaneous,
    solve_translation_only,
    solve_y_kron_t_prime,
    solve_y_quat_t_prime,
    y_kron_t_prime_system,
    y_quat_t_prime_system,
)

Q = Representation.QUATERNION
K = Representation.KRONECKER
AXIS = Representation.AXIS_ANGLE


def _quat_blocks(transform: RigidTransform):
    """Canonical quaternion q and its translation block Q-(q) t'"""
    q = rotation_to_quat(transform.rotation).as_array()
    return q, quat_right_matrix(q) @ np.concatenate(([0.0], transform.translation))


def _min_residual(matrix, candidates):
    return min(np.linalg.norm(matrix @ v) for v in candidates)


def _about_z(angle: float, translation) -> RigidTransform:
    return RigidTransform(exp_map([0.0, 0.0, angle]), translation)


class TestFormulationResiduals:
    """Every stacked system must vanish at the ground-truth unknowns on noise-free data"""

    def test_quaternion_rotation_axyb(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        x, _ = _quat_blocks(seeded_data.x)
        y, _ = _quat_blocks(seeded_data.y)
        matrix = rotation_system(pairs, Problem.AXYB, Q)
        assert _min_residual(matrix, [np.concatenate((x, s * y)) for s in (1.0, -1.0)]) < 1e-10

    def test_kronecker_rotation_axyb(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        v = np.concatenate((vec(seeded_data.x.rotation.m), vec(seeded_data.y.rotation.m)))
        assert np.linalg.norm(rotation_system(pairs, Problem.AXYB, K) @ v) < 1e-10

    def test_rotation_axxb(self, seeded_data):
        pairs = make_relative_pairs(seeded_data.samples, target="x")
        x, _ = _quat_blocks(seeded_data.x)
        assert np.linalg.norm(rotation_system(pairs, Problem.AXXB, Q) @ x) < 1e-10
        assert np.linalg.norm(rotation_system(pairs, Problem.AXXB, K) @ vec(seeded_data.x.rotation.m)) < 1e-10

    def test_quaternion_translation_axyb(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        x, w_x = _quat_blocks(seeded_data.x)
        y, w_y = _quat_blocks(seeded_data.y)
        matrix = quaternion_translation_system(pairs, Problem.AXYB)
        candidates = [np.concatenate((x, w_x, s * y, s * w_y)) for s in (1.0, -1.0)]
        assert _min_residual(matrix, candidates) < 1e-10

    def test_quaternion_translation_axxb(self, seeded_data):
        pairs = make_relative_pairs(seeded_data.samples, target="x")
        x, w_x = _quat_blocks(seeded_data.x)
        matrix = quaternion_translation_system(pairs, Problem.AXXB)
        assert np.linalg.norm(matrix @ np.concatenate((x, w_x))) < 1e-10

    def test_quaternion_simultaneous_axyb(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        x, w_x = _quat_blocks(seeded_data.x)
        y, w_y = _quat_blocks(seeded_data.y)
        matrix = quaternion_simultaneous_system(pairs, Problem.AXYB)
        candidates = [np.concatenate((x, w_x, s * y, s * w_y)) for s in (1.0, -1.0)]
        assert _min_residual(matrix, candidates) < 1e-10

    def test_reduced_quaternion_system(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        _, w_x = _quat_blocks(seeded_data.x)
        y, w_y = _quat_blocks(seeded_data.y)
        matrix = y_quat_t_prime_system(pairs)
        candidates = [np.concatenate((s * y, s * w_y, w_x)) for s in (1.0, -1.0)]
        assert _min_residual(matrix, candidates) < 1e-10

    def test_kronecker_simultaneous_axyb(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        coefficients, rhs = kronecker_simultaneous_system(pairs, Problem.AXYB)
        v = np.concatenate((vec(seeded_data.x.rotation.m), vec(seeded_data.y.rotation.m),
                            seeded_data.x.translation, seeded_data.y.translation))
        assert np.linalg.norm(coefficients @ v - rhs) < 1e-10

    def test_kronecker_simultaneous_axxb(self, seeded_data):
        pairs = make_relative_pairs(seeded_data.samples, target="x")
        coefficients, rhs = kronecker_simultaneous_system(pairs, Problem.AXXB)
        v = np.concatenate((vec(seeded_data.x.rotation.m), seeded_data.x.translation))
        assert np.linalg.norm(coefficients @ v - rhs) < 1e-10

    def test_kronecker_translation_axxb(self, seeded_data):
        pairs = make_relative_pairs(seeded_data.samples, target="x")
        coefficients, rhs = kronecker_translation_system(pairs)
        v = np.concatenate((vec(seeded_data.x.rotation.m), seeded_data.x.translation))
        assert np.linalg.norm(coefficients @ v - rhs) < 1e-10

    def test_single_point_system(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        coefficients, rhs = y_kron_t_prime_system(pairs)
        v = np.concatenate((vec(seeded_data.y.rotation.m), seeded_data.y.translation,
                            seeded_data.x.translation))
        assert np.linalg.norm(coefficients @ v - rhs) < 1e-10


class TestNullity:

    @staticmethod
    def _nullity(matrix):
        s = np.linalg.svd(matrix, compute_uv=False)
        padded = np.concatenate([s, np.zeros(matrix.shape[1] - s.size)])
        return int(np.count_nonzero(padded / s[0] < 1e-8))

    def test_reduced_quaternion_system_has_nullity_two(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        assert self._nullity(y_quat_t_prime_system(pairs)) == 2

    def test_quaternion_translation_system_has_nullity_two(self, seeded_data):
        pairs = make_absolute_pairs(seeded_data.samples)
        assert self._nullity(quaternion_translation_system(pairs, Problem.AXYB)) == 2


@pytest.mark.parametrize("name", available_solvers())
def test_noise_free_recovery(seeded_data, name):
    """Every registered solver recovers the ground truth from exact data"""
    spec = resolve_solver(name)
    result = solve(seeded_data.samples, spec)

    checks = []
    if spec.problem == Problem.AXXB:
        checks.append((result.x, seeded_data.x))
    else:
        checks.append((result.y, seeded_data.y))
        if result.x is not None:
            checks.append((result.x, seeded_data.x))
    for estimate, truth in checks:
        assert rotation_error(estimate.rotation, truth.rotation) < 1e-7
        assert translation_error(estimate.translation, truth.translation) < 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_rotation_forms_agree(seed):
    data = noise_free_data(seed)
    pairs = make_relative_pairs(data.samples, target="x")
    estimates = []
    for form in (Form.ROTATION_DIRECT, Form.ROTATION_SVD_SUM, Form.ROTATION_PROCRUSTES):
        for representation in (Q, K):
            estimates.append(ROTATION_SOLVERS[form](pairs, Problem.AXXB, representation).r_x)
    for estimate in estimates[1:]:
        assert rotation_error(estimate, estimates[0]) < 1e-7


class TestIdentityScenario:

    def test_direct(self, identity_data):
        pairs = make_relative_pairs(identity_data.samples, target="x")
        for representation in (AXIS, Q, K):
            estimate = solve_rotation_direct(pairs, Problem.AXXB, representation)
            assert np.allclose(estimate.r_x.m, np.eye(3), atol=1e-10)

    def test_direct_axyb(self, identity_data):
        pairs = make_absolute_pairs(identity_data.samples)
        estimate = solve_rotation_direct(pairs, Problem.AXYB, Q)
        assert np.allclose(estimate.r_x.m, np.eye(3), atol=1e-10)
        assert np.allclose(estimate.r_y.m, np.eye(3), atol=1e-10)

    def test_svd_sum(self, identity_data):
        pairs = make_absolute_pairs(identity_data.samples)
        for representation in (Q, K):
            estimate = solve_rotation_svd_sum(pairs, Problem.AXYB, representation)
            assert np.allclose(estimate.r_x.m, np.eye(3), atol=1e-10)
            assert np.allclose(estimate.r_y.m, np.eye(3), atol=1e-10)

    def test_procrustes(self, identity_data):
        pairs = make_relative_pairs(identity_data.samples, target="x")
        for representation in (AXIS, Q):
            estimate = solve_rotation_procrustes(pairs, Problem.AXXB, representation)
            assert np.allclose(estimate.r_x.m, np.eye(3), atol=1e-10)

    def test_simultaneous(self, identity_data):
        pairs = make_absolute_pairs(identity_data.samples)
        for representation in (Q, K):
            result = solve_simultaneous(pairs, Problem.AXYB, representation)
            assert np.allclose(result.x.matrix, np.eye(4), atol=1e-9)
            assert np.allclose(result.y.matrix, np.eye(4), atol=1e-9)

    def test_translation_only(self, identity_data):
        pairs = make_relative_pairs(identity_data.samples, target="x")
        result = solve_translation_only(pairs, Problem.AXXB, K)
        assert np.allclose(result.x.matrix, np.eye(4), atol=1e-9)

    def test_reduced_quaternion(self, identity_data):
        result = solve_y_quat_t_prime(make_absolute_pairs(identity_data.samples))
        assert result.x is None
        assert np.allclose(result.y.matrix, np.eye(4), atol=1e-9)

    def test_single_point(self, identity_data):
        observations = [PointObservation(s.robot_pose, s.sensor_pose.translation) for s in identity_data.samples]
        result = solve_y_kron_t_prime(observations)
        assert result.x is None
        assert np.allclose(result.y.matrix, np.eye(4), atol=1e-9)
        assert np.allclose(result.diagnostics.extras['t_x'], 0.0, atol=1e-9)


class TestSolverProperties:

    def test_reduced_quaternion_matches_ground_truth(self, seeded_data):
        result = solve_y_quat_t_prime(make_absolute_pairs(seeded_data.samples))
        assert rotation_error(result.y.rotation, seeded_data.y.rotation) < 1e-8
        assert translation_error(result.y.translation, seeded_data.y.translation) < 1e-8
        assert result.diagnostics.nullspace_dim == 2

    def test_single_point_ignores_sensor_orientation(self, rng):
        data = noise_free_data(seed=5, count=12)
        pairs = make_absolute_pairs(data.samples)
        scrambled = [MotionPair(p.a, RigidTransform(ScipyRotation.random(random_state=rng).as_matrix(),
                                                    p.b.translation))
                     for p in pairs]

        original = solve_y_kron_t_prime(pairs)
        perturbed = solve_y_kron_t_prime(scrambled)

        assert np.array_equal(original.y.rotation.m, perturbed.y.rotation.m)
        assert np.array_equal(original.y.translation, perturbed.y.translation)
        assert original.diagnostics.extras['t_x'] == perturbed.diagnostics.extras['t_x']
        assert rotation_error(original.y.rotation, data.y.rotation) < 1e-7

    def test_axyb_solver_on_axxb_data(self, seeded_data):
        x = seeded_data.x
        pairs = [MotionPair(s.robot_pose, compose(compose(inverse(x), s.robot_pose), x))
                 for s in seeded_data.samples]
        estimate = solve_rotation_direct(pairs, Problem.AXYB, Q)
        assert rotation_error(estimate.r_x, x.rotation) < 1e-8
        assert rotation_error(estimate.r_y, x.rotation) < 1e-8

    def test_singular_values_sorted(self, seeded_data):
        estimate = solve_rotation_direct(make_absolute_pairs(seeded_data.samples), Problem.AXYB, K)
        s = estimate.diagnostics.singular_values
        assert np.all(s >= 0.0)
        assert np.all(np.diff(s) <= 0.0)
        assert estimate.diagnostics.nullspace_dim == 1

    def test_returned_rotations_are_proper(self, seeded_data):
        result = solve(seeded_data.samples, "YKronRT")
        for transform in (result.x, result.y):
            m = transform.rotation.m
            assert np.allclose(m.T @ m, np.eye(3), atol=1e-10)
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-10)


class TestDegenerateInput:

    def test_common_rotation_axis(self):
        samples = [_about_z(0.3 * i, [0.1 * i, 0.2, -0.1 * i]) for i in range(6)]
        pairs = [MotionPair(a, a) for a in samples]
        with pytest.raises(DegenerateMotion):
            solve_rotation_direct(pairs, Problem.AXXB, Q)

    def test_parallel_axes_procrustes(self):
        pairs = [MotionPair(a, a) for a in (_about_z(0.4, [0.0, 0.0, 0.1]), _about_z(0.9, [0.1, 0.0, 0.0]))]
        with pytest.raises(DegenerateMotion):
            solve_rotation_procrustes(pairs, Problem.AXXB, AXIS)

    def test_pure_translation_motions(self):
        pairs = [MotionPair(RigidTransform(Rotation3.identity(), t), RigidTransform(Rotation3.identity(), t))
                 for t in ([0.1, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 0.3], [0.1, 0.1, 0.1])]
        with pytest.raises(DegenerateMotion):
            solve_translation_only(pairs, Problem.AXXB, K)

    def test_too_few_pairs(self, seeded_data):
        pairs = make_relative_pairs(seeded_data.samples[:2], target="x")
        with pytest.raises(InsufficientMeasurements):
            solve_rotation_direct(pairs, Problem.AXXB, Q)

    def test_too_few_points(self, seeded_data):
        with pytest.raises(InsufficientMeasurements):
            solve_y_kron_t_prime(make_absolute_pairs(seeded_data.samples[:4]))

    def test_point_observations_need_full_pose_solver(self, seeded_data):
        observations = [PointObservation(s.robot_pose, s.sensor_pose.translation) for s in seeded_data.samples]
        with pytest.raises(DimensionMismatch):
            solve_rotation_direct(observations, Problem.AXYB, Q)


class TestFormSupport:

    def test_procrustes_is_axxb_only(self, seeded_data):
        with pytest.raises(InfeasibleSolver):
            solve_rotation_procrustes(make_absolute_pairs(seeded_data.samples), Problem.AXYB, Q)

    def test_svd_sum_needs_linear_mapping(self, seeded_data):
        with pytest.raises(UnsupportedRepresentation):
            solve_rotation_svd_sum(make_absolute_pairs(seeded_data.samples), Problem.AXYB, AXIS)

    @pytest.mark.parametrize("name, count", [
        ("YKronT'", 5),
        ("XKronT", 4),
        ("YQuatT", 4),
        ("XQuatT", 2),
        ("XKronRX", 8),
        ("XQuatRX", 3),
        ("XAxisRX", 2),
        ("YQuatR", 3),
        ("XQuatR", 2),
    ])
    def test_required_measurements(self, name, count):
        assert required_measurements(resolve_solver(name)) == count

    def test_infeasible_combination(self):
        with pytest.raises(InfeasibleSolver):
            SolverSpec(Problem.AXYB, AXIS, Form.TRANSLATION_ONLY)
