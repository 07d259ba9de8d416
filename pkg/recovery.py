"""
Numerical back-ends shared by the solvers: null-space recovery for the
quaternion translation systems, projection onto SO(3) and the translation
least squares run after a rotation-only solve.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from calibration_errors import (
    DegenerateMotion,
    DimensionMismatch,
    NoRealRoot,
    NullspaceAnomaly,
    SingularInput,
)
from calibration_types import Diagnostics, Measurement, Problem
from config import get_settings
from se3_core import (
    Rotation3,
    UnitQuaternion,
    as_quaternion_array,
    canonical_sign,
    quat_right_matrix,
)

logger = logging.getLogger(__name__)

# relative slack for a discriminant that is negative only through rounding
DISCRIMINANT_SLACK = 1e-10


@dataclass(frozen=True)
class BlockLayout:
    """Where the quaternion block q and its translation block w = Q-(q) t' sit in a null vector"""
    q: slice = slice(0, 4)
    w: slice = slice(4, 8)


def _quadratic_roots(lead: float, mid: float, const: float) -> List[float]:
    """Real roots of lead*z^2 + mid*z + const, numerically stable form"""
    disc = mid * mid - 4.0 * lead * const
    if disc < 0:
        if disc < -DISCRIMINANT_SLACK * (mid * mid + abs(4.0 * lead * const)):
            raise NoRealRoot(f"null-space combination has complex roots (discriminant {disc:.3e})")
        disc = 0.0
    sign = 1.0 if mid >= 0 else -1.0
    t = -0.5 * (mid + sign * np.sqrt(disc))
    first = t / lead
    second = const / t if t != 0 else first
    return [first, second]


def combine_nullspace(u1: np.ndarray, u2: np.ndarray, layout: BlockLayout = BlockLayout()) -> np.ndarray:
    """
    Combine two null-space basis vectors into v = l1*u1 + l2*u2 with
    |v_q| = 1 and v_q . v_w = 0.

    The orthogonality condition is a quadratic in the ratio l1/l2. The
    larger coefficient is used as leading coefficient and of the two real
    roots the one giving the larger |v_q| before scaling is kept. The
    returned vector is scaled to |v_q| = 1 and its sign makes v_q canonical.

    Raises:
        NoRealRoot: both roots complex
        NullspaceAnomaly: the quaternion block vanishes for every admissible root
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape or u1.ndim != 1:
        raise DimensionMismatch("null-space basis vectors must be equally sized vectors")

    q1, w1 = u1[layout.q], u1[layout.w]
    q2, w2 = u2[layout.q], u2[layout.w]
    a = q1 @ w1
    b = q1 @ w2 + q2 @ w1
    c = q2 @ w2
    scale = max(abs(a), abs(b), abs(c))

    if scale == 0.0:
        # every combination is orthogonal; take the one with the largest quaternion block
        gram = np.array([[q1 @ q1, q1 @ q2], [q1 @ q2, q2 @ q2]])
        directions = [np.linalg.eigh(gram)[1][:, -1]]
    elif abs(a) >= abs(c) and abs(a) > np.finfo(float).eps * scale:
        directions = [np.array([mu, 1.0]) for mu in _quadratic_roots(a, b, c)]
    elif abs(c) > np.finfo(float).eps * scale:
        directions = [np.array([1.0, nu]) for nu in _quadratic_roots(c, b, a)]
    else:
        directions = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]

    best, best_norm = None, -1.0
    for direction in directions:
        lam = direction / np.linalg.norm(direction)
        candidate = lam[0] * u1 + lam[1] * u2
        q_norm = np.linalg.norm(candidate[layout.q])
        if q_norm > best_norm:
            best, best_norm = candidate, q_norm

    if best_norm < 1e-12:
        raise NullspaceAnomaly("quaternion block vanishes in the recovered null vector")
    logger.debug(f"Null-space quadratic a={a:.3e} b={b:.3e} c={c:.3e}, |v_q|={best_norm:.6f}")

    v = best / best_norm
    q = v[layout.q]
    return canonical_sign(q[0], q[1:]) * v


def recover_from_nullspace(u1: np.ndarray, u2: np.ndarray,
                           layout: BlockLayout = BlockLayout()) -> Tuple[UnitQuaternion, np.ndarray]:
    """Unit quaternion q and its translation block w from a nullity-2 basis"""
    v = combine_nullspace(u1, u2, layout)
    return UnitQuaternion.from_array(v[layout.q]), v[layout.w].copy()


def extract_translation(q, w: np.ndarray) -> np.ndarray:
    """
    Translation t from w = Q-(q) t' by t' = Q-(q)^T w.

    Raises:
        NullspaceAnomaly: the unrotated block has a nonzero scalar part
    """
    q_arr = as_quaternion_array(q)
    w = np.asarray(w, dtype=float)
    if w.shape != (4,):
        raise DimensionMismatch(f"translation block must have 4 components, got {w.shape}")
    t4 = quat_right_matrix(q_arr).T @ w
    tol = get_settings().translation_scalar_tolerance
    if abs(t4[0]) > tol * max(1.0, np.linalg.norm(w)):
        raise NullspaceAnomaly(f"translation block has scalar part {t4[0]:.3e}")
    return t4[1:]


def secondary_block(v: np.ndarray, layout: BlockLayout) -> Tuple[UnitQuaternion, np.ndarray]:
    """
    Second (q, w) pair of a combined null vector whose scale was fixed by the
    first pair: normalize q, drop the part of w along q and extract t.
    """
    q = v[layout.q].copy()
    w = v[layout.w].copy()
    norm = np.linalg.norm(q)
    if norm < 1e-12:
        raise NullspaceAnomaly("secondary quaternion block vanishes")
    q /= norm
    w /= norm
    w -= (q @ w) * q
    sign = canonical_sign(q[0], q[1:])
    return UnitQuaternion.from_array(sign * q), extract_translation(sign * q, sign * w)


def reorthonormalize(m) -> Rotation3:
    """
    Nearest proper rotation in Frobenius norm, U diag(1, 1, det(U V^T)) V^T.

    Raises:
        SingularInput: smallest singular value below 1e-12
    """
    mat = np.asarray(m, dtype=float)
    if mat.shape != (3, 3):
        raise DimensionMismatch(f"expected a 3x3 matrix, got {mat.shape}")
    u, s, vt = np.linalg.svd(mat)
    if s[-1] < 1e-12:
        raise SingularInput(f"matrix is singular (smallest singular value {s[-1]:.3e})")
    d = np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt))])
    return Rotation3(u @ d @ vt)


def chordal_mean(rotations: Sequence[Rotation3]) -> Rotation3:
    """Rotation closest to the arithmetic mean of the matrices"""
    if not rotations:
        raise DimensionMismatch("cannot average an empty set of rotations")
    return reorthonormalize(sum(r.m for r in rotations) / len(rotations))


def numerical_rank(singular_values: np.ndarray, columns: int, tol: float = None) -> int:
    """Number of singular values with s / s_max at or above tol (missing ones count as zero)"""
    tol = get_settings().rank_tolerance if tol is None else tol
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(min(columns, np.count_nonzero(s / s[0] >= tol)))


def solve_least_squares(coefficients: np.ndarray, rhs: np.ndarray, what: str) -> Tuple[np.ndarray, Diagnostics]:
    """
    Full-rank linear least squares by orthogonal factorization.

    Raises:
        DegenerateMotion: coefficient matrix is rank deficient
    """
    singular_values = np.linalg.svd(coefficients, compute_uv=False)
    columns = coefficients.shape[1]
    rank = numerical_rank(singular_values, columns)
    if rank < columns:
        raise DegenerateMotion(f"{what}: coefficient matrix has rank {rank} < {columns}")
    solution, _, _, _ = scipy.linalg.lstsq(coefficients, rhs, lapack_driver='gelsy')
    residual = float(np.linalg.norm(coefficients @ solution - rhs))
    return solution, Diagnostics(singular_values=singular_values, residual=residual,
                                 nullspace_dim=columns - rank)


def recover_translations(measurements: Sequence[Measurement], r_x: Optional[Rotation3],
                         r_y: Optional[Rotation3], problem: Problem
                         ) -> Tuple[Optional[np.ndarray], Optional[np.ndarray], Diagnostics]:
    """
    Translations for known rotations.

    AX=YB solves [R_A  -I][t_X; t_Y] = R_Y t_B - t_A, AX=XB solves
    (R_A - I) t_X = R_X t_B - t_A. Only the position of B is read, so
    point observations work as well.
    """
    problem = Problem(problem)
    if problem == Problem.AXXB:
        rotation = r_x if r_x is not None else r_y
        if rotation is None:
            raise DimensionMismatch("AX=XB translation recovery needs R_X")
        rows = [m.a.rotation.m - np.eye(3) for m in measurements]
        rhs = [rotation.m @ m.b_position - m.a.translation for m in measurements]
    else:
        if r_y is None:
            raise DimensionMismatch("AX=YB translation recovery needs R_Y")
        rows = [np.hstack([m.a.rotation.m, -np.eye(3)]) for m in measurements]
        rhs = [r_y.m @ m.b_position - m.a.translation for m in measurements]

    if not rows:
        raise DegenerateMotion("no measurements for translation recovery")
    solution, diagnostics = solve_least_squares(np.vstack(rows), np.concatenate(rhs),
                                                "translation recovery")
    logger.debug(f"Translation recovery residual {diagnostics.residual:.3e}")
    if problem == Problem.AXXB:
        return solution, None, diagnostics
    return solution[:3], solution[3:], diagnostics
