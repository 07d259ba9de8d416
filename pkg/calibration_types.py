"""
Value types shared by the solvers and the pipeline: problem/form enums,
the solver specification (one feasible row of the solver table),
measurements and results.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np

from calibration_errors import InfeasibleSolver, InvariantViolation
from se3_core import Representation, RigidTransform, Rotation3


class Problem(str, Enum):
    AXXB = "AXXB"
    AXYB = "AXYB"


class Form(str, Enum):
    """Which equations a solver stacks and how it solves them"""
    ROTATION_DIRECT = "rotation_direct"
    ROTATION_SVD_SUM = "rotation_svd_sum"
    ROTATION_PROCRUSTES = "rotation_procrustes"
    SIMULTANEOUS = "simultaneous"
    TRANSLATION_ONLY = "translation_only"
    TRANSLATION_ONLY_PRIME = "translation_only_prime"
    TRANSLATION_ONLY_POINT = "translation_only_point"


ROTATION_FORMS = frozenset({Form.ROTATION_DIRECT, Form.ROTATION_SVD_SUM, Form.ROTATION_PROCRUSTES})

_A = Representation.AXIS_ANGLE
_Q = Representation.QUATERNION
_K = Representation.KRONECKER

FEASIBLE = frozenset({
    (Problem.AXXB, _A, Form.ROTATION_DIRECT),
    (Problem.AXXB, _A, Form.ROTATION_PROCRUSTES),
    (Problem.AXXB, _Q, Form.ROTATION_DIRECT),
    (Problem.AXXB, _Q, Form.ROTATION_PROCRUSTES),
    (Problem.AXXB, _Q, Form.ROTATION_SVD_SUM),
    (Problem.AXXB, _K, Form.ROTATION_DIRECT),
    (Problem.AXXB, _K, Form.ROTATION_SVD_SUM),
    (Problem.AXXB, _K, Form.ROTATION_PROCRUSTES),
    (Problem.AXXB, _Q, Form.SIMULTANEOUS),
    (Problem.AXXB, _K, Form.SIMULTANEOUS),
    (Problem.AXXB, _Q, Form.TRANSLATION_ONLY),
    (Problem.AXXB, _K, Form.TRANSLATION_ONLY),
    (Problem.AXYB, _A, Form.ROTATION_DIRECT),
    (Problem.AXYB, _Q, Form.ROTATION_DIRECT),
    (Problem.AXYB, _Q, Form.ROTATION_SVD_SUM),
    (Problem.AXYB, _K, Form.ROTATION_DIRECT),
    (Problem.AXYB, _K, Form.ROTATION_SVD_SUM),
    (Problem.AXYB, _Q, Form.SIMULTANEOUS),
    (Problem.AXYB, _K, Form.SIMULTANEOUS),
    (Problem.AXYB, _Q, Form.TRANSLATION_ONLY),
    (Problem.AXYB, _Q, Form.TRANSLATION_ONLY_PRIME),
    (Problem.AXYB, _K, Form.TRANSLATION_ONLY_POINT),
})

_REPR_TOKEN = {_A: "Axis", _Q: "Quat", _K: "Kron"}
_FORM_SUFFIX = {
    Form.ROTATION_DIRECT: "R",
    Form.ROTATION_SVD_SUM: "R*",
    Form.ROTATION_PROCRUSTES: "RX",
    Form.SIMULTANEOUS: "RT",
    Form.TRANSLATION_ONLY: "T",
    Form.TRANSLATION_ONLY_PRIME: "T'",
    Form.TRANSLATION_ONLY_POINT: "T'",
}


@dataclass(frozen=True)
class SolverSpec:
    """One feasible point of the solution space: problem x representation x form"""
    problem: Problem
    representation: Representation
    form: Form

    def __post_init__(self):
        try:
            problem = Problem(self.problem)
            representation = Representation(self.representation)
            form = Form(self.form)
        except ValueError as e:
            raise InfeasibleSolver(str(e)) from e
        if (problem, representation, form) not in FEASIBLE:
            raise InfeasibleSolver(
                f"{problem.value}/{representation.value}/{form.value} is not a known solver")
        object.__setattr__(self, "problem", problem)
        object.__setattr__(self, "representation", representation)
        object.__setattr__(self, "form", form)

    @property
    def name(self) -> str:
        """Systematic name such as YQuatT' or XKronRT"""
        target = "X" if self.problem == Problem.AXXB else "Y"
        return f"{target}{_REPR_TOKEN[self.representation]}{_FORM_SUFFIX[self.form]}"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class MotionPair:
    """One full-pose measurement (A, B), absolute or relative"""
    a: RigidTransform
    b: RigidTransform

    @property
    def b_position(self) -> np.ndarray:
        return self.b.translation


@dataclass(frozen=True, eq=False)
class PointObservation:
    """Robot pose A with only the position of the calibration point in the sensor frame"""
    a: RigidTransform
    b_point: np.ndarray

    def __post_init__(self):
        point = np.array(self.b_point, dtype=float)
        if point.shape != (3,) or not np.all(np.isfinite(point)):
            raise InvariantViolation("observed point must be a finite 3-vector")
        point.setflags(write=False)
        object.__setattr__(self, "b_point", point)

    @property
    def b_position(self) -> np.ndarray:
        return self.b_point


Measurement = Union[MotionPair, PointObservation]


@dataclass
class Diagnostics:
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: float = 0.0
    nullspace_dim: int = 0
    extras: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        return {
            'singular_values': [float(s) for s in self.singular_values],
            'residual': float(self.residual),
            'nullspace_dim': int(self.nullspace_dim),
        }


@dataclass
class RotationEstimate:
    """Rotation-only solver output; r_y is None for AX=XB"""
    r_x: Rotation3
    r_y: Optional[Rotation3]
    diagnostics: Diagnostics


@dataclass
class CalibrationResult:
    x: Optional[RigidTransform]
    y: Optional[RigidTransform]
    diagnostics: Diagnostics
    spec: Optional[SolverSpec] = None

    def __post_init__(self):
        if self.x is None and self.y is None:
            raise InvariantViolation("a calibration result needs at least one of X and Y")
