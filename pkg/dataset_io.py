"""
Dataset and result files.

Datasets are JSON documents with quaternions in (w, x, y, z) order and
translations in meters:

    {"format": "handeye-dataset", "version": 1, "quaternion_order": "w,x,y,z",
     "units": "m",
     "samples": [{"robot_pose": {"q": [...], "t": [...]},
                  "marker_pose": {"q": [...], "t": [...]}}, ...],
     "ground_truth": {"x": {...}, "y": {...}}}

Each sample carries exactly one of marker_pose and marker_point.
Payloads are checked against DATASET_SCHEMA before they become models.
"""

import hashlib
import json
import logging
import sys
from typing import List, Optional, Tuple

import jsonschema
from jsonschema.exceptions import best_match
import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from calibration_errors import InvariantViolation, OutputError, ParseError
from calibration_types import CalibrationResult
from pipeline import PoseSample
from se3_core import RigidTransform, quat_to_rotation, rotation_to_quat

logger = logging.getLogger(__name__)

DATASET_FORMAT = "handeye-dataset"
RESULT_FORMAT = "handeye-result"
QUATERNION_ORDER = "w,x,y,z"

# |q| may deviate this much before a file is rejected
QUATERNION_REJECT_TOL = 1e-6
# deviations above this are renormalized with a warning
QUATERNION_WARN_TOL = 1e-9

_VECTOR3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POSE = {
    "type": "object",
    "properties": {
        "q": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "t": _VECTOR3,
    },
    "required": ["q", "t"],
    "additionalProperties": False,
}

DATASET_SCHEMA = {
    "type": "object",
    "properties": {
        "format": {"const": DATASET_FORMAT},
        "version": {"const": 1},
        "quaternion_order": {"const": QUATERNION_ORDER},
        "units": {"type": "string"},
        "samples": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "robot_pose": _POSE,
                    "marker_pose": _POSE,
                    "marker_point": _VECTOR3,
                },
                "required": ["robot_pose"],
                "oneOf": [
                    {"required": ["marker_pose"], "not": {"required": ["marker_point"]}},
                    {"required": ["marker_point"], "not": {"required": ["marker_pose"]}},
                ],
                "additionalProperties": False,
            },
        },
        "ground_truth": {
            "type": "object",
            "properties": {"x": _POSE, "y": _POSE},
            "additionalProperties": False,
        },
    },
    "required": ["version", "samples"],
}


class PoseRecord(BaseModel):
    q: List[float] = Field(min_length=4, max_length=4)
    t: List[float] = Field(min_length=3, max_length=3)

    def to_transform(self, where: str = "pose") -> RigidTransform:
        """
        Raises:
            InvariantViolation: |q| deviates from one by more than 1e-6
        """
        q = np.array(self.q, dtype=float)
        deviation = abs(np.linalg.norm(q) - 1.0)
        if deviation > QUATERNION_REJECT_TOL:
            raise InvariantViolation(f"{where}: quaternion norm {np.linalg.norm(q):.9g} is not unit")
        if deviation > QUATERNION_WARN_TOL:
            logger.warning(f"{where}: renormalizing quaternion (norm deviation {deviation:.2e})")
        return RigidTransform(quat_to_rotation(q), self.t, source_quaternion=q)

    @classmethod
    def from_transform(cls, transform: RigidTransform) -> "PoseRecord":
        if transform.source_quaternion is not None:
            q = transform.source_quaternion
        else:
            q = rotation_to_quat(transform.rotation).as_array()
        return cls(q=[float(c) for c in q], t=[float(c) for c in transform.translation])


class SampleRecord(BaseModel):
    robot_pose: PoseRecord
    marker_pose: Optional[PoseRecord] = None
    marker_point: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_marker(self):
        if (self.marker_pose is None) == (self.marker_point is None):
            raise ValueError("a sample needs exactly one of marker_pose and marker_point")
        return self

    def to_sample(self, index: int) -> PoseSample:
        robot = self.robot_pose.to_transform(f"samples/{index}/robot_pose")
        if self.marker_pose is not None:
            return PoseSample(robot_pose=robot,
                              sensor_pose=self.marker_pose.to_transform(f"samples/{index}/marker_pose"))
        return PoseSample(robot_pose=robot, sensor_point=np.array(self.marker_point))

    @classmethod
    def from_sample(cls, sample: PoseSample) -> "SampleRecord":
        robot = PoseRecord.from_transform(sample.robot_pose)
        if sample.has_full_pose:
            return cls(robot_pose=robot, marker_pose=PoseRecord.from_transform(sample.sensor_pose))
        return cls(robot_pose=robot, marker_point=[float(c) for c in sample.sensor_point])


class GroundTruth(BaseModel):
    x: Optional[PoseRecord] = None
    y: Optional[PoseRecord] = None


class DatasetFile(BaseModel):
    format: str = DATASET_FORMAT
    version: int = 1
    quaternion_order: str = QUATERNION_ORDER
    units: str = "m"
    samples: List[SampleRecord]
    ground_truth: Optional[GroundTruth] = None

    def to_samples(self) -> List[PoseSample]:
        return [record.to_sample(i) for i, record in enumerate(self.samples)]

    def ground_truth_transforms(self) -> Tuple[Optional[RigidTransform], Optional[RigidTransform]]:
        if self.ground_truth is None:
            return None, None
        x = self.ground_truth.x.to_transform("ground_truth/x") if self.ground_truth.x else None
        y = self.ground_truth.y.to_transform("ground_truth/y") if self.ground_truth.y else None
        return x, y

    @classmethod
    def from_samples(cls, samples: List[PoseSample], x: Optional[RigidTransform] = None,
                     y: Optional[RigidTransform] = None) -> "DatasetFile":
        truth = None
        if x is not None or y is not None:
            truth = GroundTruth(x=PoseRecord.from_transform(x) if x is not None else None,
                                y=PoseRecord.from_transform(y) if y is not None else None)
        return cls(samples=[SampleRecord.from_sample(s) for s in samples], ground_truth=truth)


class ResultFile(BaseModel):
    format: str = RESULT_FORMAT
    solver: str
    x: Optional[PoseRecord] = None
    y: Optional[PoseRecord] = None
    diagnostics: dict
    input_digest: str

    @classmethod
    def from_result(cls, result: CalibrationResult, digest: str) -> "ResultFile":
        diagnostics = result.diagnostics.as_dict()
        diagnostics['extras'] = {key: value for key, value in result.diagnostics.extras.items()}
        return cls(
            solver=result.spec.name if result.spec is not None else "unknown",
            x=PoseRecord.from_transform(result.x) if result.x is not None else None,
            y=PoseRecord.from_transform(result.y) if result.y is not None else None,
            diagnostics=diagnostics,
            input_digest=digest,
        )


def _read_text(path: str) -> str:
    source = "stdin" if path == "-" else path
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except UnicodeDecodeError as e:
        raise ParseError(f"{source} is not valid UTF-8 text: {e.reason} at byte {e.start}") from e
    except OSError as e:
        raise ParseError(f"cannot read {source}: {e.strerror}") from e


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from e


def input_digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_dataset(text: str) -> DatasetFile:
    """
    Parse and validate dataset JSON.

    Raises:
        ParseError: malformed JSON (with line and column) or schema violation (with field path)
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e

    error = best_match(jsonschema.Draft7Validator(DATASET_SCHEMA).iter_errors(payload))
    if error is not None:
        field = "/".join(str(part) for part in error.absolute_path) or "<root>"
        raise ParseError(f"dataset does not match the schema: {error.message}", field=field)
    return DatasetFile.model_validate(payload)


def read_dataset(path: str) -> Tuple[DatasetFile, str]:
    """Dataset model and the digest of the raw input; path '-' reads stdin"""
    text = _read_text(path)
    dataset = parse_dataset(text)
    logger.info(f"Loaded {len(dataset.samples)} samples from {path}")
    return dataset, input_digest(text)


def load_dataset(path: str) -> List[PoseSample]:
    """Validated pose samples in file order"""
    dataset, _ = read_dataset(path)
    return dataset.to_samples()


def save_dataset(dataset: DatasetFile, path: str) -> None:
    _write_text(path, dataset.model_dump_json(indent=2, exclude_none=True) + "\n")


def save_result(result: ResultFile, path: str) -> None:
    _write_text(path, result.model_dump_json(indent=2) + "\n")


def write_curve_csv(table: pd.DataFrame, path: str) -> None:
    """Tidy benchmark table as CSV; missing cells stay empty"""
    if path == "-":
        table.to_csv(sys.stdout, index=False)
        return
    try:
        table.to_csv(path, index=False)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from e
