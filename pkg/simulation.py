"""
Synthetic hand-eye scenarios, measurement noise and the two benchmark
experiments: error against sample count at fixed noise, and error against
linearly increasing noise at a fixed sample count.

All randomness flows from the configured seed. Round r draws its scenario
from default_rng([seed, r]) and its noise from default_rng([seed, r, 1]).
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator
from scipy.spatial.transform import Rotation as ScipyRotation

from calibration_errors import CalibrationError, InsufficientMeasurements
from calibration_types import SolverSpec
from pipeline import PoseSample, evaluate, resolve_solver, solve
from se3_core import RigidTransform, Rotation3, compose, exp_map, inverse

logger = logging.getLogger(__name__)

METRICS = ("rotation_error", "translation_error", "reprojection_error")
RAW_COLUMNS = ["round", "solver", "group", "x_value", *METRICS]
SUMMARY_COLUMNS = ["solver", "group", "x_value", "metric", "mean", "stddev"]

# smallest sample count any solver can use
MIN_SAMPLES = 3

CONVERGENCE_SOLVERS = ["XAxisRX", "XQuatR*", "XKronR*", "XKronRT", "XKronT",
                       "YAxisR", "YQuatR*", "YKronRT", "YQuatT'", "YKronT'"]
NOISE_SWEEP_SOLVERS = ["YQuatT'", "YKronT'", "YQuatR*", "YKronRT"]


class Interval(BaseModel):
    """Closed interval center +/- half_width"""
    center: float
    half_width: float = 0.0

    @field_validator("center")
    @classmethod
    def _positive_center(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("interval center must be positive")
        return value

    @field_validator("half_width")
    @classmethod
    def _within_center(cls, value: float, info) -> float:
        if value < 0:
            raise ValueError("interval half width must be non-negative")
        center = info.data.get("center")
        if center is not None and value > center:
            raise ValueError("interval must not reach below zero")
        return value

    @property
    def low(self) -> float:
        return self.center - self.half_width

    @property
    def high(self) -> float:
        return self.center + self.half_width

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))


class ScenarioConfig(BaseModel):
    """Distance intervals (meters) and orientation range (radians) of the synthetic setup"""
    x_dist: Interval = Interval(center=0.2, half_width=0.1)
    a_dist: Interval = Interval(center=1.25, half_width=0.75)
    b_dist: Interval = Interval(center=0.8, half_width=0.3)
    a_orient_range: float = Field(default=float(np.deg2rad(30.0)), ge=0.0)
    seed: int = 0


class NoiseConfig(BaseModel):
    """Upper bounds of the noise transforms applied to A and B (radians, meters)"""
    a_rot_max: float = Field(default=0.0, ge=0.0)
    a_trans_max: float = Field(default=0.0, ge=0.0)
    b_rot_max: float = Field(default=0.0, ge=0.0)
    b_trans_max: float = Field(default=0.0, ge=0.0)

    @classmethod
    def zero(cls) -> "NoiseConfig":
        return cls()

    @classmethod
    def standard(cls) -> "NoiseConfig":
        """Static noise of the sample-count experiment"""
        return cls(a_rot_max=float(np.deg2rad(15.0)), a_trans_max=0.02,
                   b_rot_max=float(np.deg2rad(10.0)), b_trans_max=0.01)

    @classmethod
    def sweep_final(cls) -> "NoiseConfig":
        """Noise reached at the last step of the noise sweep"""
        return cls(a_rot_max=float(np.deg2rad(30.0)), a_trans_max=0.06,
                   b_rot_max=float(np.deg2rad(20.0)), b_trans_max=0.03)

    def scaled(self, fraction: float) -> "NoiseConfig":
        return NoiseConfig(a_rot_max=self.a_rot_max * fraction, a_trans_max=self.a_trans_max * fraction,
                           b_rot_max=self.b_rot_max * fraction, b_trans_max=self.b_trans_max * fraction)


@dataclass
class Scenario:
    """Ground truth X, Y and the initial robot pose measurements are drawn around"""
    x: RigidTransform
    y: RigidTransform
    reference: RigidTransform
    rng: np.random.Generator


def _random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def _random_transform(rng: np.random.Generator, distance: Interval) -> RigidTransform:
    rotation = Rotation3(ScipyRotation.random(random_state=rng).as_matrix())
    return RigidTransform(rotation, _random_unit_vector(rng) * distance.sample(rng))


def sample_scenario(cfg: ScenarioConfig, rng: Optional[np.random.Generator] = None) -> Scenario:
    """
    Random X within x_dist, random initial A and B within their intervals,
    and Y = A X B^-1. Uses default_rng(cfg.seed) unless a generator is given.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    x = _random_transform(rng, cfg.x_dist)
    a = _random_transform(rng, cfg.a_dist)
    b = _random_transform(rng, cfg.b_dist)
    y = compose(compose(a, x), inverse(b))
    return Scenario(x=x, y=y, reference=a, rng=rng)


def sample_measurement(scenario: Scenario, cfg: ScenarioConfig) -> PoseSample:
    """
    Robot pose with |t_A| in a_dist and orientation within +/- a_orient_range
    per Euler axis of the reference orientation; B = Y^-1 A X exactly.
    """
    rng = scenario.rng
    angles = rng.uniform(-cfg.a_orient_range, cfg.a_orient_range, size=3)
    offset = ScipyRotation.from_euler('xyz', angles).as_matrix()
    rotation = Rotation3(scenario.reference.rotation.m @ offset)
    a = RigidTransform(rotation, _random_unit_vector(rng) * cfg.a_dist.sample(rng))
    b = compose(compose(inverse(scenario.y), a), scenario.x)
    return PoseSample(robot_pose=a, sensor_pose=b)


def sample_noise_transform(rng: np.random.Generator, rot_max: float, trans_max: float) -> RigidTransform:
    """Rotation angle uniform in [0, rot_max) about a uniform axis, translation uniform in the ball"""
    axis = _random_unit_vector(rng)
    angle = rng.uniform(0.0, 1.0) * rot_max
    direction = _random_unit_vector(rng)
    radius = trans_max * rng.uniform(0.0, 1.0) ** (1.0 / 3.0)
    return RigidTransform(exp_map(axis * angle), direction * radius)


def inject_noise(sample: PoseSample, noise: NoiseConfig, rng: np.random.Generator) -> PoseSample:
    """Right-multiply A by N_A and B by N_B; point samples only receive the translation of N_B"""
    noise_a = sample_noise_transform(rng, noise.a_rot_max, noise.a_trans_max)
    noise_b = sample_noise_transform(rng, noise.b_rot_max, noise.b_trans_max)
    robot_pose = compose(sample.robot_pose, noise_a)
    if sample.has_full_pose:
        return PoseSample(robot_pose=robot_pose, sensor_pose=compose(sample.sensor_pose, noise_b))
    return PoseSample(robot_pose=robot_pose, sensor_point=sample.sensor_point + noise_b.translation)


def to_point_samples(samples: Iterable[PoseSample]) -> List[PoseSample]:
    """Drop the marker orientation, keeping only its position"""
    return [PoseSample(robot_pose=s.robot_pose, sensor_point=s.sensor_position) for s in samples]


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentCurve:
    """
    Per-cell errors of an experiment. raw has one row per
    (round, solver, x_value) with NaN where a solve was impossible.
    """
    x_label: str
    x_axis: List[float]
    raw: pd.DataFrame

    def summary(self) -> pd.DataFrame:
        """Tidy table: solver, group, x_value, metric, mean, stddev (population)"""
        if self.raw.empty:
            return pd.DataFrame(columns=SUMMARY_COLUMNS)
        long = self.raw.melt(id_vars=["round", "solver", "group", "x_value"], value_vars=list(METRICS),
                             var_name="metric", value_name="value")
        grouped = long.groupby(["solver", "group", "x_value", "metric"], sort=False)["value"]
        table = pd.concat([grouped.mean().rename("mean"), grouped.std(ddof=0).rename("stddev")], axis=1)
        return table.reset_index()

    def group_summary(self) -> pd.DataFrame:
        """Per equation type: mean of member means and mean of member standard deviations"""
        table = self.summary()
        if table.empty:
            return pd.DataFrame(columns=["group", "x_value", "metric", "mean", "stddev"])
        grouped = table.groupby(["group", "x_value", "metric"], sort=False)
        return pd.concat([grouped["mean"].mean(), grouped["stddev"].mean()], axis=1).reset_index()

    def series(self, solver: str, metric: str, stat: str = "mean") -> np.ndarray:
        """Statistic of one solver and metric aligned with x_axis"""
        table = self.summary()
        rows = table[(table["solver"] == solver) & (table["metric"] == metric)]
        return rows.set_index("x_value")[stat].reindex(self.x_axis).to_numpy()


class ExperimentRunner:
    """Runs a fixed set of solvers over seeded synthetic rounds"""

    def __init__(self, solvers: Sequence[Union[str, SolverSpec]], cfg: Optional[ScenarioConfig] = None):
        self.specs = [resolve_solver(s) for s in solvers]
        self.cfg = cfg or ScenarioConfig()

    def _scenario(self, round_index: int, count: int) -> Tuple[Scenario, List[PoseSample]]:
        scenario = sample_scenario(self.cfg, np.random.default_rng([self.cfg.seed, round_index]))
        clean = [sample_measurement(scenario, self.cfg) for _ in range(count)]
        return scenario, clean

    def _noisy(self, clean: Sequence[PoseSample], noise: NoiseConfig, round_index: int) -> List[PoseSample]:
        noise_rng = np.random.default_rng([self.cfg.seed, round_index, 1])
        return [inject_noise(s, noise, noise_rng) for s in clean]

    def _cell(self, spec: SolverSpec, samples: Sequence[PoseSample], scenario: Scenario,
              round_index: int, x_value: float) -> dict:
        record = {"round": round_index, "solver": spec.name, "group": spec.problem.value, "x_value": x_value}
        record.update({metric: np.nan for metric in METRICS})
        try:
            result = solve(samples, spec)
            report = evaluate(samples, result, scenario.x, scenario.y)
        except InsufficientMeasurements:
            return record
        except (CalibrationError, np.linalg.LinAlgError) as e:
            logger.warning(f"{spec.name} failed in round {round_index} at {x_value}: {e}")
            return record
        record["rotation_error"] = report.rotation_error
        record["translation_error"] = report.translation_error
        if report.reprojection_error is not None:
            record["reprojection_error"] = report.reprojection_error
        return record

    def convergence(self, noise: NoiseConfig, max_samples: int = 70, rounds: int = 30,
                    sample_counts: Optional[Sequence[int]] = None) -> ExperimentCurve:
        """
        Errors against sample count. Each round draws one scenario and
        max_samples noisy measurements; every count evaluates the first
        `count` of them.
        """
        counts = list(sample_counts) if sample_counts is not None else list(range(MIN_SAMPLES, max_samples + 1))
        if counts and max(counts) > max_samples:
            raise ValueError(f"sample counts exceed max_samples={max_samples}")

        records = []
        for round_index in range(rounds):
            scenario, clean = self._scenario(round_index, max_samples)
            noisy = self._noisy(clean, noise, round_index)
            for count in counts:
                for spec in self.specs:
                    records.append(self._cell(spec, noisy[:count], scenario, round_index, count))
            logger.info(f"Convergence experiment round {round_index + 1}/{rounds} done")

        return ExperimentCurve(x_label="samples", x_axis=counts,
                               raw=pd.DataFrame.from_records(records, columns=RAW_COLUMNS))

    def noise_sweep(self, final_noise: NoiseConfig, steps: int = 70, rounds: int = 40,
                    samples: int = 70) -> ExperimentCurve:
        """
        Errors against noise growing linearly from zero to final_noise in
        `steps` steps. Within a round every step reuses the same measurements
        and the same noise draws, scaled to the step's level.
        """
        x_axis = list(range(steps))
        records = []
        for round_index in range(rounds):
            scenario, clean = self._scenario(round_index, samples)
            for step in x_axis:
                fraction = step / (steps - 1) if steps > 1 else 0.0
                noisy = self._noisy(clean, final_noise.scaled(fraction), round_index)
                for spec in self.specs:
                    records.append(self._cell(spec, noisy, scenario, round_index, step))
            logger.info(f"Noise sweep round {round_index + 1}/{rounds} done")

        return ExperimentCurve(x_label="noise_step", x_axis=x_axis,
                               raw=pd.DataFrame.from_records(records, columns=RAW_COLUMNS))


def run_convergence_experiment(solvers: Sequence[Union[str, SolverSpec]] = CONVERGENCE_SOLVERS,
                               cfg: ScenarioConfig = None, noise: NoiseConfig = None,
                               max_samples: int = 70, rounds: int = 30,
                               sample_counts: Optional[Sequence[int]] = None) -> ExperimentCurve:
    noise = NoiseConfig.standard() if noise is None else noise
    return ExperimentRunner(solvers, cfg).convergence(noise, max_samples, rounds, sample_counts)


def run_noise_sweep(solvers: Sequence[Union[str, SolverSpec]] = NOISE_SWEEP_SOLVERS,
                    cfg: ScenarioConfig = None, steps: int = 70, rounds: int = 40,
                    samples: int = 70, final_noise: NoiseConfig = None) -> ExperimentCurve:
    final_noise = NoiseConfig.sweep_final() if final_noise is None else final_noise
    return ExperimentRunner(solvers, cfg).noise_sweep(final_noise, steps, rounds, samples)
