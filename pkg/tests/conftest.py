"""Shared fixtures: seeded synthetic scenarios and hand-built transforms."""

from dataclasses import dataclass
from typing import List

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as ScipyRotation

from config import get_settings
from pipeline import PoseSample
from se3_core import RigidTransform, Rotation3
from simulation import Scenario, ScenarioConfig, sample_measurement, sample_scenario


@dataclass
class SyntheticData:
    """Ground truth and the noise-free samples generated from it"""
    x: RigidTransform
    y: RigidTransform
    samples: List[PoseSample]


def random_transform(rng: np.random.Generator, scale: float = 1.0) -> RigidTransform:
    rotation = Rotation3(ScipyRotation.random(random_state=rng).as_matrix())
    return RigidTransform(rotation, rng.uniform(-scale, scale, size=3))


def noise_free_data(seed: int, count: int = 10) -> SyntheticData:
    cfg = ScenarioConfig(seed=seed)
    scenario: Scenario = sample_scenario(cfg)
    samples = [sample_measurement(scenario, cfg) for _ in range(count)]
    return SyntheticData(x=scenario.x, y=scenario.y, samples=samples)


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def seeded_data() -> SyntheticData:
    """Noise-free scenario drawn with the default intervals, 10 samples"""
    return noise_free_data(seed=3)


@pytest.fixture
def identity_data(rng) -> SyntheticData:
    """X = Y = identity with A_i = B_i random poses"""
    samples = []
    for _ in range(6):
        pose = random_transform(rng)
        samples.append(PoseSample(robot_pose=pose, sensor_pose=pose))
    return SyntheticData(x=RigidTransform.identity(), y=RigidTransform.identity(), samples=samples)
