import pytest

from src.models.metric import PassConfig, SceneConfig
from src.models.scenario import EgoPolicy, PolicyKind, SimConfig

from tests.helpers import small_scenario


@pytest.fixture
def config():
    return PassConfig()


@pytest.fixture
def scene_config():
    return SceneConfig()


@pytest.fixture
def seed():
    return 42


@pytest.fixture
def scenario():
    return small_scenario()


@pytest.fixture
def sim():
    return SimConfig()


@pytest.fixture
def early_policy():
    return EgoPolicy(policy_id="early", kind=PolicyKind.EARLY_MERGE, speed_multiplier=0.9,
                     commit_distance=400.0, gap_acceptance=0.5)


@pytest.fixture
def late_policy():
    return EgoPolicy(policy_id="late", kind=PolicyKind.LATE_MERGE, speed_multiplier=0.9,
                     commit_distance=80.0, gap_acceptance=0.3)
