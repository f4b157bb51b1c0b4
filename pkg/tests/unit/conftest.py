import numpy as np
import pytest

from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import SamplingPlan
from hybrid_contraction.lib import make_example1
from hybrid_contraction.lib import make_moving_guard_toy
from hybrid_contraction.lib import make_time_varying_reset
from hybrid_contraction.lib import make_traffic


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20241017)


@pytest.fixture
def small_plan() -> SamplingPlan:
    return SamplingPlan(state_samples=24, guard_samples=6, seed=3)


@pytest.fixture
def example1() -> HybridSystemSpec:
    return make_example1(1.0, 1.0, 2.0, 1.0)


@pytest.fixture
def toy() -> HybridSystemSpec:
    return make_moving_guard_toy()


@pytest.fixture
def kicked() -> HybridSystemSpec:
    return make_time_varying_reset()


@pytest.fixture
def traffic() -> HybridSystemSpec:
    return make_traffic()
