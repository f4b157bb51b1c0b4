import math

import numpy as np
import pytest

from hybrid_contraction.lib import ConfigurationError
from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import make_example1
from hybrid_contraction.lib import make_periodic_kick


@pytest.mark.parametrize("name", ["a_left", "b_left", "a_right", "b_right"])
def test_example1_rates_must_be_positive(name: str):
    with pytest.raises(ConfigurationError, match=f"Example 1 needs {name} > 0"):
        _ = make_example1(**{name: 0.0})


@pytest.mark.parametrize(("half_period", "gain"), [(0.0, 2.0), (1.5, -1.0)])
def test_periodic_kick_settings_must_be_positive(half_period: float, gain: float):
    with pytest.raises(ConfigurationError, match="Periodic kick needs positive half period and gain"):
        _ = make_periodic_kick(half_period=half_period, gain=gain)


def test_seam_belongs_to_both_halves(example1: HybridSystemSpec):
    seam = np.array([1.0, 0.5])

    assert example1.mode("L").contains(0.0, seam)
    assert example1.mode("R").contains(0.0, seam)
    assert not example1.mode("L").contains(0.0, np.array([1.5, 0.5]))


def test_moving_guard_sweeps_the_first_copy(toy: HybridSystemSpec):
    guard = toy.transition(("1", "2")).guard

    assert guard.value(0.25, np.array([0.5])) == pytest.approx(0.25)
    assert guard.value(0.75, np.array([0.5])) == pytest.approx(-0.25)
    assert guard.time_derivative(0.5, np.array([0.5])) == -1.0


def test_kicked_reset_depends_on_the_impact_time(kicked: HybridSystemSpec):
    landed = kicked.apply_reset(("a", "b"), 2.0, np.array([0.0, 1.0]))

    np.testing.assert_allclose(landed, [1.0 + 0.5 * math.sin(4.0), 1.5])


def test_clock_guards_ignore_the_state():
    system = make_periodic_kick(half_period=2.0, gain=0.5)
    guard = system.transition(("a", "b")).guard

    np.testing.assert_allclose(guard.gradient(1.0, np.array([0.3, -0.7])), np.zeros(2))
    assert guard.value(2.0, np.array([0.3, -0.7])) == pytest.approx(0.0, abs=1e-12)
    assert guard.time_derivative(2.0, np.zeros(2)) == pytest.approx(-math.pi / 2.0)
