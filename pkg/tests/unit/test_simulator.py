import math

import numpy as np
import pytest

from hybrid_contraction.catalog import builtin_system
from hybrid_contraction.lib import ConfigurationError
from hybrid_contraction.lib import EvaluatorError
from hybrid_contraction.lib import GrazingError
from hybrid_contraction.lib import GuardSpec
from hybrid_contraction.lib import HybridState
from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import IntegratorOptions
from hybrid_contraction.lib import ModeSpec
from hybrid_contraction.lib import OffGuardError
from hybrid_contraction.lib import ResetSpec
from hybrid_contraction.lib import Transition
from hybrid_contraction.lib import TrajectoryStatus
from hybrid_contraction.lib import l2_norm
from hybrid_contraction.lib import make_periodic_kick
from hybrid_contraction.lib import simulate
from hybrid_contraction.lib import time_of_impact
from hybrid_contraction.lib.simulator import ResetEvent


def _still_mode(mode_id: str) -> ModeSpec:
    return ModeSpec(id=mode_id, dim=1, norm=l2_norm(1), field=lambda _t, _x: np.zeros(1))


def _bouncing_ball(restitution: float, max_events: int) -> HybridSystemSpec:
    air = ModeSpec(
        id="air",
        dim=2,
        norm=l2_norm(2),
        field=lambda _t, x: np.array([x[1], -9.81]),
        jacobian=lambda _t, _x: np.array([[0.0, 1.0], [0.0, 0.0]]),
    )
    bounce = Transition(
        guard=GuardSpec(source="air", target="air", g=lambda _t, x: x[0], active=lambda _t, x: x[1] < 0.0),
        reset=ResetSpec(source="air", target="air", map=lambda _t, x: np.array([0.0, -restitution * x[1]])),
    )
    return HybridSystemSpec(name="ball", modes=(air,), transitions=(bounce,), max_events_per_unit_time=max_events)


def test_example1_crosses_the_seam_once(example1: HybridSystemSpec):
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0)

    assert trajectory.status == TrajectoryStatus.COMPLETED
    assert trajectory.event_keys() == [("R", "L")]
    event = trajectory.events[0]
    assert event.t == pytest.approx(math.log(2.0) / 2.0, abs=1e-9)
    np.testing.assert_allclose(event.x_minus, [1.0, math.exp(-event.t)], atol=1e-9)
    assert event.transversality < 0.0


def test_final_state_follows_the_closed_form(example1: HybridSystemSpec):
    t_event = math.log(2.0) / 2.0
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0)

    assert trajectory.final_state.mode == "L"
    np.testing.assert_allclose(trajectory.final_state.x, [math.exp(-(1.0 - t_event)), math.exp(-1.0)], rtol=1e-8)


def test_state_lookup_is_right_continuous(example1: HybridSystemSpec):
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0)
    t_event = trajectory.events[0].t

    assert trajectory.state_at(t_event).mode == "L"
    assert trajectory.state_at(0.5 * t_event).mode == "R"
    np.testing.assert_allclose(trajectory.state_at(0.25).x, [2.0 * math.exp(-0.5), math.exp(-0.25)], rtol=1e-8)


def test_timeline_interleaves_arcs_and_events(example1: HybridSystemSpec):
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0)

    kinds = ["event" if isinstance(item, ResetEvent) else "arc" for item in trajectory.timeline()]
    assert kinds == ["arc", "event", "arc"]


def test_state_lookup_outside_the_run_is_rejected(example1: HybridSystemSpec):
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0)

    with pytest.raises(ConfigurationError, match="past the trajectory end"):
        _ = trajectory.state_at(2.0)


def test_backward_simulation_is_rejected(example1: HybridSystemSpec):
    with pytest.raises(ConfigurationError, match="Backward simulation is not supported"):
        _ = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0]), t=1.0), 0.5)


def test_zero_length_run_returns_the_initial_state(example1: HybridSystemSpec):
    trajectory = simulate(example1, HybridState(mode="L", x=np.array([0.5, 1.0])), 0.0)

    assert trajectory.arcs == []
    assert trajectory.events == []
    np.testing.assert_allclose(trajectory.final_state.x, [0.5, 1.0])


def test_state_already_inside_a_guard_jumps_at_once(toy: HybridSystemSpec):
    trajectory = simulate(toy, HybridState(mode="1", x=np.array([-0.5])), 0.1)

    assert trajectory.event_keys() == [("1", "2")]
    assert trajectory.events[0].t == 0.0
    assert trajectory.final_state.mode == "2"


def test_moving_guard_catches_a_resting_state(toy: HybridSystemSpec):
    trajectory = simulate(toy, HybridState(mode="1", x=np.array([0.4])), 1.0)

    assert trajectory.events[0].t == pytest.approx(0.4, abs=1e-9)


def test_reset_may_depend_on_the_impact_time(kicked: HybridSystemSpec):
    trajectory = simulate(kicked, HybridState(mode="a", x=np.array([1.0, 0.5])), 1.5)
    event = trajectory.events[0]

    assert event.t == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(event.x_plus, [1.0 + 0.5 * math.sin(2.0), 1.25 * 0.5 * math.exp(-0.5)], rtol=1e-8)


def test_clock_guards_fire_every_half_period():
    system = make_periodic_kick(half_period=1.5, gain=2.0)
    trajectory = simulate(system, HybridState(mode="a", x=np.array([1.0, 1.0])), 4.0)

    assert trajectory.event_keys() == [("a", "b"), ("b", "a")]
    np.testing.assert_allclose([event.t for event in trajectory.events], [1.5, 3.0], atol=1e-9)


def test_accumulating_impacts_trigger_the_zeno_cutoff():
    trajectory = simulate(_bouncing_ball(0.5, max_events=10), HybridState(mode="air", x=np.array([1.0, 0.0])), 3.0)

    assert trajectory.status == TrajectoryStatus.ZENO_CUTOFF
    assert len(trajectory.events) == 11  # noqa: PLR2004 # the cutoff event is kept
    assert trajectory.message is not None
    assert "More than 10 events" in trajectory.message


def test_tangential_contact_raises_grazing():
    guard = GuardSpec(source="a", target="b", g=lambda t, _x: (1.0 - t) ** 3, d_t=lambda t, _x: -3.0 * (1.0 - t) ** 2)
    system = HybridSystemSpec(
        name="graze",
        modes=(_still_mode("a"), _still_mode("b")),
        transitions=(Transition(guard=guard, reset=ResetSpec(source="a", target="b", map=lambda _t, x: x)),),
    )

    with pytest.raises(GrazingError, match="Grazing contact with guard a->b"):
        _ = simulate(system, HybridState(mode="a", x=np.array([0.0])), 2.0)


def test_failing_evaluator_stops_the_run_with_a_status():
    def blows_up(t: float, x: np.ndarray) -> np.ndarray:
        if t > 0.5:  # noqa: PLR2004 # failure time
            raise ValueError("out of range")
        return -x

    mode = ModeSpec(id="a", dim=1, norm=l2_norm(1), field=blows_up)
    system = HybridSystemSpec(name="fragile", modes=(mode,))

    trajectory = simulate(system, HybridState(mode="a", x=np.array([1.0])), 1.0)

    assert trajectory.status == TrajectoryStatus.EVALUATOR_ERROR
    assert trajectory.message is not None
    assert "out of range" in trajectory.message


@pytest.mark.parametrize("method", ["RK45", "DOP853", "RK4"])
def test_every_integrator_finds_the_same_event(example1: HybridSystemSpec, method: str):
    options = IntegratorOptions(method=method, fixed_step=1e-3)
    trajectory = simulate(example1, HybridState(mode="R", x=np.array([2.0, 1.0])), 1.0, options=options)

    assert trajectory.events[0].t == pytest.approx(math.log(2.0) / 2.0, abs=1e-7)


def test_time_of_impact_on_the_seam(example1: HybridSystemSpec):
    guard = example1.transition(("R", "L")).guard

    impact = time_of_impact(example1.mode("R"), guard, 0.0, np.array([2.0, 1.0]), 1.0)

    assert impact is not None
    assert impact.t == pytest.approx(math.log(2.0) / 2.0, abs=1e-9)


def test_time_of_impact_beyond_the_horizon_is_none(example1: HybridSystemSpec):
    guard = example1.transition(("R", "L")).guard

    assert time_of_impact(example1.mode("R"), guard, 0.0, np.array([2.0, 1.0]), 0.1) is None


def test_time_of_impact_needs_a_state_outside_the_guard(example1: HybridSystemSpec):
    guard = example1.transition(("R", "L")).guard

    with pytest.raises(OffGuardError, match="already inside guard"):
        _ = time_of_impact(example1.mode("R"), guard, 0.0, np.array([0.5, 1.0]), 1.0)


def test_evaluator_error_exposes_its_location():
    error = EvaluatorError("bad", mode="m", t=0.5, x=np.array([1.0]))

    assert error.t == pytest.approx(0.5)
    assert "mode=m" in str(error)


def test_repeated_runs_are_identical():
    entry = builtin_system("traffic")
    system = entry.build()
    init = entry.initial_state()

    first = simulate(system, init, 3.0)
    second = simulate(system, init, 3.0)

    assert first.event_keys() == second.event_keys()
    assert [event.t for event in first.events] == [event.t for event in second.events]
    assert first.final_state.mode == second.final_state.mode
    np.testing.assert_array_equal(first.final_state.x, second.final_state.x)


@pytest.mark.parametrize("method", ["RK45", "DOP853"])
def test_tighter_tolerances_stay_on_the_closed_form(example1: HybridSystemSpec, method: str):
    t_event = math.log(2.0) / 2.0
    expected = np.array([math.exp(-(1.0 - t_event)), math.exp(-1.0)])
    init = HybridState(mode="R", x=np.array([2.0, 1.0]))
    finals: list[np.ndarray] = []

    for rtol, atol in ((1e-6, 1e-8), (5e-7, 5e-9)):
        trajectory = simulate(example1, init, 1.0, options=IntegratorOptions(method=method, rtol=rtol, atol=atol))
        assert trajectory.event_keys() == [("R", "L")]
        assert trajectory.events[0].t == pytest.approx(t_event, abs=100 * rtol)
        np.testing.assert_allclose(trajectory.final_state.x, expected, atol=100 * rtol)
        finals.append(trajectory.final_state.x)

    np.testing.assert_allclose(finals[0], finals[1], atol=1e-4)
