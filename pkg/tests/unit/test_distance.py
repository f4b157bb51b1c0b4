import math

import numpy as np
import pytest

from hybrid_contraction.lib import ConfigurationError
from hybrid_contraction.lib import Exactness
from hybrid_contraction.lib import HybridState
from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import InvalidPathError
from hybrid_contraction.lib import ModeSpec
from hybrid_contraction.lib import PathCandidate
from hybrid_contraction.lib import PathJump
from hybrid_contraction.lib import PathSegment
from hybrid_contraction.lib import concatenate_paths
from hybrid_contraction.lib import distance
from hybrid_contraction.lib import l2_norm
from hybrid_contraction.lib import path_length


def _state(mode: str, x: float, t: float) -> HybridState:
    return HybridState(mode=mode, x=np.array([x]), t=t)


def _segment(mode: str, *points: float) -> PathSegment:
    return PathSegment(mode=mode, waypoints=np.array([[point] for point in points]))


def _through_the_guard(t: float = 0.3) -> PathCandidate:
    return PathCandidate(
        t=t,
        segments=[_segment("1", 0.8, t), _segment("2", t, 0.8)],
        jumps=[PathJump(source="1", target="2", point=np.array([t]))],
    )


@pytest.mark.parametrize(
    ("start", "end"), [pytest.param("1", "2", id="forward"), pytest.param("2", "1", id="reverse")]
)
def test_copies_are_joined_through_the_moving_guard(toy: HybridSystemSpec, start: str, end: str):
    estimate = distance(toy, _state(start, 0.8, 0.3), _state(end, 0.8, 0.3), 0.3)

    assert estimate.value == pytest.approx(1.0, abs=1e-4)
    assert estimate.exactness == Exactness.OPTIMIZED_UPPER_BOUND
    assert estimate.path is not None
    assert len(estimate.path.jumps) == 1


def test_copies_coincide_inside_the_guard(toy: HybridSystemSpec):
    estimate = distance(toy, _state("1", 0.2, 0.3), _state("2", 0.2, 0.3), 0.3)

    assert estimate.value == pytest.approx(0.0, abs=1e-4)


def test_straight_chord_within_one_mode_is_exact(toy: HybridSystemSpec):
    estimate = distance(toy, _state("1", 0.8, 0.0), _state("1", 0.1, 0.0), 0.0)

    assert estimate.value == pytest.approx(0.7)
    assert estimate.exactness == Exactness.EXACT


def test_identical_states_are_at_distance_zero(toy: HybridSystemSpec):
    estimate = distance(toy, _state("2", 0.5, 0.0), _state("2", 0.5, 0.0), 0.0)

    assert estimate.value == 0.0
    assert estimate.exactness == Exactness.EXACT


def test_modes_without_a_chain_are_unreachable():
    modes = tuple(ModeSpec(id=mode_id, dim=1, norm=l2_norm(1), field=lambda _t, x: -x) for mode_id in ("a", "b"))
    system = HybridSystemSpec(name="apart", modes=modes)

    estimate = distance(system, _state("a", 0.0, 0.0), _state("b", 0.0, 0.0), 0.0)

    assert math.isinf(estimate.value)
    assert estimate.exactness == Exactness.UNREACHABLE
    assert estimate.path is None


def test_states_must_share_the_time(toy: HybridSystemSpec):
    with pytest.raises(ConfigurationError, match="Both states must be taken at t=0.3"):
        _ = distance(toy, _state("1", 0.8, 0.3), _state("2", 0.8, 0.0), 0.3)


def test_length_of_a_path_through_the_guard(toy: HybridSystemSpec):
    assert path_length(_through_the_guard(), toy) == pytest.approx(1.0)


def test_every_jump_needs_segments_on_both_sides():
    with pytest.raises(InvalidPathError, match="needs 2 segment"):
        _ = PathCandidate(
            t=0.3, segments=[_segment("1", 0.8, 0.3)], jumps=[PathJump(source="1", target="2", point=np.array([0.3]))]
        )


def test_jump_points_must_lie_in_the_guard(toy: HybridSystemSpec):
    path = PathCandidate(
        t=0.3,
        segments=[_segment("1", 0.8, 0.5), _segment("2", 0.5, 0.8)],
        jumps=[PathJump(source="1", target="2", point=np.array([0.5]))],
    )

    with pytest.raises(InvalidPathError, match="is outside guard 1->2"):
        _ = path_length(path, toy)


def test_concatenated_paths_add_their_lengths(toy: HybridSystemSpec):
    head = PathCandidate(t=0.3, segments=[_segment("1", 1.2, 0.8)])

    joined = concatenate_paths(head, _through_the_guard())

    assert len(joined.segments) == 2  # noqa: PLR2004 # one segment on each side of the jump
    assert path_length(joined, toy) == pytest.approx(1.4)


def test_concatenation_needs_a_common_time():
    with pytest.raises(InvalidPathError, match="Paths live at different times"):
        _ = concatenate_paths(PathCandidate(t=0.0, segments=[_segment("1", 0.8, 0.3)]), _through_the_guard())


def test_concatenation_needs_a_common_state():
    with pytest.raises(InvalidPathError, match="Paths do not meet at a common state"):
        _ = concatenate_paths(PathCandidate(t=0.3, segments=[_segment("1", 0.1, 0.2)]), _through_the_guard())


def test_chord_through_an_excluded_gap_is_only_an_upper_bound():
    mode = ModeSpec(
        id="a",
        dim=1,
        norm=l2_norm(1),
        field=lambda _t, x: -x,
        constraints=lambda _t, x: np.array([(x[0] - 0.5) ** 2 - 0.04]),
    )
    system = HybridSystemSpec(name="gap", modes=(mode,))

    estimate = distance(system, _state("a", 0.1, 0.0), _state("a", 0.9, 0.0), 0.0)

    assert estimate.value == pytest.approx(0.8)
    assert estimate.exactness == Exactness.OPTIMIZED_UPPER_BOUND


@pytest.mark.parametrize("x", [pytest.param(float(x), id=f"x={x:.3f}") for x in np.linspace(-1.0, 1.5, 50)])
def test_copies_are_apart_by_twice_the_lead_over_the_guard(toy: HybridSystemSpec, x: float):
    t = 0.3

    estimate = distance(toy, _state("1", x, t), _state("2", x, t), t)

    assert estimate.value == pytest.approx(2.0 * (x - t) if x > t else 0.0, abs=1e-6)


def test_distance_is_symmetric_and_obeys_the_triangle_inequality(toy: HybridSystemSpec, rng: np.random.Generator):
    t = 0.3
    for _ in range(10):
        a, b, c = (_state(str(rng.integers(1, 3)), float(rng.uniform(-1.5, 1.5)), t) for _ in range(3))

        forward = distance(toy, a, b, t).value
        backward = distance(toy, b, a, t).value
        detour = forward + distance(toy, b, c, t).value

        assert forward == pytest.approx(backward, abs=1e-6)
        assert distance(toy, a, c, t).value <= detour + 1e-6
