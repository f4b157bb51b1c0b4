"""Small hybrid systems with closed-form answers: glued diagonal planes, a moving guard, a time-varying reset, a
periodic kick."""

import logging
import math

import numpy as np

from .arrays import Vector
from .config import GuardPoint
from .config import box
from .exceptions import ConfigurationError
from .model import GuardSampler
from .model import GuardSpec
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import ResetSpec
from .model import Transition
from .norms import l2_norm

logger = logging.getLogger(__name__)

LEFT = "L"
RIGHT = "R"
_GUARD_HEIGHTS = (0.05, 2.0)


def _identity(source: str, target: str, dim: int) -> ResetSpec:
    return ResetSpec(source=source, target=target, map=lambda _t, x: x.copy(), jac_x=lambda _t, _x: np.eye(dim))


def _left_half(_t: float, x: Vector) -> Vector:
    return np.array([1.0 - x[0], x[0], x[1]])


def _right_half(_t: float, x: Vector) -> Vector:
    return np.array([x[0] - 1.0, x[1]])


def _diagonal_mode(mode_id: str, a: float, b: float, *, left: bool) -> ModeSpec:
    matrix = np.diag([-a, -b])
    return ModeSpec(
        id=mode_id,
        dim=2,
        norm=l2_norm(2),
        field=lambda _t, x: matrix @ x,
        jacobian=lambda _t, _x: matrix,
        constraints=_left_half if left else _right_half,
        region=box([0.0, 0.0], [1.0, 2.0]) if left else box([1.0, 0.0], [3.0, 2.0]),
    )


def _on_seam(rng: np.random.Generator, count: int) -> list[GuardPoint]:
    return [GuardPoint(t=0.0, x=np.array([1.0, height])) for height in rng.uniform(*_GUARD_HEIGHTS, size=count)]


def make_example1(
    a_left: float = 1.0, b_left: float = 1.0, a_right: float = 2.0, b_right: float = 1.0
) -> HybridSystemSpec:
    """Two diagonal linear flows x' = diag(-a, -b) x on the positive quadrant, glued along x_1 = 1.

    Trajectories only ever cross from R (x_1 >= 1) into L, so the L->R guard exists for symmetry but is never
    transverse.
    """
    for name, value in (("a_left", a_left), ("b_left", b_left), ("a_right", a_right), ("b_right", b_right)):
        if value <= 0.0:
            raise ConfigurationError(f"Example 1 needs {name} > 0, got {value}")
    right_to_left = Transition(
        guard=GuardSpec(source=RIGHT, target=LEFT, g=lambda _t, x: x[0] - 1.0, grad_x=lambda _t, _x: [1.0, 0.0]),
        reset=_identity(RIGHT, LEFT, 2),
        sampler=_on_seam,
    )
    left_to_right = Transition(
        guard=GuardSpec(source=LEFT, target=RIGHT, g=lambda _t, x: 1.0 - x[0], grad_x=lambda _t, _x: [-1.0, 0.0]),
        reset=_identity(LEFT, RIGHT, 2),
        sampler=_on_seam,
    )
    return HybridSystemSpec(
        name="example1",
        modes=(_diagonal_mode(LEFT, a_left, b_left, left=True), _diagonal_mode(RIGHT, a_right, b_right, left=False)),
        transitions=(left_to_right, right_to_left),
        time_window=(0.0, 0.0),
    )


def make_moving_guard_toy() -> HybridSystemSpec:
    """Two copies of R at rest, with the guard {x <= t} moving through the first copy."""
    modes = tuple(
        ModeSpec(
            id=mode_id,
            dim=1,
            norm=l2_norm(1),
            field=lambda _t, _x: np.zeros(1),
            jacobian=lambda _t, _x: np.zeros((1, 1)),
            region=box([-2.0], [2.0]),
        )
        for mode_id in ("1", "2")
    )
    guard = GuardSpec(
        source="1", target="2", g=lambda t, x: x[0] - t, grad_x=lambda _t, _x: [1.0], d_t=lambda _t, _x: -1.0
    )
    return HybridSystemSpec(
        name="toy-moving-guard",
        modes=modes,
        transitions=(Transition(guard=guard, reset=_identity("1", "2", 1)),),
        time_window=(0.0, 1.0),
    )


def _kicked_reset(t: float, x: Vector) -> Vector:
    return np.array([1.0 + 0.5 * math.sin(2 * t), x[1] * (1.0 + 0.25 * t)])


def _kicked_reset_time_derivative(t: float, x: Vector) -> Vector:
    return np.array([math.cos(2 * t), 0.25 * x[1]])


def _wall_points(rng: np.random.Generator, count: int) -> list[GuardPoint]:
    times = rng.uniform(0.0, 2.0, size=count)
    heights = rng.uniform(-2.0, 2.0, size=count)
    return [GuardPoint(t=float(t), x=np.array([0.0, h])) for t, h in zip(times, heights, strict=True)]


def make_time_varying_reset() -> HybridSystemSpec:
    """A drift into the wall x_1 = 0 followed by a reset that depends explicitly on the impact time."""
    rotation = np.array([[-0.5, 0.3], [-0.3, -0.5]])
    drift = ModeSpec(
        id="a",
        dim=2,
        norm=l2_norm(2),
        field=lambda _t, x: np.array([-1.0, -0.5 * x[1]]),
        jacobian=lambda _t, _x: np.array([[0.0, 0.0], [0.0, -0.5]]),
        constraints=lambda _t, x: np.array([x[0]]),
        region=box([0.0, -2.0], [2.0, 2.0]),
    )
    forced = ModeSpec(
        id="b",
        dim=2,
        norm=l2_norm(2),
        field=lambda t, x: rotation @ x + np.array([0.0, math.cos(t)]),
        jacobian=lambda _t, _x: rotation,
        time_partial=lambda t, _x: np.array([0.0, -math.sin(t)]),
        region=box([-2.0, -2.0], [2.0, 2.0]),
    )
    transition = Transition(
        guard=GuardSpec(source="a", target="b", g=lambda _t, x: x[0], grad_x=lambda _t, _x: [1.0, 0.0]),
        reset=ResetSpec(
            source="a",
            target="b",
            map=_kicked_reset,
            jac_x=lambda t, _x: np.array([[0.0, 0.0], [0.0, 1.0 + 0.25 * t]]),
            d_t=_kicked_reset_time_derivative,
        ),
        sampler=_wall_points,
    )
    return HybridSystemSpec(
        name="time-varying-reset", modes=(drift, forced), transitions=(transition,), time_window=(0.0, 2.0)
    )


def _clock_sampler(t: float) -> GuardSampler:
    def sample(rng: np.random.Generator, count: int) -> list[GuardPoint]:
        return [GuardPoint(t=t, x=rng.uniform(-2.0, 2.0, size=2)) for _ in range(count)]

    return sample


def _clock_transition(  # noqa: PLR0913 # endpoints plus the clock and kick settings
    source: str, target: str, *, sign: float, omega: float, gain: float, fire_time: float
) -> Transition:
    guard = GuardSpec(
        source=source,
        target=target,
        g=lambda t, _x: sign * math.sin(omega * t),
        grad_x=lambda _t, _x: np.zeros(2),
        d_t=lambda t, _x: sign * omega * math.cos(omega * t),
    )
    reset = ResetSpec(source=source, target=target, map=lambda _t, x: gain * x, jac_x=lambda _t, _x: gain * np.eye(2))
    return Transition(guard=guard, reset=reset, sampler=_clock_sampler(fire_time))


def make_periodic_kick(half_period: float = 1.5, gain: float = 2.0) -> HybridSystemSpec:
    """x' = -x in R^2 with x <- gain * x every ``half_period`` time units, driven by the clock guard sin(omega t)."""
    if half_period <= 0.0 or gain <= 0.0:
        raise ConfigurationError(f"Periodic kick needs positive half period and gain, got {half_period} and {gain}")
    omega = math.pi / half_period
    modes = tuple(
        ModeSpec(
            id=mode_id,
            dim=2,
            norm=l2_norm(2),
            field=lambda _t, x: -x,
            jacobian=lambda _t, _x: -np.eye(2),
            region=box([-2.0, -2.0], [2.0, 2.0]),
        )
        for mode_id in ("a", "b")
    )
    transitions = (
        _clock_transition("a", "b", sign=1.0, omega=omega, gain=gain, fire_time=half_period),
        _clock_transition("b", "a", sign=-1.0, omega=omega, gain=gain, fire_time=2 * half_period),
    )
    return HybridSystemSpec(
        name="periodic-kick", modes=modes, transitions=transitions, time_window=(0.0, 2 * half_period)
    )
