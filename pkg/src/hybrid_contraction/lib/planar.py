"""Planar piecewise-linear spiral split along x_1 = 0, with a vertical rescaling at each crossing."""

import logging

import numpy as np

from .arrays import Matrix
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

PLUS = "plus"
MINUS = "minus"
_SAMPLED_HEIGHT = (0.1, 2.0)


def spiral_matrix(alpha: float, beta: float) -> Matrix:
    return np.array([[alpha, -beta], [beta, alpha]])


def planar_saltation(  # noqa: PLR0913 # both sides' spiral parameters plus the source scaling
    alpha_source: float, beta_source: float, alpha_target: float, beta_target: float, scale: float
) -> Matrix:
    """Closed form of the saltation matrix at x_1 = 0 with the target field taken at the rescaled point."""
    return np.array(
        [
            [scale * beta_target / beta_source, 0.0],
            [scale * (alpha_source - alpha_target) / beta_source, scale],
        ]
    )


def _sampler(sign: float) -> GuardSampler:
    def sample(rng: np.random.Generator, count: int) -> list[GuardPoint]:
        heights = rng.uniform(*_SAMPLED_HEIGHT, size=count)
        return [GuardPoint(t=0.0, x=np.array([0.0, sign * height])) for height in heights]

    return sample


def _half_plane(mode_id: str, matrix: Matrix, sign: float) -> ModeSpec:
    lower, upper = (0.0, 2.0) if sign > 0 else (-2.0, 0.0)
    return ModeSpec(
        id=mode_id,
        dim=2,
        norm=l2_norm(2),
        field=lambda _t, x: matrix @ x,
        jacobian=lambda _t, _x: matrix,
        constraints=lambda _t, x: np.array([sign * x[0]]),
        region=box([lower, -2.0], [upper, 2.0]),
    )


def _crossing(source: str, target: str, *, sign: float, scale: float) -> Transition:
    def rescale(_t: float, x: Vector) -> Vector:
        return np.array([x[0], scale * x[1]])

    guard = GuardSpec(
        source=source,
        target=target,
        g=lambda _t, x: sign * x[0],
        grad_x=lambda _t, _x: [sign, 0.0],
        # spirals turn counterclockwise, so each half-plane is left through one half of the x_2 axis
        active=lambda _t, x: sign * x[1] > 0.0,
    )
    reset = ResetSpec(source=source, target=target, map=rescale, jac_x=lambda _t, _x: np.diag([1.0, scale]))
    return Transition(guard=guard, reset=reset, sampler=_sampler(sign))


def make_planar_pwl(  # noqa: PLR0913 # three parameters for each half-plane
    alpha_plus: float = -0.5,
    alpha_minus: float = -0.5,
    beta_plus: float = 1.0,
    beta_minus: float = 1.0,
    c_plus: float = 1.0,
    c_minus: float = 1.0,
) -> HybridSystemSpec:
    """x' = A_+ x for x_1 >= 0 and x' = A_- x for x_1 <= 0, A = [[alpha, -beta], [beta, alpha]], resets (x_1, c x_2)."""
    for name, value in (("beta_plus", beta_plus), ("beta_minus", beta_minus), ("c_plus", c_plus), ("c_minus", c_minus)):
        if value <= 0.0:
            raise ConfigurationError(f"Planar piecewise-linear system needs {name} > 0, got {value}")
    return HybridSystemSpec(
        name="planar-pwl",
        modes=(
            _half_plane(PLUS, spiral_matrix(alpha_plus, beta_plus), 1.0),
            _half_plane(MINUS, spiral_matrix(alpha_minus, beta_minus), -1.0),
        ),
        transitions=(
            _crossing(PLUS, MINUS, sign=1.0, scale=c_plus),
            _crossing(MINUS, PLUS, sign=-1.0, scale=c_minus),
        ),
        time_window=(0.0, 0.0),
    )
