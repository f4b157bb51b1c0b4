"""Two-link freeway with capacity drop: uncongested/congested flows and a hysteresis on the downstream density.

Mode names encode two flags. ``S`` means the downstream supply covers the upstream demand (Delta_1 <= S_2), ``nS``
the opposite. ``C`` means congestion is possible (x_2 >= lower threshold) and ``nC`` means it is not
(x_2 <= upper threshold). Only ``nSC`` uses the congested field.
"""

import logging
import math
from typing import Self

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator
from scipy.optimize import bisect

from .arrays import Matrix
from .arrays import Vector
from .config import box
from .exceptions import ConfigurationError
from .model import GuardSpec
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import ResetSpec
from .model import Transition
from .norms import l1_norm

logger = logging.getLogger(__name__)

SUPPLIED_CONGESTIBLE = "SC"
SUPPLIED_FREE = "SnC"
STARVED_CONGESTIBLE = "nSC"
STARVED_FREE = "nSnC"
TRAFFIC_MODES = (SUPPLIED_CONGESTIBLE, SUPPLIED_FREE, STARVED_CONGESTIBLE, STARVED_FREE)


class TrafficParams(BaseModel):
    """Demand Delta_i(x) = q_i (1 - exp(-x / theta)), supply S_2(x) = w (x_jam - x), inflow u(t) periodic.

    Densities are in vehicles per unit length, flows in vehicles per hour and time in hours.
    """

    model_config = ConfigDict(frozen=True)

    demand_capacity_1: float = Field(default=2400.0, gt=0.0)
    demand_capacity_2: float = Field(default=1900.0, gt=0.0)
    demand_scale: float = Field(default=33.0, gt=0.0)
    supply_slope: float = Field(default=20.0, gt=0.0)
    jam_density: float = Field(default=160.0, gt=0.0)
    upper_threshold: float = Field(default=65.0, ge=0.0)
    lower_threshold: float = Field(default=35.0, ge=0.0)
    inflow_mean: float = 1400.0
    inflow_amplitude: float = 500.0
    inflow_period: float = Field(default=0.2, gt=0.0)
    link_1_extent: float = Field(default=200.0, gt=0.0)

    @model_validator(mode="after")
    def _check_thresholds(self) -> Self:
        if not self.lower_threshold < self.upper_threshold:
            raise ConfigurationError(
                f"Hysteresis needs lower threshold {self.lower_threshold} below upper threshold {self.upper_threshold}"
            )
        critical = critical_density(self)
        if not self.upper_threshold < critical:
            raise ConfigurationError(
                f"Upper threshold {self.upper_threshold} must lie below the critical density {critical:.6g}"
            )
        return self

    def demand_1(self, x: float) -> float:
        return self.demand_capacity_1 * (1.0 - math.exp(-x / self.demand_scale))

    def demand_1_slope(self, x: float) -> float:
        return self.demand_capacity_1 / self.demand_scale * math.exp(-x / self.demand_scale)

    def demand_2(self, x: float) -> float:
        return self.demand_capacity_2 * (1.0 - math.exp(-x / self.demand_scale))

    def demand_2_slope(self, x: float) -> float:
        return self.demand_capacity_2 / self.demand_scale * math.exp(-x / self.demand_scale)

    def supply(self, x: float) -> float:
        return self.supply_slope * (self.jam_density - x)

    def supply_slope_at(self, _x: float) -> float:
        return -self.supply_slope

    def inflow(self, t: float) -> float:
        return self.inflow_mean + self.inflow_amplitude * math.sin(2 * math.pi * t / self.inflow_period)

    def inflow_rate(self, t: float) -> float:
        omega = 2 * math.pi / self.inflow_period
        return self.inflow_amplitude * omega * math.cos(omega * t)


def critical_density(params: TrafficParams) -> float:
    """The density where downstream demand meets supply, Delta_2(x) = S_2(x), found by bisection."""
    return float(
        bisect(lambda x: params.demand_2(x) - params.supply(x), 0.0, params.jam_density, xtol=1e-12, maxiter=200)
    )


def rho(params: TrafficParams, x1: float) -> float:
    """Off-diagonal entry of the saltation matrix at the upper hysteresis threshold."""
    threshold = params.upper_threshold
    return (params.demand_1(x1) - params.supply(threshold)) / (params.demand_1(x1) - params.demand_2(threshold))


def uncongested_field(params: TrafficParams, t: float, x: Vector) -> Vector:
    through = params.demand_1(x[0])
    return np.array([params.inflow(t) - through, through - params.demand_2(x[1])])


def congested_field(params: TrafficParams, t: float, x: Vector) -> Vector:
    through = params.supply(x[1])
    return np.array([params.inflow(t) - through, through - params.demand_2(x[1])])


def uncongested_jacobian(params: TrafficParams, x: Vector) -> Matrix:
    slope_1 = params.demand_1_slope(x[0])
    return np.array([[-slope_1, 0.0], [slope_1, -params.demand_2_slope(x[1])]])


def congested_jacobian(params: TrafficParams, x: Vector) -> Matrix:
    slope = params.supply_slope_at(x[1])
    return np.array([[0.0, -slope], [0.0, slope - params.demand_2_slope(x[1])]])


def _inflow_partial(params: TrafficParams, t: float) -> Vector:
    return np.array([params.inflow_rate(t), 0.0])


def _supply_margin(params: TrafficParams, x: Vector) -> float:
    return params.supply(x[1]) - params.demand_1(x[0])


def _supply_margin_gradient(params: TrafficParams, x: Vector) -> Vector:
    return np.array([-params.demand_1_slope(x[0]), params.supply_slope_at(x[1])])


def _mode(params: TrafficParams, mode_id: str) -> ModeSpec:
    supplied = mode_id in (SUPPLIED_CONGESTIBLE, SUPPLIED_FREE)
    congestible = mode_id in (SUPPLIED_CONGESTIBLE, STARVED_CONGESTIBLE)
    supply_sign = 1.0 if supplied else -1.0

    def constraints(_t: float, x: Vector) -> Vector:
        hysteresis = x[1] - params.lower_threshold if congestible else params.upper_threshold - x[1]
        return np.array(
            [x[0], x[1], params.jam_density - x[1], supply_sign * _supply_margin(params, x), hysteresis]
        )

    if mode_id == STARVED_CONGESTIBLE:
        return ModeSpec(
            id=mode_id,
            dim=2,
            norm=l1_norm(2),
            field=lambda t, x: congested_field(params, t, x),
            jacobian=lambda _t, x: congested_jacobian(params, x),
            time_partial=lambda t, _x: _inflow_partial(params, t),
            constraints=constraints,
            region=box([0.0, 0.0], [params.link_1_extent, params.jam_density]),
        )
    return ModeSpec(
        id=mode_id,
        dim=2,
        norm=l1_norm(2),
        field=lambda t, x: uncongested_field(params, t, x),
        jacobian=lambda _t, x: uncongested_jacobian(params, x),
        time_partial=lambda t, _x: _inflow_partial(params, t),
        constraints=constraints,
        region=box([0.0, 0.0], [params.link_1_extent, params.jam_density]),
    )


def _identity_reset(source: str, target: str) -> ResetSpec:
    return ResetSpec(source=source, target=target, map=lambda _t, x: x.copy(), jac_x=lambda _t, _x: np.eye(2))


def _supply_transition(params: TrafficParams, source: str, target: str, *, losing_supply: bool) -> Transition:
    sign = 1.0 if losing_supply else -1.0
    guard = GuardSpec(
        source=source,
        target=target,
        g=lambda _t, x: sign * _supply_margin(params, x),
        grad_x=lambda _t, x: sign * _supply_margin_gradient(params, x),
    )
    return Transition(guard=guard, reset=_identity_reset(source, target))


def _threshold_transition(source: str, target: str, *, threshold: float, rising: bool) -> Transition:
    if rising:
        guard = GuardSpec(source=source, target=target, g=lambda _t, x: threshold - x[1], grad_x=lambda _t, _x: [0, -1])
    else:
        guard = GuardSpec(source=source, target=target, g=lambda _t, x: x[1] - threshold, grad_x=lambda _t, _x: [0, 1])
    return Transition(guard=guard, reset=_identity_reset(source, target))


def make_traffic(params: TrafficParams | None = None) -> HybridSystemSpec:
    """Four-mode capacity-drop model with identity resets and L1 norms in every mode."""
    settings = TrafficParams() if params is None else params
    transitions = (
        _supply_transition(settings, SUPPLIED_CONGESTIBLE, STARVED_CONGESTIBLE, losing_supply=True),
        _supply_transition(settings, SUPPLIED_FREE, STARVED_FREE, losing_supply=True),
        _supply_transition(settings, STARVED_CONGESTIBLE, SUPPLIED_CONGESTIBLE, losing_supply=False),
        _supply_transition(settings, STARVED_FREE, SUPPLIED_FREE, losing_supply=False),
        _threshold_transition(SUPPLIED_FREE, SUPPLIED_CONGESTIBLE, threshold=settings.upper_threshold, rising=True),
        _threshold_transition(STARVED_FREE, STARVED_CONGESTIBLE, threshold=settings.upper_threshold, rising=True),
        _threshold_transition(SUPPLIED_CONGESTIBLE, SUPPLIED_FREE, threshold=settings.lower_threshold, rising=False),
    )
    logger.debug(f"Traffic critical density {critical_density(settings):.6g}")
    return HybridSystemSpec(
        name="traffic",
        modes=tuple(_mode(settings, mode_id) for mode_id in TRAFFIC_MODES),
        transitions=transitions,
        time_window=(0.0, settings.inflow_period),
    )


def initial_mode(params: TrafficParams, x: Vector) -> str:
    """The mode a fresh trajectory at x starts in, preferring the free modes below the upper threshold."""
    supplied = _supply_margin(params, x) >= 0.0
    if x[1] <= params.upper_threshold:
        return SUPPLIED_FREE if supplied else STARVED_FREE
    return SUPPLIED_CONGESTIBLE if supplied else STARVED_CONGESTIBLE
