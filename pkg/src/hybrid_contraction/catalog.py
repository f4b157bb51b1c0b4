"""Named built-in systems with their scalar parameters and a default initial state."""

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from .lib import ConfigurationError
from .lib import ForcingInput
from .lib import HybridState
from .lib import HybridSystemSpec
from .lib import MechanicalNetworkParams
from .lib import OneDofParams
from .lib import SoftParams
from .lib import TrafficParams
from .lib import TwoDofParams
from .lib import ViscoParams
from .lib import initial_mode
from .lib import make_example1
from .lib import make_mech_1dof
from .lib import make_mech_2dof
from .lib import make_mech_network
from .lib import make_mech_soft
from .lib import make_mech_visco
from .lib import make_moving_guard_toy
from .lib import make_periodic_kick
from .lib import make_planar_pwl
from .lib import make_time_varying_reset
from .lib import make_traffic

logger = logging.getLogger(__name__)

type Parameters = dict[str, float]

_FORCING_DEFAULTS: Parameters = {"u_mean": -1.0, "u_amp": 0.0, "omega": 1.0}


class BuiltinSystem(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    description: str
    defaults: Parameters = Field(default_factory=dict)
    builder: Callable[[Parameters], HybridSystemSpec]
    initial: Callable[[Parameters], HybridState]
    draw_ranges: dict[str, tuple[float, float]] = Field(default_factory=dict)

    def resolve(self, overrides: Parameters | None = None) -> Parameters:
        parameters = dict(self.defaults)
        for name, value in (overrides or {}).items():
            if name not in parameters:
                raise ConfigurationError(
                    f"System {self.name} has no parameter {name!r}; known: {sorted(parameters) or 'none'}"
                )
            parameters[name] = value
        return parameters

    def build(self, overrides: Parameters | None = None) -> HybridSystemSpec:
        return self.builder(self.resolve(overrides))

    def initial_state(self, overrides: Parameters | None = None) -> HybridState:
        return self.initial(self.resolve(overrides))


def _forcing(p: Parameters) -> ForcingInput:
    return ForcingInput(mean=p["u_mean"], amplitude=p["u_amp"], frequency=p["omega"])


def _traffic_params(p: Parameters) -> TrafficParams:
    return TrafficParams(
        demand_capacity_1=p["q1"],
        demand_capacity_2=p["q2"],
        demand_scale=p["theta"],
        supply_slope=p["w"],
        jam_density=p["xjam"],
        upper_threshold=p["xbar"],
        lower_threshold=p["xunder"],
        inflow_mean=p["u_mean"],
        inflow_amplitude=p["u_amp"],
        inflow_period=p["u_period"],
    )


def _traffic_initial(p: Parameters) -> HybridState:
    x = np.array([20.0, 30.0])
    return HybridState(mode=initial_mode(_traffic_params(p), x), x=x)


def _two_dof(p: Parameters) -> HybridSystemSpec:
    return make_mech_2dof(
        TwoDofParams(
            mass=p["m"],
            mass_2=p["m2"],
            stiffness=p["kappa"],
            stiffness_2=p["kappa2"],
            damping=p["beta"],
            damping_2=p["beta2"],
            forcing=_forcing(p),
        )
    )


def _visco(p: Parameters) -> HybridSystemSpec:
    return make_mech_visco(
        ViscoParams(
            mass=p["m"],
            mass_2=p["m2"],
            stiffness=p["kappa"],
            stiffness_2=p["kappa2"],
            stiffness_3=p["kappa3"],
            damping=p["beta"],
            damping_2=p["beta2"],
            forcing=_forcing(p),
        )
    )


def _network(p: Parameters) -> HybridSystemSpec:
    amplitude = p["u_amp"] * np.ones(2) if p["u_amp"] != 0.0 else None
    return make_mech_network(
        MechanicalNetworkParams(force=p["u_mean"] * np.ones(2), force_amplitude=amplitude, frequency=p["omega"])
    )


def _state(mode: str, *x: float) -> Callable[[Parameters], HybridState]:
    return lambda _p: HybridState(mode=mode, x=np.array(x, dtype=np.float64))


def get_builtin_systems() -> list[BuiltinSystem]:
    systems: list[BuiltinSystem] = []
    systems.append(
        BuiltinSystem(
            name="example1",
            description="Two diagonal linear flows on the positive quadrant glued along x_1 = 1",
            defaults={"aL": 1.0, "bL": 1.0, "aR": 2.0, "bR": 1.0},
            builder=lambda p: make_example1(p["aL"], p["bL"], p["aR"], p["bR"]),
            initial=_state("R", 2.0, 1.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="planar-pwl",
            description="Planar spirals on the two half-planes with vertical rescaling at each crossing",
            defaults={
                "alpha_plus": -0.5,
                "alpha_minus": -0.5,
                "beta_plus": 1.0,
                "beta_minus": 1.0,
                "c_plus": 1.0,
                "c_minus": 1.0,
            },
            builder=lambda p: make_planar_pwl(**p),
            initial=_state("plus", 1.0, 0.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="traffic",
            description="Two-link freeway with supply switching and capacity-drop hysteresis",
            defaults={
                "q1": 2400.0,
                "q2": 1900.0,
                "theta": 33.0,
                "w": 20.0,
                "xjam": 160.0,
                "xbar": 65.0,
                "xunder": 35.0,
                "u_mean": 1400.0,
                "u_amp": 500.0,
                "u_period": 0.2,
            },
            builder=lambda p: make_traffic(_traffic_params(p)),
            initial=_traffic_initial,
        )
    )
    systems.append(
        BuiltinSystem(
            name="mech-1dof",
            description="A spring-damper mass dropping onto a rigid floor with plastic impact",
            defaults={"m": 1.0, "kappa": 1.0, "beta": 1.0, **_FORCING_DEFAULTS},
            builder=lambda p: make_mech_1dof(
                OneDofParams(mass=p["m"], stiffness=p["kappa"], damping=p["beta"], forcing=_forcing(p))
            ),
            initial=_state("free", 1.0, 0.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="mech-2dof",
            description="Two masses in series where the lower one lands on a rigid floor",
            defaults={"m": 1.0, "m2": 1.0, "kappa": 1.0, "kappa2": 1.0, "beta": 1.0, "beta2": 1.0, **_FORCING_DEFAULTS},
            builder=_two_dof,
            initial=_state("free", 1.0, 1.0, 0.0, 0.0),
            draw_ranges={"m2": (0.0, 10.0), "kappa": (0.0, 1000.0), "kappa2": (0.0, 1000.0), "beta2": (0.0, 10.0)},
        )
    )
    systems.append(
        BuiltinSystem(
            name="mech-soft",
            description="One mass on a compliant floor modeled as a unilateral spring",
            defaults={"m": 1.0, "kappa": 1.0, "kappa_contact": 10.0, "beta": 1.0, **_FORCING_DEFAULTS},
            builder=lambda p: make_mech_soft(
                SoftParams(
                    mass=p["m"],
                    stiffness=p["kappa"],
                    contact_stiffness=p["kappa_contact"],
                    damping=p["beta"],
                    forcing=_forcing(p),
                )
            ),
            initial=_state("free", 1.0, 0.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="mech-visco",
            description="The two-mass chain with a viscoelastic coupling element",
            defaults={
                "m": 1.0,
                "m2": 1.0,
                "kappa": 1.0,
                "kappa2": 1.0,
                "kappa3": 1.0,
                "beta": 1.0,
                "beta2": 1.0,
                **_FORCING_DEFAULTS,
            },
            builder=_visco,
            initial=_state("free", 1.0, 1.0, 0.0, 0.0, 0.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="mech-network",
            description="A two-degree-of-freedom spring-damper network with one unilateral constraint per mass",
            defaults=dict(_FORCING_DEFAULTS),
            builder=_network,
            initial=_state("free", 1.0, 1.0, 0.0, 0.0),
        )
    )
    systems.append(
        BuiltinSystem(
            name="toy-moving-guard",
            description="Two copies of the real line at rest with the guard x <= t sweeping the first",
            builder=lambda _p: make_moving_guard_toy(),
            initial=_state("1", 0.5),
        )
    )
    systems.append(
        BuiltinSystem(
            name="time-varying-reset",
            description="A drift into a wall followed by a reset that depends on the impact time",
            builder=lambda _p: make_time_varying_reset(),
            initial=_state("a", 1.0, 0.5),
        )
    )
    systems.append(
        BuiltinSystem(
            name="periodic-kick",
            description="Contracting linear flow doubled by a clock-driven reset every half period",
            defaults={"half_period": 1.5, "gain": 2.0},
            builder=lambda p: make_periodic_kick(p["half_period"], p["gain"]),
            initial=_state("a", 1.0, 1.0),
        )
    )
    return systems


def builtin_system(name: str) -> BuiltinSystem:
    for system in get_builtin_systems():
        if system.name == name:
            return system
    known = [system.name for system in get_builtin_systems()]
    raise ConfigurationError(f"Unknown built-in system {name!r}; choose one of {known}")
