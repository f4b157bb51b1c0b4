import logging
import math
from typing import Any
from typing import Literal

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from .arrays import FloatArray
from .arrays import Vector
from .constants import DEFAULT_DISTANCE_DEPTH
from .constants import DEFAULT_DISTANCE_RESTARTS
from .constants import DEFAULT_DISTANCE_WAYPOINTS
from .constants import DEFAULT_SEED
from .constants import DISTANCE_TOLERANCE
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

type IntegratorMethod = Literal["RK45", "DOP853", "RK4"]


class IntegratorOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: IntegratorMethod = "RK45"
    rtol: float = Field(default=1e-10, gt=0.0)
    atol: float = Field(default=1e-12, gt=0.0)
    max_step: float = Field(default=math.inf, gt=0.0)
    fixed_step: float = Field(default=1e-3, gt=0.0)
    zero_dim_step: float = Field(default=1e-2, gt=0.0)


ORACLE_INTEGRATOR = IntegratorOptions(method="DOP853", rtol=1e-12, atol=1e-12)


class DistanceOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    depth: int = Field(default=DEFAULT_DISTANCE_DEPTH, ge=0)
    waypoints: int = Field(default=DEFAULT_DISTANCE_WAYPOINTS, ge=0)
    restarts: int = Field(default=DEFAULT_DISTANCE_RESTARTS, ge=0)
    max_sweeps: int = Field(default=400, ge=1)
    initial_step: float = Field(default=0.5, gt=0.0)
    tolerance: float = Field(default=DISTANCE_TOLERANCE, gt=0.0)
    seed: int = DEFAULT_SEED


class BoxRegion(BaseModel):
    """Axis-aligned box used for sampling states of one mode."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: FloatArray
    upper: FloatArray

    @model_validator(mode="after")
    def _check_bounds(self) -> "BoxRegion":
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ConfigurationError(
                f"Region bounds must be vectors of equal length, got {self.lower.shape} and {self.upper.shape}"
            )
        if np.any(self.lower > self.upper):
            raise ConfigurationError(f"Region lower bound {self.lower.tolist()} exceeds upper {self.upper.tolist()}")
        return self

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def center(self) -> Vector:
        return 0.5 * (self.lower + self.upper)

    def scale(self, unit: Vector) -> Vector:
        return self.lower + unit * (self.upper - self.lower)


def box(lower: list[float], upper: list[float]) -> BoxRegion:
    return BoxRegion(lower=np.asarray(lower, dtype=np.float64), upper=np.asarray(upper, dtype=np.float64))


class GuardPoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    x: FloatArray


class SamplingPlan(BaseModel):
    """How certification samples each mode and guard.

    ``regions`` and ``guard_points`` override the system defaults; guard points are keyed ``"source->target"``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    regions: dict[str, BoxRegion] = Field(default_factory=dict)
    state_samples: int = Field(default=256, ge=1)
    grid_per_axis: int = Field(default=0, ge=0)
    guard_samples: int = Field(default=64, ge=1)
    times: tuple[float, ...] | None = None
    guard_points: dict[str, list[GuardPoint]] = Field(default_factory=dict)
    refine_witnesses: bool = True
    seed: int = DEFAULT_SEED

    @model_validator(mode="after")
    def _check_times(self) -> "SamplingPlan":
        if self.times is not None and len(self.times) == 0:
            raise ConfigurationError("A sampling plan needs at least one time sample when times are given")
        return self


def transition_label(key: tuple[str, str]) -> str:
    return f"{key[0]}->{key[1]}"


class RunConfig(BaseModel):
    """Fully resolved command-line configuration, embedded in every output file."""

    model_config = ConfigDict(frozen=True)

    command: str
    system: str
    parameters: dict[str, float] = Field(default_factory=dict)
    config_path: str | None = None
    seed: int = DEFAULT_SEED
    out_dir: str = "."
    tol: float = 1e-9
    options: dict[str, Any] = Field(default_factory=dict)
