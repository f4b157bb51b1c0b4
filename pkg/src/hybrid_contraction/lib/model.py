"""Data model for a hybrid system: modes with flows, guards that trigger transitions, and reset maps."""

import logging
from collections.abc import Callable
from typing import Any
from typing import Self

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from .arrays import FloatArray
from .arrays import Matrix
from .arrays import Vector
from .arrays import as_vector
from .config import BoxRegion
from .config import GuardPoint
from .config import transition_label
from .constants import DEFAULT_MAX_EVENTS_PER_UNIT_TIME
from .constants import FD_JACOBIAN_RELATIVE_STEP
from .exceptions import ConfigurationError
from .exceptions import DimensionMismatchError
from .exceptions import EvaluatorError
from .norms import NormSpec

logger = logging.getLogger(__name__)

type VectorFunction = Callable[[float, Vector], Any]
type MatrixFunction = Callable[[float, Vector], Any]
type ScalarFunction = Callable[[float, Vector], float]
type Predicate = Callable[[float, Vector], bool]
type GuardSampler = Callable[[np.random.Generator, int], list[GuardPoint]]
type TransitionKey = tuple[str, str]


def _evaluate(function: Callable[[float, Vector], Any], *, what: str, mode: str, t: float, x: Vector) -> Any:  # noqa: ANN401 # evaluator outputs are checked by the caller
    try:
        return function(t, x)
    except (ArithmeticError, ValueError, TypeError, IndexError) as e:
        raise EvaluatorError(f"{what} evaluation failed: {e}", mode=mode, t=t, x=x) from e


def _checked_vector(value: Any, *, dim: int, what: str, mode: str, t: float, x: Vector) -> Vector:  # noqa: ANN401 # evaluator output
    vector = np.atleast_1d(np.asarray(value, dtype=np.float64)).reshape(-1)
    if vector.shape[0] != dim:
        raise DimensionMismatchError(expected=dim, actual=vector.shape[0], what=f"{what} of mode {mode}")
    if not np.all(np.isfinite(vector)):
        raise EvaluatorError(f"{what} returned non-finite values {vector.tolist()}", mode=mode, t=t, x=x)
    return vector


def central_difference_jacobian(
    function: Callable[[Vector], Vector], x: Vector, *, out_dim: int, relative_step: float = FD_JACOBIAN_RELATIVE_STEP
) -> Matrix:
    """Fourth-order central differences with one step size h = relative_step * (1 + |x|_inf) for every coordinate."""
    dim = x.shape[0]
    jacobian = np.zeros((out_dim, dim))
    if dim == 0 or out_dim == 0:
        return jacobian
    h = relative_step * (1.0 + float(np.max(np.abs(x))))
    for index in range(dim):
        shift = np.zeros(dim)
        shift[index] = h
        jacobian[:, index] = (
            -function(x + 2 * shift) + 8 * function(x + shift) - 8 * function(x - shift) + function(x - 2 * shift)
        ) / (12 * h)
    return jacobian


def _time_difference(function: Callable[[float], Vector], t: float) -> Vector:
    h = FD_JACOBIAN_RELATIVE_STEP * (1.0 + abs(t))
    return (-function(t + 2 * h) + 8 * function(t + h) - 8 * function(t - h) + function(t - 2 * h)) / (12 * h)


class ModeSpec(BaseModel):
    """One discrete state: a flow on R^dim with its own norm.

    ``constraints`` returns a vector that is componentwise nonnegative inside the mode's domain and is only used to
    keep sampled states inside the domain. ``region`` is the default sampling box.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    dim: int = Field(ge=0)
    norm: NormSpec
    field: VectorFunction
    jacobian: MatrixFunction | None = None
    time_partial: VectorFunction | None = None
    constraints: VectorFunction | None = None
    region: BoxRegion | None = None

    @model_validator(mode="after")
    def _check_dimensions(self) -> Self:
        if self.norm.dim != self.dim:
            raise DimensionMismatchError(expected=self.dim, actual=self.norm.dim, what=f"norm of mode {self.id}")
        if self.region is not None and self.region.dim != self.dim:
            raise DimensionMismatchError(expected=self.dim, actual=self.region.dim, what=f"region of mode {self.id}")
        return self

    def evaluate_field(self, t: float, x: Vector) -> Vector:
        value = _evaluate(self.field, what="vector field", mode=self.id, t=t, x=x)
        return _checked_vector(value, dim=self.dim, what="vector field", mode=self.id, t=t, x=x)

    def contains(self, t: float, x: Vector, *, tolerance: float = 0.0) -> bool:
        if self.constraints is None:
            return True
        value = np.atleast_1d(np.asarray(self.constraints(t, x), dtype=np.float64))
        return bool(np.all(value >= -tolerance * (1.0 + np.abs(value))))


def jacobian_of_field(mode: ModeSpec, t: float, x: Vector) -> Matrix:
    """D_x F of a mode: the analytic Jacobian when supplied, else fourth-order central differences."""
    state = as_vector(x, dim=mode.dim)
    if mode.jacobian is not None:
        value = _evaluate(mode.jacobian, what="field Jacobian", mode=mode.id, t=t, x=state)
        matrix = np.asarray(value, dtype=np.float64).reshape(mode.dim, mode.dim)
        if not np.all(np.isfinite(matrix)):
            raise EvaluatorError("field Jacobian returned non-finite values", mode=mode.id, t=t, x=state)
        return matrix
    return central_difference_jacobian(lambda y: mode.evaluate_field(t, y), state, out_dim=mode.dim)


def finite_difference_field_jacobian(mode: ModeSpec, t: float, x: Vector) -> Matrix:
    state = as_vector(x, dim=mode.dim)
    return central_difference_jacobian(lambda y: mode.evaluate_field(t, y), state, out_dim=mode.dim)


def field_time_partial(mode: ModeSpec, t: float, x: Vector) -> Vector:
    """D_t F of a mode: the analytic partial when supplied, else central differences in t."""
    state = as_vector(x, dim=mode.dim)
    if mode.time_partial is not None:
        value = _evaluate(mode.time_partial, what="field time partial", mode=mode.id, t=t, x=state)
        return _checked_vector(value, dim=mode.dim, what="field time partial", mode=mode.id, t=t, x=state)
    return finite_difference_field_time_partial(mode, t, state)


def finite_difference_field_time_partial(mode: ModeSpec, t: float, x: Vector) -> Vector:
    state = as_vector(x, dim=mode.dim)
    return _time_difference(lambda s: mode.evaluate_field(s, state), t)


class GuardSpec(BaseModel):
    """Guard g_{j,j'}: the transition fires when g(t, x) <= 0 and ``active`` (if given) holds."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    target: str
    g: ScalarFunction
    grad_x: VectorFunction | None = None
    d_t: ScalarFunction | None = None
    active: Predicate | None = None

    @property
    def key(self) -> TransitionKey:
        return (self.source, self.target)

    def value(self, t: float, x: Vector) -> float:
        result = float(_evaluate(self.g, what=f"guard {transition_label(self.key)}", mode=self.source, t=t, x=x))
        if not np.isfinite(result):
            raise EvaluatorError(f"guard {transition_label(self.key)} is not finite", mode=self.source, t=t, x=x)
        return result

    def gradient(self, t: float, x: Vector) -> Vector:
        if self.grad_x is not None:
            value = _evaluate(self.grad_x, what="guard gradient", mode=self.source, t=t, x=x)
            return _checked_vector(value, dim=x.shape[0], what="guard gradient", mode=self.source, t=t, x=x)
        return central_difference_jacobian(lambda y: np.array([self.value(t, y)]), x, out_dim=1)[0]

    def time_derivative(self, t: float, x: Vector) -> float:
        if self.d_t is None:
            return 0.0
        return float(_evaluate(self.d_t, what="guard time derivative", mode=self.source, t=t, x=x))

    def is_active(self, t: float, x: Vector) -> bool:
        if self.active is None:
            return True
        return bool(self.active(t, x))


def guard_transversality(guard: GuardSpec, mode: ModeSpec, t: float, x: Vector) -> float:
    """D_t g + D_x g . F_j, negative when the flow crosses into the guard."""
    if mode.dim == 0:
        return guard.time_derivative(t, x)
    return guard.time_derivative(t, x) + float(guard.gradient(t, x) @ mode.evaluate_field(t, x))


class ResetSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    target: str
    map: VectorFunction
    jac_x: MatrixFunction | None = None
    d_t: VectorFunction | None = None

    @property
    def key(self) -> TransitionKey:
        return (self.source, self.target)


class Transition(BaseModel):
    """A guard and its reset, plus an optional explicit sampler of guard points."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    guard: GuardSpec
    reset: ResetSpec
    sampler: GuardSampler | None = None

    @model_validator(mode="after")
    def _check_keys(self) -> Self:
        if self.guard.key != self.reset.key:
            raise ConfigurationError(
                f"Guard {transition_label(self.guard.key)} and reset {transition_label(self.reset.key)} disagree"
            )
        return self

    @property
    def key(self) -> TransitionKey:
        return self.guard.key


class HybridState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: str
    x: FloatArray
    t: float = 0.0


class HybridSystemSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    modes: tuple[ModeSpec, ...]
    transitions: tuple[Transition, ...] = ()
    max_events_per_unit_time: int = Field(default=DEFAULT_MAX_EVENTS_PER_UNIT_TIME, ge=1)
    time_window: tuple[float, float] = (0.0, 1.0)

    @model_validator(mode="after")
    def _check_structure(self) -> Self:
        ids = [mode.id for mode in self.modes]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"Mode ids must be unique within {self.name}, got {ids}")
        keys: set[TransitionKey] = set()
        for transition in self.transitions:
            for endpoint in transition.key:
                if endpoint not in ids:
                    raise ConfigurationError(
                        f"Transition {transition_label(transition.key)} references unknown mode {endpoint}"
                    )
            if transition.key in keys:
                raise ConfigurationError(f"Transition {transition_label(transition.key)} is declared twice")
            keys.add(transition.key)
        if self.time_window[0] > self.time_window[1]:
            raise ConfigurationError(f"Time window {self.time_window} is reversed")
        return self

    def mode(self, mode_id: str) -> ModeSpec:
        for mode in self.modes:
            if mode.id == mode_id:
                return mode
        raise ConfigurationError(f"System {self.name} has no mode {mode_id!r}")

    def transition(self, key: TransitionKey) -> Transition:
        for transition in self.transitions:
            if transition.key == key:
                return transition
        raise ConfigurationError(f"System {self.name} has no transition {transition_label(key)}")

    def outgoing(self, mode_id: str) -> list[Transition]:
        return sorted((t for t in self.transitions if t.guard.source == mode_id), key=lambda t: t.key)

    def apply_reset(self, key: TransitionKey, t: float, x: Vector) -> Vector:
        transition = self.transition(key)
        target = self.mode(key[1])
        value = _evaluate(transition.reset.map, what=f"reset {transition_label(key)}", mode=key[0], t=t, x=x)
        return _checked_vector(value, dim=target.dim, what=f"reset {transition_label(key)}", mode=key[0], t=t, x=x)

    def reset_jacobian(self, key: TransitionKey, t: float, x: Vector) -> Matrix:
        transition = self.transition(key)
        target = self.mode(key[1])
        if transition.reset.jac_x is not None:
            value = _evaluate(transition.reset.jac_x, what="reset Jacobian", mode=key[0], t=t, x=x)
            return np.asarray(value, dtype=np.float64).reshape(target.dim, x.shape[0])
        return central_difference_jacobian(lambda y: self.apply_reset(key, t, y), x, out_dim=target.dim)

    def reset_time_derivative(self, key: TransitionKey, t: float, x: Vector) -> Vector:
        transition = self.transition(key)
        target = self.mode(key[1])
        if transition.reset.d_t is None:
            return np.zeros(target.dim)
        value = _evaluate(transition.reset.d_t, what="reset time derivative", mode=key[0], t=t, x=x)
        return _checked_vector(value, dim=target.dim, what="reset time derivative", mode=key[0], t=t, x=x)

    def finite_difference_reset_time_derivative(self, key: TransitionKey, t: float, x: Vector) -> Vector:
        return _time_difference(lambda s: self.apply_reset(key, s, x), t)

    def transversality(self, key: TransitionKey, t: float, x: Vector) -> float:
        return guard_transversality(self.transition(key).guard, self.mode(key[0]), t, x)

    def region(self, mode_id: str, overrides: dict[str, BoxRegion] | None = None) -> BoxRegion | None:
        if overrides is not None and mode_id in overrides:
            return overrides[mode_id]
        return self.mode(mode_id).region
