"""Event-driven simulation: flow within a mode, locate the time of impact on a guard, apply the reset, repeat."""

import logging
from collections import deque
from enum import StrEnum
from typing import Self

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator
from scipy.integrate import DenseOutput
from scipy.optimize import brentq

from .arrays import FloatArray
from .arrays import Vector
from .arrays import as_vector
from .config import IntegratorOptions
from .config import transition_label
from .constants import EVENT_G_TOLERANCE
from .constants import EVENT_TIME_TOLERANCE
from .constants import TRANSVERSALITY_TOLERANCE
from .exceptions import ConfigurationError
from .exceptions import EvaluatorError
from .exceptions import GrazingError
from .exceptions import OffGuardError
from .exceptions import SimulationError
from .integrators import integrator_order
from .integrators import make_stepper
from .model import GuardSpec
from .model import HybridState
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import TransitionKey
from .model import guard_transversality

logger = logging.getLogger(__name__)

_TIE_WINDOW_FACTOR = 10.0
_ZENO_WINDOW = 1.0


class TrajectoryStatus(StrEnum):
    COMPLETED = "completed"
    ZENO_CUTOFF = "zeno_cutoff"
    EVALUATOR_ERROR = "evaluator_error"


class TrajectoryArc(BaseModel):
    """A smooth piece of a trajectory inside one mode; ``pieces[i]`` interpolates between knots i and i+1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: str
    t_start: float
    t_end: float
    knots_t: FloatArray
    knots_x: FloatArray
    order: int
    pieces: list[DenseOutput] = Field(default_factory=list, exclude=True, repr=False)

    @model_validator(mode="after")
    def _check_span(self) -> Self:
        assert self.t_start < self.t_end, f"Arcs must have positive length, got [{self.t_start}, {self.t_end}]"
        assert len(self.pieces) == self.knots_t.shape[0] - 1, "Each pair of consecutive knots needs one interpolant"
        return self

    @property
    def dim(self) -> int:
        return int(self.knots_x.shape[1])

    def state(self, t: float) -> Vector:
        assert self.t_start - EVENT_TIME_TOLERANCE * (1 + abs(t)) <= t <= self.t_end + EVENT_TIME_TOLERANCE * (
            1 + abs(t)
        ), f"t={t} is outside the arc [{self.t_start}, {self.t_end}]"
        if t >= self.t_end:
            return self.knots_x[-1].copy()
        if t <= self.t_start:
            return self.knots_x[0].copy()
        index = int(np.searchsorted(self.knots_t, t, side="right")) - 1
        index = min(max(index, 0), len(self.pieces) - 1)
        return np.asarray(self.pieces[index](t), dtype=np.float64).reshape(self.dim)


class ResetEvent(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    source: str
    target: str
    x_minus: FloatArray
    x_plus: FloatArray
    transversality: float
    g_value: float = 0.0

    @property
    def guard(self) -> TransitionKey:
        return (self.source, self.target)


class HybridTrajectory(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    initial_state: HybridState
    t_end: float
    arcs: list[TrajectoryArc]
    events: list[ResetEvent]
    status: TrajectoryStatus
    final_state: HybridState
    message: str | None = None

    def timeline(self) -> list[TrajectoryArc | ResetEvent]:
        """Arcs and events in chronological order; an event at time t precedes an arc starting at t."""
        ordered: list[TrajectoryArc | ResetEvent] = []
        event_index = 0
        for arc in self.arcs:
            while event_index < len(self.events) and self.events[event_index].t <= arc.t_start:
                ordered.append(self.events[event_index])
                event_index += 1
            ordered.append(arc)
        ordered.extend(self.events[event_index:])
        return ordered

    def state_at(self, t: float) -> HybridState:
        """Right-continuous state: at an event time this is the state after every reset at that instant."""
        if t < self.initial_state.t:
            raise ConfigurationError(f"t={t} precedes the trajectory start {self.initial_state.t}")
        if t > self.final_state.t:
            raise ConfigurationError(f"t={t} is past the trajectory end {self.final_state.t}")
        mode = self.initial_state.mode
        x = np.asarray(self.initial_state.x, dtype=np.float64)
        for item in self.timeline():
            if isinstance(item, ResetEvent):
                if item.t > t:
                    break
                mode, x = item.target, item.x_plus
            else:
                if item.t_start > t:
                    break
                mode, x = item.mode, item.state(min(t, item.t_end))
        return HybridState(mode=mode, x=x, t=t)

    def event_keys(self) -> list[TransitionKey]:
        return [event.guard for event in self.events]


class ImpactTime(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    x: FloatArray


class _ZenoCutoffError(Exception):
    pass


def _g_tolerance(x: Vector) -> float:
    return EVENT_G_TOLERANCE * (1.0 + float(np.max(np.abs(x), initial=0.0)))


def _check_transverse(guard: GuardSpec, mode: ModeSpec, t: float, x: Vector) -> float:
    transversality = guard_transversality(guard, mode, t, x)
    speed = float(np.linalg.norm(mode.evaluate_field(t, x))) if mode.dim > 0 else 0.0
    if transversality >= -TRANSVERSALITY_TOLERANCE * (1.0 + speed):
        raise GrazingError(guard=guard.key, t=t, transversality=transversality)
    return transversality


def _refine_crossing(guard: GuardSpec, dense: DenseOutput, t_old: float, t_new: float, g_new: float) -> float:
    if g_new == 0.0:
        return t_new

    def along_step(s: float) -> float:
        return guard.value(s, np.asarray(dense(s), dtype=np.float64).reshape(-1))

    return float(brentq(along_step, t_old, t_new, xtol=EVENT_TIME_TOLERANCE * (1.0 + abs(t_new))))


class HybridSimulator:
    def __init__(self, system: HybridSystemSpec, options: IntegratorOptions | None = None):
        self.system = system
        self.options = IntegratorOptions() if options is None else options
        self._recent_events: deque[float] = deque()

    def run(self, init: HybridState, t_end: float) -> HybridTrajectory:
        if t_end < init.t:
            raise ConfigurationError(f"Backward simulation is not supported (t_end={t_end} < t0={init.t})")
        mode = init.mode
        x = as_vector(init.x, dim=self.system.mode(mode).dim)
        t = init.t
        initial = HybridState(mode=mode, x=x.copy(), t=t)
        arcs: list[TrajectoryArc] = []
        events: list[ResetEvent] = []
        status = TrajectoryStatus.COMPLETED
        message: str | None = None
        self._recent_events.clear()
        try:
            while True:
                while (key := self._immediate_transition(mode, t, x)) is not None:
                    event = self._reset_event(key, t, x, transversality=self.system.transversality(key, t, x))
                    events.append(event)
                    mode, x = event.target, event.x_plus
                    self._count_event(t)
                if t >= t_end:
                    break
                arc, hit = self._integrate_arc(mode, t, x, t_end)
                if arc is not None:
                    arcs.append(arc)
                if hit is None:
                    assert arc is not None, "An arc without events must reach t_end"
                    t, x = arc.t_end, arc.knots_x[-1].copy()
                    break
                key, t, x_hit = hit
                source = self.system.mode(mode)
                transversality = _check_transverse(self.system.transition(key).guard, source, t, x_hit)
                event = self._reset_event(key, t, x_hit, transversality=transversality)
                events.append(event)
                logger.debug(f"Event {transition_label(key)} at t={t}")
                mode, x = event.target, event.x_plus
                self._count_event(t)
        except _ZenoCutoffError as e:
            status = TrajectoryStatus.ZENO_CUTOFF
            message = str(e)
            logger.warning(message)
        except EvaluatorError as e:
            status = TrajectoryStatus.EVALUATOR_ERROR
            message = str(e)
            logger.warning(f"Simulation of {self.system.name} stopped: {message}")
        logger.debug(f"Simulated {self.system.name} to t={t} with {len(events)} event(s), status {status}")
        return HybridTrajectory(
            initial_state=initial,
            t_end=t_end,
            arcs=arcs,
            events=events,
            status=status,
            final_state=HybridState(mode=mode, x=x, t=t),
            message=message,
        )

    def _count_event(self, t: float) -> None:
        self._recent_events.append(t)
        while self._recent_events and self._recent_events[0] <= t - _ZENO_WINDOW:
            _ = self._recent_events.popleft()
        if len(self._recent_events) > self.system.max_events_per_unit_time:
            raise _ZenoCutoffError(
                f"More than {self.system.max_events_per_unit_time} events within one time unit ending at t={t}"
            )

    def _reset_event(self, key: TransitionKey, t: float, x: Vector, *, transversality: float) -> ResetEvent:
        x_plus = self.system.apply_reset(key, t, x)
        return ResetEvent(
            t=t,
            source=key[0],
            target=key[1],
            x_minus=x.copy(),
            x_plus=x_plus,
            transversality=transversality,
            g_value=self.system.transition(key).guard.value(t, x),
        )

    def _immediate_transition(self, mode_id: str, t: float, x: Vector) -> TransitionKey | None:
        """A guard that is already entered at (t, x), or is at zero and about to be entered, fires at once."""
        tolerance = _g_tolerance(x)
        source = self.system.mode(mode_id)
        candidates: list[tuple[float, TransitionKey]] = []
        for transition in self.system.outgoing(mode_id):
            guard = transition.guard
            if not guard.is_active(t, x):
                continue
            g = guard.value(t, x)
            if g < -tolerance:
                candidates.append((g, transition.key))
            elif abs(g) <= tolerance:
                speed = float(np.linalg.norm(source.evaluate_field(t, x))) if source.dim > 0 else 0.0
                if guard_transversality(guard, source, t, x) < -TRANSVERSALITY_TOLERANCE * (1.0 + speed):
                    candidates.append((g, transition.key))
        if not candidates:
            return None
        return min(candidates)[1]

    def _integrate_arc(
        self, mode_id: str, t0: float, x0: Vector, t_end: float
    ) -> tuple[TrajectoryArc | None, tuple[TransitionKey, float, Vector] | None]:
        mode = self.system.mode(mode_id)
        stepper = make_stepper(mode.evaluate_field, t0, x0, t_end, self.options)
        outgoing = self.system.outgoing(mode_id)
        g_previous = {transition.key: transition.guard.value(t0, x0) for transition in outgoing}
        knots_t: list[float] = [t0]
        knots_x: list[Vector] = [x0.copy()]
        pieces: list[DenseOutput] = []
        hit: tuple[TransitionKey, float, Vector] | None = None
        while stepper.status == "running":
            message = stepper.step()
            if stepper.status == "failed":
                raise SimulationError(f"Integrator failed in mode {mode_id} at t={stepper.t}: {message}")
            t_old = float(stepper.t_old) if stepper.t_old is not None else t0
            t_new = float(stepper.t)
            y_new = np.asarray(stepper.y, dtype=np.float64).copy()
            dense = stepper.dense_output()
            g_new = {transition.key: transition.guard.value(t_new, y_new) for transition in outgoing}
            hit = self._earliest_crossing(mode_id, g_previous, g_new, dense, t_old, t_new)
            if hit is not None:
                if hit[1] > knots_t[-1]:
                    knots_t.append(hit[1])
                    knots_x.append(hit[2])
                    pieces.append(dense)
                break
            if t_new > knots_t[-1]:
                knots_t.append(t_new)
                knots_x.append(y_new)
                pieces.append(dense)
            g_previous = g_new
        if len(knots_t) < 2:  # noqa: PLR2004 # an arc needs two knots
            return None, hit
        arc = TrajectoryArc(
            mode=mode_id,
            t_start=knots_t[0],
            t_end=knots_t[-1],
            knots_t=np.asarray(knots_t),
            knots_x=np.asarray(knots_x, dtype=np.float64).reshape(len(knots_t), mode.dim),
            order=integrator_order(self.options) if mode.dim > 0 else 4,
            pieces=pieces,
        )
        return arc, hit

    def _earliest_crossing(  # noqa: PLR0913 # the step's endpoints, guard values and interpolant
        self,
        mode_id: str,
        g_previous: dict[TransitionKey, float],
        g_new: dict[TransitionKey, float],
        dense: DenseOutput,
        t_old: float,
        t_new: float,
    ) -> tuple[TransitionKey, float, Vector] | None:
        crossings: list[tuple[float, TransitionKey]] = []
        for transition in self.system.outgoing(mode_id):
            key = transition.key
            if not (g_previous[key] > 0.0 >= g_new[key]):
                continue
            t_hit = _refine_crossing(transition.guard, dense, t_old, t_new, g_new[key])
            x_hit = np.asarray(dense(t_hit), dtype=np.float64).reshape(-1)
            if not transition.guard.is_active(t_hit, x_hit):
                logger.debug(f"Guard {transition_label(key)} crossed at t={t_hit} while not applicable")
                continue
            crossings.append((t_hit, key))
        if not crossings:
            return None
        first = min(time for time, _ in crossings)
        window = _TIE_WINDOW_FACTOR * EVENT_TIME_TOLERANCE * (1.0 + abs(first))
        tied = [key for time, key in crossings if time - first <= window]
        t_star = max(time for time, key in crossings if key in tied)
        x_star = np.asarray(dense(t_star), dtype=np.float64).reshape(-1)
        chosen = min((self.system.transition(key).guard.value(t_star, x_star), key) for key in tied)[1]
        if len(tied) > 1:
            logger.info(f"Guards {[transition_label(k) for k in tied]} fire together at t={t_star}; taking {chosen}")
        return chosen, t_star, x_star


def simulate(
    system: HybridSystemSpec, init: HybridState, t_end: float, *, options: IntegratorOptions | None = None
) -> HybridTrajectory:
    """Trajectory from ``init`` until ``t_end``; an event exactly at ``t_end`` is applied."""
    return HybridSimulator(system, options).run(init, t_end)


def time_of_impact(  # noqa: PLR0913 # mode, guard and initial condition plus keyword options
    mode: ModeSpec,
    guard: GuardSpec,
    t0: float,
    x0: Vector,
    horizon: float,
    *,
    options: IntegratorOptions | None = None,
) -> ImpactTime | None:
    """First time in [t0, t0 + horizon] at which the flow of ``mode`` enters ``{g <= 0}``, or None."""
    state = as_vector(x0, dim=mode.dim)
    if guard.value(t0, state) <= 0.0:
        raise OffGuardError(f"Initial state is already inside guard {transition_label(guard.key)}")
    settings = IntegratorOptions() if options is None else options
    stepper = make_stepper(mode.evaluate_field, t0, state, t0 + horizon, settings)
    g_old = guard.value(t0, state)
    while stepper.status == "running":
        message = stepper.step()
        if stepper.status == "failed":
            raise SimulationError(f"Integrator failed in mode {mode.id} at t={stepper.t}: {message}")
        t_new = float(stepper.t)
        y_new = np.asarray(stepper.y, dtype=np.float64)
        g_new = guard.value(t_new, y_new)
        if g_old > 0.0 >= g_new:
            dense = stepper.dense_output()
            t_old = float(stepper.t_old) if stepper.t_old is not None else t0
            t_hit = _refine_crossing(guard, dense, t_old, t_new, g_new)
            x_hit = np.asarray(dense(t_hit), dtype=np.float64).reshape(-1)
            _ = _check_transverse(guard, mode, t_hit, x_hit)
            return ImpactTime(t=t_hit, x=x_hit)
        g_old = g_new
    return None
