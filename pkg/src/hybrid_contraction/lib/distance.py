"""Upper bounds on the intrinsic distance between hybrid states at a frozen time.

Paths are chains of straight chords, one per mode, joined by jumps through resets. A jump at a point p of the closed
guard {g <= 0, applicable} costs nothing and moves the path from p to R(t, p), or back from R(t, p) to p. The
estimator enumerates chains of transitions, places the jump points by derivative-free coordinate descent with a
Newton projection onto the guard, and keeps the shortest chain found.

Two distinct states joined through a reset can be at distance zero; that is a property of the quotient, not a bug.
"""

import logging
import math
from collections.abc import Callable
from enum import StrEnum
from typing import Self

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from .arrays import FloatArray
from .arrays import Matrix
from .arrays import Vector
from .config import DistanceOptions
from .config import transition_label
from .constants import GUARD_GRADIENT_FLOOR
from .constants import ON_GUARD_TOLERANCE
from .exceptions import ConfigurationError
from .exceptions import EvaluatorError
from .exceptions import InvalidPathError
from .model import HybridState
from .model import HybridSystemSpec
from .model import TransitionKey
from .norms import vector_norm

logger = logging.getLogger(__name__)

_PROJECTION_STEPS = 20
_CHORD_CHECKS = 9
_DOMAIN_TOLERANCE = 1e-8

type Link = tuple[TransitionKey, bool]


class Exactness(StrEnum):
    """How far a reported distance can be trusted.

    EXACT is only given to a single straight chord inside one mode that stays within the mode's ``constraints`` and
    beats every enumerated chain. Chords inside a jump chain are not checked against ``constraints``, so an
    OPTIMIZED_UPPER_BOUND path may cut through points outside a mode's domain.
    """

    EXACT = "exact"
    OPTIMIZED_UPPER_BOUND = "optimized_upper_bound"
    UNREACHABLE = "unreachable"


class PathSegment(BaseModel):
    """A polyline inside one mode; ``waypoints`` has one row per vertex, endpoints included."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: str
    waypoints: FloatArray


class PathJump(BaseModel):
    """Crossing of transition ``source -> target`` at ``point`` (a state of ``source``).

    Forward jumps leave ``point`` and arrive at R(t, point); reverse jumps go the other way.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    target: str
    point: FloatArray
    forward: bool = True

    @property
    def key(self) -> TransitionKey:
        return (self.source, self.target)

    @property
    def departure(self) -> str:
        return self.source if self.forward else self.target

    @property
    def arrival(self) -> str:
        return self.target if self.forward else self.source


class PathCandidate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    segments: list[PathSegment]
    jumps: list[PathJump] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_chain(self) -> Self:
        if len(self.segments) != len(self.jumps) + 1:
            raise InvalidPathError(f"A path with {len(self.jumps)} jump(s) needs {len(self.jumps) + 1} segment(s)")
        for index, jump in enumerate(self.jumps):
            before, after = self.segments[index].mode, self.segments[index + 1].mode
            if (jump.departure, jump.arrival) != (before, after):
                raise InvalidPathError(
                    f"Jump {index} goes {jump.departure}->{jump.arrival} between segments in {before} and {after}"
                )
        return self


class DistanceEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    exactness: Exactness
    path: PathCandidate | None = None
    sequences: int = 0
    converged: bool = True


def _close(first: Vector, second: Vector) -> bool:
    if first.shape != second.shape:
        return False
    scale = 1.0 + float(np.max(np.abs(first), initial=0.0))
    return float(np.max(np.abs(first - second), initial=0.0)) <= ON_GUARD_TOLERANCE * scale


def _in_guard(system: HybridSystemSpec, key: TransitionKey, t: float, point: Vector) -> bool:
    guard = system.transition(key).guard
    source = system.mode(key[0])
    try:
        tolerance = ON_GUARD_TOLERANCE * (1.0 + float(np.linalg.norm(point)))
        return (
            guard.value(t, point) <= tolerance
            and guard.is_active(t, point)
            and source.contains(t, point, tolerance=_DOMAIN_TOLERANCE)
        )
    except EvaluatorError:
        return False


def _jump_ends(system: HybridSystemSpec, jump: PathJump, t: float) -> tuple[Vector, Vector]:
    image = system.apply_reset(jump.key, t, jump.point)
    return (jump.point, image) if jump.forward else (image, jump.point)


def _polyline_length(waypoints: Matrix, system: HybridSystemSpec, mode_id: str) -> float:
    norm = system.mode(mode_id).norm
    return sum(vector_norm(waypoints[i + 1] - waypoints[i], norm) for i in range(waypoints.shape[0] - 1))


def path_length(path: PathCandidate, system: HybridSystemSpec) -> float:
    """Sum of the segment lengths in their mode norms; jumps add nothing but must sit in their guards."""
    for index, segment in enumerate(path.segments):
        dim = system.mode(segment.mode).dim
        if segment.waypoints.ndim != 2 or segment.waypoints.shape[1] != dim or segment.waypoints.shape[0] < 1:  # noqa: PLR2004 # rows of vertices
            raise InvalidPathError(
                f"Segment {index} in mode {segment.mode} has waypoints of shape {segment.waypoints.shape}"
            )
    for index, jump in enumerate(path.jumps):
        if not _in_guard(system, jump.key, path.t, jump.point):
            raise InvalidPathError(
                f"Jump {index} point {jump.point.tolist()} is outside guard {transition_label(jump.key)} at t={path.t}"
            )
        leave, land = _jump_ends(system, jump, path.t)
        if not _close(path.segments[index].waypoints[-1], leave):
            raise InvalidPathError(f"Segment {index} does not end where jump {index} departs")
        if not _close(path.segments[index + 1].waypoints[0], land):
            raise InvalidPathError(f"Segment {index + 1} does not start where jump {index} arrives")
    return sum(_polyline_length(segment.waypoints, system, segment.mode) for segment in path.segments)


def concatenate_paths(first: PathCandidate, second: PathCandidate) -> PathCandidate:
    """The path that runs ``first`` and then ``second``; they must meet at one state of one mode."""
    if first.t != second.t:
        raise InvalidPathError(f"Paths live at different times {first.t} and {second.t}")
    tail, head = first.segments[-1], second.segments[0]
    if tail.mode != head.mode or not _close(tail.waypoints[-1], head.waypoints[0]):
        raise InvalidPathError("Paths do not meet at a common state")
    joined = PathSegment(mode=tail.mode, waypoints=np.vstack([tail.waypoints, head.waypoints[1:]]))
    return PathCandidate(
        t=first.t,
        segments=[*first.segments[:-1], joined, *second.segments[1:]],
        jumps=[*first.jumps, *second.jumps],
    )


def _link_sequences(system: HybridSystemSpec, start: str, end: str, depth: int) -> list[list[Link]]:
    """Chains of at most ``depth`` links from ``start`` to ``end`` that never revisit a mode, except to close a loop
    when ``start == end``."""
    transitions = sorted(system.transitions, key=lambda transition: transition.key)
    sequences: list[list[Link]] = []

    def extend(mode: str, visited: set[str], links: list[Link]) -> None:
        if len(links) == depth:
            return
        for transition in transitions:
            for forward in (True, False):
                here, there = transition.key if forward else transition.key[::-1]
                if here != mode:
                    continue
                chain = [*links, (transition.key, forward)]
                if there == end:
                    sequences.append(chain)
                elif there not in visited:
                    extend(there, visited | {there}, chain)

    extend(start, {start}, [])
    return sequences


class _ChainObjective:
    """Length of the chord chain through projected jump points, as a function of the stacked jump points."""

    def __init__(self, system: HybridSystemSpec, links: list[Link], a: HybridState, b: HybridState):
        self.system = system
        self.links = links
        self.a = a
        self.b = b
        self.t = a.t
        self.dims = [system.mode(key[0]).dim for key, _ in links]
        self.offsets = np.cumsum([0, *self.dims])

    def split(self, flat: Vector) -> list[Vector]:
        return [flat[self.offsets[i] : self.offsets[i + 1]] for i in range(len(self.links))]

    def project(self, key: TransitionKey, point: Vector) -> Vector | None:
        guard = self.system.transition(key).guard
        p = point.copy()
        try:
            for _ in range(_PROJECTION_STEPS):
                g = guard.value(self.t, p)
                if g <= ON_GUARD_TOLERANCE * (1.0 + float(np.linalg.norm(p))) or p.shape[0] == 0:
                    break
                gradient = guard.gradient(self.t, p)
                squared = float(gradient @ gradient)
                if squared <= GUARD_GRADIENT_FLOOR**2:
                    return None
                p = p - g * gradient / squared
        except EvaluatorError:
            return None
        return p if _in_guard(self.system, key, self.t, p) else None

    def jumps(self, flat: Vector) -> list[PathJump] | None:
        jumps: list[PathJump] = []
        for (key, forward), point in zip(self.links, self.split(flat), strict=True):
            projected = self.project(key, point)
            if projected is None:
                return None
            jumps.append(PathJump(source=key[0], target=key[1], point=projected, forward=forward))
        return jumps

    def vertices(self, jumps: list[PathJump]) -> list[tuple[str, Vector, Vector]]:
        """(mode, start, end) of every chord."""
        chords: list[tuple[str, Vector, Vector]] = []
        mode, position = self.a.mode, self.a.x
        for jump in jumps:
            leave, land = _jump_ends(self.system, jump, self.t)
            chords.append((mode, position, leave))
            mode, position = jump.arrival, land
        chords.append((mode, position, self.b.x))
        return chords

    def __call__(self, flat: Vector) -> tuple[Vector, float]:
        jumps = self.jumps(flat)
        if jumps is None:
            return flat, math.inf
        try:
            chords = self.vertices(jumps)
        except EvaluatorError:
            return flat, math.inf
        length = sum(vector_norm(end - start, self.system.mode(mode).norm) for mode, start, end in chords)
        projected = np.concatenate([jump.point for jump in jumps]) if jumps else flat
        return projected, length


def _coordinate_descent(
    objective: Callable[[Vector], tuple[Vector, float]], start: Vector, options: DistanceOptions
) -> tuple[Vector, float, bool]:
    x, value = objective(start)
    if not math.isfinite(value):
        return x, value, False
    step = options.initial_step * (1.0 + float(np.max(np.abs(x), initial=0.0)))
    sweeps = 0
    while step > options.tolerance and sweeps < options.max_sweeps:
        sweeps += 1
        improved = False
        for index in range(x.shape[0]):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[index] += sign * step
                candidate, trial_value = objective(trial)
                if trial_value < value:
                    x, value, improved = candidate, trial_value, True
                    break
        if not improved:
            step *= 0.5
    return x, value, step <= options.tolerance


def _starts(
    system: HybridSystemSpec, objective: _ChainObjective, options: DistanceOptions, warm: Vector | None
) -> list[Vector]:
    """Warm start first, then interpolations between the endpoints, the endpoints themselves and random points."""
    rng = np.random.default_rng(options.seed)
    count = len(objective.links)

    def anchored(pick: Callable[[int, int], Vector]) -> Vector:
        return np.concatenate([pick(i, dim) for i, dim in enumerate(objective.dims)]) if count else np.zeros(0)

    def center(index: int, dim: int) -> Vector:
        region = system.region(objective.links[index][0][0])
        return region.center if region is not None else np.zeros(dim)

    def blend(index: int, dim: int) -> Vector:
        a, b = objective.a.x, objective.b.x
        if a.shape[0] == dim and b.shape[0] == dim:
            weight = (index + 1) / (count + 1)
            return (1 - weight) * a + weight * b
        return center(index, dim)

    def endpoint(which: HybridState) -> Callable[[int, int], Vector]:
        return lambda index, dim: which.x.copy() if which.x.shape[0] == dim else center(index, dim)

    def scattered(index: int, dim: int) -> Vector:
        region = system.region(objective.links[index][0][0])
        if region is None:
            return rng.standard_normal(dim)
        return region.scale(rng.uniform(size=dim))

    starts = [] if warm is None else [warm]
    starts.extend([anchored(blend), anchored(endpoint(objective.a)), anchored(endpoint(objective.b))])
    while len(starts) < max(options.restarts, 1) + (warm is not None):
        starts.append(anchored(scattered))
    return starts


def _straight_path(mode: str, start: Vector, end: Vector, waypoints: int) -> PathSegment:
    weights = np.linspace(0.0, 1.0, waypoints + 2)[:, np.newaxis]
    return PathSegment(mode=mode, waypoints=(1 - weights) * start + weights * end)


def _assemble(objective: _ChainObjective, flat: Vector, options: DistanceOptions) -> PathCandidate:
    jumps = objective.jumps(flat)
    assert jumps is not None, "An optimized chain must have feasible jump points"
    segments = [
        _straight_path(mode, start, end, options.waypoints) for mode, start, end in objective.vertices(jumps)
    ]
    return PathCandidate(t=objective.t, segments=segments, jumps=jumps)


def _chord_inside(system: HybridSystemSpec, mode_id: str, t: float, a: Vector, b: Vector) -> bool:
    mode = system.mode(mode_id)
    return all(
        mode.contains(t, (1 - s) * a + s * b, tolerance=_DOMAIN_TOLERANCE) for s in np.linspace(0, 1, _CHORD_CHECKS)
    )


def _warm_links(warm_start: PathCandidate | None, a: HybridState, b: HybridState) -> tuple[list[Link], Vector] | None:
    if warm_start is None:
        return None
    if (warm_start.segments[0].mode, warm_start.segments[-1].mode) != (a.mode, b.mode):
        logger.warning(f"Warm start runs {warm_start.segments[0].mode}->{warm_start.segments[-1].mode}; ignored")
        return None
    links = [(jump.key, jump.forward) for jump in warm_start.jumps]
    flat = np.concatenate([jump.point for jump in warm_start.jumps]) if warm_start.jumps else np.zeros(0)
    return links, flat


def distance(  # noqa: PLR0913 # two states and their common time plus keyword options
    system: HybridSystemSpec,
    a: HybridState,
    b: HybridState,
    t: float,
    options: DistanceOptions | None = None,
    *,
    warm_start: PathCandidate | None = None,
) -> DistanceEstimate:
    """Shortest chord chain found between ``a`` and ``b`` at time ``t``; an upper bound on the intrinsic distance.

    Segments are unrestricted chords in R^n of their mode: only the single-chord candidate of a same-mode pair is
    tested against the mode's ``constraints``, and only that test can make the result exact. Chords between jump points
    may leave the mode's domain, which keeps the estimate an upper bound over chord chains rather than over paths
    confined to the domain.
    """
    settings = DistanceOptions() if options is None else options
    if a.t != t or b.t != t:
        raise ConfigurationError(f"Both states must be taken at t={t}, got {a.t} and {b.t}")
    for state in (a, b):
        if state.x.shape[0] != system.mode(state.mode).dim:
            raise ConfigurationError(f"State {state.x.tolist()} does not live in mode {state.mode}")
    best_value = math.inf
    best_path: PathCandidate | None = None
    if a.mode == b.mode:
        best_value = vector_norm(b.x - a.x, system.mode(a.mode).norm)
        best_path = PathCandidate(t=t, segments=[_straight_path(a.mode, a.x, b.x, settings.waypoints)])
    chord = best_value
    if best_value == 0.0:
        return DistanceEstimate(value=0.0, exactness=Exactness.EXACT, path=best_path)
    sequences = _link_sequences(system, a.mode, b.mode, settings.depth)
    warm = _warm_links(warm_start, a, b)
    if warm is not None and warm[0] and warm[0] not in sequences:
        sequences.insert(0, warm[0])
    converged = True
    for links in sequences:
        objective = _ChainObjective(system, links, a, b)
        warm_point = warm[1] if warm is not None and warm[0] == links else None
        for start in _starts(system, objective, settings, warm_point):
            point, value, done = _coordinate_descent(objective, start, settings)
            if not math.isfinite(value):
                continue
            converged = converged and done
            if value < best_value:
                best_value = value
                best_path = _assemble(objective, point, settings)
        if best_value <= settings.tolerance:
            break
    if best_path is None:
        logger.info(f"No chain of at most {settings.depth} transition(s) joins {a.mode} and {b.mode}")
        return DistanceEstimate(value=math.inf, exactness=Exactness.UNREACHABLE, sequences=len(sequences))
    if not converged:
        logger.warning(f"Distance optimization did not converge; best value {best_value} is still an upper bound")
    exact = (
        a.mode == b.mode
        and chord <= best_value + settings.tolerance
        and _chord_inside(system, a.mode, t, a.x, b.x)
    )
    return DistanceEstimate(
        value=path_length(best_path, system),
        exactness=Exactness.EXACT if exact else Exactness.OPTIMIZED_UPPER_BOUND,
        path=best_path,
        sequences=len(sequences),
        converged=converged,
    )
