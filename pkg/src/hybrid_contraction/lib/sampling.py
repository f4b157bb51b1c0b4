"""Deterministic sampling of mode states and guard points for certification and validation."""

import itertools
import logging
from collections.abc import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .arrays import Matrix
from .arrays import Vector
from .config import BoxRegion
from .config import GuardPoint
from .config import SamplingPlan
from .config import transition_label
from .constants import ON_GUARD_TOLERANCE
from .exceptions import EvaluatorError
from .model import HybridSystemSpec
from .model import TransitionKey

logger = logging.getLogger(__name__)

_RAY_SCAN_POINTS = 33
_MAX_ATTEMPTS_PER_POINT = 8
_REGION_SLACK = 1e-9


def time_samples(system: HybridSystemSpec, plan: SamplingPlan) -> list[float]:
    if plan.times is not None:
        return list(plan.times)
    start, stop = system.time_window
    if start == stop:
        return [start]
    return [start, 0.5 * (start + stop), stop]


def halton_unit_points(dim: int, count: int, seed: int) -> Matrix:
    if dim == 0:
        return np.zeros((count, 0))
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(count)


def grid_unit_points(dim: int, per_axis: int) -> Matrix:
    if per_axis == 0 or dim == 0:
        return np.zeros((0, dim))
    axis = np.linspace(0.0, 1.0, per_axis)
    return np.array(list(itertools.product(axis, repeat=dim)), dtype=np.float64)


def sample_mode_states(system: HybridSystemSpec, mode_id: str, plan: SamplingPlan) -> list[GuardPoint]:
    """States inside one mode: a grid (if requested) plus scrambled Halton points, at every sampled time."""
    mode = system.mode(mode_id)
    times = time_samples(system, plan)
    if mode.dim == 0:
        return [GuardPoint(t=t, x=np.zeros(0)) for t in times]
    region = system.region(mode_id, plan.regions)
    if region is None:
        logger.warning(f"Mode {mode_id} of {system.name} has no sampling region; it is not sampled")
        return []
    unit = np.vstack(
        [
            grid_unit_points(mode.dim, plan.grid_per_axis),
            halton_unit_points(mode.dim, plan.state_samples, plan.seed + _mode_offset(system, mode_id)),
        ]
    )
    points: list[GuardPoint] = []
    for t in times:
        for row in unit:
            x = region.scale(row)
            if mode.contains(t, x, tolerance=1e-12):
                points.append(GuardPoint(t=t, x=x))
    return points


def _mode_offset(system: HybridSystemSpec, mode_id: str) -> int:
    return [mode.id for mode in system.modes].index(mode_id)


def _transition_offset(system: HybridSystemSpec, key: TransitionKey) -> int:
    return 1000 + [transition.key for transition in system.transitions].index(key)


def _on_guard(system: HybridSystemSpec, key: TransitionKey, point: GuardPoint) -> bool:
    transition = system.transition(key)
    source = system.mode(key[0])
    try:
        if abs(transition.guard.value(point.t, point.x)) > ON_GUARD_TOLERANCE * (1.0 + float(np.linalg.norm(point.x))):
            return False
        return transition.guard.is_active(point.t, point.x) and source.contains(point.t, point.x, tolerance=1e-8)
    except EvaluatorError:
        return False


def _bracketed_roots(function: Callable[[float], float], lower: float, upper: float) -> list[float]:
    grid = np.linspace(lower, upper, _RAY_SCAN_POINTS)
    values = [function(float(s)) for s in grid]
    roots: list[float] = []
    for index in range(len(grid) - 1):
        left, right = values[index], values[index + 1]
        if left == 0.0:
            roots.append(float(grid[index]))
        elif left * right < 0.0:
            roots.append(float(brentq(function, float(grid[index]), float(grid[index + 1]), xtol=1e-15)))
    return roots


def _inside(region: BoxRegion, x: Vector) -> bool:
    slack = _REGION_SLACK * (1.0 + (region.upper - region.lower))
    return bool(np.all(x >= region.lower - slack) and np.all(x <= region.upper + slack))


def _ray_guard_points(  # noqa: PLR0913 # every argument is keyword-only
    system: HybridSystemSpec,
    key: TransitionKey,
    *,
    region: BoxRegion | None,
    times: list[float],
    count: int,
    seed: int,
) -> list[GuardPoint]:
    guard = system.transition(key).guard
    source = system.mode(key[0])
    rng = np.random.default_rng(seed)
    found: list[GuardPoint] = []
    if source.dim == 0:
        empty = np.zeros(0)
        start, stop = system.time_window
        for t in _bracketed_roots(lambda s: guard.value(s, empty), start, stop):
            found.append(GuardPoint(t=t, x=empty))
        return [point for point in found if _on_guard(system, key, point)][:count]
    if region is None:
        logger.warning(f"No region to sample guard {transition_label(key)} of {system.name}")
        return []
    extent = np.maximum(region.upper - region.lower, 1e-12)
    origins = halton_unit_points(source.dim, count * _MAX_ATTEMPTS_PER_POINT, seed)
    for attempt, unit in enumerate(origins):
        t = times[attempt % len(times)]
        origin = region.scale(unit)
        direction = rng.standard_normal(source.dim) * extent
        try:
            roots = _bracketed_roots(lambda s: guard.value(t, origin + s * direction), -1.0, 1.0)  # noqa: B023 # consumed immediately
        except EvaluatorError:
            continue
        for s in roots:
            point = GuardPoint(t=t, x=origin + s * direction)
            if _inside(region, point.x) and _on_guard(system, key, point):
                found.append(point)
        if len(found) >= count:
            return found[:count]
    if not found:
        found = _time_scan_guard_points(system, key, region=region, count=count, seed=seed)
    return found[:count]


def _time_scan_guard_points(
    system: HybridSystemSpec, key: TransitionKey, *, region: BoxRegion, count: int, seed: int
) -> list[GuardPoint]:
    """Guards that depend on time alone are found by scanning the time window at fixed states."""
    guard = system.transition(key).guard
    start, stop = system.time_window
    if start == stop:
        return []
    found: list[GuardPoint] = []
    for unit in halton_unit_points(region.dim, count, seed + 1):
        x = region.scale(unit)
        try:
            roots = _bracketed_roots(lambda s: guard.value(s, x), start, stop)  # noqa: B023 # consumed immediately
        except EvaluatorError:
            continue
        found.extend(GuardPoint(t=t, x=x) for t in roots if _on_guard(system, key, GuardPoint(t=t, x=x)))
    return found


def sample_guard_points(
    system: HybridSystemSpec, key: TransitionKey, plan: SamplingPlan, *, count: int | None = None
) -> list[GuardPoint]:
    """Points on the guard of one transition that also satisfy its applicability predicate.

    Explicit points in the plan win, then the transition's own sampler, then random rays through Halton points of
    the source region, solved for g = 0 with a sign scan and Brent refinement.
    """
    wanted = plan.guard_samples if count is None else count
    label = transition_label(key)
    if label in plan.guard_points:
        return list(plan.guard_points[label])
    transition = system.transition(key)
    seed = plan.seed + _transition_offset(system, key)
    if transition.sampler is not None:
        points = transition.sampler(np.random.default_rng(seed), wanted)
        return [point for point in points if _on_guard(system, key, point)]
    return _ray_guard_points(
        system,
        key,
        region=system.region(key[0], plan.regions),
        times=time_samples(system, plan),
        count=wanted,
        seed=seed,
    )
