import logging
from enum import StrEnum

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict

from .config import GuardPoint
from .config import SamplingPlan
from .config import transition_label
from .constants import GUARD_GRADIENT_FLOOR
from .constants import JACOBIAN_CONSISTENCY_TOLERANCE
from .exceptions import DimensionMismatchError
from .exceptions import EvaluatorError
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import Transition
from .model import central_difference_jacobian
from .model import field_time_partial
from .model import finite_difference_field_jacobian
from .model import finite_difference_field_time_partial
from .model import jacobian_of_field
from .sampling import sample_guard_points
from .sampling import sample_mode_states

logger = logging.getLogger(__name__)


class DiagnosticKind(StrEnum):
    DIMENSION = "dimension"
    EVALUATOR = "evaluator"
    JACOBIAN = "jacobian"
    NONDEGENERACY = "nondegeneracy"


class Diagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DiagnosticKind
    location: str
    message: str


def _relative_mismatch(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = 1.0 + float(np.max(np.abs(analytic), initial=0.0))
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def _field_mismatch(mode: ModeSpec, point: GuardPoint) -> str | None:
    if mode.jacobian is not None:
        mismatch = _relative_mismatch(
            jacobian_of_field(mode, point.t, point.x), finite_difference_field_jacobian(mode, point.t, point.x)
        )
        if mismatch > JACOBIAN_CONSISTENCY_TOLERANCE:
            return f"Analytic Jacobian differs from finite differences by {mismatch:.3e} (relative)"
    if mode.time_partial is not None:
        mismatch = _relative_mismatch(
            field_time_partial(mode, point.t, point.x), finite_difference_field_time_partial(mode, point.t, point.x)
        )
        if mismatch > JACOBIAN_CONSISTENCY_TOLERANCE:
            return f"Analytic time partial differs from finite differences by {mismatch:.3e} (relative)"
    return None


def _check_mode(mode: ModeSpec, points: list[GuardPoint]) -> list[Diagnostic]:
    location = f"mode {mode.id}"
    for point in points:
        try:
            _ = mode.evaluate_field(point.t, point.x)
            if (message := _field_mismatch(mode, point)) is not None:
                return [
                    Diagnostic(
                        kind=DiagnosticKind.JACOBIAN,
                        location=f"{location} at t={point.t}, x={point.x.tolist()}",
                        message=message,
                    )
                ]
        except DimensionMismatchError as e:
            return [Diagnostic(kind=DiagnosticKind.DIMENSION, location=location, message=str(e))]
        except EvaluatorError as e:
            return [Diagnostic(kind=DiagnosticKind.EVALUATOR, location=location, message=str(e))]
    return []


def _reset_mismatch(system: HybridSystemSpec, transition: Transition, point: GuardPoint) -> str | None:
    key = transition.key
    if transition.reset.jac_x is not None:
        mismatch = _relative_mismatch(
            system.reset_jacobian(key, point.t, point.x),
            central_difference_jacobian(
                lambda y: system.apply_reset(key, point.t, y), point.x, out_dim=system.mode(key[1]).dim
            ),
        )
        if mismatch > JACOBIAN_CONSISTENCY_TOLERANCE:
            return f"Reset Jacobian differs from finite differences by {mismatch:.3e}"
    if transition.reset.d_t is not None:
        mismatch = _relative_mismatch(
            system.reset_time_derivative(key, point.t, point.x),
            system.finite_difference_reset_time_derivative(key, point.t, point.x),
        )
        if mismatch > JACOBIAN_CONSISTENCY_TOLERANCE:
            return f"Reset time derivative differs from finite differences by {mismatch:.3e}"
    return None


def _check_transition(  # noqa: C901 # one pass over the sampled points covers every per-transition check
    system: HybridSystemSpec, transition: Transition, points: list[GuardPoint], *, on_guard: bool
) -> list[Diagnostic]:
    key = transition.key
    location = f"transition {transition_label(key)}"
    source = system.mode(key[0])
    diagnostics: list[Diagnostic] = []
    reported: set[DiagnosticKind] = set()

    def report(kind: DiagnosticKind, point: GuardPoint, message: str) -> None:
        if kind in reported:
            return
        reported.add(kind)
        diagnostics.append(
            Diagnostic(kind=kind, location=f"{location} at t={point.t}, x={point.x.tolist()}", message=message)
        )

    for point in points:
        try:
            _ = system.apply_reset(key, point.t, point.x)
            if (message := _reset_mismatch(system, transition, point)) is not None:
                report(DiagnosticKind.JACOBIAN, point, message)
        except DimensionMismatchError as e:
            report(DiagnosticKind.DIMENSION, point, str(e))
        except EvaluatorError as e:
            report(DiagnosticKind.EVALUATOR, point, str(e))
        if source.dim == 0 or not on_guard:
            continue
        try:
            gradient = transition.guard.gradient(point.t, point.x)
        except (DimensionMismatchError, EvaluatorError) as e:
            report(DiagnosticKind.EVALUATOR, point, str(e))
            continue
        if float(np.linalg.norm(gradient)) > GUARD_GRADIENT_FLOOR:
            continue
        # a guard driven by time alone is a regular surface in (t, x) when D_t g does not vanish
        if abs(transition.guard.time_derivative(point.t, point.x)) > GUARD_GRADIENT_FLOOR:
            continue
        report(
            DiagnosticKind.NONDEGENERACY,
            point,
            f"Guard gradient {gradient.tolist()} vanishes on the guard",
        )
    return diagnostics


def validate(system: HybridSystemSpec, plan: SamplingPlan | None = None) -> list[Diagnostic]:
    """Check a system at sampled points; returns one diagnostic per violated check and location, empty when valid."""
    sampling = SamplingPlan(state_samples=16, guard_samples=16) if plan is None else plan
    diagnostics: list[Diagnostic] = []
    state_points = {mode.id: sample_mode_states(system, mode.id, sampling) for mode in system.modes}
    for mode in system.modes:
        diagnostics.extend(_check_mode(mode, state_points[mode.id]))
    for transition in system.transitions:
        points = sample_guard_points(system, transition.key, sampling)
        on_guard = bool(points)
        if not on_guard:
            logger.debug(f"No guard points found for {transition_label(transition.key)}; checking resets at states")
            points = state_points[transition.key[0]][: sampling.guard_samples]
        diagnostics.extend(_check_transition(system, transition, points, on_guard=on_guard))
    if diagnostics:
        logger.warning(f"System {system.name} has {len(diagnostics)} diagnostic(s)")
    else:
        logger.info(f"System {system.name} passed validation")
    return diagnostics
