"""Saltation matrices and the jump-linear variational equation along a simulated trajectory."""

import logging

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from pydantic import ConfigDict
from scipy.integrate import solve_ivp

from .arrays import FloatArray
from .arrays import Matrix
from .arrays import Vector
from .arrays import as_vector
from .config import ORACLE_INTEGRATOR
from .config import IntegratorOptions
from .config import transition_label
from .constants import ON_GUARD_TOLERANCE
from .constants import TRANSVERSALITY_TOLERANCE
from .exceptions import EventSequenceMismatchError
from .exceptions import OffGuardError
from .exceptions import SimulationError
from .exceptions import TransversalityError
from .model import HybridState
from .model import HybridSystemSpec
from .model import TransitionKey
from .model import jacobian_of_field
from .norms import induced_norm
from .norms import subspace_induced_norm
from .simulator import HybridTrajectory
from .simulator import ResetEvent
from .simulator import TrajectoryArc
from .simulator import TrajectoryStatus
from .simulator import simulate

logger = logging.getLogger(__name__)


class SaltationParts(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    reset_jacobian: FloatArray
    reset_time_derivative: FloatArray
    field_source: FloatArray
    field_target: FloatArray
    guard_gradient: FloatArray
    guard_time_derivative: float
    denominator: float


class SaltationRecord(BaseModel):
    """Saltation matrix at one guard point with its induced norm between the source and target mode norms.

    ``tangent_norm`` is the induced norm restricted to perturbations tangent to the guard (the kernel of D_x g).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    target: str
    t: float
    x: FloatArray
    xi: FloatArray
    induced_norm: float
    induced_norm_approximate: bool
    tangent_norm: float
    parts: SaltationParts
    event: ResetEvent | None = None

    @property
    def key(self) -> TransitionKey:
        return (self.source, self.target)


def xi_from_parts(parts: SaltationParts) -> Matrix:
    """Xi = D_x R + (F_j'(R) - D_x R F_j - D_t R) D_x g / (D_t g + D_x g F_j)."""
    numerator = parts.field_target - parts.reset_jacobian @ parts.field_source - parts.reset_time_derivative
    return parts.reset_jacobian + np.outer(numerator, parts.guard_gradient) / parts.denominator


def saltation(
    system: HybridSystemSpec, key: TransitionKey, t: float, x: Vector, *, event: ResetEvent | None = None
) -> SaltationRecord:
    source = system.mode(key[0])
    target = system.mode(key[1])
    state = as_vector(x, dim=source.dim)
    guard = system.transition(key).guard
    g = guard.value(t, state)
    if abs(g) > ON_GUARD_TOLERANCE * (1.0 + float(np.linalg.norm(state))):
        raise OffGuardError(f"Point {state.tolist()} at t={t} is off guard {transition_label(key)} (g={g})")
    field_source = source.evaluate_field(t, state) if source.dim > 0 else np.zeros(0)
    gradient = guard.gradient(t, state) if source.dim > 0 else np.zeros(0)
    guard_dt = guard.time_derivative(t, state)
    denominator = guard_dt + float(gradient @ field_source)
    speed = float(np.linalg.norm(field_source))
    if denominator >= -TRANSVERSALITY_TOLERANCE * (1.0 + speed):
        raise TransversalityError(
            f"Flow is not transverse to guard {transition_label(key)} at t={t}, x={state.tolist()}: "
            f"D_t g + D_x g F = {denominator}"
        )
    reset_state = system.apply_reset(key, t, state)
    parts = SaltationParts(
        reset_jacobian=system.reset_jacobian(key, t, state),
        reset_time_derivative=system.reset_time_derivative(key, t, state),
        field_source=field_source,
        field_target=target.evaluate_field(t, reset_state) if target.dim > 0 else np.zeros(0),
        guard_gradient=gradient,
        guard_time_derivative=guard_dt,
        denominator=denominator,
    )
    xi = xi_from_parts(parts)
    norm = induced_norm(xi, source.norm, target.norm)
    if source.dim > 1:
        tangent = subspace_induced_norm(xi, scipy.linalg.null_space(gradient[np.newaxis, :]), source.norm, target.norm)
        tangent_value = tangent.value
    else:
        tangent_value = 0.0
    return SaltationRecord(
        source=key[0],
        target=key[1],
        t=t,
        x=state,
        xi=xi,
        induced_norm=norm.value,
        induced_norm_approximate=norm.approximate,
        tangent_norm=tangent_value,
        parts=parts,
        event=event,
    )


def rank_one_residual(record: SaltationRecord) -> float:
    """Second singular value of Xi - D_x R relative to the first; zero for an exact rank-one correction."""
    difference = record.xi - record.parts.reset_jacobian
    if difference.size == 0:
        return 0.0
    singular = scipy.linalg.svdvals(difference)
    if singular.shape[0] < 2 or singular[0] == 0.0:  # noqa: PLR2004 # rank one needs two singular values to compare
        return 0.0
    return float(singular[1] / singular[0])


def arc_transition_matrix(
    system: HybridSystemSpec,
    arc: TrajectoryArc,
    t_from: float,
    t_to: float,
    *,
    options: IntegratorOptions | None = None,
) -> Matrix:
    """Phi(t_to, t_from) of the linearized flow along a stored arc, integrated against its dense output."""
    mode = system.mode(arc.mode)
    dim = mode.dim
    if dim == 0 or t_to == t_from:
        return np.eye(dim)
    settings = ORACLE_INTEGRATOR if options is None else options

    def linearized(t: float, flat: Vector) -> Vector:
        phi = flat.reshape(dim, dim)
        return (jacobian_of_field(mode, t, arc.state(t)) @ phi).reshape(-1)

    solution = solve_ivp(
        linearized,
        (t_from, t_to),
        np.eye(dim).reshape(-1),
        method="DOP853" if settings.method == "DOP853" else "RK45",
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if not solution.success:
        raise SimulationError(f"Variational integration failed on arc {arc.mode}: {solution.message}")
    return np.asarray(solution.y[:, -1], dtype=np.float64).reshape(dim, dim)


class ArcFundamental(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: str
    t_start: float
    t_end: float
    w_start: FloatArray
    phi: FloatArray

    @property
    def w_end(self) -> Matrix:
        return self.phi @ self.w_start


class VariationalSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trajectory: HybridTrajectory
    fundamental: list[ArcFundamental]
    jumps: list[SaltationRecord]
    w_final: FloatArray


def variational_solve(  # noqa: PLR0913 # system, initial state, horizon and perturbation basis plus options
    system: HybridSystemSpec,
    init: HybridState,
    t_end: float,
    w0: Matrix,
    *,
    options: IntegratorOptions | None = None,
    trajectory: HybridTrajectory | None = None,
) -> VariationalSolution:
    """Propagate perturbations W through arcs (W' = D_x F W) and events (W <- Xi W) of one trajectory."""
    base = simulate(system, init, t_end, options=options) if trajectory is None else trajectory
    if base.status != TrajectoryStatus.COMPLETED:
        raise SimulationError(f"Base trajectory did not complete: {base.status} ({base.message})")
    start_dim = system.mode(init.mode).dim
    w = np.asarray(w0, dtype=np.float64).reshape(start_dim, -1)
    fundamentals: list[ArcFundamental] = []
    jumps: list[SaltationRecord] = []
    for item in base.timeline():
        if isinstance(item, ResetEvent):
            record = saltation(system, item.guard, item.t, item.x_minus, event=item)
            jumps.append(record)
            w = record.xi @ w
            continue
        phi = arc_transition_matrix(system, item, item.t_start, item.t_end, options=options)
        fundamentals.append(ArcFundamental(mode=item.mode, t_start=item.t_start, t_end=item.t_end, w_start=w, phi=phi))
        w = phi @ w
    logger.debug(f"Variational solution over {len(fundamentals)} arc(s) and {len(jumps)} event(s)")
    return VariationalSolution(trajectory=base, fundamental=fundamentals, jumps=jumps, w_final=w)


def _perturbed_final(
    system: HybridSystemSpec,
    init: HybridState,
    t_end: float,
    shift: Vector,
    *,
    expected: list[TransitionKey],
    options: IntegratorOptions,
) -> Vector | None:
    trajectory = simulate(system, HybridState(mode=init.mode, x=init.x + shift, t=init.t), t_end, options=options)
    if trajectory.status != TrajectoryStatus.COMPLETED or trajectory.event_keys() != expected:
        return None
    return trajectory.final_state.x


def flow_jacobian_fd(
    system: HybridSystemSpec,
    init: HybridState,
    t_end: float,
    *,
    step: float = 1e-6,
    options: IntegratorOptions = ORACLE_INTEGRATOR,
) -> tuple[Matrix, HybridTrajectory]:
    """Finite-difference flow Jacobian, central where both perturbations keep the event sequence, else one-sided."""
    reference = simulate(system, init, t_end, options=options)
    expected = reference.event_keys()
    dim = system.mode(init.mode).dim
    columns: list[Vector] = []
    for index in range(dim):
        shift = np.zeros(dim)
        shift[index] = step
        forward = _perturbed_final(system, init, t_end, shift, expected=expected, options=options)
        backward = _perturbed_final(system, init, t_end, -shift, expected=expected, options=options)
        if forward is not None and backward is not None:
            columns.append((forward - backward) / (2 * step))
        elif forward is not None:
            columns.append((forward - reference.final_state.x) / step)
        elif backward is not None:
            columns.append((reference.final_state.x - backward) / step)
        else:
            raise EventSequenceMismatchError(
                f"Perturbing coordinate {index} of {init.x.tolist()} changes the event sequence {expected}"
                " on both sides"
            )
    final_dim = reference.final_state.x.shape[0]
    return np.column_stack(columns) if columns else np.zeros((final_dim, 0)), reference


class SaltationEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi_hat: FloatArray
    event: ResetEvent


def saltation_fd_oracle(
    system: HybridSystemSpec,
    init: HybridState,
    t_window: float,
    *,
    step: float = 1e-6,
    options: IntegratorOptions = ORACLE_INTEGRATOR,
) -> SaltationEstimate:
    """Empirical Xi = Phi_after^-1 (D flow) Phi_before^-1 over a window containing exactly one event."""
    total, reference = flow_jacobian_fd(system, init, init.t + t_window, step=step, options=options)
    if len(reference.events) != 1:
        raise EventSequenceMismatchError(
            f"Expected exactly one event in the window, got {[transition_label(k) for k in reference.event_keys()]}"
        )
    event = reference.events[0]
    before = [arc for arc in reference.arcs if arc.t_end <= event.t]
    after = [arc for arc in reference.arcs if arc.t_start >= event.t]
    phi_before = np.eye(system.mode(event.source).dim)
    if before:
        phi_before = arc_transition_matrix(system, before[0], before[0].t_start, before[0].t_end, options=options)
    phi_after = np.eye(system.mode(event.target).dim)
    if after:
        phi_after = arc_transition_matrix(system, after[0], after[0].t_start, after[0].t_end, options=options)
    xi_hat = np.linalg.solve(phi_after, total) if phi_after.size else total
    xi_hat = np.linalg.solve(phi_before.T, xi_hat.T).T if phi_before.size else xi_hat
    return SaltationEstimate(xi_hat=xi_hat, event=event)
