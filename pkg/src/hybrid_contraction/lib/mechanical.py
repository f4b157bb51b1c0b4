"""Linear spring-damper networks under unilateral constraints with perfectly plastic impacts.

Every mechanical system here uses the energy metric of its mode as the norm, ``|x|^2 = x^T E x / 2``, with
E = D^2 e the Hessian of the total (potential plus kinetic) energy, so that with no input |x|^2 is the energy itself.
"""

import itertools
import logging
import math
from typing import Self

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from .arrays import FloatArray
from .arrays import Matrix
from .arrays import Vector
from .config import box
from .constants import IMPACT_VELOCITY_TOLERANCE
from .constants import SPD_RELATIVE_EIGENVALUE_FLOOR
from .constants import SYMMETRY_TOLERANCE
from .exceptions import DimensionMismatchError
from .exceptions import NotPositiveDefiniteError
from .exceptions import RankDeficiencyError
from .model import GuardSpec
from .model import HybridState
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import Predicate
from .model import ResetSpec
from .model import Transition
from .norms import l2_norm
from .norms import vector_norm
from .norms import weighted_l2_norm

logger = logging.getLogger(__name__)

FREE = "free"
CONTACT = "contact"
_POSITION_SPAN = 2.0
_VELOCITY_SPAN = 2.0


class ForcingInput(BaseModel):
    """Scalar input u(t) = mean + amplitude * sin(frequency * t)."""

    model_config = ConfigDict(frozen=True)

    mean: float = -1.0
    amplitude: float = 0.0
    frequency: float = Field(default=1.0, gt=0.0)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.frequency

    def value(self, t: float) -> float:
        return self.mean + self.amplitude * math.sin(self.frequency * t)

    def rate(self, t: float) -> float:
        return self.amplitude * self.frequency * math.cos(self.frequency * t)


class OneDofParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mass: float = Field(default=1.0, gt=0.0)
    stiffness: float = Field(default=1.0, gt=0.0)
    damping: float = Field(default=1.0, gt=0.0)
    forcing: ForcingInput = ForcingInput()


class TwoDofParams(BaseModel):
    """Mass m on spring kappa and damper beta to the input, carrying mass m' through spring kappa' and damper beta'."""

    model_config = ConfigDict(frozen=True)

    mass: float = Field(default=1.0, gt=0.0)
    mass_2: float = Field(default=1.0, gt=0.0)
    stiffness: float = Field(default=1.0, gt=0.0)
    stiffness_2: float = Field(default=1.0, gt=0.0)
    damping: float = Field(default=1.0, gt=0.0)
    damping_2: float = Field(default=1.0, gt=0.0)
    forcing: ForcingInput = ForcingInput()


class SoftParams(BaseModel):
    """One mass whose constraint is a spring of stiffness ``contact_stiffness`` that only pushes."""

    model_config = ConfigDict(frozen=True)

    mass: float = Field(default=1.0, gt=0.0)
    stiffness: float = Field(default=1.0, gt=0.0)
    contact_stiffness: float = Field(default=10.0, gt=0.0)
    damping: float = Field(default=1.0, gt=0.0)
    forcing: ForcingInput = ForcingInput()


class ViscoParams(BaseModel):
    """The two-mass chain with a series spring ``stiffness_3`` and damper ``damping_2`` added in parallel to the
    coupling spring; ``elongation`` of the damper is the extra state."""

    model_config = ConfigDict(frozen=True)

    mass: float = Field(default=1.0, gt=0.0)
    mass_2: float = Field(default=1.0, gt=0.0)
    stiffness: float = Field(default=1.0, gt=0.0)
    stiffness_2: float = Field(default=1.0, gt=0.0)
    stiffness_3: float = Field(default=1.0, gt=0.0)
    damping: float = Field(default=1.0, gt=0.0)
    damping_2: float = Field(default=1.0, gt=0.0)
    forcing: ForcingInput = ForcingInput()


def _check_spd(matrix: Matrix, what: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:  # noqa: PLR2004 # a matrix has two axes
        raise DimensionMismatchError(expected=(matrix.shape[0], matrix.shape[0]), actual=matrix.shape, what=what)
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if float(np.max(np.abs(matrix - matrix.T), initial=0.0)) > SYMMETRY_TOLERANCE * scale:
        raise NotPositiveDefiniteError(f"{what} is not symmetric: {matrix.tolist()}")
    eigenvalues = scipy.linalg.eigvalsh(matrix)
    if float(eigenvalues[0]) <= SPD_RELATIVE_EIGENVALUE_FLOOR * float(eigenvalues[-1]):
        raise NotPositiveDefiniteError(f"{what} is not positive definite, eigenvalues {eigenvalues.tolist()}")


class MechanicalNetworkParams(BaseModel):
    """M q'' = u(t) - K q - B q' + Da_J^T lambda_J with unilateral constraints Da q >= 0.

    The input is u(t) = force + force_amplitude * sin(frequency * t).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mass: FloatArray = Field(default_factory=lambda: np.eye(2))
    stiffness: FloatArray = Field(default_factory=lambda: np.array([[2.0, -1.0], [-1.0, 2.0]]))
    damping: FloatArray = Field(default_factory=lambda: np.array([[0.2, -0.1], [-0.1, 0.2]]))
    constraints: FloatArray = Field(default_factory=lambda: np.eye(2))
    force: FloatArray = Field(default_factory=lambda: -np.ones(2))
    force_amplitude: FloatArray | None = None
    frequency: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_matrices(self) -> Self:
        _check_spd(self.mass, "mass matrix")
        dof = self.mass.shape[0]
        for what, matrix in (("stiffness matrix", self.stiffness), ("damping matrix", self.damping)):
            if matrix.shape != (dof, dof):
                raise DimensionMismatchError(expected=(dof, dof), actual=matrix.shape, what=what)
            _check_spd(matrix, what)
        if self.constraints.ndim != 2 or self.constraints.shape[1] != dof:  # noqa: PLR2004 # a matrix has two axes
            raise DimensionMismatchError(
                expected=(self.constraints.shape[0], dof), actual=self.constraints.shape, what="constraint matrix"
            )
        for what, vector in (("force", self.force), ("force amplitude", self.force_amplitude)):
            if vector is not None and vector.shape != (dof,):
                raise DimensionMismatchError(expected=dof, actual=vector.shape, what=what)
        return self

    @property
    def dof(self) -> int:
        return int(self.mass.shape[0])

    @property
    def constraint_count(self) -> int:
        return int(self.constraints.shape[0])

    def input(self, t: float) -> Vector:
        if self.force_amplitude is None:
            return self.force
        return self.force + self.force_amplitude * math.sin(self.frequency * t)

    def input_rate(self, t: float) -> Vector:
        if self.force_amplitude is None:
            return np.zeros(self.dof)
        return self.force_amplitude * self.frequency * math.cos(self.frequency * t)

    def net_force(self, t: float, q: Vector, dq: Vector) -> Vector:
        return self.input(t) - self.stiffness @ q - self.damping @ dq


type ActiveSet = tuple[int, ...]


def _active_rows(params: MechanicalNetworkParams, active: ActiveSet) -> Matrix:
    rows = params.constraints[list(active), :]
    if np.linalg.matrix_rank(rows) < len(active):
        raise RankDeficiencyError(f"Constraint rows {list(active)} are not linearly independent: {rows.tolist()}")
    return rows


def _constraint_gain(params: MechanicalNetworkParams, active: ActiveSet) -> Matrix:
    """G = (Da_J M^-1 Da_J^T)^-1 Da_J M^-1, so that lambda_J = -G f and Delta_J = I - M^-1 Da_J^T G M."""
    rows = _active_rows(params, active)
    inverse_mass_rows = np.linalg.solve(params.mass, rows.T)
    return np.linalg.solve(rows @ inverse_mass_rows, inverse_mass_rows.T)


def constraint_impulse_map(params: MechanicalNetworkParams, active: ActiveSet) -> Matrix:
    """Delta_J = I - M^-1 Da_J^T (Da_J M^-1 Da_J^T)^-1 Da_J, the plastic-impact velocity projection."""
    if not active:
        return np.eye(params.dof)
    rows = _active_rows(params, active)
    inverse_mass_rows = np.linalg.solve(params.mass, rows.T)
    return np.eye(params.dof) - inverse_mass_rows @ np.linalg.solve(rows @ inverse_mass_rows, rows)


def constraint_multipliers(  # noqa: PLR0913 # the network, its active set and the mechanical state
    params: MechanicalNetworkParams, active: ActiveSet, t: float, q: Vector, dq: Vector
) -> Vector:
    if not active:
        return np.zeros(0)
    return -_constraint_gain(params, active) @ params.net_force(t, q, dq)


def constraint_force(  # noqa: PLR0913 # the network, its active set and the mechanical state
    params: MechanicalNetworkParams, active: ActiveSet, t: float, q: Vector, dq: Vector
) -> Vector:
    """Da_J^T lambda_J, the force that keeps the active constraints' accelerations at zero."""
    if not active:
        return np.zeros(params.dof)
    return _active_rows(params, active).T @ constraint_multipliers(params, active, t, q, dq)


def mechanical_energy(system: HybridSystemSpec, state: HybridState) -> float:
    """Total energy of a mechanical state with no input, which is the squared energy-metric norm."""
    return vector_norm(state.x, system.mode(state.mode).norm) ** 2


def _velocity_sign(index: int, *, approaching: bool) -> Predicate:
    if approaching:
        return lambda _t, x: bool(x[index] < -IMPACT_VELOCITY_TOLERANCE)
    return lambda _t, x: bool(x[index] > IMPACT_VELOCITY_TOLERANCE)


def _free_region(positions: int, *, floor_index: int | None = 0) -> tuple[list[float], list[float]]:
    lower = [-_POSITION_SPAN] * positions + [-_VELOCITY_SPAN] * positions
    upper = [_POSITION_SPAN] * positions + [_VELOCITY_SPAN] * positions
    if floor_index is not None:
        lower[floor_index] = 0.0
    return lower, upper


def _rest_mode(mode_id: str) -> ModeSpec:
    return ModeSpec(id=mode_id, dim=0, norm=l2_norm(0), field=lambda _t, _x: np.zeros(0))


def make_mech_1dof(params: OneDofParams | None = None) -> HybridSystemSpec:
    """A mass above a rigid floor: free flight in (q, q'), rest on the floor as the zero-dimensional contact mode."""
    p = OneDofParams() if params is None else params
    m, kappa, beta, u = p.mass, p.stiffness, p.damping, p.forcing
    jacobian = np.array([[0.0, 1.0], [-kappa / m, -beta / m]])
    free = ModeSpec(
        id=FREE,
        dim=2,
        norm=weighted_l2_norm(np.diag([kappa, m])),
        field=lambda t, x: np.array([x[1], (kappa * (u.value(t) - x[0]) - beta * x[1]) / m]),
        jacobian=lambda _t, _x: jacobian,
        time_partial=lambda t, _x: np.array([0.0, kappa * u.rate(t) / m]),
        constraints=lambda _t, x: np.array([x[0]]),
        region=box(*_free_region(1)),
    )
    touchdown = Transition(
        guard=GuardSpec(
            source=FREE,
            target=CONTACT,
            g=lambda _t, x: x[0],
            grad_x=lambda _t, _x: [1.0, 0.0],
            active=_velocity_sign(1, approaching=True),
        ),
        reset=ResetSpec(
            source=FREE, target=CONTACT, map=lambda _t, _x: np.zeros(0), jac_x=lambda _t, _x: np.zeros((0, 2))
        ),
    )
    liftoff = Transition(
        guard=GuardSpec(
            source=CONTACT,
            target=FREE,
            g=lambda t, _x: -u.value(t),
            grad_x=lambda _t, _x: np.zeros(0),
            d_t=lambda t, _x: -u.rate(t),
        ),
        reset=ResetSpec(
            source=CONTACT, target=FREE, map=lambda _t, _x: np.zeros(2), jac_x=lambda _t, _x: np.zeros((2, 0))
        ),
    )
    return HybridSystemSpec(
        name="mech-1dof",
        modes=(free, _rest_mode(CONTACT)),
        transitions=(touchdown, liftoff),
        time_window=(0.0, u.period),
    )


def two_dof_free_metric(p: TwoDofParams) -> Matrix:
    return scipy.linalg.block_diag(
        np.array([[p.stiffness + p.stiffness_2, -p.stiffness_2], [-p.stiffness_2, p.stiffness_2]]),
        np.diag([p.mass, p.mass_2]),
    )


def two_dof_touchdown_saltation(p: TwoDofParams) -> Matrix:
    return np.array([[0.0, 1.0, 0.0, 0.0], [-p.damping_2 / p.mass_2, 0.0, 0.0, 1.0]])


def two_dof_witness_bound(p: TwoDofParams) -> float:
    """|Xi_TD v| for the unit-energy vector v displacing only the impacting mass; a lower bound on |Xi_TD|."""
    return p.damping_2 / math.sqrt(p.mass_2 * (p.stiffness + p.stiffness_2))


def make_mech_2dof(params: TwoDofParams | None = None) -> HybridSystemSpec:
    """Two masses in series above a floor; only the first (q) can touch down. State (q, q', dq, dq')."""
    p = TwoDofParams() if params is None else params
    m, m2, kappa, kappa2, beta, beta2, u = (
        p.mass,
        p.mass_2,
        p.stiffness,
        p.stiffness_2,
        p.damping,
        p.damping_2,
        p.forcing,
    )
    free_jacobian = np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-(kappa + kappa2) / m, kappa2 / m, -(beta + beta2) / m, beta2 / m],
            [kappa2 / m2, -kappa2 / m2, beta2 / m2, -beta2 / m2],
        ]
    )
    contact_jacobian = np.array([[0.0, 1.0], [-kappa2 / m2, -beta2 / m2]])

    def free_field(t: float, x: Vector) -> Vector:
        return free_jacobian @ x + np.array([0.0, 0.0, kappa * u.value(t) / m, 0.0])

    def contact_lift(t: float, x: Vector) -> float:
        # acceleration the floor must cancel, times m
        return kappa2 * x[0] + beta2 * x[1] + kappa * u.value(t)

    free = ModeSpec(
        id=FREE,
        dim=4,
        norm=weighted_l2_norm(two_dof_free_metric(p)),
        field=free_field,
        jacobian=lambda _t, _x: free_jacobian,
        time_partial=lambda t, _x: np.array([0.0, 0.0, kappa * u.rate(t) / m, 0.0]),
        constraints=lambda _t, x: np.array([x[0]]),
        region=box(*_free_region(2)),
    )
    contact = ModeSpec(
        id=CONTACT,
        dim=2,
        norm=weighted_l2_norm(np.diag([kappa2, m2])),
        field=lambda _t, x: contact_jacobian @ x,
        jacobian=lambda _t, _x: contact_jacobian,
        region=box(*_free_region(1, floor_index=None)),
    )
    touchdown = Transition(
        guard=GuardSpec(
            source=FREE,
            target=CONTACT,
            g=lambda _t, x: x[0],
            grad_x=lambda _t, _x: [1.0, 0.0, 0.0, 0.0],
            active=_velocity_sign(2, approaching=True),
        ),
        reset=ResetSpec(
            source=FREE,
            target=CONTACT,
            map=lambda _t, x: np.array([x[1], x[3]]),
            jac_x=lambda _t, _x: np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]),
        ),
    )
    liftoff = Transition(
        guard=GuardSpec(
            source=CONTACT,
            target=FREE,
            g=lambda t, x: -contact_lift(t, x),
            grad_x=lambda _t, _x: [-kappa2, -beta2],
            d_t=lambda t, _x: -kappa * u.rate(t),
        ),
        reset=ResetSpec(
            source=CONTACT,
            target=FREE,
            map=lambda _t, x: np.array([0.0, x[0], 0.0, x[1]]),
            jac_x=lambda _t, _x: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]),
        ),
    )
    return HybridSystemSpec(
        name="mech-2dof", modes=(free, contact), transitions=(touchdown, liftoff), time_window=(0.0, u.period)
    )


def make_mech_soft(params: SoftParams | None = None) -> HybridSystemSpec:
    """One mass above a compliant floor: the floor spring adds to the stiffness while q <= 0; resets are identities."""
    p = SoftParams() if params is None else params
    m, kappa, kappa_contact, beta, u = p.mass, p.stiffness, p.contact_stiffness, p.damping, p.forcing

    def mode(mode_id: str, total_stiffness: float, sign: float) -> ModeSpec:
        jacobian = np.array([[0.0, 1.0], [-total_stiffness / m, -beta / m]])
        lower, upper = _free_region(1)
        if sign < 0:
            lower[0], upper[0] = -_POSITION_SPAN, 0.0
        return ModeSpec(
            id=mode_id,
            dim=2,
            norm=weighted_l2_norm(np.diag([total_stiffness, m])),
            field=lambda t, x: jacobian @ x + np.array([0.0, kappa * u.value(t) / m]),
            jacobian=lambda _t, _x: jacobian,
            time_partial=lambda t, _x: np.array([0.0, kappa * u.rate(t) / m]),
            constraints=lambda _t, x: np.array([sign * x[0]]),
            region=box(lower, upper),
        )

    def crossing(source: str, target: str, sign: float) -> Transition:
        return Transition(
            guard=GuardSpec(
                source=source,
                target=target,
                g=lambda _t, x: sign * x[0],
                grad_x=lambda _t, _x: [sign, 0.0],
                active=_velocity_sign(1, approaching=sign > 0),
            ),
            reset=ResetSpec(source=source, target=target, map=lambda _t, x: x.copy(), jac_x=lambda _t, _x: np.eye(2)),
        )

    return HybridSystemSpec(
        name="mech-soft",
        modes=(mode(FREE, kappa, 1.0), mode(CONTACT, kappa + kappa_contact, -1.0)),
        transitions=(crossing(FREE, CONTACT, 1.0), crossing(CONTACT, FREE, -1.0)),
        time_window=(0.0, u.period),
    )


def visco_free_metric(p: ViscoParams) -> Matrix:
    kappa, kappa2, kappa3 = p.stiffness, p.stiffness_2, p.stiffness_3
    potential = np.array(
        [
            [kappa + kappa2 + kappa3, -kappa2 - kappa3, kappa3],
            [-kappa2 - kappa3, kappa2 + kappa3, -kappa3],
            [kappa3, -kappa3, kappa3],
        ]
    )
    return scipy.linalg.block_diag(potential, np.diag([p.mass, p.mass_2]))


def visco_contact_metric(p: ViscoParams) -> Matrix:
    kappa2, kappa3 = p.stiffness_2, p.stiffness_3
    return scipy.linalg.block_diag(np.array([[kappa2 + kappa3, -kappa3], [-kappa3, kappa3]]), np.array([[p.mass_2]]))


def make_mech_visco(params: ViscoParams | None = None) -> HybridSystemSpec:
    """The two-mass chain with a viscoelastic coupling. Free state (q, q', l, dq, dq'), contact state (q', l, dq')."""
    p = ViscoParams() if params is None else params
    m, m2, u = p.mass, p.mass_2, p.forcing
    kappa, kappa2, kappa3, beta, beta2 = p.stiffness, p.stiffness_2, p.stiffness_3, p.damping, p.damping_2
    creep = kappa3 / beta2
    # rows: q, q', l, dq, dq' as functions of (q, q', l, dq, dq')
    free_jacobian = np.array(
        [
            [0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0],
            [-creep, creep, -creep, 0.0, 0.0],
            [-(kappa + kappa2 + kappa3) / m, (kappa2 + kappa3) / m, -kappa3 / m, -beta / m, 0.0],
            [(kappa2 + kappa3) / m2, -(kappa2 + kappa3) / m2, kappa3 / m2, 0.0, 0.0],
        ]
    )
    contact_jacobian = np.array(
        [
            [0.0, 0.0, 1.0],
            [creep, -creep, 0.0],
            [-(kappa2 + kappa3) / m2, kappa3 / m2, 0.0],
        ]
    )

    def contact_lift(t: float, x: Vector) -> float:
        return kappa3 * (x[0] - x[1]) + kappa2 * x[0] + kappa * u.value(t)

    free = ModeSpec(
        id=FREE,
        dim=5,
        norm=weighted_l2_norm(visco_free_metric(p)),
        field=lambda t, x: free_jacobian @ x + np.array([0.0, 0.0, 0.0, kappa * u.value(t) / m, 0.0]),
        jacobian=lambda _t, _x: free_jacobian,
        time_partial=lambda t, _x: np.array([0.0, 0.0, 0.0, kappa * u.rate(t) / m, 0.0]),
        constraints=lambda _t, x: np.array([x[0]]),
        region=box([0.0, -2.0, -2.0, -2.0, -2.0], [2.0, 2.0, 2.0, 2.0, 2.0]),
    )
    contact = ModeSpec(
        id=CONTACT,
        dim=3,
        norm=weighted_l2_norm(visco_contact_metric(p)),
        field=lambda _t, x: contact_jacobian @ x,
        jacobian=lambda _t, _x: contact_jacobian,
        region=box([-2.0, -2.0, -2.0], [2.0, 2.0, 2.0]),
    )
    touchdown = Transition(
        guard=GuardSpec(
            source=FREE,
            target=CONTACT,
            g=lambda _t, x: x[0],
            grad_x=lambda _t, _x: [1.0, 0.0, 0.0, 0.0, 0.0],
            active=_velocity_sign(3, approaching=True),
        ),
        reset=ResetSpec(
            source=FREE,
            target=CONTACT,
            map=lambda _t, x: np.array([x[1], x[2], x[4]]),
            jac_x=lambda _t, _x: np.eye(5)[[1, 2, 4], :],
        ),
    )
    liftoff = Transition(
        guard=GuardSpec(
            source=CONTACT,
            target=FREE,
            g=lambda t, x: -contact_lift(t, x),
            grad_x=lambda _t, _x: [-(kappa2 + kappa3), kappa3, 0.0],
            d_t=lambda t, _x: -kappa * u.rate(t),
        ),
        reset=ResetSpec(
            source=CONTACT,
            target=FREE,
            map=lambda _t, x: np.array([0.0, x[0], x[1], 0.0, x[2]]),
            jac_x=lambda _t, _x: np.eye(5)[:, [1, 2, 4]],
        ),
    )
    return HybridSystemSpec(
        name="mech-visco", modes=(free, contact), transitions=(touchdown, liftoff), time_window=(0.0, u.period)
    )


def network_mode_id(active: ActiveSet) -> str:
    if not active:
        return FREE
    return "c" + "+".join(str(index + 1) for index in active)


def _network_mode(params: MechanicalNetworkParams, active: ActiveSet) -> ModeSpec:
    dof = params.dof
    projection = constraint_impulse_map(params, active)
    # M^-1 (f + Da_J^T lambda_J) = Delta_J M^-1 f
    accel = projection @ np.linalg.solve(params.mass, np.hstack([-params.stiffness, -params.damping]))
    jacobian = np.vstack([np.hstack([np.zeros((dof, dof)), np.eye(dof)]), accel])
    forced = projection @ np.linalg.inv(params.mass)
    inactive = [index for index in range(params.constraint_count) if index not in active]

    def field(t: float, x: Vector) -> Vector:
        return jacobian @ x + np.concatenate([np.zeros(dof), forced @ params.input(t)])

    return ModeSpec(
        id=network_mode_id(active),
        dim=2 * dof,
        norm=weighted_l2_norm(scipy.linalg.block_diag(params.stiffness, params.mass)),
        field=field,
        jacobian=lambda _t, _x: jacobian,
        time_partial=lambda t, _x: np.concatenate([np.zeros(dof), forced @ params.input_rate(t)]),
        constraints=lambda _t, x: params.constraints[inactive, :] @ x[:dof],
        region=box(*_free_region(dof, floor_index=None)),
    )


def _network_touchdown(params: MechanicalNetworkParams, active: ActiveSet, index: int) -> Transition:
    dof = params.dof
    row = params.constraints[index]
    target_set = tuple(sorted((*active, index)))
    source, target = network_mode_id(active), network_mode_id(target_set)
    jump = scipy.linalg.block_diag(np.eye(dof), constraint_impulse_map(params, target_set))
    guard = GuardSpec(
        source=source,
        target=target,
        g=lambda _t, x: float(row @ x[:dof]),
        grad_x=lambda _t, _x: np.concatenate([row, np.zeros(dof)]),
        active=lambda _t, x: bool(row @ x[dof:] < -IMPACT_VELOCITY_TOLERANCE),
    )
    reset = ResetSpec(source=source, target=target, map=lambda _t, x: jump @ x, jac_x=lambda _t, _x: jump)
    return Transition(guard=guard, reset=reset)


def _network_liftoff(params: MechanicalNetworkParams, active: ActiveSet, index: int) -> Transition:
    dof = params.dof
    position = active.index(index)
    target_set = tuple(member for member in active if member != index)
    source, target = network_mode_id(active), network_mode_id(target_set)
    gain = _constraint_gain(params, active)[position]
    # lambda_j = -gain . (u - K q - B dq)
    gradient = np.concatenate([gain @ params.stiffness, gain @ params.damping])
    guard = GuardSpec(
        source=source,
        target=target,
        g=lambda t, x: float(-gain @ params.net_force(t, x[:dof], x[dof:])),
        grad_x=lambda _t, _x: gradient,
        d_t=lambda t, _x: float(-gain @ params.input_rate(t)),
    )
    reset = ResetSpec(source=source, target=target, map=lambda _t, x: x.copy(), jac_x=lambda _t, _x: np.eye(2 * dof))
    return Transition(guard=guard, reset=reset)


def make_mech_network(params: MechanicalNetworkParams | None = None) -> HybridSystemSpec:
    """One mode per set of active constraints; touchdown adds a constraint with a plastic impact, liftoff drops one
    when its multiplier crosses zero."""
    p = MechanicalNetworkParams() if params is None else params
    active_sets = [
        combination
        for size in range(p.constraint_count + 1)
        for combination in itertools.combinations(range(p.constraint_count), size)
    ]
    modes: list[ModeSpec] = []
    transitions: list[Transition] = []
    for active in active_sets:
        try:
            modes.append(_network_mode(p, active))
        except RankDeficiencyError:
            logger.debug(f"Skipping dependent active set {list(active)}")
            continue
    known = {mode.id for mode in modes}
    for active in active_sets:
        if network_mode_id(active) not in known:
            continue
        for index in range(p.constraint_count):
            if index in active:
                transitions.append(_network_liftoff(p, active, index))
            elif network_mode_id(tuple(sorted((*active, index)))) in known:
                transitions.append(_network_touchdown(p, active, index))
    logger.debug(f"Mechanical network with {len(modes)} mode(s) and {len(transitions)} transition(s)")
    return HybridSystemSpec(
        name="mech-network",
        modes=tuple(modes),
        transitions=tuple(transitions),
        time_window=(0.0, 2 * math.pi / p.frequency),
    )
