import itertools
import math

import numpy as np
import pytest
import scipy.linalg

from hybrid_contraction.catalog import builtin_system
from hybrid_contraction.lib import ForcingInput
from hybrid_contraction.lib import GuardPoint
from hybrid_contraction.lib import HybridState
from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import HybridTrajectory
from hybrid_contraction.lib import MechanicalNetworkParams
from hybrid_contraction.lib import SamplingPlan
from hybrid_contraction.lib import SoftParams
from hybrid_contraction.lib import TrajectoryStatus
from hybrid_contraction.lib import TwoDofParams
from hybrid_contraction.lib import ViscoParams
from hybrid_contraction.lib import certify_flow
from hybrid_contraction.lib import certify_parameter_draws
from hybrid_contraction.lib import constraint_force
from hybrid_contraction.lib import constraint_impulse_map
from hybrid_contraction.lib import make_mech_1dof
from hybrid_contraction.lib import make_mech_2dof
from hybrid_contraction.lib import make_mech_network
from hybrid_contraction.lib import make_mech_soft
from hybrid_contraction.lib import make_mech_visco
from hybrid_contraction.lib import matrix_measure
from hybrid_contraction.lib import mechanical_energy
from hybrid_contraction.lib import saltation
from hybrid_contraction.lib import saltation_fd_oracle
from hybrid_contraction.lib import simulate
from hybrid_contraction.lib.mechanical import CONTACT
from hybrid_contraction.lib.mechanical import FREE
from hybrid_contraction.lib.mechanical import two_dof_free_metric
from hybrid_contraction.lib.mechanical import two_dof_touchdown_saltation
from hybrid_contraction.lib.mechanical import two_dof_witness_bound
from hybrid_contraction.lib.mechanical import visco_contact_metric
from hybrid_contraction.lib.mechanical import visco_free_metric
from hybrid_contraction.lib.model import jacobian_of_field
from hybrid_contraction.lib.norms import symmetric_part
from hybrid_contraction.lib.simulator import ResetEvent


def test_free_flight_is_nonexpansive_in_the_energy_metric():
    system = make_mech_1dof()
    mode = system.mode(FREE)
    x = np.array([0.5, 0.2])

    assert matrix_measure(jacobian_of_field(mode, 0.0, x), mode.norm) == pytest.approx(0.0, abs=1e-12)


def test_touchdown_collapses_onto_the_rest_mode():
    record = saltation(make_mech_1dof(), (FREE, CONTACT), 0.0, np.array([0.0, -1.0]))

    assert record.xi.shape == (0, 2)
    assert record.induced_norm == 0.0


def test_pressed_mass_comes_to_rest_on_the_floor():
    trajectory = simulate(make_mech_1dof(), HybridState(mode=FREE, x=np.array([1.0, 0.0])), 5.0)

    assert trajectory.status == TrajectoryStatus.COMPLETED
    assert trajectory.event_keys() == [(FREE, CONTACT)]
    assert trajectory.final_state.mode == CONTACT


def test_energy_of_a_displaced_mass():
    system = make_mech_1dof()

    assert mechanical_energy(system, HybridState(mode=FREE, x=np.array([1.0, 0.0]))) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "params",
    [
        pytest.param(TwoDofParams(), id="unit"),
        pytest.param(TwoDofParams(mass_2=2.0, damping_2=3.0, stiffness=0.5), id="heavy-damped-carried-mass"),
        pytest.param(TwoDofParams(damping_2=0.1, stiffness_2=4.0), id="stiff-coupling"),
    ],
)
def test_two_mass_touchdown_always_expands(params: TwoDofParams):
    record = saltation(make_mech_2dof(params), (FREE, CONTACT), 0.0, np.array([0.0, 0.5, -1.0, 0.3]))

    np.testing.assert_allclose(record.xi, two_dof_touchdown_saltation(params), atol=1e-12)
    assert record.induced_norm > 1.0
    assert record.induced_norm >= two_dof_witness_bound(params) - 1e-12


def test_soft_contact_norms_are_asymmetric():
    params = SoftParams()
    system = make_mech_soft(params)

    entering = saltation(system, (FREE, CONTACT), 0.0, np.array([0.0, -1.0]))
    leaving = saltation(system, (CONTACT, FREE), 0.0, np.array([0.0, 1.0]))

    np.testing.assert_allclose(entering.xi, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(leaving.xi, np.eye(2), atol=1e-12)
    expected = math.sqrt((params.stiffness + params.contact_stiffness) / params.stiffness)
    assert entering.induced_norm == pytest.approx(expected)
    assert leaving.induced_norm == pytest.approx(1.0)


def test_viscoelastic_liftoff_is_nonexpansive():
    record = saltation(make_mech_visco(), (CONTACT, FREE), 0.0, np.array([0.5, 0.0, 1.0]))

    assert record.induced_norm == pytest.approx(1.0, abs=1e-9)


def test_viscoelastic_touchdown_expands_only_off_the_guard():
    record = saltation(make_mech_visco(), (FREE, CONTACT), 0.0, np.array([0.0, 0.5, 0.2, -1.0, 0.3]))

    assert record.tangent_norm == pytest.approx(1.0, abs=1e-9)
    assert record.induced_norm > 1.0


def test_viscoelastic_flow_is_nonexpansive():
    flow = certify_flow(make_mech_visco(), SamplingPlan(state_samples=8, guard_samples=4))

    assert flow.c_hat == pytest.approx(0.0, abs=1e-9)


def test_network_enumerates_every_active_set():
    system = make_mech_network()

    assert {mode.id for mode in system.modes} == {"free", "c1", "c2", "c1+2"}
    assert len(system.transitions) == 8  # noqa: PLR2004 # two transitions out of each active set


@pytest.mark.parametrize("active", [(0,), (1,), (0, 1)])
def test_impulse_map_projects_onto_admissible_velocities(active: tuple[int, ...]):
    params = MechanicalNetworkParams(mass=np.diag([1.0, 3.0]), constraints=np.array([[1.0, 0.0], [1.0, -1.0]]))

    projection = constraint_impulse_map(params, active)

    np.testing.assert_allclose(projection @ projection, projection, atol=1e-12)
    np.testing.assert_allclose(params.constraints[list(active), :] @ projection, 0.0, atol=1e-12)


def test_constraint_force_holds_the_active_constraint():
    params = MechanicalNetworkParams(mass=np.diag([1.0, 2.0]), constraints=np.array([[1.0, 0.0], [1.0, -1.0]]))
    q = np.array([0.0, 0.3])
    dq = np.array([0.0, -0.2])

    force = params.net_force(0.0, q, dq) + constraint_force(params, (0,), 0.0, q, dq)

    acceleration = np.linalg.solve(params.mass, force)
    assert acceleration[0] == pytest.approx(0.0, abs=1e-12)


def test_network_without_constraints_is_free():
    params = MechanicalNetworkParams()

    np.testing.assert_allclose(constraint_impulse_map(params, ()), np.eye(2))
    np.testing.assert_allclose(constraint_force(params, (), 0.0, np.zeros(2), np.zeros(2)), np.zeros(2))


_DESCENDING_STARTS = [
    pytest.param(np.array([q, upper, rate, upper_rate]), id=f"q={q:g}-dq={rate:g}-upper={upper:g},{upper_rate:g}")
    for q, rate, (upper, upper_rate) in itertools.product(
        (0.05, 0.1, 0.15), (-1.5, -1.0), ((0.1, -0.2), (-0.2, 0.1), (0.0, 0.2), (0.2, 0.0))
    )
]


@pytest.mark.parametrize("x", _DESCENDING_STARTS)
def test_two_mass_touchdown_matches_the_finite_difference_oracle(x: np.ndarray):
    system = make_mech_2dof()

    estimate = saltation_fd_oracle(system, HybridState(mode=FREE, x=x), 0.4)
    record = saltation(system, (FREE, CONTACT), estimate.event.t, estimate.event.x_minus)

    assert (estimate.event.source, estimate.event.target) == (FREE, CONTACT)
    np.testing.assert_allclose(record.xi, two_dof_touchdown_saltation(TwoDofParams()), atol=1e-12)
    np.testing.assert_allclose(estimate.xi_hat, record.xi, rtol=1e-4, atol=1e-4)


def test_touchdown_expands_for_every_parameter_draw():
    entry = builtin_system("mech-2dof")
    plan = SamplingPlan(
        guard_samples=1, guard_points={"free->contact": [GuardPoint(t=0.0, x=np.array([0.0, 0.5, -1.0, 0.3]))]}
    )

    outcomes = certify_parameter_draws(entry.build, entry.draw_ranges, 1000, plan=plan, seed=17)

    assert len(outcomes) == 1000  # noqa: PLR2004 # one outcome per draw
    for outcome in outcomes:
        p = outcome.parameters
        params = TwoDofParams(mass_2=p["m2"], stiffness=p["kappa"], stiffness_2=p["kappa2"], damping_2=p["beta2"])
        touchdown = outcome.witnesses["free->contact"].value
        assert touchdown > 1.0
        assert touchdown >= two_dof_witness_bound(params) * (1.0 - 1e-9)


def test_soft_contact_norms_hold_for_random_stiffness_pairs(rng: np.random.Generator):
    for stiffness, contact_stiffness in rng.uniform(0.1, 100.0, size=(100, 2)):
        system = make_mech_soft(SoftParams(stiffness=float(stiffness), contact_stiffness=float(contact_stiffness)))

        entering = saltation(system, (FREE, CONTACT), 0.0, np.array([0.0, -1.0]))
        leaving = saltation(system, (CONTACT, FREE), 0.0, np.array([0.0, 1.0]))

        assert entering.induced_norm == pytest.approx(math.sqrt((stiffness + contact_stiffness) / stiffness), rel=1e-9)
        assert leaving.induced_norm == pytest.approx(1.0, rel=1e-9)


def test_two_mass_free_flow_dissipates_through_the_dampers_only(rng: np.random.Generator):
    for mass, mass_2, stiffness, stiffness_2, damping, damping_2 in rng.uniform(0.1, 10.0, size=(20, 6)):
        params = TwoDofParams(
            mass=float(mass),
            mass_2=float(mass_2),
            stiffness=float(stiffness),
            stiffness_2=float(stiffness_2),
            damping=float(damping),
            damping_2=float(damping_2),
        )
        mode = make_mech_2dof(params).mode(FREE)

        spectrum = scipy.linalg.eigh(
            symmetric_part(jacobian_of_field(mode, 0.0, np.zeros(4)), two_dof_free_metric(params)), eigvals_only=True
        )

        root = math.sqrt(damping**2 + 4 * damping_2**2)
        expected = [-0.5 * (damping + 2 * damping_2 + root), -0.5 * (damping + 2 * damping_2 - root), 0.0, 0.0]
        np.testing.assert_allclose(spectrum, sorted(expected), atol=1e-9 * (1.0 + damping + damping_2))


def test_viscoelastic_symmetric_part_spectra(rng: np.random.Generator):
    for stiffness, stiffness_2, stiffness_3, damping, damping_2 in rng.uniform(0.1, 10.0, size=(20, 5)):
        params = ViscoParams(
            stiffness=float(stiffness),
            stiffness_2=float(stiffness_2),
            stiffness_3=float(stiffness_3),
            damping=float(damping),
            damping_2=float(damping_2),
        )
        system = make_mech_visco(params)
        free = system.mode(FREE)
        contact = system.mode(CONTACT)

        free_spectrum = scipy.linalg.eigh(
            symmetric_part(jacobian_of_field(free, 0.0, np.zeros(5)), visco_free_metric(params)), eigvals_only=True
        )
        contact_spectrum = scipy.linalg.eigh(
            symmetric_part(jacobian_of_field(contact, 0.0, np.zeros(3)), visco_contact_metric(params)),
            eigvals_only=True,
        )

        creep = stiffness_3**2 / damping_2
        scale = 1e-9 * (1.0 + damping + creep)
        np.testing.assert_allclose(free_spectrum, sorted([-damping, -3 * creep, 0.0, 0.0, 0.0]), atol=scale)
        np.testing.assert_allclose(contact_spectrum, sorted([-2 * creep, 0.0, 0.0]), atol=scale)


def _energy_trace(system: HybridSystemSpec, trajectory: HybridTrajectory) -> list[float]:
    """Energy along every arc, with both sides of every event."""
    values: list[float] = []
    for item in trajectory.timeline():
        if isinstance(item, ResetEvent):
            values.append(mechanical_energy(system, HybridState(mode=item.source, x=item.x_minus, t=item.t)))
            values.append(mechanical_energy(system, HybridState(mode=item.target, x=item.x_plus, t=item.t)))
            continue
        for t in np.linspace(item.t_start, item.t_end, 50):
            values.append(mechanical_energy(system, HybridState(mode=item.mode, x=item.state(float(t)), t=float(t))))
    return values


def _unforced_visco() -> HybridSystemSpec:
    return make_mech_visco(ViscoParams(forcing=ForcingInput(mean=0.0)))


def test_unforced_viscoelastic_chain_lands_and_lifts_off_without_gaining_energy():
    system = _unforced_visco()

    trajectory = simulate(system, HybridState(mode=FREE, x=np.array([0.5, 0.5, 0.0, 0.0, 0.0])), 3.0)

    assert trajectory.status == TrajectoryStatus.COMPLETED
    assert (FREE, CONTACT) in trajectory.event_keys()
    assert (CONTACT, FREE) in trajectory.event_keys()
    energy = _energy_trace(system, trajectory)
    assert all(later <= earlier + 1e-9 for earlier, later in itertools.pairwise(energy))  # noqa: PLR2004 # integrator slack


def test_unforced_viscoelastic_energy_never_grows(rng: np.random.Generator):
    system = _unforced_visco()
    lower = np.array([0.2, -0.5, -0.3, -1.0, -0.5])
    upper = np.array([1.0, 0.5, 0.3, 0.0, 0.5])

    for x in rng.uniform(lower, upper, size=(10, 5)):
        trajectory = simulate(system, HybridState(mode=FREE, x=x), 3.0)

        assert trajectory.status == TrajectoryStatus.COMPLETED
        energy = _energy_trace(system, trajectory)
        assert all(later <= earlier + 1e-9 for earlier, later in itertools.pairwise(energy))  # noqa: PLR2004 # integrator slack
