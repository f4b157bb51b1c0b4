import numpy as np
import pytest

from hybrid_contraction.lib import GuardPoint
from hybrid_contraction.lib import GuardSpec
from hybrid_contraction.lib import HybridSystemSpec
from hybrid_contraction.lib import ModeSpec
from hybrid_contraction.lib import ResetSpec
from hybrid_contraction.lib import SamplingPlan
from hybrid_contraction.lib import Transition
from hybrid_contraction.lib import box
from hybrid_contraction.lib import l2_norm
from hybrid_contraction.lib import make_example1
from hybrid_contraction.lib import make_moving_guard_toy
from hybrid_contraction.lib import make_periodic_kick
from hybrid_contraction.lib import make_planar_pwl
from hybrid_contraction.lib import make_time_varying_reset
from hybrid_contraction.lib import validate
from hybrid_contraction.lib.validation import DiagnosticKind


def _resting(mode_id: str) -> ModeSpec:
    return ModeSpec(
        id=mode_id,
        dim=1,
        norm=l2_norm(1),
        field=lambda _t, _x: np.zeros(1),
        jacobian=lambda _t, _x: np.zeros((1, 1)),
        region=box([-1.0], [1.0]),
    )


@pytest.mark.parametrize(
    "system",
    [
        pytest.param(make_example1(), id="example1"),
        pytest.param(make_moving_guard_toy(), id="moving-guard"),
        pytest.param(make_time_varying_reset(), id="time-varying-reset"),
        pytest.param(make_periodic_kick(), id="periodic-kick"),
        pytest.param(make_planar_pwl(c_plus=1.5), id="planar"),
    ],
)
def test_builtin_systems_are_well_formed(system: HybridSystemSpec, small_plan: SamplingPlan):
    assert validate(system, small_plan) == []


def test_wrong_analytic_jacobian_is_reported(small_plan: SamplingPlan):
    mode = ModeSpec(
        id="a",
        dim=2,
        norm=l2_norm(2),
        field=lambda _t, x: -x,
        jacobian=lambda _t, _x: np.eye(2),
        region=box([-1.0, -1.0], [1.0, 1.0]),
    )

    diagnostics = validate(HybridSystemSpec(name="wrong", modes=(mode,)), small_plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.JACOBIAN]
    assert diagnostics[0].location.startswith("mode a")


def test_wrong_reset_jacobian_is_reported():
    transition = Transition(
        guard=GuardSpec(source="a", target="b", g=lambda _t, x: x[0]),
        reset=ResetSpec(source="a", target="b", map=lambda _t, x: 2.0 * x, jac_x=lambda _t, _x: np.eye(1)),
    )
    system = HybridSystemSpec(name="reset", modes=(_resting("a"), _resting("b")), transitions=(transition,))
    plan = SamplingPlan(guard_points={"a->b": [GuardPoint(t=0.0, x=np.array([0.0]))]})

    diagnostics = validate(system, plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.JACOBIAN]
    assert "Reset Jacobian" in diagnostics[0].message


def test_flat_guard_is_degenerate():
    transition = Transition(
        guard=GuardSpec(source="a", target="b", g=lambda _t, x: x[0] ** 2, grad_x=lambda _t, x: [2.0 * x[0]]),
        reset=ResetSpec(source="a", target="b", map=lambda _t, x: x, jac_x=lambda _t, _x: np.eye(1)),
    )
    system = HybridSystemSpec(name="flat", modes=(_resting("a"), _resting("b")), transitions=(transition,))
    plan = SamplingPlan(guard_points={"a->b": [GuardPoint(t=0.0, x=np.array([0.0]))]})

    diagnostics = validate(system, plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.NONDEGENERACY]
    assert "vanishes on the guard" in diagnostics[0].message


def test_failing_field_is_an_evaluator_diagnostic(small_plan: SamplingPlan):
    def broken(_t: float, _x: np.ndarray) -> np.ndarray:
        raise ArithmeticError("no field here")

    mode = ModeSpec(id="a", dim=1, norm=l2_norm(1), field=broken, region=box([0.0], [1.0]))

    diagnostics = validate(HybridSystemSpec(name="broken", modes=(mode,)), small_plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.EVALUATOR]
    assert "no field here" in diagnostics[0].message


def test_wrong_time_partial_is_reported(small_plan: SamplingPlan):
    mode = ModeSpec(
        id="a",
        dim=1,
        norm=l2_norm(1),
        field=lambda t, x: -x + np.array([np.sin(t)]),
        jacobian=lambda _t, _x: -np.eye(1),
        time_partial=lambda _t, _x: np.zeros(1),
        region=box([-1.0], [1.0]),
    )
    plan = small_plan.model_copy(update={"times": (0.5,)})

    diagnostics = validate(HybridSystemSpec(name="forced", modes=(mode,)), plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.JACOBIAN]
    assert "time partial" in diagnostics[0].message


def test_wrong_reset_time_derivative_is_reported():
    transition = Transition(
        guard=GuardSpec(source="a", target="b", g=lambda _t, x: x[0], grad_x=lambda _t, _x: [1.0]),
        reset=ResetSpec(
            source="a",
            target="b",
            map=lambda t, x: x + t,
            jac_x=lambda _t, _x: np.eye(1),
            d_t=lambda _t, _x: np.zeros(1),
        ),
    )
    system = HybridSystemSpec(name="drifting", modes=(_resting("a"), _resting("b")), transitions=(transition,))
    plan = SamplingPlan(guard_points={"a->b": [GuardPoint(t=0.5, x=np.array([0.0]))]})

    diagnostics = validate(system, plan)

    assert [diagnostic.kind for diagnostic in diagnostics] == [DiagnosticKind.JACOBIAN]
    assert "Reset time derivative" in diagnostics[0].message
