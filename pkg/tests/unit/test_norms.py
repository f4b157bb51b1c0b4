import math

import numpy as np
import pytest

from hybrid_contraction.lib import DimensionMismatchError
from hybrid_contraction.lib import NormSpec
from hybrid_contraction.lib import NotPositiveDefiniteError
from hybrid_contraction.lib import induced_norm
from hybrid_contraction.lib import l1_norm
from hybrid_contraction.lib import l2_norm
from hybrid_contraction.lib import linf_norm
from hybrid_contraction.lib import matrix_measure
from hybrid_contraction.lib import vector_norm
from hybrid_contraction.lib import weighted_l2_norm
from hybrid_contraction.lib.norms import measure_difference_quotient
from hybrid_contraction.lib.norms import subspace_induced_norm
from hybrid_contraction.lib.norms import symmetric_part


def _random_spd(rng: np.random.Generator, dim: int) -> np.ndarray:
    factor = rng.standard_normal((dim, dim))
    return factor @ factor.T + dim * np.eye(dim)


def test_weighted_norm_is_half_the_quadratic_form():
    norm = weighted_l2_norm(np.diag([2.0, 8.0]))

    assert vector_norm(np.array([1.0, 0.0]), norm) == pytest.approx(1.0)
    assert vector_norm(np.array([0.0, 1.0]), norm) == pytest.approx(2.0)


def test_weighted_square_root_reproduces_the_norm(rng: np.random.Generator):
    weight = _random_spd(rng, 3)
    norm = weighted_l2_norm(weight)
    x = rng.standard_normal(3)

    assert vector_norm(x, norm) == pytest.approx(math.sqrt(0.5 * x @ weight @ x), rel=1e-12)
    np.testing.assert_allclose(norm.square_root() @ norm.inverse_square_root(), np.eye(3), atol=1e-12)


def test_indefinite_weight_is_rejected():
    with pytest.raises(NotPositiveDefiniteError, match="not positive definite"):
        _ = weighted_l2_norm(np.diag([1.0, -1.0]))


def test_asymmetric_weight_is_rejected():
    with pytest.raises(NotPositiveDefiniteError, match="not symmetric"):
        _ = weighted_l2_norm(np.array([[2.0, 1.0], [0.0, 2.0]]))


def test_induced_two_norm_is_the_largest_singular_value():
    assert induced_norm(np.diag([2.0, 1.0]), l2_norm(2), l2_norm(2)).value == pytest.approx(2.0)


@pytest.mark.parametrize(
    ("norm", "expected"),
    [
        pytest.param(l1_norm(2), 5.0, id="column-sum"),
        pytest.param(linf_norm(2), 7.0, id="row-sum"),
    ],
)
def test_induced_one_and_infinity_norms(norm, expected: float):
    matrix = np.array([[1.0, -2.0], [4.0, 3.0]])

    assert induced_norm(matrix, norm, norm).value == pytest.approx(expected)


def test_mixed_family_norm_is_flagged_approximate():
    result = induced_norm(np.eye(2), l1_norm(2), l2_norm(2))

    assert result.approximate
    assert result.value == pytest.approx(1.0, abs=1e-12)


def test_operator_shape_is_checked():
    with pytest.raises(DimensionMismatchError, match="Dimension mismatch"):
        _ = induced_norm(np.eye(3), l2_norm(2), l2_norm(2))


def test_maps_into_zero_dimensional_space_have_norm_zero():
    assert induced_norm(np.zeros((0, 2)), l2_norm(2), l2_norm(0)).value == 0.0
    assert matrix_measure(np.zeros((0, 0)), l2_norm(0)) == -math.inf


@pytest.mark.parametrize(
    ("norm", "expected"),
    [
        pytest.param(l1_norm(2), -1.0, id="L1"),
        pytest.param(linf_norm(2), -2.0, id="Linf"),
    ],
)
def test_closed_form_measures(norm, expected: float):
    matrix = np.array([[-3.0, 1.0], [2.0, -4.0]])

    assert matrix_measure(matrix, norm) == pytest.approx(expected)


def test_two_norm_measure_of_a_shear():
    assert matrix_measure(np.array([[-1.0, 2.0], [0.0, -1.0]]), l2_norm(2)) == pytest.approx(0.0, abs=1e-12)


def test_weighted_measure_matches_the_transformed_two_norm_measure(rng: np.random.Generator):
    weight = _random_spd(rng, 3)
    norm = weighted_l2_norm(weight)
    matrix = rng.standard_normal((3, 3))
    transformed = norm.square_root() @ matrix @ norm.inverse_square_root()

    assert matrix_measure(matrix, norm) == pytest.approx(matrix_measure(transformed, l2_norm(3)), abs=1e-10)


@pytest.mark.parametrize("norm", [l1_norm(3), l2_norm(3), linf_norm(3)])
def test_measure_is_the_limit_of_the_difference_quotient(rng: np.random.Generator, norm):
    matrix = rng.standard_normal((3, 3))

    assert measure_difference_quotient(matrix, norm, 1e-7) == pytest.approx(matrix_measure(matrix, norm), abs=1e-5)


def test_symmetric_part_of_the_damped_oscillator():
    kappa, mass, beta = 3.0, 2.0, 0.5
    jacobian = np.array([[0.0, 1.0], [-kappa / mass, -beta / mass]])

    np.testing.assert_allclose(symmetric_part(jacobian, np.diag([kappa, mass])), [[0.0, 0.0], [0.0, -beta]])


def test_subspace_norm_only_sees_the_basis():
    restricted = subspace_induced_norm(np.diag([3.0, 1.0]), np.array([[0.0], [1.0]]), l2_norm(2), l2_norm(2))

    assert restricted.value == pytest.approx(1.0)


def _norm_family(kind: str, rng: np.random.Generator) -> list[NormSpec]:
    """Three norms on R^3 of one family; the weighted ones get different weights."""
    if kind == "weighted":
        return [weighted_l2_norm(_random_spd(rng, 3)) for _ in range(3)]
    build = {"L1": l1_norm, "L2": l2_norm, "Linf": linf_norm}[kind]
    return [build(3)] * 3


@pytest.mark.parametrize("kind", ["L1", "L2", "Linf", "weighted"])
def test_induced_norms_are_submultiplicative(rng: np.random.Generator, kind: str):
    first, second, third = _norm_family(kind, rng)

    for _ in range(50):
        outer = rng.standard_normal((3, 3))
        inner = rng.standard_normal((3, 3))
        product = induced_norm(outer @ inner, first, third).value
        bound = induced_norm(outer, second, third).value * induced_norm(inner, first, second).value

        assert product <= bound * (1.0 + 1e-12)


@pytest.mark.parametrize("kind", ["L1", "L2", "Linf", "weighted"])
def test_measure_shifts_with_the_identity(rng: np.random.Generator, kind: str):
    norm = _norm_family(kind, rng)[0]

    for shift in rng.uniform(-5.0, 5.0, size=20):
        matrix = rng.standard_normal((3, 3))

        shifted = matrix_measure(matrix + shift * np.eye(3), norm)

        assert shifted == pytest.approx(matrix_measure(matrix, norm) + shift, abs=1e-10)
