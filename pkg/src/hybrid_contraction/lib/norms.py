"""Vector norms, induced operator norms and matrix measures.

Weighted 2-norms follow the energy-metric convention ``|x| = sqrt(x^T E x / 2)``. Every 2-norm family is reduced to
the plain Euclidean norm through the symmetric square root ``S = sqrt(E / 2)``, so ``|x| = |S x|_2``.
"""

import itertools
import logging
from enum import StrEnum

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import PrivateAttr
from pydantic import model_validator

from .arrays import FloatArray
from .arrays import Matrix
from .arrays import Vector
from .arrays import as_vector
from .constants import MIXED_NORM_RESTARTS
from .constants import MIXED_NORM_SIGN_ENUMERATION_MAX_DIM
from .constants import SPD_RELATIVE_EIGENVALUE_FLOOR
from .constants import SYMMETRY_TOLERANCE
from .exceptions import DimensionMismatchError
from .exceptions import NotPositiveDefiniteError

logger = logging.getLogger(__name__)

_ASCENT_ITERATIONS = 200
_ASCENT_STEP = 0.1


class NormKind(StrEnum):
    L1 = "L1"
    L2 = "L2"
    LINF = "Linf"
    WEIGHTED_L2 = "WeightedL2"


class NormSpec(BaseModel):
    """A norm on R^dim. ``weight`` is the energy metric E and is only allowed for WeightedL2."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: NormKind
    dim: int = Field(ge=0)
    weight: FloatArray | None = None
    _sqrt: Matrix | None = PrivateAttr(default=None)
    _inv_sqrt: Matrix | None = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_weight(self) -> "NormSpec":
        if self.kind != NormKind.WEIGHTED_L2:
            if self.weight is not None:
                raise NotPositiveDefiniteError(f"A weight is only meaningful for WeightedL2 norms, not {self.kind}")
            return self
        if self.weight is None:
            raise NotPositiveDefiniteError("WeightedL2 norms require a weight matrix")
        weight = self.weight
        if weight.ndim != 2 or weight.shape[0] != weight.shape[1]:  # noqa: PLR2004 # a matrix has two axes
            raise DimensionMismatchError(expected=(self.dim, self.dim), actual=weight.shape, what="norm weight")
        if weight.shape[0] != self.dim:
            raise DimensionMismatchError(expected=(self.dim, self.dim), actual=weight.shape, what="norm weight")
        if self.dim == 0:
            return self
        scale = max(1.0, float(np.max(np.abs(weight))))
        if float(np.max(np.abs(weight - weight.T))) > SYMMETRY_TOLERANCE * scale:
            raise NotPositiveDefiniteError(f"Norm weight is not symmetric: {weight.tolist()}")
        eigenvalues = scipy.linalg.eigvalsh(weight)
        largest = float(eigenvalues[-1])
        if largest <= 0.0 or float(eigenvalues[0]) < SPD_RELATIVE_EIGENVALUE_FLOOR * largest:
            raise NotPositiveDefiniteError(f"Norm weight is not positive definite, eigenvalues {eigenvalues.tolist()}")
        return self

    def _roots(self) -> tuple[Matrix, Matrix]:
        if self._sqrt is None or self._inv_sqrt is None:
            if self.weight is None or self.dim == 0:
                self._sqrt = np.eye(self.dim)
                self._inv_sqrt = np.eye(self.dim)
            else:
                eigenvalues, eigenvectors = scipy.linalg.eigh(self.weight / 2.0)
                root = np.sqrt(eigenvalues)
                self._sqrt = (eigenvectors * root) @ eigenvectors.T
                self._inv_sqrt = (eigenvectors / root) @ eigenvectors.T
        return self._sqrt, self._inv_sqrt

    @property
    def is_two_norm_family(self) -> bool:
        return self.kind in (NormKind.L2, NormKind.WEIGHTED_L2)

    def square_root(self) -> Matrix:
        """S with |x| = |S x|_2; identity for plain L2."""
        assert self.is_two_norm_family, f"Square roots only exist for 2-norm families, not {self.kind}"
        return self._roots()[0]

    def inverse_square_root(self) -> Matrix:
        assert self.is_two_norm_family, f"Square roots only exist for 2-norm families, not {self.kind}"
        return self._roots()[1]


class InducedNorm(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    approximate: bool = False


def l1_norm(dim: int) -> NormSpec:
    return NormSpec(kind=NormKind.L1, dim=dim)


def l2_norm(dim: int) -> NormSpec:
    return NormSpec(kind=NormKind.L2, dim=dim)


def linf_norm(dim: int) -> NormSpec:
    return NormSpec(kind=NormKind.LINF, dim=dim)


def weighted_l2_norm(weight: Matrix) -> NormSpec:
    matrix = np.asarray(weight, dtype=np.float64)
    return NormSpec(kind=NormKind.WEIGHTED_L2, dim=matrix.shape[0], weight=matrix)


def norms_equal(first: NormSpec, second: NormSpec) -> bool:
    if first.kind != second.kind or first.dim != second.dim:
        return False
    if first.weight is None or second.weight is None:
        return first.weight is None and second.weight is None
    return bool(np.allclose(first.weight, second.weight, rtol=0.0, atol=SYMMETRY_TOLERANCE))


def vector_norm(x: Vector, norm: NormSpec) -> float:
    vector = as_vector(x, dim=norm.dim)
    if norm.dim == 0:
        return 0.0
    match norm.kind:
        case NormKind.L1:
            return float(np.sum(np.abs(vector)))
        case NormKind.LINF:
            return float(np.max(np.abs(vector)))
        case NormKind.L2:
            return float(np.linalg.norm(vector))
        case NormKind.WEIGHTED_L2:
            return float(np.linalg.norm(norm.square_root() @ vector))


def _check_operator_shape(matrix: Matrix, *, from_norm: NormSpec, to_norm: NormSpec) -> Matrix:
    operator = np.asarray(matrix, dtype=np.float64)
    if operator.size == 0 and from_norm.dim * to_norm.dim == 0:
        return operator.reshape(to_norm.dim, from_norm.dim)
    if operator.shape != (to_norm.dim, from_norm.dim):
        raise DimensionMismatchError(
            expected=(to_norm.dim, from_norm.dim), actual=operator.shape, what="operator between normed spaces"
        )
    return operator


def _norm_subgradient(y: Vector, norm: NormSpec) -> Vector:
    """A subgradient of y -> |y| for the given norm."""
    match norm.kind:
        case NormKind.L1:
            return np.sign(y)
        case NormKind.LINF:
            gradient = np.zeros_like(y)
            index = int(np.argmax(np.abs(y)))
            gradient[index] = np.sign(y[index])
            return gradient
        case NormKind.L2 | NormKind.WEIGHTED_L2:
            root = norm.square_root()
            image = root @ y
            length = float(np.linalg.norm(image))
            if length == 0.0:
                return np.zeros_like(y)
            return root.T @ image / length


def _ratio(numerator: Matrix, denominator: Matrix, y: Vector, *, from_norm: NormSpec, to_norm: NormSpec) -> float:
    bottom = vector_norm(denominator @ y, from_norm)
    if bottom == 0.0:
        return 0.0
    return vector_norm(numerator @ y, to_norm) / bottom


def _ratio_ascent(  # noqa: PLR0913 # all keyword-only except the two operators
    numerator: Matrix,
    denominator: Matrix,
    *,
    from_norm: NormSpec,
    to_norm: NormSpec,
    restarts: int,
    seed: int,
) -> float:
    """Lower bound on sup |numerator y|_to / |denominator y|_from by candidate enumeration plus projected ascent."""
    size = numerator.shape[1]
    candidates: list[Vector] = list(np.eye(size))
    if size <= MIXED_NORM_SIGN_ENUMERATION_MAX_DIM:
        candidates.extend(np.asarray(signs, dtype=np.float64) for signs in itertools.product((1.0, -1.0), repeat=size))
    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal(size) for _ in range(restarts)]
    best = max(
        _ratio(numerator, denominator, candidate, from_norm=from_norm, to_norm=to_norm) for candidate in candidates
    )
    for start in starts:
        y = start
        for _ in range(_ASCENT_ITERATIONS):
            bottom = vector_norm(denominator @ y, from_norm)
            if bottom == 0.0:
                break
            y = y / bottom
            top = vector_norm(numerator @ y, to_norm)
            best = max(best, top)
            gradient = numerator.T @ _norm_subgradient(numerator @ y, to_norm) - top * (
                denominator.T @ _norm_subgradient(denominator @ y, from_norm)
            )
            step = float(np.linalg.norm(gradient))
            if step == 0.0:
                break
            y = y + _ASCENT_STEP * float(np.linalg.norm(y)) * gradient / step
        best = max(best, _ratio(numerator, denominator, y, from_norm=from_norm, to_norm=to_norm))
    return best


def induced_norm(
    matrix: Matrix,
    from_norm: NormSpec,
    to_norm: NormSpec,
    *,
    restarts: int = MIXED_NORM_RESTARTS,
    seed: int = 0,
) -> InducedNorm:
    """Operator norm sup |M x|_to / |x|_from.

    Same-family pairs are computed in closed form. Pairs mixing families fall back to a certified lower bound from
    candidate enumeration plus projected gradient ascent, flagged as approximate.
    """
    operator = _check_operator_shape(matrix, from_norm=from_norm, to_norm=to_norm)
    if operator.size == 0:
        return InducedNorm(value=0.0)
    if from_norm.kind == NormKind.L1 and to_norm.kind == NormKind.L1:
        return InducedNorm(value=float(np.max(np.sum(np.abs(operator), axis=0))))
    if from_norm.kind == NormKind.LINF and to_norm.kind == NormKind.LINF:
        return InducedNorm(value=float(np.max(np.sum(np.abs(operator), axis=1))))
    if from_norm.is_two_norm_family and to_norm.is_two_norm_family:
        scaled = to_norm.square_root() @ operator @ from_norm.inverse_square_root()
        return InducedNorm(value=float(scipy.linalg.svdvals(scaled)[0]))
    value = _ratio_ascent(
        operator,
        np.eye(from_norm.dim),
        from_norm=from_norm,
        to_norm=to_norm,
        restarts=max(restarts, MIXED_NORM_RESTARTS),
        seed=seed,
    )
    logger.debug(f"Mixed-family induced norm {from_norm.kind}->{to_norm.kind} estimated from below as {value}")
    return InducedNorm(value=value, approximate=True)


def subspace_induced_norm(
    matrix: Matrix,
    basis: Matrix,
    from_norm: NormSpec,
    to_norm: NormSpec,
    *,
    seed: int = 0,
) -> InducedNorm:
    """Induced norm of M restricted to the column span of ``basis``."""
    operator = _check_operator_shape(matrix, from_norm=from_norm, to_norm=to_norm)
    columns = np.asarray(basis, dtype=np.float64).reshape(from_norm.dim, -1)
    if operator.size == 0 or columns.shape[1] == 0:
        return InducedNorm(value=0.0)
    if from_norm.is_two_norm_family and to_norm.is_two_norm_family:
        _, triangular = np.linalg.qr(from_norm.square_root() @ columns)
        scaled = to_norm.square_root() @ operator @ columns @ np.linalg.inv(triangular)
        return InducedNorm(value=float(scipy.linalg.svdvals(scaled)[0]))
    value = _ratio_ascent(
        operator @ columns, columns, from_norm=from_norm, to_norm=to_norm, restarts=MIXED_NORM_RESTARTS, seed=seed
    )
    return InducedNorm(value=value, approximate=True)


def symmetric_part(matrix: Matrix, weight: Matrix) -> Matrix:
    """(A^T E + E A) / 2, the matrix whose sign decides weighted-norm contraction."""
    operator = np.asarray(matrix, dtype=np.float64)
    metric = np.asarray(weight, dtype=np.float64)
    return 0.5 * (operator.T @ metric + metric @ operator)


def matrix_measure(matrix: Matrix, norm: NormSpec) -> float:
    """Logarithmic norm mu(A) = lim_{h->0+} (|I + hA| - 1) / h, computed in closed form."""
    operator = np.asarray(matrix, dtype=np.float64)
    if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:  # noqa: PLR2004 # a matrix has two axes
        raise DimensionMismatchError(expected=(norm.dim, norm.dim), actual=operator.shape, what="square matrix")
    if operator.shape[0] != norm.dim:
        raise DimensionMismatchError(expected=(norm.dim, norm.dim), actual=operator.shape, what="square matrix")
    if norm.dim == 0:
        return -np.inf
    diagonal = np.diag(operator)
    off_diagonal = np.abs(operator) - np.diag(np.abs(diagonal))
    match norm.kind:
        case NormKind.L1:
            return float(np.max(diagonal + np.sum(off_diagonal, axis=0)))
        case NormKind.LINF:
            return float(np.max(diagonal + np.sum(off_diagonal, axis=1)))
        case NormKind.L2:
            return float(scipy.linalg.eigvalsh(0.5 * (operator + operator.T))[-1])
        case NormKind.WEIGHTED_L2:
            assert norm.weight is not None
            return float(scipy.linalg.eigh(symmetric_part(operator, norm.weight), norm.weight, eigvals_only=True)[-1])


def measure_difference_quotient(matrix: Matrix, norm: NormSpec, step: float) -> float:
    """(|I + hA| - 1) / h, the one-sided quotient whose limit is the matrix measure."""
    operator = np.asarray(matrix, dtype=np.float64)
    perturbed = np.eye(norm.dim) + step * operator
    return (induced_norm(perturbed, norm, norm).value - 1.0) / step
