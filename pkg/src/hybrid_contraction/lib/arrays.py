from typing import Annotated
from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import PlainSerializer
from pydantic import PlainValidator

from .exceptions import DimensionMismatchError

type Vector = npt.NDArray[np.float64]
type Matrix = npt.NDArray[np.float64]


def as_float_array(value: Any) -> npt.NDArray[np.float64]:  # noqa: ANN401 # pydantic hands validators arbitrary input
    return np.asarray(value, dtype=np.float64)


def _to_nested_list(value: npt.NDArray[np.float64]) -> list[Any]:
    return value.tolist()


FloatArray = Annotated[
    npt.NDArray[np.float64],
    PlainValidator(as_float_array),
    PlainSerializer(_to_nested_list, return_type=list[Any]),
]


def as_vector(value: Any, *, dim: int | None = None) -> Vector:  # noqa: ANN401 # accepts scalars, lists and arrays
    vector = np.atleast_1d(np.asarray(value, dtype=np.float64)).reshape(-1)
    if dim is not None and vector.shape[0] != dim:
        raise DimensionMismatchError(expected=dim, actual=vector.shape[0], what="vector")
    return vector
